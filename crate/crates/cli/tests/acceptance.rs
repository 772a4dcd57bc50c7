//! End-to-end acceptance criteria. Each prints one `criterion N: PASS|FAIL`
//! line; the test fails if any criterion does.

use std::f64::consts::{FRAC_PI_2, LN_2};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ges_core::omega::PullbackSchedule;
use ges_core::{
    attraction_diagnostic, compose_check, energy_inequality_check, forward_omega, omega_pullback,
    pullback_image, union_inclusion_check, AttractionVerdict, BranchSelect, MetricKind,
    OmegaOptions, SeedSource, State, TrajectoryFamily,
};
use ges_systems::bump::{curve, BumpSeeds};
use ges_systems::heat::{band_exponent, band_seeds, heat_band_witness, HeatSystem};
use ges_systems::line::scalar;
use ges_systems::nse::{graded_times, NseConfig, NseGalerkin, NseSeeds, LAMBDA1};
use ges_systems::registry::{experiment, symbol_family, ExperimentOptions, SYSTEM_IDS};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn opts() -> ExperimentOptions {
    ExperimentOptions::default()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Weak attraction of unit band data to {0} under the heat flow.
fn heat_weak_attraction() -> Outcome {
    let clock = Instant::now();
    let fam = HeatSystem::<f64>::new();
    let seeds = band_seeds::<f64>(0);
    let space = fam.space();
    for x in &seeds {
        let n = space.strong_norm(x).map_err(err)?;
        if (n - 1.0).abs() > 1e-12 {
            return Err(format!("seed norm {n} is not 1"));
        }
    }
    let sched = PullbackSchedule::geometric(0.0, 1.0, 1.6, 9).map_err(err)?;
    let depth = -sched.starts()[sched.len() - 1];
    let rep = attraction_diagnostic(
        &fam,
        &[space.zero()],
        &seeds,
        &sched,
        MetricKind::Weak,
        1e-3,
        BranchSelect::All,
    )
    .map_err(err)?;
    let values: Vec<f64> = rep.profile.iter().map(|p| p.semidist).collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    let last = values[values.len() - 1];
    let elapsed = clock.elapsed().as_secs_f64();
    check(
        seeds.len() >= 20 && monotone && last <= 1e-3 && (35.0..=45.0).contains(&depth) && elapsed < 10.0,
        format!(
            "{} seeds, non-increasing {monotone}, final {last:.3e} at s = -{depth:.1}, {elapsed:.2} s",
            seeds.len()
        ),
    )
}

/// Half the norm survives on the witness band, so no strong attractor.
fn heat_strong_witness() -> Outcome {
    let fam = HeatSystem::<f64>::new();
    let mut parts = Vec::new();
    let mut ok = true;
    for s0 in [-1.0f64, -2.0, -4.0] {
        let d = 0.0 - s0;
        // Largest j with exp(-2^{2j-2} d) >= 1/2, by direct search.
        let mut j_search = -20;
        while 2f64.powi(2 * (j_search + 1) - 2) * d <= LN_2 {
            j_search += 1;
        }
        let raw_oracle = 0.5 * ((LN_2 / d).ln() / LN_2 + 2.0);
        let (raw, j) = band_exponent(0.0, s0).map_err(err)?;
        let x = heat_band_witness(0.0, s0).map_err(err)?;
        let n0 = fam.space().strong_norm(&x).map_err(err)?;
        let u = fam.evolve(s0, &x, &[0.0], 0).map_err(err)?;
        let n = fam.space().strong_norm(&u[0]).map_err(err)?;
        ok &= j == j_search
            && (raw - raw_oracle).abs() < 1e-12
            && (n0 - 1.0).abs() < 1e-12
            && n >= 0.5 - 1e-6;
        parts.push(format!("s0={s0}: j={j} (oracle {j_search}), |u(0)|={n:.6}"));
    }
    check(ok, parts.join("; "))
}

/// The weak limit holds 0 and the bump curve; strong images stay on the sphere.
fn bump_limits() -> Outcome {
    let exp = experiment("bump", &opts()).map_err(err)?;
    let space = exp.family.space();
    let om = omega_pullback(
        exp.family.as_ref(),
        exp.seeds.as_ref(),
        &exp.schedule,
        &OmegaOptions::new(MetricKind::Weak, 0.02, exp.tol).map_err(err)?,
    )
    .map_err(err)?;
    let to_zero = space
        .dist_to_set(MetricKind::Weak, &space.zero(), &om.points)
        .map_err(err)?;
    let mut to_curve = 0.0f64;
    // The curve parameters realised by the seed grid.
    for &r in BumpSeeds::<f64>::default().offsets().iter().step_by(3) {
        to_curve = to_curve.max(
            space
                .dist_to_set(MetricKind::Weak, &curve(r), &om.points)
                .map_err(err)?,
        );
    }
    let mut norm_dev = 0.0f64;
    let mut count = 0;
    for &s in exp.schedule.starts() {
        let seeds = exp.seeds.seeds_at(s, 0.0).map_err(err)?;
        let img =
            pullback_image(exp.family.as_ref(), &seeds, 0.0, s, BranchSelect::All).map_err(err)?;
        for e in &img.entries {
            norm_dev = norm_dev.max((space.strong_norm(&e.state).map_err(err)? - 1.0).abs());
            count += 1;
        }
    }
    check(
        to_zero <= 0.02 && to_curve <= 0.02 && norm_dev <= 1e-9 && count > 0,
        format!(
            "weak dist to 0 {to_zero:.3e}, worst curve point {to_curve:.3e}, {count} strong images with | |u| - 1 | <= {norm_dev:.1e}"
        ),
    )
}

fn ges() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ges"))
}

/// No candidate attracts the drifting line and the profile grows without bound.
fn line_counterexample() -> Outcome {
    let exp = experiment("line", &opts()).map_err(err)?;
    let om = omega_pullback(
        exp.family.as_ref(),
        exp.seeds.as_ref(),
        &exp.schedule,
        &OmegaOptions::new(MetricKind::Strong, exp.eps_net, exp.tol).map_err(err)?,
    )
    .map_err(err)?;
    let mut candidates = vec![
        vec![scalar(0.0)],
        vec![scalar(-1.0), scalar(1.0)],
        vec![scalar(50.0)],
    ];
    if !om.points.is_empty() {
        candidates.push(om.points.clone());
    }
    let mut verdicts = Vec::new();
    let mut growing = true;
    for c in &candidates {
        let rep = attraction_diagnostic(
            exp.family.as_ref(),
            c,
            exp.seeds.as_ref(),
            &exp.schedule,
            MetricKind::Strong,
            exp.tol,
            BranchSelect::All,
        )
        .map_err(err)?;
        let v: Vec<f64> = rep.profile.iter().map(|p| p.semidist).collect();
        // A far candidate is approached once before the drift passes it.
        let lowest = (0..v.len())
            .min_by(|&a, &b| v[a].total_cmp(&v[b]))
            .unwrap_or(0);
        growing &= v[lowest..].windows(2).all(|w| w[1] > w[0]) && v[v.len() - 1] > 1000.0;
        verdicts.push(rep.verdict);
    }
    let all_fail = verdicts.iter().all(|v| *v == AttractionVerdict::Fails);

    let dir = tempfile::tempdir().map_err(err)?;
    let code = |args: &[&str]| -> Result<i32, String> {
        let status = ges()
            .arg("--out")
            .arg(dir.path())
            .args(args)
            .output()
            .map_err(err)?
            .status;
        status.code().ok_or_else(|| "killed by signal".to_string())
    };
    let omega_code = code(&["omega", "--system", "line", "--metric", "strong"])?;
    let attract_code = code(&[
        "attract",
        "--system",
        "line",
        "--metric",
        "strong",
        "--candidate",
        "zero",
    ])?;
    let unknown_code = code(&["omega", "--system", "no-such-system"])?;
    let heat_code = code(&["omega", "--system", "heat", "--metric", "weak"])?;
    check(
        all_fail && growing && omega_code == 2 && attract_code == 2 && unknown_code == 64 && heat_code == 0,
        format!(
            "{} candidates all fail {all_fail}, profiles unbounded {growing}, exit codes line omega {omega_code} attract {attract_code}, unknown {unknown_code}, heat {heat_code}",
            candidates.len()
        ),
    )
}

/// `P(t,r)A` inside `P(t,s)P(s,r)A` over random draws.
fn composition() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for id in SYSTEM_IDS {
        if id == "line" {
            continue;
        }
        let exp = experiment(id, &opts()).map_err(err)?;
        let (span, max_take, bound) = if id == "nse" {
            (4.0, 1, 1e-5)
        } else {
            (20.0, 3, 1e-6)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ id.len() as u64);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let mut ts: Vec<f64> = (0..3).map(|_| -span * rng.gen::<f64>()).collect();
            ts.sort_by(f64::total_cmp);
            let pool = exp.seeds.seeds_at(ts[0], ts[2]).map_err(err)?;
            let take = rng.gen_range(1..=pool.len().min(max_take));
            let a: Vec<State> = (0..take)
                .map(|_| pool[rng.gen_range(0..pool.len())].clone())
                .collect();
            worst = worst
                .max(compose_check(exp.family.as_ref(), &a, ts[0], ts[1], ts[2]).map_err(err)?);
        }
        ok &= worst <= bound;
        parts.push(format!("{id} {worst:.1e}"));
    }
    check(ok, format!("worst over 100 draws: {}", parts.join(", ")))
}

/// Strong limit points lie within 2 eps_net of the weak limit.
fn strong_inside_weak() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for id in SYSTEM_IDS {
        let exp = experiment(id, &opts()).map_err(err)?;
        let run = |metric| {
            let o = OmegaOptions::new(metric, exp.eps_net, exp.tol).map_err(err)?;
            omega_pullback(exp.family.as_ref(), exp.seeds.as_ref(), &exp.schedule, &o).map_err(err)
        };
        let (strong, weak) = (run(MetricKind::Strong)?, run(MetricKind::Weak)?);
        let d = if strong.points.is_empty() {
            0.0
        } else if weak.points.is_empty() {
            f64::INFINITY
        } else {
            exp.family
                .space()
                .set_semidist(&strong.points, &weak.points, MetricKind::Weak)
                .map_err(err)?
        };
        ok &= d <= 2.0 * exp.eps_net;
        parts.push(format!("{id} {d:.1e}"));
    }
    check(ok, format!("semidist(strong, weak): {}", parts.join(", ")))
}

/// Forward and pullback limits agree for autonomous systems.
fn autonomous_equivalence() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (id, metrics) in [
        ("bump", vec![MetricKind::Weak]),
        ("branch2", vec![MetricKind::Weak, MetricKind::Strong]),
    ] {
        let exp = experiment(id, &opts()).map_err(err)?;
        for metric in metrics {
            let o = OmegaOptions::new(metric, exp.eps_net, exp.tol).map_err(err)?;
            let pb = omega_pullback(exp.family.as_ref(), exp.seeds.as_ref(), &exp.schedule, &o)
                .map_err(err)?;
            let fw = forward_omega(exp.family.as_ref(), exp.seeds.as_ref(), &exp.schedule, &o)
                .map_err(err)?;
            let h = exp
                .family
                .space()
                .hausdorff(&pb.points, &fw.points, metric)
                .map_err(err)?;
            ok &= h <= 2.0 * exp.eps_net && !pb.points.is_empty();
            parts.push(format!("{id} {metric} {h:.1e}"));
        }
    }
    check(
        ok,
        format!("Hausdorff(forward, pullback): {}", parts.join(", ")),
    )
}

/// Energy balance, absorbing radius and absorbing inequality of the Galerkin system.
fn nse_energy() -> Outcome {
    let cfg = NseConfig::default();
    let fam = NseGalerkin::<f64>::new(&cfg).map_err(err)?;
    let (nu, l2b, r) = (cfg.nu, fam.l2b_norm_sq(), fam.absorbing_radius());
    let r_oracle = 2.0 / (1.0 - (-1.0f64).exp());
    let radius_ok =
        (l2b - 1.0).abs() < 1e-9 && (r - r_oracle).abs() < 1e-9 && cfg.kmax == 4 && nu == 1.0;

    let strong = |u: &State| fam.space().strong_norm(u).map_err(err);
    let seeds = NseSeeds {
        kmax: 4,
        count: 6,
        norm_range: (0.2 * r, 2.0 * r),
        rng_seed: 11,
    }
    .generate::<f64>()
    .map_err(err)?;
    let mut seeds = seeds;
    seeds.push(seeds[0].scaled(2.0 * r / strong(&seeds[0])?));
    let run = |x: &State, ts: &[f64]| -> Result<Vec<State>, String> {
        let flat = fam.flatten(x).map_err(err)?;
        fam.integrate_flat(ts[0], &flat, ts)
            .map_err(err)?
            .into_iter()
            .map(|u| fam.unflatten(u).map_err(err))
            .collect()
    };

    let ts = graded_times(0.0, 2.0, 0.5, 0.001, 0.01);
    let mut balance = 0.0f64;
    for x in &seeds[..2] {
        let us = run(x, &ts)?;
        let rep = energy_inequality_check(&fam, &ts, &us, 0.0, 0.1, 0.9).map_err(err)?;
        let i = rep.integral.ok_or("no energy rates")?;
        balance = balance.max(i.balance_drift.max(i.max_residual) / i.horizon);
    }

    let ts: Vec<f64> = (0..=32).map(|i| -8.0 + 0.25 * f64::from(i)).collect();
    let mut excess = f64::NEG_INFINITY;
    let mut start_max = 0.0f64;
    for x in &seeds {
        let e: Vec<f64> = run(x, &ts)?
            .iter()
            .map(|u| strong(u).map(|n| n * n))
            .collect::<Result<_, _>>()?;
        start_max = start_max.max(e[0].sqrt());
        for a in 0..e.len() {
            for b in a..e.len() {
                let bound = e[a] * (nu * LAMBDA1 * (ts[a] - ts[b])).exp()
                    + l2b / (nu * (1.0 - (-nu * LAMBDA1).exp()));
                excess = excess.max(e[b] - bound);
            }
        }
    }
    check(
        radius_ok && balance <= 1e-6 && excess <= 1e-6 && start_max <= 2.0 * r + 1e-9,
        format!(
            "|g|^2 = {l2b}, R = {r:.12} (oracle {r_oracle:.12}), balance residual {balance:.2e} per unit time, absorbing excess {excess:.2e} over {} trajectories with |u(s)| <= {start_max:.4}",
            seeds.len()
        ),
    )
}

/// Union of per-symbol pullback limits against the uniform limit.
fn uniform_vs_pullback() -> Outcome {
    let o = opts();
    let exp = experiment("forced-scalar", &o).map_err(err)?;
    let (symfam, seeds) = symbol_family("forced-scalar", &o).map_err(err)?;
    let forward = PullbackSchedule::linear(0.0, FRAC_PI_2, 12).map_err(err)?;
    let opts = OmegaOptions::new(MetricKind::Strong, exp.eps_net, exp.tol).map_err(err)?;
    let rep = union_inclusion_check(symfam.as_ref(), &seeds, 0.0, &exp.schedule, &forward, &opts)
        .map_err(err)?;
    let bound = 2.0 * exp.eps_net;
    let inc = rep.inclusion.unwrap_or(f64::INFINITY);
    let rev = rep.reverse.unwrap_or(f64::INFINITY);
    check(
        inc <= bound && rev <= bound,
        format!(
            "{} symbols: semidist(union, uniform) {inc:.2e}, reverse {rev:.2e}, bound {bound}, converged {}/{} + uniform {}",
            rep.symbols, rep.per_symbol_converged, rep.symbols, rep.uniform_converged
        ),
    )
}

/// Two runs of the full verification produce identical bytes.
fn determinism() -> Outcome {
    let run = |threads: Option<&str>| -> Result<(Vec<u8>, Vec<u8>, i32), String> {
        let dir = tempfile::tempdir().map_err(err)?;
        let mut cmd = ges();
        cmd.arg("--out")
            .arg(dir.path())
            .args(["verify", "all", "--seed", "7"]);
        if let Some(n) = threads {
            cmd.args(["--threads", n]);
        }
        let out = cmd.output().map_err(err)?;
        let report = std::fs::read(dir.path().join("verify-all.json")).map_err(err)?;
        Ok((report, out.stdout, out.status.code().unwrap_or(-1)))
    };
    let (a, a_out, a_code) = run(None)?;
    let (b, b_out, b_code) = run(Some("1"))?;
    // stdout names the output directory, which differs between runs.
    let strip = |s: &[u8]| -> Vec<String> {
        String::from_utf8_lossy(s)
            .lines()
            .filter(|l| !l.starts_with("report ->"))
            .map(str::to_owned)
            .collect()
    };
    check(
        a == b && strip(&a_out) == strip(&b_out) && a_code == 0 && b_code == 0,
        format!(
            "{} report bytes, identical {}, exit codes {a_code} {b_code}",
            a.len(),
            a == b
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("heat weak attraction", heat_weak_attraction),
        ("heat strong witness", heat_strong_witness),
        ("bump weak and strong limits", bump_limits),
        ("line counterexample", line_counterexample),
        ("composition inclusion", composition),
        ("strong limit inside weak limit", strong_inside_weak),
        ("autonomous forward = pullback", autonomous_equivalence),
        ("Galerkin energy and absorption", nse_energy),
        ("uniform vs pullback union", uniform_vs_pullback),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let outcome = run();
        let secs = clock.elapsed().as_secs_f64();
        match &outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                println!("criterion {}: FAIL {name} ({secs:.1} s): {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
