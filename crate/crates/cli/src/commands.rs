//! omega, attract, uniform and invariance.

use std::f64::consts::FRAC_PI_2;

use serde_json::{json, Value};

use ges_core::io::{omega_profile_csv, omega_to_json, profile_csv, SCHEMA_VERSION};
use ges_core::omega::PullbackSchedule;
use ges_core::{
    attraction_diagnostic, forward_omega, invariance_check, omega_pullback, uniform_omega,
    union_inclusion_check, AttractionVerdict, BranchSelect, InvarianceKind, InvarianceOptions,
    MetricKind, Omega, OmegaOptions, SeedSource, State, Verdict,
};
use ges_systems::heat::{low_frequency_probes, BandWitnessSeeds};
use ges_systems::registry::{self, experiment, known_sets, Experiment, ExperimentOptions};

use crate::config::{check_system, ExperimentConfig};
use crate::exit::{self, CliError, CliResult};
use crate::output::{to_value, OutDir};

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub out: OutDir,
    pub seed: u64,
    pub tol: Option<f64>,
}

impl Ctx {
    pub fn system(&self, flag: Option<&str>) -> CliResult<String> {
        let id = flag
            .map(str::to_owned)
            .or_else(|| self.cfg.system.clone())
            .ok_or_else(|| CliError::usage("no system given (use --system or the config file)"))?;
        check_system(&id)?;
        Ok(id)
    }

    pub fn options(&self) -> CliResult<ExperimentOptions> {
        self.cfg.options(self.seed)
    }

    /// The registered experiment with the configured schedule and tolerances.
    pub fn experiment(&self, id: &str) -> CliResult<Experiment> {
        let mut exp = experiment(id, &self.options()?)?;
        exp.schedule = self.cfg.schedule(&exp.schedule)?;
        exp.eps_net = self.cfg.eps_net.unwrap_or(exp.eps_net);
        exp.tol = self.tol.or(self.cfg.tol).unwrap_or(exp.tol);
        Ok(exp)
    }

    pub fn metric(&self, flag: Option<MetricKind>, default: MetricKind) -> MetricKind {
        flag.or(self.cfg.metric).unwrap_or(default)
    }
}

/// Success when the estimate settled; otherwise 3 if an attractor was
/// expected in this metric and 2 if not.
fn omega_exit(converged: bool, expected: bool) -> u8 {
    match (converged, expected) {
        (true, _) => exit::OK,
        (false, true) => exit::FAILS_EXPECTED,
        (false, false) => exit::INCONCLUSIVE,
    }
}

fn attraction_exit(verdict: AttractionVerdict, expected: bool) -> u8 {
    match verdict {
        AttractionVerdict::Attracts => exit::OK,
        AttractionVerdict::Fails if expected => exit::FAILS_EXPECTED,
        _ => exit::INCONCLUSIVE,
    }
}

fn verdict_exit(v: Verdict) -> u8 {
    match v {
        Verdict::Holds => exit::OK,
        Verdict::Inconclusive => exit::INCONCLUSIVE,
        Verdict::Fails => exit::FAILS_EXPECTED,
    }
}

fn schedule_json(s: &PullbackSchedule<f64>) -> CliResult<Value> {
    Ok(json!({ "t": s.t(), "mode": to_value(&s.mode())?, "starts": s.starts() }))
}

pub fn estimate(exp: &Experiment, metric: MetricKind, forward: bool) -> CliResult<Omega> {
    let opts = OmegaOptions::new(metric, exp.eps_net, exp.tol)?;
    let om = if forward {
        forward_omega(
            exp.family.as_ref(),
            exp.seeds.as_ref(),
            &exp.schedule,
            &opts,
        )?
    } else {
        omega_pullback(
            exp.family.as_ref(),
            exp.seeds.as_ref(),
            &exp.schedule,
            &opts,
        )?
    };
    Ok(om)
}

pub fn cmd_omega(
    ctx: &Ctx,
    system: Option<&str>,
    metric: Option<MetricKind>,
    forward: bool,
) -> CliResult<u8> {
    let id = ctx.system(system)?;
    let exp = ctx.experiment(&id)?;
    let metric = ctx.metric(metric, MetricKind::Weak);
    let om = estimate(&exp, metric, forward)?;
    let expected = exp.expects.for_metric(metric);
    let code = omega_exit(om.converged, expected);

    let mut doc = omega_to_json(&om);
    doc["expects_attractor"] = json!(expected);
    doc["schedule"] = schedule_json(&exp.schedule)?;
    doc["exit_code"] = json!(code);
    let stem = format!(
        "{}-{id}-{metric}",
        if forward { "forward" } else { "omega" }
    );
    let json_path = ctx.out.write_json(&format!("{stem}.json"), &doc)?;
    let csv_path = ctx
        .out
        .write_text(&format!("{stem}.csv"), &omega_profile_csv(&om))?;
    println!(
        "{id} {metric}: converged={} points={} -> {} {}",
        om.converged,
        om.points.len(),
        json_path.display(),
        csv_path.display()
    );
    Ok(code)
}

pub fn candidate_set(
    exp: &Experiment,
    kind: &str,
    t: f64,
    metric: MetricKind,
) -> CliResult<Vec<State>> {
    let space = exp.family.space();
    match kind {
        "zero" => Ok(vec![space.zero()]),
        "known" => known_sets(exp.system)
            .ok_or_else(|| {
                CliError::usage(format!(
                    "no closed-form attractor registered for `{}`",
                    exp.system
                ))
            })?
            .at(t)
            .map_err(CliError::from),
        "omega" => {
            let om = estimate(exp, metric, false)?;
            if om.points.is_empty() {
                return Err(CliError::usage(
                    "the omega estimate is empty; no candidate to test",
                ));
            }
            Ok(om.points)
        }
        other => Err(CliError::usage(format!(
            "unknown candidate `{other}` (zero|known|omega)"
        ))),
    }
}

pub fn seed_source(exp: &Experiment, kind: &str) -> CliResult<Box<dyn SeedSource<f64>>> {
    match (kind, exp.system) {
        ("default", _) => Ok(Box::new(exp.seeds.clone())),
        ("witness", "heat") => Ok(Box::new(BandWitnessSeeds)),
        ("probes", "heat") => Ok(Box::new(low_frequency_probes::<f64>(16))),
        ("witness" | "probes", other) => Err(CliError::usage(format!(
            "`{kind}` seeds exist only for heat, not `{other}`"
        ))),
        (other, _) => Err(CliError::usage(format!(
            "unknown seed set `{other}` (default|witness|probes)"
        ))),
    }
}

pub fn cmd_attract(
    ctx: &Ctx,
    system: Option<&str>,
    metric: Option<MetricKind>,
    candidate: &str,
    seeds: &str,
) -> CliResult<u8> {
    let id = ctx.system(system)?;
    let exp = ctx.experiment(&id)?;
    let metric = ctx.metric(metric, MetricKind::Weak);
    let cand = candidate_set(&exp, candidate, exp.schedule.t(), metric)?;
    let source = seed_source(&exp, seeds)?;
    let rep = attraction_diagnostic(
        exp.family.as_ref(),
        &cand,
        source.as_ref(),
        &exp.schedule,
        metric,
        exp.tol,
        BranchSelect::All,
    )?;
    let expected = exp.expects.for_metric(metric);
    let code = attraction_exit(rep.verdict, expected);
    let doc = json!({
        "schema": SCHEMA_VERSION,
        "system": id,
        "metric": metric.to_string(),
        "candidate": candidate,
        "candidate_size": cand.len(),
        "seeds": seeds,
        "schedule": schedule_json(&exp.schedule)?,
        "expects_attractor": expected,
        "report": to_value(&rep)?,
        "exit_code": code,
    });
    let stem = format!("attract-{id}-{metric}-{candidate}-{seeds}");
    let path = ctx.out.write_json(&format!("{stem}.json"), &doc)?;
    ctx.out.write_text(
        &format!("{stem}.csv"),
        &profile_csv(&rep.profile, metric, &id, exp.schedule.t()),
    )?;
    println!(
        "{id} {metric} {candidate}: {:?} -> {}",
        rep.verdict,
        path.display()
    );
    Ok(code)
}

/// Forward schedule of the uniform limit: depths `pi/2, pi, ..., 6 pi`.
pub fn uniform_forward_schedule() -> CliResult<PullbackSchedule<f64>> {
    Ok(PullbackSchedule::linear(0.0, FRAC_PI_2, 12)?)
}

pub fn uniform_report(ctx: &Ctx, id: &str, metric: MetricKind) -> CliResult<Value> {
    if !registry::SYMBOL_SYSTEM_IDS.contains(&id) {
        return Err(CliError::usage(format!(
            "`{id}` has no symbol family (have: {})",
            registry::SYMBOL_SYSTEM_IDS.join(", ")
        )));
    }
    let exp = ctx.experiment(id)?;
    let (symfam, seeds) = registry::symbol_family(id, &ctx.options()?)?;
    let opts = OmegaOptions::new(metric, exp.eps_net, exp.tol)?;
    let forward = uniform_forward_schedule()?;
    let uniform = uniform_omega(symfam.as_ref(), &seeds, &forward, &opts)?;
    let rep = union_inclusion_check(symfam.as_ref(), &seeds, 0.0, &exp.schedule, &forward, &opts)?;
    Ok(json!({
        "schema": SCHEMA_VERSION,
        "system": id,
        "metric": metric.to_string(),
        "symbols": symfam.symbol_space().symbols().len(),
        "closure": symfam.symbol_space().closure_note(),
        "forward_schedule": schedule_json(&forward)?,
        "pullback_schedule": schedule_json(&exp.schedule)?,
        "uniform": omega_to_json(&uniform),
        "union_inclusion": to_value(&rep)?,
    }))
}

pub fn cmd_uniform(ctx: &Ctx, system: Option<&str>, metric: Option<MetricKind>) -> CliResult<u8> {
    let id = ctx.system(system.or(Some("forced-scalar")))?;
    let metric = ctx.metric(metric, MetricKind::Strong);
    let mut doc = uniform_report(ctx, &id, metric)?;
    let verdict: Verdict = match doc["union_inclusion"]["inclusion_verdict"].as_str() {
        Some("holds") => Verdict::Holds,
        Some("fails") => Verdict::Fails,
        _ => Verdict::Inconclusive,
    };
    let code = verdict_exit(verdict);
    doc["exit_code"] = json!(code);
    let path = ctx
        .out
        .write_json(&format!("uniform-{id}-{metric}.json"), &doc)?;
    println!("{id} {metric}: inclusion {verdict:?} -> {}", path.display());
    Ok(code)
}

pub fn parse_invariance_kind(s: &str) -> CliResult<InvarianceKind> {
    match s {
        "semi" => Ok(InvarianceKind::Semi),
        "quasi" => Ok(InvarianceKind::Quasi),
        "full" => Ok(InvarianceKind::Full),
        other => Err(CliError::usage(format!(
            "unknown invariance kind `{other}` (semi|quasi|full)"
        ))),
    }
}

/// Window `[-1, 0]` sampled every quarter time unit.
pub fn invariance_report(
    ctx: &Ctx,
    id: &str,
    kind: InvarianceKind,
    metric: Option<MetricKind>,
) -> CliResult<(Value, Verdict)> {
    let exp = ctx.experiment(id)?;
    let sets = known_sets(id).ok_or_else(|| {
        CliError::usage(format!("no closed-form attractor registered for `{id}`"))
    })?;
    let metric = metric.unwrap_or(sets.metric);
    let mut opts = InvarianceOptions::new(metric, 2.0 * exp.eps_net);
    opts.samples = 5;
    let rep = invariance_check(
        exp.family.as_ref(),
        &sets,
        kind,
        (-1.0, 0.0),
        exp.seeds.as_ref(),
        &exp.schedule,
        &opts,
    )?;
    let doc = json!({
        "schema": SCHEMA_VERSION,
        "system": id,
        "metric": metric.to_string(),
        "set_size": sets.at(0.0)?.len(),
        "report": to_value(&rep)?,
    });
    Ok((doc, rep.verdict))
}

pub fn cmd_invariance(
    ctx: &Ctx,
    system: Option<&str>,
    kind: &str,
    metric: Option<MetricKind>,
) -> CliResult<u8> {
    let id = ctx.system(system)?;
    let kind = parse_invariance_kind(kind)?;
    let (mut doc, verdict) = invariance_report(ctx, &id, kind, metric.or(ctx.cfg.metric))?;
    let code = verdict_exit(verdict);
    doc["exit_code"] = json!(code);
    let path = ctx.out.write_json(&format!("invariance-{id}.json"), &doc)?;
    println!("{id}: {verdict:?} -> {}", path.display());
    Ok(code)
}
