//! `ges nse`: forcing analysis and pullback ensembles of the Galerkin system.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use ges_core::io::SCHEMA_VERSION;
use ges_core::TrajectoryFamily;
use ges_systems::nse::{
    absorbing_bound, BallConvention, NseConfig, NseGalerkin, NseSeeds, LAMBDA1,
};

use crate::commands::Ctx;
use crate::config::read_forcing;
use crate::exit::{self, CliError, CliResult};
use crate::output::to_value;

pub const ENSEMBLE_CSV_HEADER: &str = "seed,s,t,energy,bound";

pub struct NseArgs<'a> {
    pub forcing: Option<&'a Path>,
    pub nu: Option<f64>,
    pub kmax: Option<i32>,
    pub convention: Option<BallConvention>,
    pub eps_list: Option<Vec<f64>>,
}

const DEFAULT_EPS: [f64; 4] = [1.0, 0.5, 0.25, 0.1];

/// Start depth and sampling step of the ensembles.
const DEPTH: f64 = 8.0;
const STEP: f64 = 0.25;

pub fn cmd_nse(ctx: &Ctx, args: &NseArgs) -> CliResult<u8> {
    let mut cfg: NseConfig = ctx.options()?.nse;
    if let Some(path) = args.forcing {
        cfg.forcing = read_forcing(&json!(path.to_string_lossy()))?;
    }
    if let Some(nu) = args.nu {
        if !(nu > 0.0) {
            return Err(CliError::usage("--nu must be positive"));
        }
        cfg.nu = nu;
    }
    if let Some(k) = args.kmax {
        cfg.kmax = k;
    }
    if let Some(c) = args.convention {
        cfg.convention = c;
    }
    let eps_list = args
        .eps_list
        .clone()
        .unwrap_or_else(|| DEFAULT_EPS.to_vec());
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(CliError::usage("--eps-list entries must be positive"));
    }
    let fam = NseGalerkin::<f64>::new(&cfg)?;

    let window = cfg.forcing.default_window();
    let l2b = fam.l2b_norm_sq();
    let radius = fam.absorbing_radius();
    let normality = cfg
        .forcing
        .normality_check(&eps_list, window, cfg.window_step, 1.0);
    let forcing_doc = json!({
        "schema": SCHEMA_VERSION,
        "kmax": cfg.kmax,
        "nu": cfg.nu,
        "lambda1": LAMBDA1,
        "modes": fam.modes().len(),
        "autonomous": fam.is_autonomous(),
        "period": cfg.forcing.period(),
        "window": [window.0, window.1],
        "window_step": cfg.window_step,
        "l2b_norm_sq": l2b,
        "absorbing_radius": radius,
        "convention": to_value(&cfg.convention)?,
        "ball_radius": fam.space().ball_radius(),
        "normality": to_value(&normality)?,
        "forcing": to_value(&cfg.forcing)?,
    });
    ctx.out.write_json("nse-forcing.json", &forcing_doc)?;

    // Seeds fill the phase space ball, or the unit ball without forcing.
    let r = fam.space().ball_radius().unwrap_or(1.0);
    let seeds = NseSeeds {
        kmax: cfg.kmax,
        count: ctx.cfg.seed_count.unwrap_or(4),
        norm_range: (0.2 * r, r),
        rng_seed: ctx.seed,
    }
    .generate::<f64>()?;
    let n = (DEPTH / STEP).round() as usize;
    let ts: Vec<f64> = (0..=n).map(|i| -DEPTH + STEP * i as f64).collect();
    let runs: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|x| -> ges_core::Result<Vec<f64>> {
            let us = fam.evolve(ts[0], x, &ts, 0)?;
            us.iter()
                .map(|u| Ok(fam.space().strong_norm(u)?.powi(2)))
                .collect()
        })
        .collect::<ges_core::Result<_>>()?;

    let mut csv = String::from(ENSEMBLE_CSV_HEADER);
    csv.push('\n');
    let mut violations = 0usize;
    for (i, energies) in runs.iter().enumerate() {
        let e0 = energies[0];
        for (t, e) in ts.iter().zip(energies) {
            let bound = absorbing_bound(e0, t - ts[0], l2b, cfg.nu, LAMBDA1);
            if *e > bound + 1e-6 {
                violations += 1;
            }
            let _ = writeln!(csv, "{i},{},{t},{e},{bound}", ts[0]);
        }
    }
    ctx.out.write_text("nse-ensemble.csv", &csv)?;
    let final_max = runs.iter().map(|r| r[r.len() - 1]).fold(0.0, f64::max);
    println!(
        "nse: |g|^2_L2b = {l2b}, R = {radius}, {} trajectories, max final energy {final_max}, {violations} bound violations",
        runs.len()
    );
    Ok(if violations == 0 {
        exit::OK
    } else {
        exit::VIOLATION
    })
}
