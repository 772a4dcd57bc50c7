//! Systems by id, each with the seed sample, schedule and tolerances used to
//! estimate its limits.

use std::sync::Arc;

use ges_core::omega::PullbackSchedule;
use ges_core::state::CoeffState;
use ges_core::{
    Error, Family, MetricKind, Result, Schedule, SeedSource, State, SymbolFamily, TrajectoryFamily,
};

use crate::branch2::{ball_sample, TwoRateDecay};
use crate::bump::{curve, BumpSeeds, TravellingBump};
use crate::forced::{forced_sample, periodic_orbit, ForcedPhases, ForcedScalar, FORCED_TAG};
use crate::heat::{band_seeds, HeatSystem, HEAT_TAG};
use crate::line::{line_sample, LineDrift};
use crate::nse::{NseConfig, NseGalerkin, NsePhases, NseSeeds};
use crate::single::{circle_state, SingleSeeds, SingleTrajectory, L2_TAG};

pub const SYSTEM_IDS: [&str; 7] = [
    "single",
    "bump",
    "heat",
    "line",
    "branch2",
    "nse",
    "forced-scalar",
];

/// Systems that come with a periodic symbol family.
pub const SYMBOL_SYSTEM_IDS: [&str; 2] = ["forced-scalar", "nse"];

pub fn is_known(id: &str) -> bool {
    SYSTEM_IDS.contains(&id)
}

#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    pub rng_seed: u64,
    pub nse: NseConfig,
    /// Overrides the default number of random seeds where a system has them.
    pub seed_count: Option<usize>,
    /// Number of sampled symbols for symbol families.
    pub symbols: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            rng_seed: 0,
            nse: NseConfig::default(),
            seed_count: None,
            symbols: 32,
        }
    }
}

/// Whether a pullback attractor is expected in each metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Expectation {
    pub weak: bool,
    pub strong: bool,
}

impl Expectation {
    pub fn for_metric(self, metric: MetricKind) -> bool {
        match metric {
            MetricKind::Weak => self.weak,
            MetricKind::Strong => self.strong,
        }
    }
}

pub struct Experiment {
    pub system: &'static str,
    pub family: Arc<Family>,
    pub seeds: Arc<dyn SeedSource<f64>>,
    pub schedule: Schedule,
    pub eps_net: f64,
    pub tol: f64,
    pub expects: Expectation,
}

fn fixed(states: Vec<State>) -> Arc<dyn SeedSource<f64>> {
    Arc::new(states)
}

fn default_schedule() -> Schedule {
    PullbackSchedule::default_at(0.0)
}

pub fn experiment(id: &str, opts: &ExperimentOptions) -> Result<Experiment> {
    let both = Expectation {
        weak: true,
        strong: true,
    };
    let weak_only = Expectation {
        weak: true,
        strong: false,
    };
    let (system, family, seeds, schedule, eps_net, tol, expects): (_, Arc<Family>, _, _, _, _, _) =
        match id {
            "single" => (
                "single",
                Arc::new(SingleTrajectory::new()),
                Arc::new(SingleSeeds) as Arc<dyn SeedSource<f64>>,
                default_schedule(),
                0.02,
                1e-3,
                both,
            ),
            "bump" => (
                "bump",
                Arc::new(TravellingBump::new()),
                Arc::new(BumpSeeds::default()) as Arc<dyn SeedSource<f64>>,
                default_schedule(),
                0.02,
                1e-3,
                weak_only,
            ),
            "heat" => (
                "heat",
                Arc::new(HeatSystem::new()),
                fixed(band_seeds(opts.rng_seed)),
                PullbackSchedule::geometric(0.0, 1.0, 1.6, 9)?,
                0.02,
                1e-3,
                weak_only,
            ),
            "line" => (
                "line",
                Arc::new(LineDrift::new()),
                fixed(line_sample()),
                default_schedule(),
                0.02,
                1e-3,
                Expectation {
                    weak: false,
                    strong: false,
                },
            ),
            "branch2" => (
                "branch2",
                Arc::new(TwoRateDecay::new()),
                fixed(ball_sample(opts.seed_count.unwrap_or(8), opts.rng_seed)),
                default_schedule(),
                0.02,
                1e-3,
                both,
            ),
            "forced-scalar" => (
                "forced-scalar",
                Arc::new(ForcedScalar::new(0.0)),
                fixed(forced_sample()),
                default_schedule(),
                0.02,
                1e-3,
                both,
            ),
            "nse" => {
                let fam = NseGalerkin::<f64>::new(&opts.nse)?;
                let r = fam.space().ball_radius().unwrap_or(1.0);
                let seeds = NseSeeds {
                    kmax: opts.nse.kmax,
                    count: opts.seed_count.unwrap_or(4),
                    norm_range: (0.2 * r, 0.9 * r),
                    rng_seed: opts.rng_seed,
                };
                (
                    "nse",
                    Arc::new(fam),
                    fixed(seeds.generate()?),
                    PullbackSchedule::linear(0.0, 2.0, 8)?,
                    0.05,
                    1e-3,
                    both,
                )
            }
            other => return Err(Error::Usage(format!("unknown system `{other}`"))),
        };
    Ok(Experiment {
        system,
        family,
        seeds,
        schedule,
        eps_net,
        tol,
        expects,
    })
}

/// The attractor `t -> A(t)` where it is known in closed form, with the
/// metric it attracts in. The bump curve is sampled on the seed grid of
/// step 1/4.
pub struct KnownSets {
    pub metric: MetricKind,
    sets: Box<dyn Fn(f64) -> Result<Vec<State>> + Send + Sync>,
}

impl KnownSets {
    pub fn at(&self, t: f64) -> Result<Vec<State>> {
        (self.sets)(t)
    }
}

impl ges_core::SetFamily<f64> for KnownSets {
    fn sets_at(&self, t: f64) -> Result<Vec<State>> {
        self.at(t)
    }
}

pub fn known_sets(id: &str) -> Option<KnownSets> {
    let known = |metric, f: Box<dyn Fn(f64) -> Result<Vec<State>> + Send + Sync>| {
        Some(KnownSets { metric, sets: f })
    };
    match id {
        "single" => known(MetricKind::Strong, Box::new(|t| Ok(vec![circle_state(t)]))),
        "bump" => known(
            MetricKind::Weak,
            Box::new(|_| {
                let mut set: Vec<State> = (-96..=96).map(|i| curve(f64::from(i) / 4.0)).collect();
                set.push(CoeffState::zero(L2_TAG, 1, 1));
                Ok(set)
            }),
        ),
        "heat" => known(
            MetricKind::Weak,
            Box::new(|_| Ok(vec![CoeffState::zero(HEAT_TAG, 1, 1)])),
        ),
        "branch2" => known(
            MetricKind::Strong,
            Box::new(|_| Ok(vec![CoeffState::zero(L2_TAG, 1, 1)])),
        ),
        "forced-scalar" => known(
            MetricKind::Strong,
            Box::new(|t| {
                Ok(vec![CoeffState::from_real(
                    FORCED_TAG,
                    [(0, periodic_orbit(0.0, t))],
                )?])
            }),
        ),
        _ => None,
    }
}

/// Symbol family of a nonautonomous system, with its seeds.
pub fn symbol_family(
    id: &str,
    opts: &ExperimentOptions,
) -> Result<(Box<dyn SymbolFamily<f64>>, Vec<State>)> {
    match id {
        "forced-scalar" => Ok((Box::new(ForcedPhases::new(opts.symbols)?), forced_sample())),
        "nse" => {
            let exp = experiment("nse", opts)?;
            let base = NseGalerkin::<f64>::new(&opts.nse)?;
            Ok((
                Box::new(NsePhases::new(base, opts.symbols)?),
                exp.seeds.seeds_at(0.0, 0.0)?,
            ))
        }
        other => Err(Error::Unsupported {
            system: other.to_string(),
            what: "symbol families".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_id_builds() {
        let opts = ExperimentOptions::default();
        for id in SYSTEM_IDS {
            let exp = experiment(id, &opts).unwrap();
            assert_eq!(exp.system, id);
            assert_eq!(exp.family.system_id(), id);
            assert!(!exp.seeds.seeds_at(-1.0, 0.0).unwrap().is_empty());
        }
        assert!(experiment("heat-3d", &opts).is_err());
        assert!(symbol_family("forced-scalar", &opts).is_ok());
        assert!(symbol_family("bump", &opts).is_err());
        for id in ["single", "bump", "heat", "branch2", "forced-scalar"] {
            let exp = experiment(id, &opts).unwrap();
            let sets = known_sets(id).unwrap().at(-1.0).unwrap();
            for x in &sets {
                exp.family.space().check_in_ball(x).unwrap();
            }
        }
        assert!(known_sets("line").is_none());
    }
}
