//! Pullback invariance of set families and the tracking property.

use rayon::prelude::*;
use serde::Serialize;

use super::PullbackSchedule;
use crate::error::{usage, Error, Result};
use crate::evolution::{pullback_image, BranchSelect, SeedSource, TrajectoryFamily};
use crate::metric::MetricKind;
use crate::scalar::Scalar;
use crate::state::CoeffState;

/// A time-indexed family of finite sets `t -> B(t)`.
pub trait SetFamily<F: Scalar>: Sync {
    fn sets_at(&self, t: F) -> Result<Vec<CoeffState<F>>>;
}

impl<F: Scalar, G> SetFamily<F> for G
where
    G: Fn(F) -> Result<Vec<CoeffState<F>>> + Sync,
{
    fn sets_at(&self, t: F) -> Result<Vec<CoeffState<F>>> {
        self(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InvarianceKind {
    Semi,
    Quasi,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    /// Conjunction: any failure fails, otherwise any doubt is inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Holds, Verdict::Holds) => Verdict::Holds,
            _ => Verdict::Inconclusive,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InvarianceOptions<F> {
    pub metric: MetricKind,
    pub tol: F,
    /// Grid points across the window (at least two).
    pub samples: usize,
    /// Most deep-pullback trajectories examined by the quasi search.
    pub budget: usize,
}

impl<F: Scalar> InvarianceOptions<F> {
    pub fn new(metric: MetricKind, tol: F) -> Self {
        Self {
            metric,
            tol,
            samples: 5,
            budget: 20_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiReport<F> {
    pub targets: usize,
    pub matched: usize,
    pub trajectories_examined: usize,
    pub budget_exhausted: bool,
    /// Worst threading distance over matched targets.
    pub worst_match: F,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport<F> {
    pub kind: InvarianceKind,
    pub window: (F, F),
    pub tol: F,
    /// Largest `semidist(P(t2, t1)B(t1), B(t2))` over sampled pairs.
    pub semi_max: Option<F>,
    pub quasi: Option<QuasiReport<F>>,
    pub verdict: Verdict,
}

fn window_grid<F: Scalar>(window: (F, F), samples: usize) -> Vec<F> {
    let (a, b) = window;
    let last = samples - 1;
    (0..samples)
        .map(|i| {
            if i == last {
                b
            } else {
                a + (b - a) * F::from_usize_lossy(i) / F::from_usize_lossy(last)
            }
        })
        .collect()
}

/// Pullback invariance of `B` over `window`.
///
/// Semi: `P(t2, t1)B(t1)` stays within `tol` of `B(t2)` for sampled `t1 < t2`.
/// Quasi: every `b` in `B(t_max)` is threaded by a trajectory of the deep
/// pullback ensemble (started at schedule times before the window) that stays
/// within `tol` of `B` at each sampled time. A failed search is inconclusive.
/// Full: both.
pub fn invariance_check<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized, S: SeedSource<F> + ?Sized>(
    fam: &Fam,
    sets: &dyn SetFamily<F>,
    kind: InvarianceKind,
    window: (F, F),
    deep_seeds: &S,
    sched: &PullbackSchedule<F>,
    opts: &InvarianceOptions<F>,
) -> Result<InvarianceReport<F>> {
    let (t_min, t_max) = window;
    if !(t_min < t_max) || opts.samples < 2 || !(opts.tol > F::zero()) {
        return usage("invariance check needs t_min < t_max, two samples and a positive tolerance");
    }
    let space = fam.space();
    let grid = window_grid(window, opts.samples);
    let sets_on_grid: Vec<Vec<CoeffState<F>>> = grid
        .iter()
        .map(|&t| sets.sets_at(t))
        .collect::<Result<_>>()?;
    if sets_on_grid.iter().any(Vec::is_empty) {
        return usage("the set family is empty somewhere on the window");
    }
    for set in &sets_on_grid {
        set.iter().try_for_each(|x| space.check_in_ball(x))?;
    }

    let mut verdict = Verdict::Holds;
    let mut semi_max = None;
    if matches!(kind, InvarianceKind::Semi | InvarianceKind::Full) {
        let pairs: Vec<(usize, usize)> = (0..grid.len())
            .flat_map(|i| (i + 1..grid.len()).map(move |j| (i, j)))
            .collect();
        let dists: Vec<Option<F>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let image =
                    pullback_image(fam, &sets_on_grid[i], grid[j], grid[i], BranchSelect::All)?
                        .states();
                Ok((!image.is_empty())
                    .then(|| space.set_semidist_unchecked(&image, &sets_on_grid[j], opts.metric)))
            })
            .collect::<Result<_>>()?;
        let worst = dists.into_iter().flatten().fold(F::zero(), F::max);
        semi_max = Some(worst);
        if worst > opts.tol {
            verdict = Verdict::Fails;
        }
    }

    let mut quasi = None;
    if matches!(kind, InvarianceKind::Quasi | InvarianceKind::Full) {
        let report = quasi_search(fam, &grid, &sets_on_grid, deep_seeds, sched, opts)?;
        let q = if report.matched == report.targets {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        };
        verdict = verdict.and(q);
        quasi = Some(report);
    }

    Ok(InvarianceReport {
        kind,
        window,
        tol: opts.tol,
        semi_max,
        quasi,
        verdict,
    })
}

fn quasi_search<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized, S: SeedSource<F> + ?Sized>(
    fam: &Fam,
    grid: &[F],
    sets_on_grid: &[Vec<CoeffState<F>>],
    deep_seeds: &S,
    sched: &PullbackSchedule<F>,
    opts: &InvarianceOptions<F>,
) -> Result<QuasiReport<F>> {
    let space = fam.space();
    let t_min = grid[0];
    let t_max = *grid.last().expect("grid nonempty");

    // (start, seed, branch) in deterministic order, truncated to the budget.
    let mut jobs: Vec<(F, CoeffState<F>, usize)> = Vec::new();
    let mut exhausted = false;
    'outer: for &s in sched.starts().iter().filter(|&&s| s < t_min) {
        for x in deep_seeds.seeds_at(s, t_max)? {
            for b in 0..fam.branch_count(s, &x) {
                if jobs.len() == opts.budget {
                    exhausted = true;
                    break 'outer;
                }
                jobs.push((s, x.clone(), b));
            }
        }
    }

    // Per trajectory: the distance from B at each grid time.
    let threads: Vec<(CoeffState<F>, F)> = jobs
        .par_iter()
        .map(|(s, x, b)| {
            let traj = fam.evolve(*s, x, grid, *b)?;
            let worst = traj
                .iter()
                .zip(sets_on_grid)
                .map(|(u, set)| space.dist_to_set_unchecked(opts.metric, u, set))
                .fold(F::zero(), F::max);
            Ok((traj.into_iter().last().expect("grid nonempty"), worst))
        })
        .collect::<Result<_>>()?;

    let targets = sets_on_grid.last().expect("grid nonempty");
    let mut matched = 0;
    let mut worst_match = F::zero();
    for b in targets {
        let best = threads
            .iter()
            .filter(|(_, worst)| *worst <= opts.tol)
            .map(|(end, worst)| space.dist_unchecked(opts.metric, end, b).max(*worst))
            .fold(F::infinity(), F::min);
        if best <= opts.tol {
            matched += 1;
            worst_match = worst_match.max(best);
        }
    }
    Ok(QuasiReport {
        targets: targets.len(),
        matched,
        trajectories_examined: jobs.len(),
        budget_exhausted: exhausted,
        worst_match,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackingReport<F> {
    pub trajectories: usize,
    pub weak_matched: usize,
    /// Worst over trajectories of the best weak sup-distance to a complete one.
    pub weak_worst: F,
    pub strong_matched: Option<usize>,
    pub strong_worst: Option<F>,
    pub eps: F,
    pub verdict: Verdict,
}

/// Tracking by complete trajectories on the window `[t - horizon, t]`.
///
/// Trajectories start from the seeds at every schedule time before the
/// window. Each must stay within `eps` of one registered complete trajectory
/// in the weak sup metric over the window, and, when `strong` is set, in the
/// strong sup metric as well.
pub fn tracking_check<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized, S: SeedSource<F> + ?Sized>(
    fam: &Fam,
    seeds: &S,
    sched: &PullbackSchedule<F>,
    horizon: F,
    eps: F,
    samples: usize,
    strong: bool,
) -> Result<TrackingReport<F>> {
    let Some(complete) = fam.complete_trajectories() else {
        return Err(Error::Unsupported {
            system: fam.system_id().to_string(),
            what: "no complete trajectories registered".into(),
        });
    };
    if !(horizon > F::zero()) || !(eps > F::zero()) || samples < 2 {
        return usage("tracking needs a positive horizon and eps and two samples");
    }
    let t = sched.t();
    let grid = window_grid((t - horizon, t), samples);
    let space = fam.space();

    let reference: Vec<Vec<CoeffState<F>>> = (0..complete.count())
        .into_par_iter()
        .map(|i| complete.sample(i, &grid))
        .collect::<Result<_>>()?;
    if reference.is_empty() {
        return Err(Error::Unsupported {
            system: fam.system_id().to_string(),
            what: "complete trajectory sample is empty".into(),
        });
    }

    let mut jobs = Vec::new();
    for &s in sched.starts().iter().filter(|&&s| s <= grid[0]) {
        for x in seeds.seeds_at(s, t)? {
            for b in 0..fam.branch_count(s, &x) {
                jobs.push((s, x.clone(), b));
            }
        }
    }
    if jobs.is_empty() {
        return usage("no trajectory starts before the tracking window");
    }

    let sup = |u: &[CoeffState<F>], v: &[CoeffState<F>], kind: MetricKind| {
        u.iter()
            .zip(v)
            .map(|(a, b)| space.dist_unchecked(kind, a, b))
            .fold(F::zero(), F::max)
    };
    let best: Vec<(F, Option<F>)> = jobs
        .par_iter()
        .map(|(s, x, b)| {
            let traj = fam.evolve(*s, x, &grid, *b)?;
            let weak = reference
                .iter()
                .map(|v| sup(&traj, v, MetricKind::Weak))
                .fold(F::infinity(), F::min);
            let strong = strong.then(|| {
                reference
                    .iter()
                    .map(|v| sup(&traj, v, MetricKind::Strong))
                    .fold(F::infinity(), F::min)
            });
            Ok((weak, strong))
        })
        .collect::<Result<_>>()?;

    let weak_matched = best.iter().filter(|(w, _)| *w < eps).count();
    let weak_worst = best.iter().map(|(w, _)| *w).fold(F::zero(), F::max);
    let strong_matched = strong.then(|| {
        best.iter()
            .filter(|(_, s)| s.is_some_and(|s| s < eps))
            .count()
    });
    let strong_worst = strong.then(|| best.iter().filter_map(|(_, s)| *s).fold(F::zero(), F::max));
    let all = best.len();
    let holds = weak_matched == all && strong_matched.is_none_or(|m| m == all);
    Ok(TrackingReport {
        trajectories: all,
        weak_matched,
        weak_worst,
        strong_matched,
        strong_worst,
        eps,
        verdict: if holds {
            Verdict::Holds
        } else {
            Verdict::Fails
        },
    })
}
