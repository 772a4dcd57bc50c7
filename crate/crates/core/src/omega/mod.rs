//! Finite-depth approximation of pullback and forward omega-limits.
//!
//! A schedule of start times `s_1 > s_2 > ... > s_N` yields tier images
//! `P(t, s_i)A`. The omega-limit estimate keeps the points of the deep tiers
//! that every deeper tier comes back to within `eps_net`, then thins them to
//! an epsilon-net. The attraction profile records how far each tier image is
//! from the estimate.

mod diagnostics;
mod invariance;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::evolution::{pullback_image, BranchSelect, SeedSource, TrajectoryFamily};
use crate::metric::{DualMetricSpace, MetricKind};
use crate::scalar::Scalar;
use crate::state::CoeffState;

pub use diagnostics::{
    attraction_diagnostic, attraction_verdict, minimality_against, minimality_check, pac_check,
    AttractionReport, AttractionVerdict, MinimalityReport, PacReport, PacSequence, PacVerdict,
};
pub use invariance::{
    invariance_check, tracking_check, InvarianceKind, InvarianceOptions, InvarianceReport,
    QuasiReport, SetFamily, TrackingReport, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleMode {
    /// `s_i = t - delta * (i + 1)`.
    Linear { delta: f64 },
    /// `s_i = t - delta * ratio^i`.
    Geometric { delta: f64, ratio: f64 },
    /// Explicit start times.
    Explicit,
}

/// Strictly decreasing start times, all at or before the observation time.
#[derive(Clone, Debug, PartialEq)]
pub struct PullbackSchedule<F> {
    t: F,
    starts: Vec<F>,
    mode: ScheduleMode,
}

impl<F: Scalar> PullbackSchedule<F> {
    pub fn geometric(t: F, delta: F, ratio: F, n: usize) -> Result<Self> {
        if !(delta > F::zero()) || !(ratio > F::one()) {
            return usage("geometric schedule needs delta > 0 and ratio > 1");
        }
        let starts = (0..n).map(|i| t - delta * ratio.powi(i as i32)).collect();
        Self::build(
            t,
            starts,
            ScheduleMode::Geometric {
                delta: delta.as_f64(),
                ratio: ratio.as_f64(),
            },
        )
    }

    pub fn linear(t: F, delta: F, n: usize) -> Result<Self> {
        if !(delta > F::zero()) {
            return usage("linear schedule needs delta > 0");
        }
        let starts = (0..n)
            .map(|i| t - delta * F::from_usize_lossy(i + 1))
            .collect();
        Self::build(
            t,
            starts,
            ScheduleMode::Linear {
                delta: delta.as_f64(),
            },
        )
    }

    pub fn explicit(t: F, starts: Vec<F>) -> Result<Self> {
        Self::build(t, starts, ScheduleMode::Explicit)
    }

    /// Geometric with `delta = 1`, `ratio = 1.6`, sixteen tiers.
    pub fn default_at(t: F) -> Self {
        Self::geometric(t, F::one(), F::lit(1.6), 16).expect("default schedule is valid")
    }

    fn build(t: F, starts: Vec<F>, mode: ScheduleMode) -> Result<Self> {
        if starts.len() < 3 {
            return usage("a pullback schedule needs at least three tiers");
        }
        if !t.is_finite() || starts.iter().any(|s| !s.is_finite() || *s > t) {
            return usage("schedule starts must be finite and not after t");
        }
        if starts.windows(2).any(|w| !(w[1] < w[0])) {
            return usage("schedule starts must be strictly decreasing");
        }
        Ok(Self { t, starts, mode })
    }

    pub fn t(&self) -> F {
        self.t
    }

    pub fn starts(&self) -> &[F] {
        &self.starts
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// Pullback depths `t - s_i`.
    pub fn depths(&self) -> Vec<F> {
        self.starts.iter().map(|s| self.t - *s).collect()
    }

    /// The same depths observed at `t + shift`.
    pub fn shifted(&self, shift: F) -> Self {
        Self {
            t: self.t + shift,
            starts: self.starts.iter().map(|s| *s + shift).collect(),
            mode: self.mode,
        }
    }
}

/// Which limit an [`OmegaApprox`] estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaKind {
    Pullback,
    Forward,
    Uniform,
}

impl fmt::Display for OmegaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OmegaKind::Pullback => "pullback",
            OmegaKind::Forward => "forward",
            OmegaKind::Uniform => "uniform",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfilePoint<F> {
    /// Start time for pullback tiers, elapsed time for forward tiers.
    pub s: F,
    /// Infinite when there is nothing to measure against.
    pub semidist: F,
}

#[derive(Clone, Debug)]
pub struct OmegaOptions<F> {
    pub metric: MetricKind,
    pub eps_net: F,
    /// Slack beyond the net radius for the convergence flag: the profile
    /// must settle below `eps_net + tol`.
    pub tol: F,
    pub branches: BranchSelect,
}

impl<F: Scalar> OmegaOptions<F> {
    pub fn new(metric: MetricKind, eps_net: F, tol: F) -> Result<Self> {
        if !(eps_net > F::zero()) || !(tol > F::zero()) {
            return usage("eps_net and tol must be positive");
        }
        Ok(Self {
            metric,
            eps_net,
            tol,
            branches: BranchSelect::All,
        })
    }
}

/// Finite estimate of an omega-limit set together with its attraction profile.
#[derive(Clone, Debug)]
pub struct OmegaApprox<F> {
    pub system: String,
    pub kind: OmegaKind,
    pub t: F,
    pub metric: MetricKind,
    pub points: Vec<CoeffState<F>>,
    pub eps_net: F,
    pub tol: F,
    pub profile: Vec<ProfilePoint<F>>,
    pub converged: bool,
    /// Deepest pullback depth (or longest forward time) reached.
    pub depth: F,
    /// Set when no point survived the tier intersection.
    pub note: Option<String>,
}

impl<F: Scalar> OmegaApprox<F> {
    pub fn profile_values(&self) -> Vec<F> {
        self.profile.iter().map(|p| p.semidist).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub(crate) const NO_CONVERGENCE: &str = "no convergence at this depth";

/// Number of trailing tiers treated as "deep": a third, at least two.
pub(crate) fn deep_count(n: usize) -> usize {
    n.div_ceil(3).max(2).min(n)
}

/// Profile has settled: last value within `tol` and no increase (beyond a
/// rounding slack) over its last third.
pub(crate) fn settles<F: Scalar>(values: &[F], tol: F) -> bool {
    let Some(&last) = values.last() else {
        return false;
    };
    if !(last <= tol) {
        return false;
    }
    let slack = tol * F::lit(1e-3) + F::lit(1e-12);
    let tail = &values[values.len() - deep_count(values.len())..];
    tail.windows(2).all(|w| w[1] <= w[0] + slack)
}

/// Tier images of a schedule, computed concurrently, in schedule order.
pub(crate) fn pullback_tiers<
    F: Scalar,
    Fam: TrajectoryFamily<F> + ?Sized,
    S: SeedSource<F> + ?Sized,
>(
    fam: &Fam,
    seeds: &S,
    sched: &PullbackSchedule<F>,
    branches: BranchSelect,
) -> Result<Vec<Vec<CoeffState<F>>>> {
    let t = sched.t();
    sched
        .starts()
        .par_iter()
        .map(|&s| {
            let a = seeds.seeds_at(s, t)?;
            Ok(pullback_image(fam, &a, t, s, branches)?.states())
        })
        .collect()
}

/// Forward tier images `P(d_i, 0)A` for the schedule's depths `d_i`.
pub(crate) fn forward_tiers<
    F: Scalar,
    Fam: TrajectoryFamily<F> + ?Sized,
    S: SeedSource<F> + ?Sized,
>(
    fam: &Fam,
    seeds: &S,
    horizons: &[F],
    branches: BranchSelect,
) -> Result<Vec<Vec<CoeffState<F>>>> {
    horizons
        .par_iter()
        .map(|&d| {
            let a = seeds.seeds_at(F::zero(), d)?;
            Ok(pullback_image(fam, &a, d, F::zero(), branches)?.states())
        })
        .collect()
}

/// Tier survival and netting shared by every omega estimator.
///
/// Candidates come from the deep tiers except the deepest, which only serves
/// as a witness: a lone tier always "survives" against itself, and dropping it
/// keeps diverging families from looking settled.
pub(crate) fn omega_from_tiers<F: Scalar>(
    space: &DualMetricSpace<F>,
    system: &str,
    kind: OmegaKind,
    t: F,
    keys: &[F],
    depth: F,
    images: &[Vec<CoeffState<F>>],
    opts: &OmegaOptions<F>,
) -> Result<OmegaApprox<F>> {
    let n = images.len();
    for image in images {
        image.iter().try_for_each(|x| space.check_in_ball(x))?;
    }
    let first = n - deep_count(n);
    let metric = opts.metric;
    let eps = opts.eps_net;

    let survivors: Vec<CoeffState<F>> = (first..n - 1)
        .into_par_iter()
        .map(|j| {
            images[j]
                .iter()
                .filter(|p| {
                    images[j + 1..]
                        .iter()
                        .all(|deeper| space.dist_to_set_unchecked(metric, p, deeper) <= eps)
                })
                .cloned()
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let points: Vec<CoeffState<F>> = space
        .epsilon_net_unchecked(&survivors, eps, metric)
        .into_iter()
        .map(|i| survivors[i].clone())
        .collect();

    let profile: Vec<ProfilePoint<F>> = keys
        .iter()
        .zip(images)
        .map(|(&s, image)| ProfilePoint {
            s,
            semidist: if points.is_empty() || image.is_empty() {
                F::infinity()
            } else {
                space.set_semidist_unchecked(image, &points, metric)
            },
        })
        .collect();

    let values: Vec<F> = profile.iter().map(|p| p.semidist).collect();
    let converged = !points.is_empty() && settles(&values, eps + opts.tol);
    Ok(OmegaApprox {
        system: system.to_string(),
        kind,
        t,
        metric,
        note: points.is_empty().then(|| NO_CONVERGENCE.to_string()),
        points,
        eps_net: eps,
        tol: opts.tol,
        profile,
        converged,
        depth,
    })
}

/// Pullback omega-limit estimate at the schedule's observation time.
pub fn omega_pullback<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized, S: SeedSource<F> + ?Sized>(
    fam: &Fam,
    seeds: &S,
    sched: &PullbackSchedule<F>,
    opts: &OmegaOptions<F>,
) -> Result<OmegaApprox<F>> {
    let images = pullback_tiers(fam, seeds, sched, opts.branches)?;
    let depth = sched.t() - *sched.starts().last().expect("schedule nonempty");
    omega_from_tiers(
        fam.space(),
        fam.system_id(),
        OmegaKind::Pullback,
        sched.t(),
        sched.starts(),
        depth,
        &images,
        opts,
    )
}

/// Forward omega-limit `omega(A)` from `R(d)A = P(d, 0)A` over the schedule's
/// depths `d`. Only meaningful for autonomous families.
pub fn forward_omega<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized, S: SeedSource<F> + ?Sized>(
    fam: &Fam,
    seeds: &S,
    sched: &PullbackSchedule<F>,
    opts: &OmegaOptions<F>,
) -> Result<OmegaApprox<F>> {
    if !fam.is_autonomous() {
        return usage(format!(
            "forward omega needs an autonomous family, `{}` is not",
            fam.system_id()
        ));
    }
    let horizons = sched.depths();
    let images = forward_tiers(fam, seeds, &horizons, opts.branches)?;
    let depth = *horizons.last().expect("schedule nonempty");
    omega_from_tiers(
        fam.space(),
        fam.system_id(),
        OmegaKind::Forward,
        F::zero(),
        &horizons,
        depth,
        &images,
        opts,
    )
}
