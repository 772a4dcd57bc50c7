//! Attraction, minimality and pullback asymptotic compactness diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    omega_pullback, pullback_tiers, settles, OmegaApprox, OmegaOptions, ProfilePoint,
    PullbackSchedule,
};
use crate::error::{usage, Result};
use crate::evolution::{BranchSelect, SeedSource, TrajectoryFamily};
use crate::metric::{DualMetricSpace, MetricKind};
use crate::scalar::Scalar;
use crate::state::CoeffState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttractionVerdict {
    Attracts,
    Fails,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttractionReport<F> {
    pub profile: Vec<ProfilePoint<F>>,
    pub tol: F,
    pub verdict: AttractionVerdict,
}

/// Attracts: settled within `tol`. Fails: the second half of the profile
/// stays at or above `2 tol`. Anything else is inconclusive.
pub fn attraction_verdict<F: Scalar>(values: &[F], tol: F) -> AttractionVerdict {
    if settles(values, tol) {
        return AttractionVerdict::Attracts;
    }
    let half = &values[values.len() / 2..];
    let floor = half.iter().copied().fold(F::infinity(), F::min);
    if !half.is_empty() && floor >= F::lit(2.0) * tol {
        AttractionVerdict::Fails
    } else {
        AttractionVerdict::Inconclusive
    }
}

/// Profile `semidist(P(t, s_i)A, candidate)` along the schedule, and whether
/// the candidate pullback attracts the seeds.
pub fn attraction_diagnostic<
    F: Scalar,
    Fam: TrajectoryFamily<F> + ?Sized,
    S: SeedSource<F> + ?Sized,
>(
    fam: &Fam,
    candidate: &[CoeffState<F>],
    seeds: &S,
    sched: &PullbackSchedule<F>,
    metric: MetricKind,
    tol: F,
    branches: BranchSelect,
) -> Result<AttractionReport<F>> {
    if candidate.is_empty() {
        return usage("attraction diagnostic needs a nonempty candidate");
    }
    if !(tol > F::zero()) {
        return usage("tolerance must be positive");
    }
    let space = fam.space();
    candidate.iter().try_for_each(|c| space.check_in_ball(c))?;
    let images = pullback_tiers(fam, seeds, sched, branches)?;
    let profile: Vec<ProfilePoint<F>> = sched
        .starts()
        .iter()
        .zip(&images)
        .map(|(&s, image)| ProfilePoint {
            s,
            semidist: if image.is_empty() {
                F::infinity()
            } else {
                space.set_semidist_unchecked(image, candidate, metric)
            },
        })
        .collect();
    let values: Vec<F> = profile.iter().map(|p| p.semidist).collect();
    Ok(AttractionReport {
        verdict: attraction_verdict(&values, tol),
        profile,
        tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimalityReport<F> {
    /// `semidist(omega points, candidate)`; `None` when the estimate is empty.
    pub omega_in_candidate: Option<F>,
    pub contained: bool,
    /// Candidate positions farther than `2 eps_net` from every omega point.
    pub excess: Vec<usize>,
    pub minimal: bool,
}

/// Compares a candidate attractor with an omega estimate: the estimate must
/// lie within `tol` of the candidate, and candidate points the estimate never
/// approaches are flagged as excess.
pub fn minimality_against<F: Scalar>(
    space: &DualMetricSpace<F>,
    omega: &OmegaApprox<F>,
    candidate: &[CoeffState<F>],
    tol: F,
) -> Result<MinimalityReport<F>> {
    if candidate.is_empty() {
        return usage("minimality check needs a nonempty candidate");
    }
    if omega.points.is_empty() {
        return Ok(MinimalityReport {
            omega_in_candidate: None,
            contained: false,
            excess: Vec::new(),
            minimal: false,
        });
    }
    let metric = omega.metric;
    let inclusion = space.set_semidist(&omega.points, candidate, metric)?;
    let far = F::lit(2.0) * omega.eps_net;
    let mut excess = Vec::new();
    for (i, c) in candidate.iter().enumerate() {
        if space.dist_to_set(metric, c, &omega.points)? > far {
            excess.push(i);
        }
    }
    let contained = inclusion <= tol;
    Ok(MinimalityReport {
        omega_in_candidate: Some(inclusion),
        contained,
        minimal: contained && excess.is_empty(),
        excess,
    })
}

/// Estimates the omega-limit and runs [`minimality_against`].
pub fn minimality_check<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized, S: SeedSource<F> + ?Sized>(
    fam: &Fam,
    candidate: &[CoeffState<F>],
    seeds: &S,
    sched: &PullbackSchedule<F>,
    opts: &OmegaOptions<F>,
) -> Result<MinimalityReport<F>> {
    let omega = omega_pullback(fam, seeds, sched, opts)?;
    minimality_against(fam.space(), &omega, candidate, opts.tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacVerdict {
    PacConsistent,
    PacViolated,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct PacSequence<F> {
    /// "adversarial" or "random".
    pub kind: &'static str,
    /// Largest group of second-half elements within `tol / 2` of a common
    /// centre (hence pairwise within `tol`).
    pub largest_cluster: usize,
    /// Smallest pairwise strong distance among the trailing elements.
    pub tail_min_gap: F,
}

#[derive(Clone, Debug, Serialize)]
pub struct PacReport<F> {
    pub tol: F,
    pub tail_len: usize,
    pub sequences: Vec<PacSequence<F>>,
    pub verdict: PacVerdict,
}

const PAC_TAIL: usize = 10;
const PAC_CLUSTER: usize = 3;

fn summarize<F: Scalar>(
    space: &DualMetricSpace<F>,
    kind: &'static str,
    seq: &[&CoeffState<F>],
    tol: F,
) -> PacSequence<F> {
    let d = |a: &CoeffState<F>, b: &CoeffState<F>| space.dist_unchecked(MetricKind::Strong, a, b);
    let half = &seq[seq.len() / 2..];
    let radius = tol * F::lit(0.5);
    let mut centres: Vec<(usize, usize)> = Vec::new();
    for (i, x) in half.iter().enumerate() {
        match centres.iter_mut().find(|(c, _)| d(half[*c], x) <= radius) {
            Some(entry) => entry.1 += 1,
            None => centres.push((i, 1)),
        }
    }
    let tail = &seq[seq.len() - seq.len().min(PAC_TAIL)..];
    let mut gap = F::infinity();
    for i in 0..tail.len() {
        for j in i + 1..tail.len() {
            gap = gap.min(d(tail[i], tail[j]));
        }
    }
    PacSequence {
        kind,
        largest_cluster: centres.iter().map(|c| c.1).max().unwrap_or(0),
        tail_min_gap: gap,
    }
}

/// Pullback asymptotic compactness probe at resolution `tol`, strong metric.
///
/// Draws one element per tier of the schedule: a greedy farthest-point
/// sequence plus `sample_size` seeded random ones. Consistent when every
/// sequence has a Cauchy cluster (three elements pairwise within `tol`) in
/// its second half; violated when some sequence's last ten elements are
/// pairwise more than `2 tol` apart; inconclusive otherwise.
pub fn pac_check<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized, S: SeedSource<F> + ?Sized>(
    fam: &Fam,
    seeds: &S,
    sched: &PullbackSchedule<F>,
    sample_size: usize,
    tol: F,
    rng_seed: u64,
) -> Result<PacReport<F>> {
    if sample_size < 10 {
        return usage("compactness check needs a sample size of at least 10");
    }
    if !(tol > F::zero()) {
        return usage("tolerance must be positive");
    }
    if sched.len() < 2 * PAC_CLUSTER {
        return usage("compactness check needs at least six tiers");
    }
    let space = fam.space();
    let images = pullback_tiers(fam, seeds, sched, BranchSelect::All)?;
    if images.iter().any(Vec::is_empty) {
        return usage("a tier image is empty; no sequence can be drawn");
    }

    let mut sequences = Vec::with_capacity(sample_size + 1);

    let mut adversarial: Vec<&CoeffState<F>> = vec![&images[0][0]];
    for image in &images[1..] {
        let far = image
            .iter()
            .map(|x| {
                let gap = adversarial
                    .iter()
                    .map(|y| space.dist_unchecked(MetricKind::Strong, x, y))
                    .fold(F::infinity(), F::min);
                (x, gap)
            })
            .fold(None::<(&CoeffState<F>, F)>, |best, (x, g)| match best {
                Some((_, bg)) if bg >= g => best,
                _ => Some((x, g)),
            })
            .expect("image nonempty")
            .0;
        adversarial.push(far);
    }
    sequences.push(summarize(space, "adversarial", &adversarial, tol));

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..sample_size {
        let seq: Vec<&CoeffState<F>> = images
            .iter()
            .map(|img| &img[rng.gen_range(0..img.len())])
            .collect();
        sequences.push(summarize(space, "random", &seq, tol));
    }

    let tail_len = sched.len().min(PAC_TAIL);
    let separated = F::lit(2.0) * tol;
    let verdict = if sequences.iter().any(|q| q.tail_min_gap > separated) {
        PacVerdict::PacViolated
    } else if sequences.iter().all(|q| q.largest_cluster >= PAC_CLUSTER) {
        PacVerdict::PacConsistent
    } else {
        PacVerdict::Inconclusive
    };
    Ok(PacReport {
        tol,
        tail_len,
        sequences,
        verdict,
    })
}
