//! A bump travelling to infinity in l2(Z): the shifts of one curve
//! `tau -> u(tau)` through the unit sphere.
//!
//! Every point of the curve lies on exactly one shift, so the family is
//! single-valued on the curve and has no trajectory elsewhere. It converges
//! weakly to zero but never strongly.

use ges_core::metric::DualMetricSpace;
use ges_core::state::CoeffState;
use ges_core::{CompleteTrajectories, Error, Result, Scalar, SeedSource, TrajectoryFamily};

use crate::single::{l2_ball, L2_TAG};

/// `u(tau) = ((1 + n - tau) e_n + (tau - n) e_{n+1}) / norm`, `n = floor(tau)`.
pub fn curve<F: Scalar>(tau: F) -> CoeffState<F> {
    let n = tau.floor();
    let b = tau - n;
    let a = F::one() - b;
    let norm = (a * a + b * b).sqrt();
    let k = n.to_i32().expect("curve parameter within i32 range");
    CoeffState::from_real(L2_TAG, [(k, a / norm), (k + 1, b / norm)]).expect("finite curve point")
}

/// State at time `t` of the shifted trajectory labelled `r`: `u(t - r)`.
pub fn bump_state<F: Scalar>(r: F, t: F) -> CoeffState<F> {
    curve(t - r)
}

/// Curve parameter of `x`, or `None` off the curve.
pub fn curve_parameter<F: Scalar>(x: &CoeffState<F>) -> Option<F> {
    if x.space() != L2_TAG || x.width() != 1 {
        return None;
    }
    let tiny = F::lit(1e-12);
    let support: Vec<(i32, F)> = x
        .iter()
        .filter(|(_, a)| a[0].norm() > tiny)
        .map(|(k, a)| (k[0], a[0].re))
        .collect();
    if x.values().iter().any(|z| z.im.abs() > tiny) {
        return None;
    }
    let norm = support
        .iter()
        .fold(F::zero(), |acc, &(_, v)| acc + v * v)
        .sqrt();
    if (norm - F::one()).abs() > F::lit(1e-9) {
        return None;
    }
    match support.as_slice() {
        [(k, v)] if *v > F::zero() => Some(F::from(*k).expect("i32 fits")),
        [(k, a), (k1, b)] if *k1 == k + 1 && *a > F::zero() && *b > F::zero() => {
            Some(F::from(*k).expect("i32 fits") + *b / (*a + *b))
        }
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct TravellingBump<F> {
    space: DualMetricSpace<F>,
    complete: BumpShifts<F>,
}

impl<F: Scalar> Default for TravellingBump<F> {
    fn default() -> Self {
        Self {
            space: l2_ball(),
            complete: BumpShifts::grid(F::lit(-24.0), F::lit(24.0), F::lit(0.25)),
        }
    }
}

impl<F: Scalar> TravellingBump<F> {
    pub fn new() -> Self {
        Self::default()
    }
}

impl<F: Scalar> TrajectoryFamily<F> for TravellingBump<F> {
    fn system_id(&self) -> &str {
        "bump"
    }

    fn space(&self) -> &DualMetricSpace<F> {
        &self.space
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn branch_count(&self, _s: F, x: &CoeffState<F>) -> usize {
        usize::from(curve_parameter(x).is_some())
    }

    fn evolve(
        &self,
        s: F,
        x: &CoeffState<F>,
        ts: &[F],
        branch: usize,
    ) -> Result<Vec<CoeffState<F>>> {
        if branch != 0 {
            return Err(Error::BranchOutOfRange { branch, count: 1 });
        }
        let tau = curve_parameter(x).ok_or(Error::NoTrajectory { s: s.as_f64() })?;
        Ok(ts.iter().map(|&t| curve(tau + (t - s))).collect())
    }

    fn complete_trajectories(&self) -> Option<&dyn CompleteTrajectories<F>> {
        Some(&self.complete)
    }
}

/// The complete trajectories `tau -> u(tau + q)` for `q` on a grid.
#[derive(Clone, Debug)]
pub struct BumpShifts<F> {
    shifts: Vec<F>,
}

impl<F: Scalar> BumpShifts<F> {
    pub fn grid(lo: F, hi: F, step: F) -> Self {
        Self {
            shifts: grid(lo, hi, step),
        }
    }
}

impl<F: Scalar> CompleteTrajectories<F> for BumpShifts<F> {
    fn count(&self) -> usize {
        self.shifts.len()
    }

    fn sample(&self, index: usize, ts: &[F]) -> Result<Vec<CoeffState<F>>> {
        let q = *self.shifts.get(index).ok_or(Error::BranchOutOfRange {
            branch: index,
            count: self.shifts.len(),
        })?;
        Ok(ts.iter().map(|&t| curve(t + q)).collect())
    }
}

fn grid<F: Scalar>(lo: F, hi: F, step: F) -> Vec<F> {
    let n = ((hi - lo) / step).round().to_usize().unwrap_or(0);
    (0..=n)
        .map(|i| lo + step * F::from_usize_lossy(i))
        .collect()
}

/// Curve points whose images at time `t` are `u(r)` for `r` on a fixed grid:
/// `seeds_at(s, t) = {u(s - t + r)}`.
#[derive(Clone, Debug)]
pub struct BumpSeeds<F> {
    offsets: Vec<F>,
}

impl<F: Scalar> BumpSeeds<F> {
    pub fn grid(lo: F, hi: F, step: F) -> Self {
        Self {
            offsets: grid(lo, hi, step),
        }
    }

    pub fn offsets(&self) -> &[F] {
        &self.offsets
    }
}

impl<F: Scalar> Default for BumpSeeds<F> {
    fn default() -> Self {
        Self::grid(F::lit(-12.0), F::lit(12.0), F::lit(0.25))
    }
}

impl<F: Scalar> SeedSource<F> for BumpSeeds<F> {
    fn seeds_at(&self, s: F, t: F) -> Result<Vec<CoeffState<F>>> {
        Ok(self.offsets.iter().map(|&r| curve(s - t + r)).collect())
    }
}
