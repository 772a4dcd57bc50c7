//! The real line with the single motion `u(t) = t - s`: every start drifts
//! off to infinity, so no bounded set attracts anything.
//!
//! Every seed maps to `t - s` regardless of its value. The family is not
//! closed under restriction, so `P(t,s)P(s,r) != P(t,r)`.

use ges_core::metric::{DualMetricSpace, WeakMetric};
use ges_core::state::CoeffState;
use ges_core::{Error, Result, Scalar, TrajectoryFamily};

pub const LINE_TAG: &str = "line";

pub fn line_space<F: Scalar>() -> DualMetricSpace<F> {
    DualMetricSpace::new(LINE_TAG, 1, 1)
        .and_then(|s| s.with_weak(WeakMetric::SameAsStrong))
        .expect("valid line space")
}

pub fn scalar<F: Scalar>(v: F) -> CoeffState<F> {
    CoeffState::from_real(LINE_TAG, [(0, v)]).expect("finite scalar")
}

/// A few points of the line.
pub fn line_sample<F: Scalar>() -> Vec<CoeffState<F>> {
    [-2.0, -1.0, 0.0, 0.5, 3.0]
        .into_iter()
        .map(|v| scalar(F::lit(v)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct LineDrift<F> {
    space: DualMetricSpace<F>,
}

impl<F: Scalar> Default for LineDrift<F> {
    fn default() -> Self {
        Self {
            space: line_space(),
        }
    }
}

impl<F: Scalar> LineDrift<F> {
    pub fn new() -> Self {
        Self::default()
    }
}

impl<F: Scalar> TrajectoryFamily<F> for LineDrift<F> {
    fn system_id(&self) -> &str {
        "line"
    }

    fn space(&self) -> &DualMetricSpace<F> {
        &self.space
    }

    fn is_autonomous(&self) -> bool {
        true
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
        self.space.check_member(x)?;
        Ok(ts.iter().map(|&t| scalar(t - s)).collect())
    }
}
