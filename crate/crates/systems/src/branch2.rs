//! A two-branch toy on the unit ball of l2(Z): from `x` at `s` either
//! `x e^{-(t-s)}` or `x e^{-2(t-s)}`.

use ges_core::metric::DualMetricSpace;
use ges_core::state::CoeffState;
use ges_core::{CompleteTrajectories, Error, Result, Scalar, TrajectoryFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::single::{l2_ball, L2_TAG};

#[derive(Clone, Debug)]
pub struct TwoRateDecay<F> {
    space: DualMetricSpace<F>,
}

impl<F: Scalar> Default for TwoRateDecay<F> {
    fn default() -> Self {
        Self { space: l2_ball() }
    }
}

impl<F: Scalar> TwoRateDecay<F> {
    pub fn new() -> Self {
        Self::default()
    }
}

impl<F: Scalar> TrajectoryFamily<F> for TwoRateDecay<F> {
    fn system_id(&self) -> &str {
        "branch2"
    }

    fn space(&self) -> &DualMetricSpace<F> {
        &self.space
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn is_multivalued(&self) -> bool {
        true
    }

    fn branch_count(&self, _s: F, _x: &CoeffState<F>) -> usize {
        2
    }

    fn evolve(
        &self,
        s: F,
        x: &CoeffState<F>,
        ts: &[F],
        branch: usize,
    ) -> Result<Vec<CoeffState<F>>> {
        if branch > 1 {
            return Err(Error::BranchOutOfRange { branch, count: 2 });
        }
        self.space.check_member(x)?;
        let rate = F::from_usize_lossy(branch + 1);
        Ok(ts
            .iter()
            .map(|&t| x.scaled((-(rate * (t - s))).exp()))
            .collect())
    }

    fn complete_trajectories(&self) -> Option<&dyn CompleteTrajectories<F>> {
        Some(self)
    }
}

impl<F: Scalar> CompleteTrajectories<F> for TwoRateDecay<F> {
    fn count(&self) -> usize {
        1
    }

    fn sample(&self, _index: usize, ts: &[F]) -> Result<Vec<CoeffState<F>>> {
        Ok(ts.iter().map(|_| self.space.zero()).collect())
    }
}

/// `count` seeded random states of the unit ball supported on `|k| <= 4`.
pub fn ball_sample<F: Scalar>(count: usize, rng_seed: u64) -> Vec<CoeffState<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|_| {
            let raw: Vec<(i32, f64)> = (-4..=4).map(|k| (k, rng.gen_range(-1.0..1.0))).collect();
            let norm = raw.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            let r = rng.gen_range(0.1..1.0) / norm;
            CoeffState::from_real(L2_TAG, raw.into_iter().map(|(k, v)| (k, F::lit(v * r))))
                .expect("finite")
        })
        .collect()
}
