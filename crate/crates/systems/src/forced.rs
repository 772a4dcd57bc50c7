//! The periodically forced scalar equation `u' = -u + cos(t + sigma)`, and
//! its phases `sigma` as a symbol family.

use ges_core::metric::DualMetricSpace;
use ges_core::state::CoeffState;
use ges_core::symbols::SymbolSpace;
use ges_core::{CompleteTrajectories, Error, Result, Scalar, SymbolFamily, TrajectoryFamily};

pub const FORCED_TAG: &str = "forced";

pub fn forced_space<F: Scalar>() -> DualMetricSpace<F> {
    DualMetricSpace::new(FORCED_TAG, 1, 1)
        .and_then(|s| s.with_ball_radius(F::lit(2.0)))
        .expect("valid forced space")
}

fn scalar<F: Scalar>(v: F) -> CoeffState<F> {
    CoeffState::from_real(FORCED_TAG, [(0, v)]).expect("finite scalar")
}

/// The periodic solution `p(t) = (cos(t + sigma) + sin(t + sigma)) / 2`.
pub fn periodic_orbit<F: Scalar>(sigma: F, t: F) -> F {
    let a = t + sigma;
    (a.cos() + a.sin()) * F::lit(0.5)
}

/// Closed form `u(t) = (u(s) - p(s)) e^{-(t-s)} + p(t)`.
pub fn forced_solution<F: Scalar>(sigma: F, s: F, u0: F, t: F) -> F {
    (u0 - periodic_orbit(sigma, s)) * (s - t).exp() + periodic_orbit(sigma, t)
}

/// Seeds spread over the absorbing interval.
pub fn forced_sample<F: Scalar>() -> Vec<CoeffState<F>> {
    (-3..=3)
        .map(|i| scalar(F::lit(0.5 * f64::from(i))))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ForcedScalar<F> {
    sigma: F,
    space: DualMetricSpace<F>,
}

impl<F: Scalar> ForcedScalar<F> {
    pub fn new(sigma: F) -> Self {
        Self {
            sigma,
            space: forced_space(),
        }
    }

    pub fn sigma(&self) -> F {
        self.sigma
    }
}

impl<F: Scalar> TrajectoryFamily<F> for ForcedScalar<F> {
    fn system_id(&self) -> &str {
        "forced-scalar"
    }

    fn space(&self) -> &DualMetricSpace<F> {
        &self.space
    }

    fn is_autonomous(&self) -> bool {
        false
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
        if x.values().iter().any(|z| z.im != F::zero()) {
            return Err(Error::InvalidState("forced scalar states are real".into()));
        }
        let u0 = x.coeff(0).re;
        Ok(ts
            .iter()
            .map(|&t| scalar(forced_solution(self.sigma, s, u0, t)))
            .collect())
    }

    fn complete_trajectories(&self) -> Option<&dyn CompleteTrajectories<F>> {
        Some(self)
    }
}

impl<F: Scalar> CompleteTrajectories<F> for ForcedScalar<F> {
    fn count(&self) -> usize {
        1
    }

    fn sample(&self, _index: usize, ts: &[F]) -> Result<Vec<CoeffState<F>>> {
        Ok(ts
            .iter()
            .map(|&t| scalar(periodic_orbit(self.sigma, t)))
            .collect())
    }
}

/// Phases of the forcing on the circle `[0, 2 pi)`.
#[derive(Clone, Debug)]
pub struct ForcedPhases<F> {
    symbols: SymbolSpace<F>,
    space: DualMetricSpace<F>,
}

impl<F: Scalar> ForcedPhases<F> {
    pub fn new(count: usize) -> Result<Self> {
        Ok(Self {
            symbols: SymbolSpace::uniform_phases(count)?,
            space: forced_space(),
        })
    }
}

impl<F: Scalar> SymbolFamily<F> for ForcedPhases<F> {
    fn symbol_space(&self) -> &SymbolSpace<F> {
        &self.symbols
    }

    fn family(&self, sigma: F) -> Result<Box<dyn TrajectoryFamily<F>>> {
        Ok(Box::new(ForcedScalar::new(sigma)))
    }

    fn space(&self) -> &DualMetricSpace<F> {
        &self.space
    }

    fn system_id(&self) -> &str {
        "forced-scalar"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ges_core::shift_identity_check;

    #[test]
    fn closed_form_solves_the_equation() {
        let (sigma, s, u0) = (0.7, -1.3, 1.8);
        let u = |t: f64| forced_solution(sigma, s, u0, t);
        assert!((u(s) - u0).abs() < 1e-15);
        for t in [-1.0, 0.0, 2.5] {
            let h = 1e-5;
            let du = (u(t + h) - u(t - h)) / (2.0 * h);
            assert!((du - (-u(t) + (t + sigma).cos())).abs() < 1e-8);
        }
    }

    #[test]
    fn phases_shift_with_time() {
        let sym = ForcedPhases::<f64>::new(32).unwrap();
        let seeds = forced_sample::<f64>();
        let sigma = sym.symbol_space().symbols()[3];
        let d = shift_identity_check(&sym, sigma, 1.1, -2.0, 0.5, &seeds).unwrap();
        assert!(d < 1e-13, "{d}");
    }
}
