//! A single complete trajectory on the unit ball of l2(Z), and the family of
//! all its time shifts.

use ges_core::metric::DualMetricSpace;
use ges_core::state::CoeffState;
use ges_core::{CompleteTrajectories, Error, Result, Scalar, SeedSource, TrajectoryFamily};

pub const L2_TAG: &str = "l2";

/// Unit ball of l2(Z) with the base-2 weak series.
pub fn l2_ball<F: Scalar>() -> DualMetricSpace<F> {
    DualMetricSpace::ell2_unit_ball(L2_TAG)
}

/// `u(t) = (cos t e_0 + sin t e_1) / 2`.
pub fn circle_state<F: Scalar>(t: F) -> CoeffState<F> {
    let half = F::lit(0.5);
    CoeffState::from_real(L2_TAG, [(0, half * t.cos()), (1, half * t.sin())])
        .expect("finite circle point")
}

/// Phase of a point of the circle, or `None` if `x` is not on it.
fn circle_phase<F: Scalar>(x: &CoeffState<F>) -> Option<F> {
    if x.space() != L2_TAG || x.indices().iter().any(|k| k[0] != 0 && k[0] != 1) {
        return None;
    }
    let (a, b) = (x.coeff(0), x.coeff(1));
    if a.im != F::zero() || b.im != F::zero() {
        return None;
    }
    let r = (a.re * a.re + b.re * b.re).sqrt();
    if (r - F::lit(0.5)).abs() > F::lit(1e-9) {
        return None;
    }
    Some(b.re.atan2(a.re))
}

fn on_trajectory<F: Scalar>(x: &CoeffState<F>, s: F) -> bool {
    let space = l2_ball::<F>();
    space
        .strong_dist(x, &circle_state(s))
        .is_ok_and(|d| d <= F::lit(1e-9))
}

/// The family consisting of one trajectory and its restrictions. Only
/// `u(s)` has a trajectory through it at time `s`.
#[derive(Clone, Debug)]
pub struct SingleTrajectory<F> {
    space: DualMetricSpace<F>,
}

impl<F: Scalar> Default for SingleTrajectory<F> {
    fn default() -> Self {
        Self { space: l2_ball() }
    }
}

impl<F: Scalar> SingleTrajectory<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self, t: F) -> CoeffState<F> {
        circle_state(t)
    }
}

impl<F: Scalar> TrajectoryFamily<F> for SingleTrajectory<F> {
    fn system_id(&self) -> &str {
        "single"
    }

    fn space(&self) -> &DualMetricSpace<F> {
        &self.space
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    fn branch_count(&self, s: F, x: &CoeffState<F>) -> usize {
        usize::from(on_trajectory(x, s))
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
        if !on_trajectory(x, s) {
            return Err(Error::NoTrajectory { s: s.as_f64() });
        }
        Ok(ts.iter().map(|&t| circle_state(t)).collect())
    }

    fn complete_trajectories(&self) -> Option<&dyn CompleteTrajectories<F>> {
        Some(self)
    }
}

impl<F: Scalar> CompleteTrajectories<F> for SingleTrajectory<F> {
    fn count(&self) -> usize {
        1
    }

    fn sample(&self, _index: usize, ts: &[F]) -> Result<Vec<CoeffState<F>>> {
        Ok(ts.iter().map(|&t| circle_state(t)).collect())
    }
}

/// `{u(s)}`: the only seed with a trajectory at time `s`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SingleSeeds;

impl<F: Scalar> SeedSource<F> for SingleSeeds {
    fn seeds_at(&self, s: F, _t: F) -> Result<Vec<CoeffState<F>>> {
        Ok(vec![circle_state(s)])
    }
}

/// All shifts `u(. + r)` of the circle trajectory: an autonomous family whose
/// pullback and forward limits are the whole circle.
#[derive(Clone, Debug)]
pub struct OrbitHull<F> {
    space: DualMetricSpace<F>,
}

impl<F: Scalar> Default for OrbitHull<F> {
    fn default() -> Self {
        Self { space: l2_ball() }
    }
}

impl<F: Scalar> OrbitHull<F> {
    pub fn new() -> Self {
        Self::default()
    }

    /// `count` equally spaced circle points.
    pub fn sample(count: usize) -> Vec<CoeffState<F>> {
        (0..count)
            .map(|i| circle_state(F::TAU() * F::from_usize_lossy(i) / F::from_usize_lossy(count)))
            .collect()
    }
}

impl<F: Scalar> TrajectoryFamily<F> for OrbitHull<F> {
    fn system_id(&self) -> &str {
        "single-hull"
    }

    fn space(&self) -> &DualMetricSpace<F> {
        &self.space
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn branch_count(&self, _s: F, x: &CoeffState<F>) -> usize {
        usize::from(circle_phase(x).is_some())
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
        let phase = circle_phase(x).ok_or(Error::NoTrajectory { s: s.as_f64() })?;
        Ok(ts.iter().map(|&t| circle_state(phase + (t - s))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ges_core::{pullback_image, BranchSelect};

    #[test]
    fn only_the_current_point_has_a_trajectory() {
        let fam = SingleTrajectory::<f64>::new();
        assert_eq!(fam.branch_count(1.0, &circle_state(1.0)), 1);
        assert_eq!(fam.branch_count(1.0, &circle_state(1.1)), 0);
        let img = pullback_image(
            &fam,
            &[circle_state(-3.0), circle_state(0.0)],
            2.0,
            -3.0,
            BranchSelect::All,
        )
        .unwrap();
        assert_eq!(img.len(), 1);
        assert_eq!(img.entries[0].state, circle_state(2.0));
    }

    #[test]
    fn hull_moves_along_the_circle() {
        let fam = OrbitHull::<f64>::new();
        let x = circle_state(0.3);
        let out = fam.evolve(-1.0, &x, &[0.0, 2.0], 0).unwrap();
        let space = l2_ball::<f64>();
        assert!(space.strong_dist(&out[0], &circle_state(1.3)).unwrap() < 1e-15);
        assert!(space.strong_dist(&out[1], &circle_state(3.3)).unwrap() < 1e-15);
        assert_eq!(fam.branch_count(0.0, &CoeffState::basis(L2_TAG, 0)), 0);
    }
}
