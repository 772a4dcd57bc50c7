//! Trajectory families and the set maps `P(t,s)A`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::metric::{DualMetricSpace, MetricKind};
use crate::scalar::Scalar;
use crate::state::CoeffState;

/// Rates entering the integral energy balance
/// `|u(t)|^2 + 2 int dissipation = |u(t0)|^2 + 2 int forcing_power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRates<F> {
    pub dissipation: F,
    pub forcing_power: F,
}

/// A generalized evolutionary system: for every start time `s` and state `x`
/// a finite, enumerable set of trajectories through `x` at `s`.
///
/// Implementations must be stateless or internally synchronized; ensembles are
/// evolved concurrently.
pub trait TrajectoryFamily<F: Scalar>: Send + Sync {
    fn system_id(&self) -> &str;

    fn space(&self) -> &DualMetricSpace<F>;

    fn is_autonomous(&self) -> bool;

    fn is_multivalued(&self) -> bool {
        false
    }

    /// Number of trajectories through `x` at `s`. Zero means no trajectory of
    /// the family passes there; such seeds are skipped by pullback images.
    fn branch_count(&self, _s: F, _x: &CoeffState<F>) -> usize {
        1
    }

    /// Samples branch `branch` of the trajectory through `x` at `s` at the
    /// ascending times `ts`, all `>= s`.
    fn evolve(
        &self,
        s: F,
        x: &CoeffState<F>,
        ts: &[F],
        branch: usize,
    ) -> Result<Vec<CoeffState<F>>>;

    /// Known complete trajectories, for tracking checks.
    fn complete_trajectories(&self) -> Option<&dyn CompleteTrajectories<F>> {
        None
    }

    /// Accuracy of `evolve` in the strong metric. Zero for closed forms up to
    /// rounding.
    fn solver_tolerance(&self) -> F {
        F::lit(1e-12)
    }

    /// Dissipation and forcing power at `(t, u)`, when the system has an
    /// energy balance.
    fn energy_rates(&self, _t: F, _u: &CoeffState<F>) -> Option<EnergyRates<F>> {
        None
    }
}

/// A finite sample of complete trajectories (defined for all times).
pub trait CompleteTrajectories<F: Scalar>: Send + Sync {
    fn count(&self) -> usize;

    fn sample(&self, index: usize, ts: &[F]) -> Result<Vec<CoeffState<F>>>;
}

/// Where pullback images start from: a sample of the phase space handed to
/// `P(t,s)`. Sources may adapt the sample to the pair `(s, t)`.
pub trait SeedSource<F: Scalar>: Send + Sync {
    fn seeds_at(&self, s: F, t: F) -> Result<Vec<CoeffState<F>>>;
}

/// A fixed seed set, independent of the start time.
impl<F: Scalar> SeedSource<F> for [CoeffState<F>] {
    fn seeds_at(&self, _s: F, _t: F) -> Result<Vec<CoeffState<F>>> {
        Ok(self.to_vec())
    }
}

impl<F: Scalar> SeedSource<F> for Vec<CoeffState<F>> {
    fn seeds_at(&self, _s: F, _t: F) -> Result<Vec<CoeffState<F>>> {
        Ok(self.clone())
    }
}

impl<F: Scalar, S: SeedSource<F> + ?Sized> SeedSource<F> for Arc<S> {
    fn seeds_at(&self, s: F, t: F) -> Result<Vec<CoeffState<F>>> {
        (**self).seeds_at(s, t)
    }
}

impl<F: Scalar, S: SeedSource<F> + ?Sized> SeedSource<F> for &S {
    fn seeds_at(&self, s: F, t: F) -> Result<Vec<CoeffState<F>>> {
        (**self).seeds_at(s, t)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSelect {
    #[default]
    All,
    First,
}

impl fmt::Display for BranchSelect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchSelect::All => "all",
            BranchSelect::First => "first",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEntry<F> {
    pub s: F,
    /// Position of the seed in the input sample.
    pub seed: usize,
    pub seed_state: CoeffState<F>,
    pub branch: usize,
    pub state: CoeffState<F>,
}

/// A finite approximation of `P(t,s)A`, ordered by (start, seed, branch).
#[derive(Clone, Debug, PartialEq)]
pub struct PullbackEnsemble<F> {
    pub t: F,
    pub entries: Vec<EnsembleEntry<F>>,
}

impl<F: Scalar> PullbackEnsemble<F> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The time-`t` states.
    pub fn states(&self) -> Vec<CoeffState<F>> {
        self.entries.iter().map(|e| e.state.clone()).collect()
    }

    /// Concatenates ensembles at the same observation time, keeping the order.
    pub fn merge(t: F, parts: impl IntoIterator<Item = PullbackEnsemble<F>>) -> Self {
        Self {
            t,
            entries: parts.into_iter().flat_map(|p| p.entries).collect(),
        }
    }
}

fn seed_label<F: Scalar>(i: usize, s: F) -> String {
    format!("#{i} (start s = {})", s.as_f64())
}

/// Rejects seeds outside the phase space and states that blew up.
fn guard<F: Scalar>(
    space: &DualMetricSpace<F>,
    x: &CoeffState<F>,
    label: impl Fn() -> String,
    seed: bool,
) -> Result<()> {
    space.check_member(x)?;
    let Some(r) = space.ball_radius() else {
        return Ok(());
    };
    let norm = space.strong_norm(x)?;
    if seed && norm > r + space.ball_slack(r) {
        return Err(Error::OutsideBall {
            seed: label(),
            norm: norm.as_f64(),
            radius: r.as_f64(),
        });
    }
    if !seed && norm > F::lit(10.0) * r {
        return Err(Error::BlowUp {
            seed: label(),
            norm: norm.as_f64(),
        });
    }
    Ok(())
}

/// `P(t,s)A`: evolves every seed (and every selected branch) from `s` to `t`.
///
/// Seeds through which no trajectory passes contribute nothing. Entries are
/// evolved concurrently and collected in (seed, branch) order.
pub fn pullback_image<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized>(
    fam: &Fam,
    seeds: &[CoeffState<F>],
    t: F,
    s: F,
    branches: BranchSelect,
) -> Result<PullbackEnsemble<F>> {
    if !(s <= t) {
        return usage(format!(
            "pullback start {} is after observation time {}",
            s.as_f64(),
            t.as_f64()
        ));
    }
    if seeds.is_empty() {
        return usage("pullback image of an empty seed set");
    }
    let space = fam.space();
    let per_seed: Vec<Vec<EnsembleEntry<F>>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            guard(space, x, || seed_label(i, s), true)?;
            let count = fam.branch_count(s, x);
            let selected = match branches {
                BranchSelect::All => count,
                BranchSelect::First => count.min(1),
            };
            (0..selected)
                .map(|b| {
                    let state = fam
                        .evolve(s, x, &[t], b)?
                        .pop()
                        .ok_or_else(|| Error::Solver("evolve returned no samples".into()))?;
                    guard(space, &state, || seed_label(i, s), false)?;
                    Ok(EnsembleEntry {
                        s,
                        seed: i,
                        seed_state: x.clone(),
                        branch: b,
                        state,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(PullbackEnsemble {
        t,
        entries: per_seed.into_iter().flatten().collect(),
    })
}

/// Restriction property: `semidist(P(t,r)A, P(t,s)P(s,r)A)` in the strong
/// metric, all branches. Should not exceed the solver tolerance.
pub fn compose_check<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized>(
    fam: &Fam,
    seeds: &[CoeffState<F>],
    r: F,
    s: F,
    t: F,
) -> Result<F> {
    if !(r <= s && s <= t) {
        return usage("compose check needs r <= s <= t");
    }
    let (direct, middle) = if fam.is_multivalued() {
        (
            pullback_image(fam, seeds, t, r, BranchSelect::All)?.states(),
            pullback_image(fam, seeds, s, r, BranchSelect::All)?.states(),
        )
    } else {
        // One pass samples both P(s,r)x and P(t,r)x.
        let space = fam.space();
        let pairs: Vec<Option<(CoeffState<F>, CoeffState<F>)>> = seeds
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                guard(space, x, || seed_label(i, r), true)?;
                if fam.branch_count(r, x) == 0 {
                    return Ok(None);
                }
                let mut out = fam.evolve(r, x, &[s, t], 0)?;
                let (Some(at_t), Some(at_s)) = (out.pop(), out.pop()) else {
                    return Err(Error::Solver("evolve returned too few samples".into()));
                };
                guard(space, &at_t, || seed_label(i, r), false)?;
                Ok(Some((at_t, at_s)))
            })
            .collect::<Result<_>>()?;
        pairs.into_iter().flatten().unzip()
    };
    if direct.is_empty() || middle.is_empty() {
        return usage("no trajectory passes through the seeds at the start time");
    }
    let two_step = pullback_image(fam, &middle, t, s, BranchSelect::All)?.states();
    if two_step.is_empty() {
        return usage("intermediate states admit no continuation");
    }
    fam.space()
        .set_semidist(&direct, &two_step, MetricKind::Strong)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakContinuity<F> {
    /// `sup_t weak_dist(u_n(t), u(t))` for the last sequence element.
    pub weak_sup: F,
    /// Same supremum for every sequence element, in input order.
    pub weak_sups: Vec<F>,
    /// Fraction of grid times where the last element is strongly within
    /// `strong_tol` of the limit trajectory.
    pub strong_fraction: F,
}

/// Evolves a convergent seed sequence `seeds[1..] -> seeds[0]` from `s` over
/// `[s, s + horizon]` (`grid` steps) and measures how well the trajectories
/// converge weakly and strongly. Uses branch 0 throughout.
pub fn weak_c_convergence_check<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized>(
    fam: &Fam,
    seeds: &[CoeffState<F>],
    s: F,
    horizon: F,
    grid: usize,
    strong_tol: F,
) -> Result<WeakContinuity<F>> {
    if seeds.len() < 2 {
        return usage("weak continuity check needs a limit and at least one sequence element");
    }
    if !(horizon > F::zero()) || grid == 0 {
        return usage("weak continuity check needs a positive horizon and grid");
    }
    let ts: Vec<F> = (0..=grid)
        .map(|i| s + horizon * F::from_usize_lossy(i) / F::from_usize_lossy(grid))
        .collect();
    let space = fam.space();
    let trajectories: Vec<Vec<CoeffState<F>>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            guard(space, x, || seed_label(i, s), true)?;
            if fam.branch_count(s, x) == 0 {
                return Err(Error::NoTrajectory { s: s.as_f64() });
            }
            fam.evolve(s, x, &ts, 0)
        })
        .collect::<Result<_>>()?;
    let (limit, rest) = trajectories.split_first().expect("at least two seeds");
    let weak_sups: Vec<F> = rest
        .iter()
        .map(|traj| {
            traj.iter()
                .zip(limit)
                .map(|(a, b)| space.weak_dist(a, b))
                .try_fold(F::zero(), |m, d| d.map(|d| m.max(d)))
        })
        .collect::<Result<_>>()?;
    let last = rest.last().expect("at least one sequence element");
    let mut close = 0usize;
    for (a, b) in last.iter().zip(limit) {
        if space.strong_dist(a, b)? <= strong_tol {
            close += 1;
        }
    }
    Ok(WeakContinuity {
        weak_sup: *weak_sups.last().expect("nonempty"),
        weak_sups,
        strong_fraction: F::from_usize_lossy(close) / F::from_usize_lossy(ts.len()),
    })
}

#[cfg(test)]
pub(crate) mod testing {
    //! Minimal closed-form families for exercising the framework.

    use super::*;
    use num_complex::Complex;

    /// `x' = -rate_b x` on a finite coordinate block, one branch per rate.
    pub struct Decay {
        pub space: DualMetricSpace<f64>,
        pub rates: Vec<f64>,
    }

    impl Decay {
        pub fn new(rates: Vec<f64>) -> Self {
            Self {
                space: DualMetricSpace::ell2_unit_ball("l2"),
                rates,
            }
        }
    }

    impl TrajectoryFamily<f64> for Decay {
        fn system_id(&self) -> &str {
            "decay"
        }
        fn space(&self) -> &DualMetricSpace<f64> {
            &self.space
        }
        fn is_autonomous(&self) -> bool {
            true
        }
        fn is_multivalued(&self) -> bool {
            self.rates.len() > 1
        }
        fn branch_count(&self, _s: f64, _x: &CoeffState<f64>) -> usize {
            self.rates.len()
        }
        fn evolve(
            &self,
            s: f64,
            x: &CoeffState<f64>,
            ts: &[f64],
            branch: usize,
        ) -> Result<Vec<CoeffState<f64>>> {
            let rate = *self.rates.get(branch).ok_or(Error::BranchOutOfRange {
                branch,
                count: self.rates.len(),
            })?;
            Ok(ts
                .iter()
                .map(|t| x.scaled((-rate * (t - s)).exp()))
                .collect())
        }
        fn energy_rates(&self, _t: f64, u: &CoeffState<f64>) -> Option<EnergyRates<f64>> {
            let e: f64 = u.values().iter().map(Complex::norm_sqr).sum();
            Some(EnergyRates {
                dissipation: self.rates[0] * e,
                forcing_power: 0.0,
            })
        }
    }

    pub fn e(k: i32) -> CoeffState<f64> {
        CoeffState::basis("l2", k)
    }

    pub fn real(entries: &[(i32, f64)]) -> CoeffState<f64> {
        CoeffState::from_real("l2", entries.iter().copied()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    #[test]
    fn identity_at_equal_times() {
        let fam = Decay::new(vec![1.0, 2.0]);
        let seeds = vec![e(0), real(&[(1, 0.5)])];
        let ens = pullback_image(&fam, &seeds, 3.0, 3.0, BranchSelect::All).unwrap();
        for entry in &ens.entries {
            assert_eq!(entry.state, entry.seed_state);
        }
    }

    #[test]
    fn branch_enumeration_counts() {
        let fam = Decay::new(vec![1.0, 2.0]);
        let seeds = vec![e(0), e(1), e(2)];
        let all = pullback_image(&fam, &seeds, 0.0, -1.0, BranchSelect::All).unwrap();
        assert_eq!(all.len(), 6);
        let order: Vec<_> = all.entries.iter().map(|e| (e.seed, e.branch)).collect();
        assert_eq!(order, vec![(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]);
        let first = pullback_image(&fam, &seeds, 0.0, -1.0, BranchSelect::First).unwrap();
        assert_eq!(first.len(), 3);
    }

    #[test]
    fn preconditions_and_seed_errors() {
        let fam = Decay::new(vec![1.0]);
        assert!(matches!(
            pullback_image(&fam, &[e(0)], 0.0, 1.0, BranchSelect::All),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            pullback_image(&fam, &[], 0.0, -1.0, BranchSelect::All),
            Err(Error::Usage(_))
        ));
        let outside = real(&[(0, 2.0)]);
        match pullback_image(&fam, &[e(0), outside], 0.0, -1.0, BranchSelect::All) {
            Err(Error::OutsideBall { seed, .. }) => assert!(seed.starts_with("#1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blow_up_names_the_seed() {
        // negative rate grows without bound
        let fam = Decay::new(vec![-5.0]);
        match pullback_image(&fam, &[e(0)], 0.0, -1.0, BranchSelect::All) {
            Err(Error::BlowUp { seed, norm }) => {
                assert!(seed.starts_with("#0"));
                assert!(norm > 10.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn compose_check_for_branching_decay() {
        let fam = Decay::new(vec![1.0, 2.0]);
        let seeds = vec![e(0), real(&[(0, 0.3), (3, -0.6)])];
        let d = compose_check(&fam, &seeds, -3.0, -1.2, 0.5).unwrap();
        assert!(d <= 1e-15, "{d}");
        assert!(compose_check(&fam, &seeds, 0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn weak_continuity_is_linear_in_perturbation() {
        let fam = Decay::new(vec![1.0]);
        let f = real(&[(0, 0.5)]);
        let seq: Vec<_> = (1..=8)
            .map(|n| real(&[(0, 0.5), (1, 0.4 / n as f64)]))
            .collect();
        let mut seeds = vec![f];
        seeds.extend(seq);
        let rep = weak_c_convergence_check(&fam, &seeds, 0.0, 2.0, 20, 1e-6).unwrap();
        // the sup is attained at t = s, where the gap is 0.4/n on e_1
        for (n, sup) in rep.weak_sups.iter().enumerate() {
            let d = 0.4 / (n + 1) as f64;
            assert!((sup - 0.5 * d / (1.0 + d)).abs() < 1e-15);
        }
        assert_eq!(rep.strong_fraction, 0.0);
        let same = weak_c_convergence_check(&fam, &[e(0), e(0)], 0.0, 1.0, 5, 1e-12).unwrap();
        assert_eq!(same.weak_sup, 0.0);
        assert_eq!(same.strong_fraction, 1.0);
    }
}
