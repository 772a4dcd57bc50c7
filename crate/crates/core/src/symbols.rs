//! Symbol spaces of nonautonomous forcing, per-symbol pullback limits and
//! the uniform (forward, union over symbols) omega-limit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{usage, Result};
use crate::evolution::{pullback_image, SeedSource, TrajectoryFamily};
use crate::metric::DualMetricSpace;
use crate::omega::{
    omega_from_tiers, omega_pullback, OmegaApprox, OmegaKind, OmegaOptions, PullbackSchedule,
    Verdict,
};
use crate::scalar::Scalar;
use crate::state::CoeffState;

/// Phases on a circle of the given period, shifted by translation:
/// `T(s) sigma = sigma + s mod period`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSpace<F> {
    phases: Vec<F>,
    period: F,
    closure_note: String,
}

impl<F: Scalar> SymbolSpace<F> {
    pub fn new(phases: Vec<F>, period: F, closure_note: impl Into<String>) -> Result<Self> {
        if phases.is_empty() {
            return usage("symbol sample is empty");
        }
        if !(period > F::zero()) || phases.iter().any(|p| !p.is_finite()) {
            return usage("symbol period must be positive and phases finite");
        }
        Ok(Self {
            phases: phases.into_iter().map(|p| Self::wrap(p, period)).collect(),
            period,
            closure_note: closure_note.into(),
        })
    }

    /// `count` equally spaced phases of `[0, 2 pi)`. Shifts by multiples of
    /// `2 pi / count` map the sample onto itself.
    pub fn uniform_phases(count: usize) -> Result<Self> {
        let two_pi = F::TAU();
        let step = two_pi / F::from_usize_lossy(count.max(1));
        Self::new(
            (0..count).map(|i| step * F::from_usize_lossy(i)).collect(),
            two_pi,
            format!("{count} equally spaced phases approximating the circle of phases"),
        )
    }

    /// The single phase 0, repeated: every symbol is the same system.
    pub fn constant(count: usize) -> Result<Self> {
        Self::new(
            vec![F::zero(); count],
            F::TAU(),
            "one symbol repeated (autonomous)",
        )
    }

    fn wrap(p: F, period: F) -> F {
        let r = p % period;
        if r < F::zero() {
            r + period
        } else {
            r
        }
    }

    pub fn symbols(&self) -> &[F] {
        &self.phases
    }

    pub fn period(&self) -> F {
        self.period
    }

    pub fn closure_note(&self) -> &str {
        &self.closure_note
    }

    pub fn shift(&self, s: F, sigma: F) -> F {
        Self::wrap(sigma + s, self.period)
    }

    /// Distance on the circle.
    pub fn distance(&self, a: F, b: F) -> F {
        let d = Self::wrap(a - b, self.period);
        d.min(self.period - d)
    }
}

/// A symbol-indexed collection of trajectory families `sigma -> fam_sigma`
/// satisfying `R_sigma(t + s, r + s) = R_{T(s) sigma}(t, r)`.
pub trait SymbolFamily<F: Scalar>: Sync {
    fn symbol_space(&self) -> &SymbolSpace<F>;

    fn family(&self, sigma: F) -> Result<Box<dyn TrajectoryFamily<F>>>;

    /// Phase space shared by every member family.
    fn space(&self) -> &DualMetricSpace<F>;

    fn system_id(&self) -> &str;
}

/// `max strong_dist(R_sigma(t+s, r+s)x, R_{T(s)sigma}(t, r)x)` over the seeds
/// (branch 0).
pub fn shift_identity_check<F: Scalar, Sym: SymbolFamily<F> + ?Sized>(
    symfam: &Sym,
    sigma: F,
    s: F,
    r: F,
    t: F,
    seeds: &[CoeffState<F>],
) -> Result<F> {
    if !(r <= t) || !(s >= F::zero()) {
        return usage("shift identity needs r <= t and s >= 0");
    }
    let shifted_sigma = symfam.symbol_space().shift(s, sigma);
    let a = symfam.family(sigma)?;
    let b = symfam.family(shifted_sigma)?;
    let space = symfam.space();
    let mut worst = F::zero();
    for x in seeds {
        let ua = a.evolve(r + s, x, &[t + s], 0)?;
        let ub = b.evolve(r, x, &[t], 0)?;
        worst = worst.max(space.strong_dist(&ua[0], &ub[0])?);
    }
    Ok(worst)
}

/// Uniform omega-limit: forward tiers `R_Sigma(d)A = union_sigma R_sigma(d, 0)A`
/// over the schedule's depths `d`, netted like a pullback estimate.
pub fn uniform_omega<F: Scalar, Sym: SymbolFamily<F> + ?Sized, S: SeedSource<F> + ?Sized>(
    symfam: &Sym,
    seeds: &S,
    sched: &PullbackSchedule<F>,
    opts: &OmegaOptions<F>,
) -> Result<OmegaApprox<F>> {
    let sigmas = symfam.symbol_space().symbols();
    let families: Vec<Box<dyn TrajectoryFamily<F>>> = sigmas
        .iter()
        .map(|&s| symfam.family(s))
        .collect::<Result<_>>()?;
    let horizons = sched.depths();
    let images: Vec<Vec<CoeffState<F>>> = horizons
        .par_iter()
        .map(|&d| {
            let a = seeds.seeds_at(F::zero(), d)?;
            let mut union = Vec::new();
            for fam in &families {
                union.extend(
                    pullback_image(fam.as_ref(), &a, d, F::zero(), opts.branches)?.states(),
                );
            }
            Ok(union)
        })
        .collect::<Result<_>>()?;
    let depth = *horizons.last().expect("schedule nonempty");
    omega_from_tiers(
        symfam.space(),
        symfam.system_id(),
        OmegaKind::Uniform,
        F::zero(),
        &horizons,
        depth,
        &images,
        opts,
    )
}

/// Pullback omega-limit of one member family at the schedule's time.
pub fn per_symbol_pullback<F: Scalar, Sym: SymbolFamily<F> + ?Sized, S: SeedSource<F> + ?Sized>(
    symfam: &Sym,
    sigma: F,
    seeds: &S,
    sched: &PullbackSchedule<F>,
    opts: &OmegaOptions<F>,
) -> Result<OmegaApprox<F>> {
    let space = symfam.symbol_space();
    if !space
        .symbols()
        .iter()
        .any(|&p| space.distance(p, sigma) <= F::lit(1e-12))
    {
        return usage("symbol is not in the sample");
    }
    let fam = symfam.family(sigma)?;
    omega_pullback(fam.as_ref(), seeds, sched, opts)
}

#[derive(Clone, Debug, Serialize)]
pub struct UnionInclusionReport<F> {
    pub t0: F,
    /// `semidist(union of per-symbol pullback points, uniform points)`.
    pub inclusion: Option<F>,
    /// `semidist(uniform points, union of per-symbol pullback points)`.
    pub reverse: Option<F>,
    pub bound: F,
    pub per_symbol_converged: usize,
    pub symbols: usize,
    pub uniform_converged: bool,
    pub inclusion_verdict: Verdict,
    /// The reverse inclusion relies on closedness of the trajectory sets in
    /// the weak sup topology, which a finite sample cannot verify.
    pub equality_verdict: Verdict,
    pub equality_conditional: bool,
}

/// Compares the union over symbols of the pullback limits at `t0` with the
/// uniform omega-limit. Both directions are reported against `2 eps_net`;
/// unconverged estimates make the verdicts inconclusive.
pub fn union_inclusion_check<
    F: Scalar,
    Sym: SymbolFamily<F> + ?Sized,
    S: SeedSource<F> + ?Sized,
>(
    symfam: &Sym,
    seeds: &S,
    t0: F,
    pullback: &PullbackSchedule<F>,
    forward: &PullbackSchedule<F>,
    opts: &OmegaOptions<F>,
) -> Result<UnionInclusionReport<F>> {
    let pullback = pullback.shifted(t0 - pullback.t());
    let sigmas = symfam.symbol_space().symbols().to_vec();
    let per_symbol: Vec<OmegaApprox<F>> = sigmas
        .par_iter()
        .map(|&s| per_symbol_pullback(symfam, s, seeds, &pullback, opts))
        .collect::<Result<_>>()?;
    let uniform = uniform_omega(symfam, seeds, forward, opts)?;

    let union: Vec<CoeffState<F>> = per_symbol
        .iter()
        .flat_map(|o| o.points.iter().cloned())
        .collect();
    let converged = per_symbol.iter().filter(|o| o.converged).count();
    let bound = F::lit(2.0) * opts.eps_net;
    let space = symfam.space();
    let ready = converged == per_symbol.len()
        && uniform.converged
        && !union.is_empty()
        && !uniform.points.is_empty();
    let (inclusion, reverse) = if union.is_empty() || uniform.points.is_empty() {
        (None, None)
    } else {
        (
            Some(space.set_semidist(&union, &uniform.points, opts.metric)?),
            Some(space.set_semidist(&uniform.points, &union, opts.metric)?),
        )
    };
    let judge = |d: Option<F>| match d {
        Some(d) if ready => {
            if d <= bound {
                Verdict::Holds
            } else {
                Verdict::Fails
            }
        }
        _ => Verdict::Inconclusive,
    };
    Ok(UnionInclusionReport {
        t0,
        inclusion,
        reverse,
        bound,
        per_symbol_converged: converged,
        symbols: per_symbol.len(),
        uniform_converged: uniform.converged,
        inclusion_verdict: judge(inclusion),
        equality_verdict: judge(inclusion).and(judge(reverse)),
        equality_conditional: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::testing::*;
    use crate::metric::MetricKind;

    #[test]
    fn shift_is_a_circle_action() {
        let sp = SymbolSpace::<f64>::uniform_phases(32).unwrap();
        let sigma = sp.symbols()[5];
        assert_eq!(sp.shift(0.0, sigma), sigma);
        let a = sp.shift(1.3 + 2.9, sigma);
        let b = sp.shift(1.3, sp.shift(2.9, sigma));
        assert!(sp.distance(a, b) < 1e-12);
        assert!((sp.shift(7.0, 0.0) - (7.0 - std::f64::consts::TAU)).abs() < 1e-15);
    }

    struct Same {
        symbols: SymbolSpace<f64>,
        space: DualMetricSpace<f64>,
    }

    impl SymbolFamily<f64> for Same {
        fn symbol_space(&self) -> &SymbolSpace<f64> {
            &self.symbols
        }
        fn family(&self, _sigma: f64) -> Result<Box<dyn TrajectoryFamily<f64>>> {
            Ok(Box::new(Decay::new(vec![1.0, 2.0])))
        }
        fn space(&self) -> &DualMetricSpace<f64> {
            &self.space
        }
        fn system_id(&self) -> &str {
            "decay"
        }
    }

    #[test]
    fn autonomous_symbols_collapse() {
        let symfam = Same {
            symbols: SymbolSpace::constant(4).unwrap(),
            space: DualMetricSpace::ell2_unit_ball("l2"),
        };
        let seeds = vec![e(0), e(2)];
        let sched = PullbackSchedule::default_at(0.0);
        let opts = OmegaOptions::new(MetricKind::Weak, 0.01, 1e-3).unwrap();
        let uni = uniform_omega(&symfam, &seeds, &sched, &opts).unwrap();
        assert!(uni.converged);
        let rep = union_inclusion_check(&symfam, &seeds, 0.0, &sched, &sched, &opts).unwrap();
        assert_eq!(rep.inclusion_verdict, Verdict::Holds);
        assert_eq!(rep.equality_verdict, Verdict::Holds);
        assert!(rep.inclusion.unwrap() < 1e-3);
        assert_eq!(
            shift_identity_check(&symfam, 0.0, 1.0, -2.0, 1.0, &seeds).unwrap(),
            0.0
        );
        assert!(per_symbol_pullback(&symfam, 1.0, &seeds, &sched, &opts).is_err());
    }
}
