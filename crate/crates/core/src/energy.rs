//! Energy inequality checks on sampled trajectories.

use serde::Serialize;

use crate::error::{usage, Result};
use crate::evolution::TrajectoryFamily;
use crate::scalar::Scalar;
use crate::state::CoeffState;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyViolation<F> {
    pub t0: F,
    pub t: F,
    pub lhs: F,
    pub rhs: F,
    pub residual: F,
}

/// Integral form `Phi(t) <= Phi(t0)` for `t0 <= t`, with
/// `Phi = |u|^2 + 2 int dissipation - 2 int forcing_power`. The rate is
/// integrated piecewise by the cubic through the four nearest samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralEnergy<F> {
    /// `max_{t0 <= t} Phi(t) - Phi(t0)`; positive values are violations.
    pub max_residual: F,
    /// `max_t |Phi(t) - Phi(t_first)|`, the balance error when the inequality
    /// holds as an equality.
    pub balance_drift: F,
    pub horizon: F,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyCheckReport<F> {
    /// One entry per grid time whose window failed the majority test; the
    /// worst `t0` of that window is reported.
    pub violations: Vec<EnergyViolation<F>>,
    /// Largest `|u(t)| - |u(t0)| - eps` over every tested pair.
    pub max_residual: F,
    pub epsilon_used: F,
    pub delta_used: F,
    pub majority_used: F,
    pub integral: Option<IntegralEnergy<F>>,
}

impl<F: Scalar> EnergyCheckReport<F> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `|u(t)| <= |u(t0)| + eps` for `t0` in `(t - delta, t)`, accepting a
/// grid time when at least `majority` of its window passes. When the family
/// exposes energy rates the integral balance is evaluated too.
pub fn energy_inequality_check<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized>(
    fam: &Fam,
    ts: &[F],
    samples: &[CoeffState<F>],
    eps: F,
    delta: F,
    majority: F,
) -> Result<EnergyCheckReport<F>> {
    if ts.len() != samples.len() || ts.len() < 2 {
        return usage("energy check needs matching time and state samples (at least two)");
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return usage("energy check times must be strictly increasing");
    }
    if !(eps >= F::zero())
        || !(delta > F::zero())
        || !(majority > F::zero() && majority <= F::one())
    {
        return usage("energy check needs eps >= 0, delta > 0 and majority in (0, 1]");
    }
    let spacing = ts.windows(2).map(|w| w[1] - w[0]).fold(F::zero(), F::max);
    if !(spacing < delta / F::lit(4.0)) {
        return usage("grid spacing must be below delta / 4");
    }
    let space = fam.space();
    let norms: Vec<F> = samples
        .iter()
        .map(|u| space.strong_norm(u))
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    let mut max_residual = F::neg_infinity();
    for (i, &t) in ts.iter().enumerate() {
        let mut total = 0usize;
        let mut passing = 0usize;
        let mut worst: Option<(usize, F)> = None;
        for j in (0..i).rev() {
            if !(ts[j] > t - delta) {
                break;
            }
            total += 1;
            let residual = norms[i] - norms[j] - eps;
            max_residual = max_residual.max(residual);
            if residual <= F::zero() {
                passing += 1;
            }
            if worst.is_none_or(|(_, w)| residual > w) {
                worst = Some((j, residual));
            }
        }
        if total == 0 {
            continue;
        }
        let ratio = F::from_usize_lossy(passing) / F::from_usize_lossy(total);
        if ratio < majority {
            let (j, residual) = worst.expect("window nonempty");
            violations.push(EnergyViolation {
                t0: ts[j],
                t,
                lhs: norms[i],
                rhs: norms[j] + eps,
                residual,
            });
        }
    }

    let integral = integral_balance(fam, ts, samples)?;
    Ok(EnergyCheckReport {
        violations,
        max_residual,
        epsilon_used: eps,
        delta_used: delta,
        majority_used: majority,
        integral,
    })
}

fn integral_balance<F: Scalar, Fam: TrajectoryFamily<F> + ?Sized>(
    fam: &Fam,
    ts: &[F],
    samples: &[CoeffState<F>],
) -> Result<Option<IntegralEnergy<F>>> {
    let mut rates = Vec::with_capacity(ts.len());
    for (t, u) in ts.iter().zip(samples) {
        match fam.energy_rates(*t, u) {
            Some(r) => rates.push(r.dissipation - r.forcing_power),
            None => return Ok(None),
        }
    }
    let space = fam.space();
    let two = F::lit(2.0);
    let mut acc = F::zero();
    let mut phi = Vec::with_capacity(ts.len());
    for i in 0..ts.len() {
        if i > 0 {
            acc += interval_integral(ts, &rates, i - 1);
        }
        let e = space.strong_norm(&samples[i])?.powi(2);
        phi.push(e + two * acc);
    }
    // Running minimum turns the pairwise maximum into one pass.
    let mut best = phi[0];
    let mut max_residual = F::neg_infinity();
    let mut drift = F::zero();
    for &p in &phi {
        best = best.min(p);
        max_residual = max_residual.max(p - best);
        drift = drift.max((p - phi[0]).abs());
    }
    Ok(Some(IntegralEnergy {
        max_residual,
        balance_drift: drift,
        horizon: ts[ts.len() - 1] - ts[0],
    }))
}

/// Integral over `[ts[i], ts[i+1]]` of the interpolant through the (up to)
/// four samples nearest the interval, by two-point Gauss-Legendre (exact for
/// cubics).
fn interval_integral<F: Scalar>(ts: &[F], f: &[F], i: usize) -> F {
    let n = ts.len();
    let lo = i.saturating_sub(1).min(n.saturating_sub(4));
    let hi = (lo + 4).min(n);
    let (a, b) = (ts[i], ts[i + 1]);
    let half = F::lit(0.5) * (b - a);
    let mid = F::lit(0.5) * (a + b);
    let g = half / F::lit(3.0).sqrt();
    let lagrange = |x: F| {
        let mut sum = F::zero();
        for j in lo..hi {
            let mut w = F::one();
            for m in lo..hi {
                if m != j {
                    w = w * (x - ts[m]) / (ts[j] - ts[m]);
                }
            }
            sum += w * f[j];
        }
        sum
    };
    half * (lagrange(mid - g) + lagrange(mid + g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::testing::*;
    use crate::evolution::TrajectoryFamily;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn decaying_trajectory_has_no_violations() {
        let fam = Decay::new(vec![1.0]);
        let ts = grid(401, 0.005);
        let us = fam
            .evolve(0.0, &real(&[(0, 0.8), (2, 0.3)]), &ts, 0)
            .unwrap();
        let rep = energy_inequality_check(&fam, &ts, &us, 0.0, 0.1, 0.9).unwrap();
        assert!(rep.passed());
        assert!(rep.max_residual <= 0.0);
        let integral = rep.integral.unwrap();
        // fourth-order quadrature of a smooth exponential at dt = 5e-3
        assert!(integral.balance_drift < 1e-9, "{integral:?}");
        assert!(integral.max_residual < 1e-9);
    }

    #[test]
    fn zero_trajectory_passes() {
        let fam = Decay::new(vec![1.0]);
        let ts = grid(50, 0.01);
        let zero = vec![fam.space().zero(); 50];
        let rep = energy_inequality_check(&fam, &ts, &zero, 0.0, 0.1, 0.9).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.integral.unwrap().balance_drift, 0.0);
    }

    #[test]
    fn growing_norm_is_flagged_unless_eps_absorbs_it() {
        let fam = Decay::new(vec![1.0]);
        let ts = grid(101, 0.01);
        let us: Vec<_> = ts.iter().map(|t| real(&[(0, 0.2 + 0.5 * t)])).collect();
        let rep = energy_inequality_check(&fam, &ts, &us, 0.0, 0.2, 0.9).unwrap();
        assert!(!rep.passed());
        let v = &rep.violations[0];
        assert!((v.residual - (v.lhs - v.rhs)).abs() < 1e-15);
        let loose = energy_inequality_check(&fam, &ts, &us, 0.2, 0.2, 0.9).unwrap();
        assert!(loose.passed());
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let fam = Decay::new(vec![1.0]);
        let ts = grid(10, 0.1);
        let us = vec![fam.space().zero(); 10];
        assert!(energy_inequality_check(&fam, &ts, &us, 0.0, 0.2, 0.9).is_err());
    }
}
