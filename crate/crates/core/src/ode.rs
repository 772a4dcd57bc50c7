//! Adaptive integrating-factor Dormand-Prince 5(4) for semilinear systems
//! `u' = -L u + N(t, u)` with diagonal `L >= 0`.
//!
//! The linear part is integrated exactly (Lawson's transformation), so stiff
//! diagonal dissipation does not restrict the step size. With `L = 0` this
//! is the classical DOPRI5 pair.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Semilinear right-hand side `-diag(rates) u + N(t, u)`.
pub trait OdeSystem<F: Scalar>: Sync {
    fn len(&self) -> usize;

    /// Nonnegative diagonal decay rates, one per component.
    fn linear_rates(&self) -> &[F];

    /// Writes `N(t, u)` into `out`.
    fn nonlinear(&self, t: F, u: &[Complex<F>], out: &mut [Complex<F>]);
}

#[derive(Clone, Debug)]
pub struct OdeOptions<F> {
    pub rtol: F,
    pub atol: F,
    /// Initial step; chosen from the right-hand side when `None`.
    pub h_init: Option<F>,
    pub h_max: F,
    pub max_steps: usize,
}

impl<F: Scalar> Default for OdeOptions<F> {
    fn default() -> Self {
        Self::with_rtol(F::lit(1e-8))
    }
}

impl<F: Scalar> OdeOptions<F> {
    /// Tolerances are clamped to ten machine epsilons so `f32` stays usable.
    pub fn with_rtol(rtol: F) -> Self {
        let floor = F::lit(10.0) * F::epsilon();
        let rtol = rtol.max(floor);
        Self {
            rtol,
            atol: (rtol * F::lit(1e-2)).max(floor),
            h_init: None,
            h_max: F::lit(0.25),
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Clone, Debug)]
pub struct OdeSolution<F> {
    /// One state per requested time.
    pub states: Vec<Vec<Complex<F>>>,
    pub stats: OdeStats,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Workspace<F> {
    k: [Vec<Complex<F>>; 7],
    stage: Vec<Complex<F>>,
    next: Vec<Complex<F>>,
    err: Vec<Complex<F>>,
    /// Distinct decay rates, and the class of each component.
    distinct: Vec<F>,
    class: Vec<usize>,
    /// `exp(-rate * d * h)` per rate class for every `d = c_j - c_l` in use,
    /// keyed by (j, l).
    factors: Vec<Vec<F>>,
    factor_h: F,
}

impl<F: Scalar> Workspace<F> {
    fn new(rates: &[F]) -> Self {
        let n = rates.len();
        let z = || vec![Complex::new(F::zero(), F::zero()); n];
        let mut distinct: Vec<F> = rates.to_vec();
        distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
        distinct.dedup();
        let class = rates
            .iter()
            .map(|r| distinct.partition_point(|d| d < r))
            .collect();
        Self {
            distinct,
            class,
            k: [z(), z(), z(), z(), z(), z(), z()],
            stage: z(),
            next: z(),
            err: z(),
            factors: vec![Vec::new(); 8 * 8],
            factor_h: F::nan(),
        }
    }

    /// Slot 7 stands for c = 1 exactly, used by the final combination.
    fn slot(j: usize, l: usize) -> usize {
        j * 8 + l
    }

    fn prepare(&mut self, h: F) {
        if self.factor_h == h {
            return;
        }
        self.factor_h = h;
        for j in 0..8 {
            let cj = if j == 7 { 1.0 } else { C[j] };
            for l in 0..7 {
                let d = cj - C[l];
                if d < 0.0 || (j < 7 && l >= j) {
                    continue;
                }
                let dh = F::lit(d) * h;
                self.factors[Self::slot(j, l)] =
                    self.distinct.iter().map(|&r| (-r * dh).exp()).collect();
            }
        }
    }
}

/// Integrates from `(t0, u0)` and returns the states at the ascending times
/// `ts` (all `>= t0`). Steps are shortened to land on every sample time.
pub fn integrate<F: Scalar, S: OdeSystem<F> + ?Sized>(
    sys: &S,
    t0: F,
    u0: &[Complex<F>],
    ts: &[F],
    opts: &OdeOptions<F>,
) -> Result<OdeSolution<F>> {
    let n = sys.len();
    let rates = sys.linear_rates();
    if u0.len() != n || rates.len() != n {
        return Err(Error::Solver(format!(
            "system has {n} components but got {} values and {} rates",
            u0.len(),
            rates.len()
        )));
    }
    if rates.iter().any(|r| !(*r >= F::zero()) || !r.is_finite()) {
        return Err(Error::Solver(
            "linear rates must be finite and nonnegative".into(),
        ));
    }
    if ts.windows(2).any(|w| w[1] < w[0]) || ts.first().is_some_and(|&t| t < t0) {
        return Err(Error::Usage(
            "sample times must be ascending and not before the start".into(),
        ));
    }

    let mut stats = OdeStats::default();
    let mut states = Vec::with_capacity(ts.len());
    let mut t = t0;
    let mut u = u0.to_vec();
    let mut ws = Workspace::new(rates);
    sys.nonlinear(t, &u, &mut ws.k[0]);
    stats.rhs_evals += 1;

    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(&u, &ws.k[0], rates, opts));
    let ten = F::lit(10.0);

    for &target in ts {
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Solver(format!("step budget exhausted at t = {}", t)));
            }
            let remaining = target - t;
            // Snap to the sample when the leftover would be a sliver.
            let last =
                h >= remaining || remaining - h <= ten * F::epsilon() * target.abs().max(F::one());
            let step = if last { remaining } else { h };
            let err = try_step(sys, t, step, &u, &mut ws, &mut stats, opts);
            let err = err.unwrap_or(F::infinity());
            if err <= F::one() {
                stats.accepted += 1;
                t = if last { target } else { t + step };
                std::mem::swap(&mut u, &mut ws.next);
                ws.k.swap(0, 6);
                // A step cut short to hit a sample says little about the next one.
                if !last || step >= h {
                    h = next_step(step, err).min(opts.h_max);
                }
            } else {
                stats.rejected += 1;
                h = next_step(step, err);
                if !(h > F::epsilon() * t.abs().max(F::one())) {
                    return Err(Error::Solver(format!("step size underflow at t = {}", t)));
                }
            }
        }
        states.push(u.clone());
    }
    Ok(OdeSolution { states, stats })
}

fn next_step<F: Scalar>(h: F, err: F) -> F {
    if !err.is_finite() {
        return h * F::lit(0.2);
    }
    let fac = if err == F::zero() {
        F::lit(5.0)
    } else {
        (F::lit(0.9) * err.powf(F::lit(-0.2)))
            .max(F::lit(0.2))
            .min(F::lit(5.0))
    };
    h * fac
}

fn initial_step<F: Scalar>(
    u: &[Complex<F>],
    f: &[Complex<F>],
    rates: &[F],
    opts: &OdeOptions<F>,
) -> F {
    let mut d0 = F::zero();
    let mut d1 = F::zero();
    for ((x, fx), r) in u.iter().zip(f).zip(rates) {
        let sc = opts.atol + opts.rtol * x.norm();
        d0 += x.norm_sqr() / (sc * sc);
        let du = fx - x * *r;
        d1 += du.norm_sqr() / (sc * sc);
    }
    let h = if d0 < F::lit(1e-10) || d1 < F::lit(1e-10) {
        F::lit(1e-4)
    } else {
        F::lit(0.01) * (d0 / d1).sqrt()
    };
    h.min(opts.h_max).max(F::lit(1e-8))
}

/// One trial step; leaves the candidate in `ws.next` and its stage-7
/// derivative in `ws.k[6]`. Returns the scaled error norm.
fn try_step<F: Scalar, S: OdeSystem<F> + ?Sized>(
    sys: &S,
    t: F,
    h: F,
    u: &[Complex<F>],
    ws: &mut Workspace<F>,
    stats: &mut OdeStats,
    opts: &OdeOptions<F>,
) -> Option<F> {
    ws.prepare(h);
    let n = u.len();
    for j in 1..7 {
        {
            let ks = &ws.k[..j];
            let e_u = &ws.factors[Workspace::<F>::slot(j, 0)];
            for i in 0..n {
                let c = ws.class[i];
                let mut acc = u[i] * e_u[c];
                for (l, kl) in ks.iter().enumerate() {
                    let a = A[j][l];
                    if a != 0.0 {
                        acc += kl[i] * (h * F::lit(a) * ws.factors[Workspace::<F>::slot(j, l)][c]);
                    }
                }
                ws.stage[i] = acc;
            }
        }
        if ws
            .stage
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return None;
        }
        sys.nonlinear(t + F::lit(C[j]) * h, &ws.stage, &mut ws.k[j]);
        stats.rhs_evals += 1;
    }
    // Stage 7 sits at c = 1 with the fifth-order weights, so its state is the
    // candidate solution (first-same-as-last).
    ws.next.copy_from_slice(&ws.stage);
    for i in 0..n {
        let mut e = Complex::new(F::zero(), F::zero());
        let c = ws.class[i];
        for l in 0..7 {
            e += ws.k[l][i] * (h * F::lit(E[l]) * ws.factors[Workspace::<F>::slot(7, l)][c]);
        }
        ws.err[i] = e;
    }
    let mut err_sq = F::zero();
    for i in 0..n {
        let sc = opts.atol + opts.rtol * u[i].norm().max(ws.next[i].norm());
        err_sq += ws.err[i].norm_sqr() / (sc * sc);
    }
    let err = (err_sq / F::from_usize_lossy(n.max(1))).sqrt();
    err.is_finite().then_some(err)
}
