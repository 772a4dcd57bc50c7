//! Fourier-Galerkin truncation of the forced Navier-Stokes equations on the
//! 2 pi-periodic torus,
//! `u_k' = -nu |k|^2 u_k - P_k (u . grad u)_k + g_k(t)`, for `0 < max|k_i| <= K`.
//!
//! Norms are volume-normalized: `|u|^2 = sum |u_k|^2`, `|u|_V^2 = sum |k|^2 |u_k|^2`,
//! so the first Stokes eigenvalue is one.

pub mod forcing;
pub mod modes;
pub mod rhs;

use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftNum;

use ges_core::metric::DualMetricSpace;
use ges_core::ode::{integrate, OdeOptions, OdeSystem};
use ges_core::state::CoeffState;
use ges_core::symbols::SymbolSpace;
use ges_core::{EnergyRates, Error, Result, Scalar, SeedSource, SymbolFamily, TrajectoryFamily};

pub use forcing::{
    absorbing_bound, absorbing_radius, BallConvention, ForcingProfile, NormalityRow, TimeProfile,
};
pub use modes::ModeSet;
pub use rhs::{Advection, ConvolutionRoute};

pub const NSE_TAG: &str = "nse";
pub const LAMBDA1: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct NseConfig {
    pub kmax: i32,
    pub nu: f64,
    pub forcing: ForcingProfile,
    pub convention: BallConvention,
    pub route: ConvolutionRoute,
    pub rtol: f64,
    /// Quadrature step of the sliding-window forcing analysis.
    pub window_step: f64,
}

impl Default for NseConfig {
    fn default() -> Self {
        Self {
            kmax: 4,
            nu: 1.0,
            forcing: ForcingProfile::single([1, 0, 0], 1.0, TimeProfile::Const)
                .expect("valid forcing"),
            convention: BallConvention::PaperNorm,
            route: ConvolutionRoute::Fft,
            rtol: 1e-8,
            window_step: 0.01,
        }
    }
}

/// Forcing coefficients at fixed positions of the flat state vector.
#[derive(Clone, Debug)]
struct ForcingTerm {
    pos: usize,
    vec: [Complex<f64>; 3],
    time: TimeProfile,
}

pub struct NseGalerkin<F: Scalar + FftNum> {
    modes: Arc<ModeSet>,
    nu: F,
    forcing: Arc<ForcingProfile>,
    terms: Arc<Vec<ForcingTerm>>,
    time_shift: f64,
    advection: Advection<F>,
    rates: Vec<F>,
    space: DualMetricSpace<F>,
    ode: OdeOptions<F>,
    l2b: f64,
    radius: f64,
    convention: BallConvention,
}

impl<F: Scalar + FftNum> Clone for NseGalerkin<F> {
    fn clone(&self) -> Self {
        Self {
            modes: self.modes.clone(),
            nu: self.nu,
            forcing: self.forcing.clone(),
            terms: self.terms.clone(),
            time_shift: self.time_shift,
            advection: self.advection.clone(),
            rates: self.rates.clone(),
            space: self.space.clone(),
            ode: self.ode.clone(),
            l2b: self.l2b,
            radius: self.radius,
            convention: self.convention,
        }
    }
}

impl<F: Scalar + FftNum> NseGalerkin<F> {
    pub fn new(cfg: &NseConfig) -> Result<Self> {
        if !(cfg.nu > 0.0) || !cfg.nu.is_finite() {
            return Err(Error::Usage("viscosity must be positive".into()));
        }
        if !(cfg.window_step > 0.0) {
            return Err(Error::Usage(
                "forcing quadrature step must be positive".into(),
            ));
        }
        cfg.forcing.validate()?;
        if cfg.forcing.kmax() > cfg.kmax {
            return Err(Error::Format(format!(
                "forcing mode with |k_i| = {} lies outside the Galerkin cutoff {}",
                cfg.forcing.kmax(),
                cfg.kmax
            )));
        }
        let modes = Arc::new(ModeSet::cube(cfg.kmax)?);
        let terms = forcing_terms(&modes, &cfg.forcing);
        let nu = F::lit(cfg.nu);
        let rates = modes
            .modes()
            .iter()
            .enumerate()
            .flat_map(|(i, _)| {
                let r = nu * F::from(modes.k2(i)).expect("small int");
                [r; 3]
            })
            .collect();
        let l2b = cfg
            .forcing
            .translational_bound(cfg.forcing.default_window(), cfg.window_step);
        let radius = absorbing_radius(l2b, cfg.nu, LAMBDA1);
        let mut space = DualMetricSpace::new(NSE_TAG, 3, 3)?;
        if radius > 0.0 {
            space = space.with_ball_radius(F::lit(cfg.convention.ball_radius(radius)))?;
        }
        Ok(Self {
            advection: Advection::new(modes.clone(), cfg.route),
            modes,
            nu,
            forcing: Arc::new(cfg.forcing.clone()),
            terms: Arc::new(terms),
            time_shift: 0.0,
            rates,
            space,
            ode: OdeOptions::with_rtol(F::lit(cfg.rtol)),
            l2b,
            radius,
            convention: cfg.convention,
        })
    }

    /// The same system with forcing `g(t + shift)`.
    pub fn time_shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.time_shift = self.time_shift + shift;
        out
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn nu(&self) -> F {
        self.nu
    }

    pub fn forcing(&self) -> &ForcingProfile {
        &self.forcing
    }

    /// Translational bound of the forcing, `|g|_{L2b}^2`.
    pub fn l2b_norm_sq(&self) -> f64 {
        self.l2b
    }

    /// Absorbing radius `R`; it bounds `|u|^2` eventually.
    pub fn absorbing_radius(&self) -> f64 {
        self.radius
    }

    pub fn convention(&self) -> BallConvention {
        self.convention
    }

    pub fn route(&self) -> ConvolutionRoute {
        self.advection.route()
    }

    pub fn with_route(&self, route: ConvolutionRoute) -> Self {
        let mut out = self.clone();
        out.advection = Advection::new(self.modes.clone(), route);
        out
    }

    pub fn ode_options(&self) -> &OdeOptions<F> {
        &self.ode
    }

    /// Flat amplitudes (three per mode, in mode order) of a state.
    pub fn flatten(&self, x: &CoeffState<F>) -> Result<Vec<Complex<F>>> {
        self.space.check_member(x)?;
        let mut out = vec![Complex::new(F::zero(), F::zero()); 3 * self.modes.len()];
        for (k, a) in x.iter() {
            let Some(i) = self.modes.position(k) else {
                if a.iter().all(|z| z.norm() == F::zero()) {
                    continue;
                }
                return Err(Error::InvalidState(format!(
                    "mode {k:?} outside the Galerkin cutoff"
                )));
            };
            out[3 * i..3 * i + 3].copy_from_slice(a);
        }
        Ok(out)
    }

    pub fn unflatten(&self, u: Vec<Complex<F>>) -> Result<CoeffState<F>> {
        CoeffState::from_parts(NSE_TAG, 3, 3, self.modes.modes().to_vec(), u)
    }

    /// Largest `|k . u_k| / |k|` and largest `|u_{-k} - conj u_k|`.
    pub fn constraint_defects(&self, u: &[Complex<F>]) -> (F, F) {
        let mut div = F::zero();
        let mut real = F::zero();
        for (i, k) in self.modes.modes().iter().enumerate() {
            div = div.max(modes::divergence(k, &u[3 * i..3 * i + 3]));
            let j = self.modes.conj_of(i);
            for d in 0..3 {
                real = real.max((u[3 * j + d] - u[3 * i + d].conj()).norm());
            }
        }
        (div, real)
    }

    fn check_constraints(&self, u: &[Complex<F>]) -> Result<()> {
        let scale = u.iter().fold(F::one(), |m, z| m.max(z.norm()));
        let tol = F::lit(1e-9).max(F::lit(100.0) * F::epsilon()) * scale;
        let (div, real) = self.constraint_defects(u);
        if div > tol {
            return Err(Error::InvalidState(format!(
                "velocity is not divergence-free (defect {:e})",
                div.as_f64()
            )));
        }
        if real > tol {
            return Err(Error::InvalidState(format!(
                "amplitudes are not a real field (defect {:e})",
                real.as_f64()
            )));
        }
        Ok(())
    }

    /// Forcing coefficients at time `t`, added into `out`.
    fn add_forcing(&self, t: F, out: &mut [Complex<F>]) {
        let t = t.as_f64() + self.time_shift;
        for term in self.terms.iter() {
            let s = term.time.at(t);
            if s == 0.0 {
                continue;
            }
            for d in 0..3 {
                let c = term.vec[d] * s;
                out[3 * term.pos + d] =
                    out[3 * term.pos + d] + Complex::new(F::lit(c.re), F::lit(c.im));
            }
        }
    }

    /// The full right-hand side `-nu |k|^2 u - P(u . grad u) + g(t)`.
    pub fn rhs(&self, t: F, u: &[Complex<F>]) -> Vec<Complex<F>> {
        let mut out = vec![Complex::new(F::zero(), F::zero()); u.len()];
        self.advection.apply(u, &mut out);
        self.add_forcing(t, &mut out);
        for ((o, v), r) in out.iter_mut().zip(u).zip(&self.rates) {
            *o = *o - *v * *r;
        }
        out
    }

    /// The advection term `-P(u . grad u)` alone.
    pub fn advection_term(&self, u: &[Complex<F>]) -> Vec<Complex<F>> {
        let mut out = vec![Complex::new(F::zero(), F::zero()); u.len()];
        self.advection.apply(u, &mut out);
        out
    }

    /// `(|u|^2, |u|_V^2)`.
    pub fn energies(&self, u: &[Complex<F>]) -> (F, F) {
        let mut e = F::zero();
        let mut v = F::zero();
        for (i, a) in u.chunks_exact(3).enumerate() {
            let s = a.iter().fold(F::zero(), |acc, z| acc + z.norm_sqr());
            e = e + s;
            v = v + s * F::from(self.modes.k2(i)).expect("small int");
        }
        (e, v)
    }

    /// Samples the trajectory from `u0` at `s` at the times `ts`, returning
    /// flat amplitudes.
    pub fn integrate_flat(
        &self,
        s: F,
        u0: &[Complex<F>],
        ts: &[F],
    ) -> Result<Vec<Vec<Complex<F>>>> {
        let sys = GalerkinOde { fam: self };
        Ok(integrate(&sys, s, u0, ts, &self.ode)?.states)
    }
}

fn forcing_terms(modes: &ModeSet, forcing: &ForcingProfile) -> Vec<ForcingTerm> {
    let mut out = Vec::new();
    for m in &forcing.modes {
        let a = Complex::new(m.amp[0], m.amp[1]) / std::f64::consts::SQRT_2;
        let e = m.direction();
        for (k, c) in [(m.k, a), (m.k.map(|x| -x), a.conj())] {
            out.push(ForcingTerm {
                pos: modes.position(&k).expect("forcing checked against cutoff"),
                vec: e.map(|x| c * x),
                time: m.time.clone(),
            });
        }
    }
    out
}

struct GalerkinOde<'a, F: Scalar + FftNum> {
    fam: &'a NseGalerkin<F>,
}

impl<F: Scalar + FftNum> OdeSystem<F> for GalerkinOde<'_, F> {
    fn len(&self) -> usize {
        self.fam.rates.len()
    }

    fn linear_rates(&self) -> &[F] {
        &self.fam.rates
    }

    fn nonlinear(&self, t: F, u: &[Complex<F>], out: &mut [Complex<F>]) {
        self.fam.advection.apply(u, out);
        self.fam.add_forcing(t, out);
    }
}

impl<F: Scalar + FftNum> TrajectoryFamily<F> for NseGalerkin<F> {
    fn system_id(&self) -> &str {
        "nse"
    }

    fn space(&self) -> &DualMetricSpace<F> {
        &self.space
    }

    fn is_autonomous(&self) -> bool {
        self.forcing
            .modes
            .iter()
            .all(|m| m.time == TimeProfile::Const)
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
        let u0 = self.flatten(x)?;
        self.check_constraints(&u0)?;
        self.integrate_flat(s, &u0, ts)?
            .into_iter()
            .map(|u| self.unflatten(u))
            .collect()
    }

    fn solver_tolerance(&self) -> F {
        self.ode.rtol
    }

    fn energy_rates(&self, t: F, u: &CoeffState<F>) -> Option<EnergyRates<F>> {
        let flat = self.flatten(u).ok()?;
        let (_, v) = self.energies(&flat);
        let mut g = vec![Complex::new(F::zero(), F::zero()); flat.len()];
        self.add_forcing(t, &mut g);
        let power = g
            .iter()
            .zip(&flat)
            .fold(F::zero(), |acc, (g, u)| acc + (g.conj() * u).re);
        Some(EnergyRates {
            dissipation: self.nu * v,
            forcing_power: power,
        })
    }
}

/// Sample times on `[start, end]`: step `fine` up to `start + fine_span`, then
/// `coarse`. Resolves the fast decay of high modes right after the start.
pub fn graded_times(start: f64, end: f64, fine_span: f64, fine: f64, coarse: f64) -> Vec<f64> {
    let cut = (start + fine_span).min(end);
    let n_fine = ((cut - start) / fine).round() as usize;
    let mut ts: Vec<f64> = (0..n_fine).map(|i| start + fine * i as f64).collect();
    let n_coarse = ((end - cut) / coarse).round().max(0.0) as usize;
    ts.extend((0..=n_coarse).map(|i| {
        if i == n_coarse {
            end
        } else {
            cut + coarse * i as f64
        }
    }));
    ts
}

/// Seeded random real, divergence-free states with a decaying spectrum,
/// scaled to energies `|u|` drawn from `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct NseSeeds {
    pub kmax: i32,
    pub count: usize,
    pub norm_range: (f64, f64),
    pub rng_seed: u64,
}

impl NseSeeds {
    pub fn generate<F: Scalar>(&self) -> Result<Vec<CoeffState<F>>> {
        let modes = ModeSet::cube(self.kmax)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let (lo, hi) = self.norm_range;
        if !(0.0 <= lo && lo <= hi) {
            return Err(Error::Usage(
                "seed norm range must satisfy 0 <= lo <= hi".into(),
            ));
        }
        let mut out = Vec::with_capacity(self.count);
        for _ in 0..self.count {
            let mut u = vec![Complex::new(0.0f64, 0.0); 3 * modes.len()];
            for (i, k) in modes.modes().iter().enumerate() {
                let j = modes.conj_of(i);
                if j < i {
                    continue;
                }
                let k2 = f64::from(modes.k2(i));
                let amp = 1.0 / k2;
                let mut v: [Complex<f64>; 3] = std::array::from_fn(|_| {
                    Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp
                });
                modes::leray(k, &mut v);
                for d in 0..3 {
                    u[3 * i + d] = v[d];
                    u[3 * j + d] = v[d].conj();
                }
            }
            let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let target = lo + (hi - lo) * rng.gen::<f64>();
            let vals = u
                .into_iter()
                .map(|z| z * (target / norm))
                .map(|z| Complex::new(F::lit(z.re), F::lit(z.im)));
            out.push(CoeffState::from_parts(
                NSE_TAG,
                3,
                3,
                modes.modes().to_vec(),
                vals.collect(),
            )?);
        }
        Ok(out)
    }
}

impl<F: Scalar> SeedSource<F> for NseSeeds {
    fn seeds_at(&self, _s: F, _t: F) -> Result<Vec<CoeffState<F>>> {
        self.generate()
    }
}

/// Time shifts of a periodic forcing as symbols.
pub struct NsePhases<F: Scalar + FftNum> {
    base: NseGalerkin<F>,
    symbols: SymbolSpace<F>,
}

impl<F: Scalar + FftNum> NsePhases<F> {
    pub fn new(base: NseGalerkin<F>, count: usize) -> Result<Self> {
        let period = base
            .forcing()
            .period()
            .ok_or_else(|| Error::Usage("symbol families need a periodic forcing".into()))?;
        let step = period / count.max(1) as f64;
        let phases = (0..count).map(|i| F::lit(step * i as f64)).collect();
        let symbols = SymbolSpace::new(
            phases,
            F::lit(period),
            format!("{count} equally spaced time shifts of one forcing period"),
        )?;
        Ok(Self { base, symbols })
    }
}

impl<F: Scalar + FftNum> SymbolFamily<F> for NsePhases<F> {
    fn symbol_space(&self) -> &SymbolSpace<F> {
        &self.symbols
    }

    fn family(&self, sigma: F) -> Result<Box<dyn TrajectoryFamily<F>>> {
        Ok(Box::new(self.base.time_shifted(sigma.as_f64())))
    }

    fn space(&self) -> &DualMetricSpace<F> {
        self.base.space()
    }

    fn system_id(&self) -> &str {
        "nse"
    }
}

#[cfg(test)]
mod tests;
