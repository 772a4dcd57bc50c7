//! The heat equation on the line in Fourier variables,
//! `u_hat(xi, t) = exp(-xi^2 (t - s)) u_hat(xi, s)`, sampled on the grid
//! `xi = k h`, `|xi| <= XI_MAX`, with trapezoid weights in the L2 norm.
//!
//! The zero-frequency cell never decays; seed generators keep it empty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ges_core::metric::{DualMetricSpace, Quadrature, WeakMetric};
use ges_core::state::CoeffState;
use ges_core::{
    CompleteTrajectories, EnergyRates, Error, Result, Scalar, SeedSource, TrajectoryFamily,
};

use crate::usage_error;

pub const HEAT_TAG: &str = "heat";
/// Grid cells per unit frequency.
pub const CELLS_PER_UNIT: i32 = 64;
pub const XI_MAX: i32 = 16;
pub const HALF_WIDTH: i32 = CELLS_PER_UNIT * XI_MAX;

pub fn grid_step<F: Scalar>() -> F {
    F::one() / F::from(CELLS_PER_UNIT).expect("small int")
}

fn xi<F: Scalar>(k: i32) -> F {
    F::from(k).expect("i32 fits") * grid_step::<F>()
}

/// Unit ball of the sampled L2 with weak weights `2^{-4|xi|}`.
pub fn heat_space<F: Scalar>() -> DualMetricSpace<F> {
    DualMetricSpace::new(HEAT_TAG, 1, 1)
        .and_then(|s| {
            s.with_weak(WeakMetric::Series {
                weight_base: F::lit(2.0).powf(F::one() / F::from(XI_MAX).expect("small int")),
                truncation: HALF_WIDTH,
            })
        })
        .and_then(|s| {
            s.with_quadrature(Quadrature::Trapezoid {
                h: grid_step(),
                half_width: HALF_WIDTH,
            })
        })
        .and_then(|s| s.with_ball_radius(F::one()))
        .expect("valid heat space")
}

/// `exp(-xi^2 (t - s)) x` on every grid cell.
pub fn heat_evolve<F: Scalar>(x: &CoeffState<F>, s: F, t: F) -> Result<CoeffState<F>> {
    if !(t >= s) {
        return usage_error("heat evolution needs t >= s");
    }
    let dt = t - s;
    x.map_values(|k, z| {
        let q = xi::<F>(k[0]);
        z * (-(q * q) * dt).exp()
    })
}

/// Lower exponent of the dyadic band that still keeps half the norm after
/// `t - s0`: `floor((log2(ln 2 / (t - s0)) + 2) / 2)`, as the raw bound and the
/// floored integer.
pub fn band_exponent<F: Scalar>(t: F, s0: F) -> Result<(F, i32)> {
    let d = t - s0;
    if !(d > F::zero()) || !d.is_finite() {
        return usage_error("band exponent needs t > s0");
    }
    let bound = ((F::LN_2() / d).log2() + F::lit(2.0)) * F::lit(0.5);
    let j = bound
        .floor()
        .to_i32()
        .ok_or(Error::Usage("band exponent out of range".into()))?;
    Ok((bound, j))
}

/// Unit-norm data at time `s0` whose heat evolution still has norm
/// `>= 1/2` at `t`: the mass sits on the lower edge `+-2^{j-1}` of the band
/// `2^{j-1} <= |xi| <= 2^{j+1}`, where the decay factor
/// `exp(-2^{2j-2}(t - s0))` is at least `1/2` by the choice of `j`.
pub fn heat_band_witness<F: Scalar>(t: F, s0: F) -> Result<CoeffState<F>> {
    let (_, j) = band_exponent(t, s0)?;
    let edge = F::lit(2.0).powi(j - 1);
    let h = grid_step::<F>();
    if edge < h {
        return usage_error(format!(
            "band edge 2^{} is below the grid step; use a finer frequency grid or a shorter horizon",
            j - 1
        ));
    }
    if edge > F::from(XI_MAX).expect("small int") {
        return usage_error(format!(
            "band edge 2^{} exceeds the frequency cutoff; use a wider grid or a longer horizon",
            j - 1
        ));
    }
    let k = (edge / h).round().to_i32().expect("on grid");
    let v = (F::lit(2.0) * h).sqrt().recip();
    CoeffState::from_real(HEAT_TAG, [(-k, v), (k, v)])
}

/// Even, unit-norm data supported in the band `2^{j-1} <= |xi| <= 2^{j+1}`.
fn band_state<F: Scalar>(j: i32, profile: impl Fn(F) -> F) -> CoeffState<F> {
    let lo = CELLS_PER_UNIT * 2i32.pow((j + 4) as u32) / 32;
    let hi = CELLS_PER_UNIT * 2i32.pow((j + 6) as u32) / 32;
    let mut entries = Vec::new();
    for k in lo..=hi {
        let frac = F::from(k - lo).expect("small") / F::from(hi - lo).expect("small");
        let v = profile(frac);
        entries.push((k, v));
        entries.push((-k, v));
    }
    let x = CoeffState::from_real(HEAT_TAG, entries).expect("finite band data");
    let norm = heat_space::<F>().strong_norm(&x).expect("heat member");
    x.scaled(norm.recip())
}

/// Eight shapes on each of the bands `j = 0, 1, 2`: flat, rising, falling
/// and five seeded random profiles.
pub fn band_seeds<F: Scalar>(rng_seed: u64) -> Vec<CoeffState<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::new();
    for j in 0..3 {
        out.push(band_state::<F>(j, |_| F::one()));
        out.push(band_state::<F>(j, |f| F::lit(0.1) + f));
        out.push(band_state::<F>(j, |f| F::lit(1.1) - f));
        for _ in 0..5 {
            let coeffs: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            out.push(band_state::<F>(j, |f| {
                let f = f.as_f64();
                let v = 1.5
                    + coeffs[0] * (std::f64::consts::PI * f).cos()
                    + coeffs[1] * (2.0 * std::f64::consts::PI * f).sin()
                    + coeffs[2] * (5.0 * f).sin()
                    + 0.5 * coeffs[3];
                F::lit(v)
            }));
        }
    }
    out
}

/// Unit-norm single cells at `xi = m h`, `m = 1..=count`.
pub fn low_frequency_probes<F: Scalar>(count: usize) -> Vec<CoeffState<F>> {
    let v = grid_step::<F>().sqrt().recip();
    (1..=count as i32)
        .map(|m| CoeffState::from_real(HEAT_TAG, [(m, v)]).expect("finite probe"))
        .collect()
}

/// `seeds_at(s, t) = {witness(t, s)}`: data that keeps half its norm over the
/// pullback interval.
#[derive(Clone, Copy, Debug, Default)]
pub struct BandWitnessSeeds;

impl<F: Scalar> SeedSource<F> for BandWitnessSeeds {
    fn seeds_at(&self, s: F, t: F) -> Result<Vec<CoeffState<F>>> {
        Ok(vec![heat_band_witness(t, s)?])
    }
}

#[derive(Clone, Debug)]
pub struct HeatSystem<F> {
    space: DualMetricSpace<F>,
}

impl<F: Scalar> Default for HeatSystem<F> {
    fn default() -> Self {
        Self {
            space: heat_space(),
        }
    }
}

impl<F: Scalar> HeatSystem<F> {
    pub fn new() -> Self {
        Self::default()
    }
}

impl<F: Scalar> TrajectoryFamily<F> for HeatSystem<F> {
    fn system_id(&self) -> &str {
        "heat"
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
        ts.iter().map(|&t| heat_evolve(x, s, t)).collect()
    }

    fn complete_trajectories(&self) -> Option<&dyn CompleteTrajectories<F>> {
        Some(&ZeroTrajectory)
    }

    fn energy_rates(&self, _t: F, u: &CoeffState<F>) -> Option<EnergyRates<F>> {
        let q = self.space.quadrature();
        let dissipation = u.iter().fold(F::zero(), |acc, (k, a)| {
            let x = xi::<F>(k[0]);
            acc + q.weight(k) * x * x * a[0].norm_sqr()
        });
        Some(EnergyRates {
            dissipation,
            forcing_power: F::zero(),
        })
    }
}

/// The zero trajectory, the only bounded complete one away from the
/// zero-frequency cell.
#[derive(Clone, Copy, Debug)]
pub struct ZeroTrajectory;

impl<F: Scalar> CompleteTrajectories<F> for ZeroTrajectory {
    fn count(&self) -> usize {
        1
    }

    fn sample(&self, _index: usize, ts: &[F]) -> Result<Vec<CoeffState<F>>> {
        Ok(ts
            .iter()
            .map(|_| CoeffState::zero(HEAT_TAG, 1, 1))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ges_core::MetricKind;

    #[test]
    fn band_exponent_values() {
        let (bound, j) = band_exponent(1.0f64, 0.0).unwrap();
        assert!((bound - 0.735_616_813_527_551).abs() < 1e-12, "{bound}");
        assert_eq!(j, 0);
        // Oracle: the largest j with 2^{2j-2} d <= ln 2.
        for d in [0.01, 0.3, 2.0, 17.0, 400.0] {
            let (_, j) = band_exponent(d, 0.0).unwrap();
            let ok = |j: i32| 4f64.powi(j - 1) * d <= std::f64::consts::LN_2 * (1.0 + 1e-12);
            assert!(ok(j) && !ok(j + 1), "d = {d}");
        }
    }

    #[test]
    fn witness_keeps_half_its_norm() {
        let space = heat_space::<f64>();
        for (t, s0) in [(0.0, -1.0), (0.0, -7.3), (2.0, 1.9), (0.0, -1000.0)] {
            let w = heat_band_witness(t, s0).unwrap();
            assert!((space.strong_norm(&w).unwrap() - 1.0).abs() < 1e-12);
            let n = space.strong_norm(&heat_evolve(&w, s0, t).unwrap()).unwrap();
            assert!(n >= 0.5, "{t} {s0} {n}");
        }
        let w = heat_band_witness(1.0f64, 0.0).unwrap();
        let n = space
            .strong_norm(&heat_evolve(&w, 0.0, 1.0).unwrap())
            .unwrap();
        assert!((n - (-0.25f64).exp()).abs() < 1e-12);
        assert!(heat_band_witness(0.0f64, -1e5).is_err());
        assert!(heat_band_witness(0.0f64, -1e-6).is_err());
    }

    #[test]
    fn band_seeds_are_unit_and_weakly_decay() {
        let space = heat_space::<f64>();
        let seeds = band_seeds::<f64>(7);
        assert_eq!(seeds.len(), 24);
        let zero = space.zero();
        for x in &seeds {
            assert!((space.strong_norm(x).unwrap() - 1.0).abs() < 1e-12);
            assert!(x.get(&[0, 0, 0]).is_none());
            let far = heat_evolve(x, -40.0, 0.0).unwrap();
            assert!(space.dist(MetricKind::Weak, &far, &zero).unwrap() < 1e-3);
        }
        assert_eq!(band_seeds::<f64>(7), seeds);
    }

    #[test]
    fn energy_rate_matches_derivative() {
        let fam = HeatSystem::<f64>::new();
        let space = heat_space::<f64>();
        let x = &band_seeds::<f64>(1)[4];
        let e = |t: f64| {
            space
                .strong_norm(&heat_evolve(x, 0.0, t).unwrap())
                .unwrap()
                .powi(2)
        };
        let h = 1e-5;
        let deriv = (e(0.5 + h) - e(0.5 - h)) / (2.0 * h);
        let u = heat_evolve(x, 0.0, 0.5).unwrap();
        let rates = fam.energy_rates(0.5, &u).unwrap();
        assert!((deriv + 2.0 * rates.dissipation).abs() < 1e-6 * rates.dissipation.max(1.0));
    }
}
