//! Body forcing given mode by mode, with the translational bound, normality
//! table and absorbing-ball radius derived from it.
//!
//! JSON: `{"modes": [{"k": [kx, ky, kz], "amp": [re, im], "time": {...}}]}`
//! with `time` one of `{"kind": "const"}`,
//! `{"kind": "sin", "omega": w, "phase": p}` (`sin(w t + p)`) or
//! `{"kind": "sampled", "times": [...], "values": [...]}` (piecewise linear,
//! held constant outside the samples).
//!
//! `amp` is the root-mean-square amplitude of the real mode pair: the
//! coefficients at `k` and `-k` are `amp / sqrt 2` and its conjugate, along a
//! fixed real unit vector orthogonal to `k`, so one mode contributes
//! `|amp|^2 / |k|^2` to `|g|_{V'}^2`.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use ges_core::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TimeProfile {
    Const,
    Sin {
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    Sampled {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TimeProfile {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Const => 1.0,
            TimeProfile::Sin { omega, phase } => (omega * t + phase).sin(),
            TimeProfile::Sampled { times, values } => {
                let i = times.partition_point(|&s| s <= t);
                if i == 0 {
                    values[0]
                } else if i == times.len() {
                    values[i - 1]
                } else {
                    let (t0, t1) = (times[i - 1], times[i]);
                    let w = (t - t0) / (t1 - t0);
                    values[i - 1] * (1.0 - w) + values[i] * w
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TimeProfile::Const => Ok(()),
            TimeProfile::Sin { omega, phase } if omega.is_finite() && phase.is_finite() => Ok(()),
            TimeProfile::Sin { .. } => Err(Error::Format(
                "sin forcing needs finite omega and phase".into(),
            )),
            TimeProfile::Sampled { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::Format(
                        "sampled forcing needs equally many (>= 1) times and values".into(),
                    ));
                }
                if times.iter().chain(values).any(|v| !v.is_finite())
                    || times.windows(2).any(|w| !(w[1] > w[0]))
                {
                    return Err(Error::Format(
                        "sampled forcing times must be finite and strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcedMode {
    pub k: [i32; 3],
    pub amp: [f64; 2],
    pub time: TimeProfile,
}

impl ForcedMode {
    /// Unit vector orthogonal to `k`: `k x e_a` normalized, with `e_a` the
    /// axis least aligned with `k`.
    pub fn direction(&self) -> [f64; 3] {
        let k = self.k.map(f64::from);
        let axis = (0..3)
            .min_by(|&a, &b| k[a].abs().total_cmp(&k[b].abs()))
            .expect("three axes");
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let c = [
            k[1] * e[2] - k[2] * e[1],
            k[2] * e[0] - k[0] * e[2],
            k[0] * e[1] - k[1] * e[0],
        ];
        let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        c.map(|x| x / n)
    }
}

/// Rows of a normality table: the largest window length `delta` with
/// `sup_t int_t^{t+delta} |g|_{V'}^2 <= eps`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalityRow {
    pub eps: f64,
    /// `None` when even the shortest tested window exceeds `eps`.
    pub delta: Option<f64>,
    /// The search stopped at the longest window tried.
    pub hit_limit: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingProfile {
    pub modes: Vec<ForcedMode>,
}

impl ForcingProfile {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(k: [i32; 3], amp: f64, time: TimeProfile) -> Result<Self> {
        let f = Self {
            modes: vec![ForcedMode {
                k,
                amp: [amp, 0.0],
                time,
            }],
        };
        f.validate()?;
        Ok(f)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: Self =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("forcing: {e}")))?;
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.modes {
            if m.k == [0, 0, 0] {
                return Err(Error::Format("forcing mode k = 0 is not allowed".into()));
            }
            if m.amp.iter().any(|a| !a.is_finite()) {
                return Err(Error::Format("forcing amplitudes must be finite".into()));
            }
            m.time.validate()?;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.amp == [0.0, 0.0])
    }

    pub fn kmax(&self) -> i32 {
        self.modes
            .iter()
            .flat_map(|m| m.k)
            .map(i32::abs)
            .max()
            .unwrap_or(0)
    }

    /// Common period of the time profiles, if they are all constant or
    /// sinusoidal with one frequency.
    pub fn period(&self) -> Option<f64> {
        let mut omega: Option<f64> = None;
        for m in &self.modes {
            match m.time {
                TimeProfile::Const => {}
                TimeProfile::Sin { omega: w, .. } if w != 0.0 => {
                    if omega.is_some_and(|o| (o - w.abs()).abs() > 1e-12 * o) {
                        return None;
                    }
                    omega = Some(w.abs());
                }
                TimeProfile::Sin { .. } => {}
                TimeProfile::Sampled { .. } => return None,
            }
        }
        Some(omega.map_or(std::f64::consts::TAU, |w| std::f64::consts::TAU / w))
    }

    /// Coefficients `g_k(t)` on every forced mode, both members of each pair.
    pub fn coefficients_at(&self, t: f64) -> BTreeMap<[i32; 3], [Complex<f64>; 3]> {
        let mut out: BTreeMap<[i32; 3], [Complex<f64>; 3]> = BTreeMap::new();
        for m in &self.modes {
            let a = Complex::new(m.amp[0], m.amp[1]) * (m.time.at(t) / std::f64::consts::SQRT_2);
            let e = m.direction();
            for (k, c) in [(m.k, a), (m.k.map(|x| -x), a.conj())] {
                let slot = out.entry(k).or_insert([Complex::new(0.0, 0.0); 3]);
                for d in 0..3 {
                    slot[d] += c * e[d];
                }
            }
        }
        out
    }

    /// `|g(t)|_{V'}^2 = sum |g_k|^2 / |k|^2`.
    pub fn dual_norm_sq(&self, t: f64) -> f64 {
        self.coefficients_at(t)
            .iter()
            .map(|(k, v)| {
                let k2 = f64::from(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
                v.iter().map(|z| z.norm_sqr()).sum::<f64>() / k2
            })
            .sum()
    }

    /// `int_t0^{t0+len} |g|_{V'}^2` by composite Simpson with panels of at
    /// most `step`.
    pub fn window_integral(&self, t0: f64, len: f64, step: f64) -> f64 {
        let panels = ((len / step).ceil() as usize).max(1);
        let h = len / (2 * panels) as f64;
        let mut acc = self.dual_norm_sq(t0) + self.dual_norm_sq(t0 + len);
        for i in 1..2 * panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.dual_norm_sq(t0 + h * i as f64);
        }
        acc * h / 3.0
    }

    /// `sup_{t0} int_t0^{t0+len} |g|_{V'}^2` over `t0` on the grid of `window`
    /// with spacing `step`.
    pub fn window_sup(&self, len: f64, window: (f64, f64), step: f64) -> f64 {
        let count = ((window.1 - window.0) / step).ceil() as usize;
        (0..=count)
            .map(|i| (window.0 + step * i as f64).min(window.1))
            .map(|t0| self.window_integral(t0, len, step))
            .fold(0.0, f64::max)
    }

    /// Translational bound `sup_t int_t^{t+1} |g|_{V'}^2` over sampled `t`.
    pub fn translational_bound(&self, window: (f64, f64), step: f64) -> f64 {
        self.window_sup(1.0, window, step)
    }

    /// Window that covers every distinct behaviour of the forcing: one period
    /// when periodic, the sample range (padded by a unit window) otherwise.
    pub fn default_window(&self) -> (f64, f64) {
        if let Some(p) = self.period() {
            return (0.0, p);
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for m in &self.modes {
            if let TimeProfile::Sampled { times, .. } = &m.time {
                lo = lo.min(times[0]);
                hi = hi.max(times[times.len() - 1]);
            }
        }
        (lo - 1.0, hi)
    }

    /// For each `eps`, the largest `delta <= delta_max` (to bisection
    /// precision) with window supremum at most `eps`.
    pub fn normality_check(
        &self,
        eps_list: &[f64],
        window: (f64, f64),
        step: f64,
        delta_max: f64,
    ) -> Vec<NormalityRow> {
        let sup = |d: f64| self.window_sup(d, window, step);
        let delta_min = step;
        eps_list
            .iter()
            .map(|&eps| {
                if sup(delta_max) <= eps {
                    return NormalityRow {
                        eps,
                        delta: Some(delta_max),
                        hit_limit: true,
                    };
                }
                if sup(delta_min) > eps {
                    return NormalityRow {
                        eps,
                        delta: None,
                        hit_limit: false,
                    };
                }
                let (mut lo, mut hi) = (delta_min, delta_max);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if sup(mid) <= eps {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                NormalityRow {
                    eps,
                    delta: Some(lo),
                    hit_limit: false,
                }
            })
            .collect()
    }
}

/// `R = 2 |g|_{L2b}^2 / (nu (1 - e^{-nu lambda1}))`.
pub fn absorbing_radius(l2b_norm_sq: f64, nu: f64, lambda1: f64) -> f64 {
    2.0 * l2b_norm_sq / (nu * (1.0 - (-nu * lambda1).exp()))
}

/// Right side of the absorbing inequality:
/// `|u0|^2 e^{-nu lambda1 (t - t0)} + |g|_{L2b}^2 / (nu (1 - e^{-nu lambda1}))`.
pub fn absorbing_bound(energy0: f64, elapsed: f64, l2b_norm_sq: f64, nu: f64, lambda1: f64) -> f64 {
    energy0 * (-nu * lambda1 * elapsed).exp() + l2b_norm_sq / (nu * (1.0 - (-nu * lambda1).exp()))
}

/// How the absorbing radius `R` defines the phase space ball.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallConvention {
    /// `X = {|u| <= R}`, as the radius formula is usually quoted, although
    /// `R` bounds `|u|^2`.
    #[default]
    PaperNorm,
    /// `X = {|u|^2 <= R}`, consistent with the energy estimate.
    EnergySquared,
}

impl BallConvention {
    pub fn ball_radius(self, r: f64) -> f64 {
        match self {
            BallConvention::PaperNorm => r,
            BallConvention::EnergySquared => r.sqrt(),
        }
    }
}
