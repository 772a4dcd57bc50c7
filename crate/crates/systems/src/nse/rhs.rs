//! The projected advection term `P (u . grad u)` of a Galerkin state, by
//! dealiased FFT or by direct triad summation.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftNum, FftPlanner};

use ges_core::Scalar;

use super::modes::{leray, ModeSet, Vec3};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConvolutionRoute {
    /// Pseudo-spectral products on a grid of at least `3K + 1` points per
    /// axis, which is alias-free for quadratic terms.
    #[default]
    Fft,
    /// Sum over all triads `p + q = k`. Quadratic in the mode count.
    Direct,
}

/// Evaluates `-P (u . grad u)` on a fixed mode set.
#[derive(Clone)]
pub struct Advection<F: FftNum> {
    modes: Arc<ModeSet>,
    route: ConvolutionRoute,
    n: usize,
    forward: Arc<dyn Fft<F>>,
    inverse: Arc<dyn Fft<F>>,
    grid_index: Vec<usize>,
}

impl<F: Scalar + FftNum> Advection<F> {
    pub fn new(modes: Arc<ModeSet>, route: ConvolutionRoute) -> Self {
        let n = (3 * modes.kmax() as usize + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let wrap = |c: i32| c.rem_euclid(n as i32) as usize;
        let grid_index = modes
            .modes()
            .iter()
            .map(|k| (wrap(k[0]) * n + wrap(k[1])) * n + wrap(k[2]))
            .collect();
        Self {
            modes,
            route,
            n,
            forward,
            inverse,
            grid_index,
        }
    }

    pub fn route(&self) -> ConvolutionRoute {
        self.route
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    /// Writes `-P (u . grad u)` for the flat amplitudes `u` (three per mode).
    pub fn apply(&self, u: &[Complex<F>], out: &mut [Complex<F>]) {
        match self.route {
            ConvolutionRoute::Fft => self.apply_fft(u, out),
            ConvolutionRoute::Direct => self.apply_direct(u, out),
        }
        for (k, v) in self.modes.modes().iter().zip(out.chunks_exact_mut(3)) {
            let mut w: Vec3<F> = [v[0], v[1], v[2]];
            leray(k, &mut w);
            v.copy_from_slice(&w);
        }
    }

    fn apply_direct(&self, u: &[Complex<F>], out: &mut [Complex<F>]) {
        let modes = &self.modes;
        let i = Complex::new(F::zero(), F::one());
        out.par_chunks_exact_mut(3)
            .enumerate()
            .for_each(|(a, slot)| {
                let k = modes.modes()[a];
                let mut acc = [Complex::new(F::zero(), F::zero()); 3];
                for (b, p) in modes.modes().iter().enumerate() {
                    let q = [k[0] - p[0], k[1] - p[1], k[2] - p[2]];
                    let Some(c) = modes.position(&q) else {
                        continue;
                    };
                    let up = &u[3 * b..3 * b + 3];
                    let uq = &u[3 * c..3 * c + 3];
                    let qf = q.map(|x| F::from(x).expect("small int"));
                    let dot = up[0] * qf[0] + up[1] * qf[1] + up[2] * qf[2];
                    for d in 0..3 {
                        acc[d] = acc[d] + dot * uq[d];
                    }
                }
                for d in 0..3 {
                    slot[d] = -(i * acc[d]);
                }
            });
    }

    fn apply_fft(&self, u: &[Complex<F>], out: &mut [Complex<F>]) {
        let n = self.n;
        let cells = n * n * n;
        let zero = Complex::new(F::zero(), F::zero());
        let i = Complex::new(F::zero(), F::one());
        // Real fields travel in pairs: (u_x + i u_y) and u_z.
        let mut xy = vec![zero; cells];
        let mut z = vec![zero; cells];
        for (a, &g) in self.grid_index.iter().enumerate() {
            xy[g] = u[3 * a] + i * u[3 * a + 1];
            z[g] = u[3 * a + 2];
        }
        self.inverse_pruned(&mut xy);
        self.inverse_pruned(&mut z);
        let scale = F::one() / F::from_usize_lossy(cells);
        // Products u_a u_b packed as (00 + i 01), (02 + i 11), (12 + i 22).
        let mut packed: [Vec<Complex<F>>; 3] = std::array::from_fn(|_| vec![zero; cells]);
        for c in 0..cells {
            let (ux, uy, uz) = (xy[c].re, xy[c].im, z[c].re);
            packed[0][c] = Complex::new(ux * ux, ux * uy) * scale;
            packed[1][c] = Complex::new(ux * uz, uy * uy) * scale;
            packed[2][c] = Complex::new(uy * uz, uz * uz) * scale;
        }
        for p in &mut packed {
            self.forward_pruned(p);
        }
        let half = F::lit(0.5);
        let split = |buf: &[Complex<F>], g: usize, h: usize| {
            let (zk, zc) = (buf[g], buf[h].conj());
            ((zk + zc) * half, (zk - zc) * (-i * half))
        };
        for (a, (&g, k)) in self.grid_index.iter().zip(self.modes.modes()).enumerate() {
            let h = self.grid_index[self.modes.conj_of(a)];
            let (p00, p01) = split(&packed[0], g, h);
            let (p02, p11) = split(&packed[1], g, h);
            let (p12, p22) = split(&packed[2], g, h);
            let m = [[p00, p01, p02], [p01, p11, p12], [p02, p12, p22]];
            let kf = k.map(|x| F::from(x).expect("small int"));
            for d in 0..3 {
                let acc = m[d][0] * kf[0] + m[d][1] * kf[1] + m[d][2] * kf[2];
                out[3 * a + d] = -(i * acc);
            }
        }
    }

    /// Grid indices that can carry a retained mode along one axis.
    fn active(&self) -> impl Iterator<Item = usize> + Clone {
        let k = self.modes.kmax() as usize;
        let n = self.n;
        (0..=k).chain(n - k..n)
    }

    fn along(
        &self,
        data: &mut [Complex<F>],
        plan: &Arc<dyn Fft<F>>,
        axis: usize,
        lines: &[(usize, usize)],
    ) {
        let n = self.n;
        let mut line = vec![Complex::new(F::zero(), F::zero()); n];
        let at = |a: usize, b: usize, c: usize| match axis {
            0 => (c * n + a) * n + b,
            1 => (a * n + c) * n + b,
            _ => (a * n + b) * n + c,
        };
        for &(a, b) in lines {
            if axis == 2 {
                let start = at(a, b, 0);
                plan.process(&mut data[start..start + n]);
                continue;
            }
            for c in 0..n {
                line[c] = data[at(a, b, c)];
            }
            plan.process(&mut line);
            for c in 0..n {
                data[at(a, b, c)] = line[c];
            }
        }
    }

    /// Inverse transform of a spectrum supported on the retained cube.
    fn inverse_pruned(&self, data: &mut [Complex<F>]) {
        let n = self.n;
        let act: Vec<usize> = self.active().collect();
        let all: Vec<usize> = (0..n).collect();
        let pairs = |xs: &[usize], ys: &[usize]| -> Vec<(usize, usize)> {
            xs.iter()
                .flat_map(|&a| ys.iter().map(move |&b| (a, b)))
                .collect()
        };
        // z-lines (x, y), then y-lines (x, z), then x-lines (y, z).
        self.along(data, &self.inverse, 2, &pairs(&act, &act));
        self.along(data, &self.inverse, 1, &pairs(&act, &all));
        self.along(data, &self.inverse, 0, &pairs(&all, &all));
    }

    /// Forward transform, exact on the retained cube only.
    fn forward_pruned(&self, data: &mut [Complex<F>]) {
        let n = self.n;
        let act: Vec<usize> = self.active().collect();
        let all: Vec<usize> = (0..n).collect();
        let pairs = |xs: &[usize], ys: &[usize]| -> Vec<(usize, usize)> {
            xs.iter()
                .flat_map(|&a| ys.iter().map(move |&b| (a, b)))
                .collect()
        };
        self.along(data, &self.forward, 2, &pairs(&all, &all));
        self.along(data, &self.forward, 1, &pairs(&all, &act));
        self.along(data, &self.forward, 0, &pairs(&act, &act));
    }
}
