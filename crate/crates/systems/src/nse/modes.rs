//! Fourier modes `0 < max|k_i| <= K` of the 2 pi-periodic torus.

use num_complex::Complex;

use ges_core::{Error, Result, Scalar};

pub type Vec3<F> = [Complex<F>; 3];

/// The cube of nonzero modes in lexicographic order, with conjugate pairing
/// and a dense lookup table.
#[derive(Clone, Debug)]
pub struct ModeSet {
    kmax: i32,
    modes: Vec<[i32; 3]>,
    conj: Vec<usize>,
    lookup: Vec<usize>,
}

impl ModeSet {
    pub fn cube(kmax: i32) -> Result<Self> {
        if !(1..=16).contains(&kmax) {
            return Err(Error::Usage(format!(
                "Galerkin cutoff {kmax} not in 1..=16"
            )));
        }
        let side = (2 * kmax + 1) as usize;
        let mut lookup = vec![usize::MAX; side * side * side];
        let mut modes = Vec::with_capacity(side * side * side - 1);
        for kx in -kmax..=kmax {
            for ky in -kmax..=kmax {
                for kz in -kmax..=kmax {
                    if (kx, ky, kz) != (0, 0, 0) {
                        modes.push([kx, ky, kz]);
                    }
                }
            }
        }
        let mut set = Self {
            kmax,
            modes,
            conj: Vec::new(),
            lookup: Vec::new(),
        };
        for (i, k) in set.modes.iter().enumerate() {
            lookup[set.slot(k).expect("in cube")] = i;
        }
        set.lookup = lookup;
        set.conj = set
            .modes
            .iter()
            .map(|k| {
                set.position(&[-k[0], -k[1], -k[2]])
                    .expect("cube is symmetric")
            })
            .collect();
        Ok(set)
    }

    fn slot(&self, k: &[i32; 3]) -> Option<usize> {
        let m = self.kmax;
        if k.iter().any(|c| c.abs() > m) {
            return None;
        }
        let side = (2 * m + 1) as usize;
        let c = |v: i32| (v + m) as usize;
        Some((c(k[0]) * side + c(k[1])) * side + c(k[2]))
    }

    pub fn kmax(&self) -> i32 {
        self.kmax
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[[i32; 3]] {
        &self.modes
    }

    pub fn position(&self, k: &[i32; 3]) -> Option<usize> {
        self.slot(k)
            .map(|s| self.lookup[s])
            .filter(|&i| i != usize::MAX)
    }

    /// Position of `-k` for the mode at position `i`.
    pub fn conj_of(&self, i: usize) -> usize {
        self.conj[i]
    }

    pub fn k2(&self, i: usize) -> i32 {
        self.modes[i].iter().map(|c| c * c).sum()
    }
}

/// `v - k (k . v) / |k|^2`.
pub fn leray<F: Scalar>(k: &[i32; 3], v: &mut Vec3<F>) {
    let kf = k.map(|c| F::from(c).expect("small int"));
    let k2 = kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2];
    let dot = v[0] * kf[0] + v[1] * kf[1] + v[2] * kf[2];
    for c in 0..3 {
        v[c] = v[c] - dot * (kf[c] / k2);
    }
}

/// `|k . v| / |k|`.
pub fn divergence<F: Scalar>(k: &[i32; 3], v: &[Complex<F>]) -> F {
    let kf = k.map(|c| F::from(c).expect("small int"));
    let dot = v[0] * kf[0] + v[1] * kf[1] + v[2] * kf[2];
    dot.norm() / (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_counts_and_pairing() {
        let m = ModeSet::cube(4).unwrap();
        assert_eq!(m.len(), 728);
        let mut sorted = m.modes().to_vec();
        sorted.sort();
        assert_eq!(sorted, m.modes());
        for i in 0..m.len() {
            let k = m.modes()[i];
            assert_eq!(m.modes()[m.conj_of(i)], [-k[0], -k[1], -k[2]]);
            assert_eq!(m.position(&k), Some(i));
        }
        assert_eq!(m.position(&[0, 0, 0]), None);
        assert_eq!(m.position(&[5, 0, 0]), None);
    }

    #[test]
    fn leray_removes_the_gradient_part() {
        let k = [1, -2, 3];
        let mut v = [
            Complex::new(1.0, 0.5),
            Complex::new(-0.3, 2.0),
            Complex::new(0.7, -1.0),
        ];
        leray::<f64>(&k, &mut v);
        assert!(divergence(&k, &v) < 1e-15);
        let before = v;
        leray::<f64>(&k, &mut v);
        assert!((0..3).all(|c| (before[c] - v[c]).norm() < 1e-15));
    }
}
