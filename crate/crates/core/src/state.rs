//! Phase-space points stored as sparse coefficient vectors.

use std::cmp::Ordering;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Integer multi-index. Axes beyond the owning space's dimension are zero.
pub type MultiIndex = [i32; 3];

/// Euclidean length of a multi-index.
pub fn index_len(k: &MultiIndex) -> f64 {
    let s: i64 = k.iter().map(|&c| (c as i64) * (c as i64)).sum();
    (s as f64).sqrt()
}

/// Max-norm of a multi-index.
pub fn index_max_norm(k: &MultiIndex) -> i32 {
    k.iter().map(|c| c.abs()).max().unwrap_or(0)
}

/// A point of a coefficient space: distinct multi-indices with one amplitude
/// vector of `width` complex components each. Missing indices are zero.
///
/// Indices are kept sorted lexicographically, which makes union walks over
/// two states linear.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffState<F> {
    space: Arc<str>,
    dim: u8,
    width: u8,
    idx: Vec<MultiIndex>,
    val: Vec<Complex<F>>,
}

impl<F: Scalar> CoeffState<F> {
    /// Builds a state from unsorted parts, validating every invariant.
    ///
    /// `val` holds `width` consecutive components per index.
    pub fn from_parts(
        space: impl Into<Arc<str>>,
        dim: usize,
        width: usize,
        idx: Vec<MultiIndex>,
        val: Vec<Complex<F>>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidState(format!(
                "index dimension {dim} not in 1..=3"
            )));
        }
        if width == 0 || width > 255 {
            return Err(Error::InvalidState(format!(
                "component width {width} invalid"
            )));
        }
        if idx.len() * width != val.len() {
            return Err(Error::InvalidState(format!(
                "{} indices but {} values (width {width})",
                idx.len(),
                val.len()
            )));
        }
        if let Some(k) = idx.iter().find(|k| k[dim..].iter().any(|&c| c != 0)) {
            return Err(Error::InvalidState(format!(
                "index {k:?} uses axes beyond dimension {dim}"
            )));
        }
        if val.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }

        let mut order: Vec<usize> = (0..idx.len()).collect();
        order.sort_by(|&a, &b| idx[a].cmp(&idx[b]));
        if order.windows(2).any(|w| idx[w[0]] == idx[w[1]]) {
            return Err(Error::InvalidState("duplicate multi-index".into()));
        }
        let sorted_idx = order.iter().map(|&i| idx[i]).collect();
        let mut sorted_val = Vec::with_capacity(val.len());
        for &i in &order {
            sorted_val.extend_from_slice(&val[i * width..(i + 1) * width]);
        }
        Ok(Self {
            space: space.into(),
            dim: dim as u8,
            width: width as u8,
            idx: sorted_idx,
            val: sorted_val,
        })
    }

    /// Scalar real state over a one-dimensional index set.
    pub fn from_real(
        space: impl Into<Arc<str>>,
        entries: impl IntoIterator<Item = (i32, F)>,
    ) -> Result<Self> {
        let (idx, val): (Vec<_>, Vec<_>) = entries
            .into_iter()
            .map(|(k, v)| ([k, 0, 0], Complex::new(v, F::zero())))
            .unzip();
        Self::from_parts(space, 1, 1, idx, val)
    }

    /// Standard basis vector `e_k` of a one-dimensional scalar space.
    pub fn basis(space: impl Into<Arc<str>>, k: i32) -> Self {
        Self::from_real(space, [(k, F::one())]).expect("basis vector is valid")
    }

    pub fn zero(space: impl Into<Arc<str>>, dim: usize, width: usize) -> Self {
        Self::from_parts(space, dim, width, Vec::new(), Vec::new()).expect("zero state is valid")
    }

    /// Same index set, new amplitudes. Used by solvers that keep the support fixed.
    pub(crate) fn with_values(&self, val: Vec<Complex<F>>) -> Result<Self> {
        if val.len() != self.val.len() {
            return Err(Error::InvalidState("value count changed".into()));
        }
        if val.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        Ok(Self {
            val,
            ..self.clone()
        })
    }

    pub fn space(&self) -> &str {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<str> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    /// Number of stored indices.
    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.idx
    }

    pub fn values(&self) -> &[Complex<F>] {
        &self.val
    }

    /// Amplitude vector stored at position `i`.
    pub fn amplitude_at(&self, i: usize) -> &[Complex<F>] {
        let w = self.width();
        &self.val[i * w..(i + 1) * w]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &[Complex<F>])> + '_ {
        self.idx.iter().zip(self.val.chunks(self.width()))
    }

    /// Amplitude at `k`, if stored.
    pub fn get(&self, k: &MultiIndex) -> Option<&[Complex<F>]> {
        self.idx.binary_search(k).ok().map(|i| self.amplitude_at(i))
    }

    /// First component of the amplitude at a one-dimensional index, zero if absent.
    pub fn coeff(&self, k: i32) -> Complex<F> {
        self.get(&[k, 0, 0])
            .map(|a| a[0])
            .unwrap_or_else(|| Complex::new(F::zero(), F::zero()))
    }

    /// Applies `f` to every stored amplitude component.
    pub fn map_values(
        &self,
        mut f: impl FnMut(&MultiIndex, Complex<F>) -> Complex<F>,
    ) -> Result<Self> {
        let w = self.width();
        let val = self
            .val
            .iter()
            .enumerate()
            .map(|(n, &z)| f(&self.idx[n / w], z))
            .collect();
        self.with_values(val)
    }

    pub fn scaled(&self, c: F) -> Self {
        Self {
            val: self.val.iter().map(|z| z * c).collect(),
            ..self.clone()
        }
    }

    /// Unweighted Euclidean norm of the stored amplitudes.
    pub fn coeff_norm(&self) -> F {
        self.val.iter().map(|z| z.norm_sqr()).sum::<F>().sqrt()
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.to_string(),
                right: other.space.to_string(),
            });
        }
        if self.dim != other.dim || self.width != other.width {
            return Err(Error::InvalidState(format!(
                "shape mismatch in space `{}`: dim {}/{} width {}/{}",
                self.space, self.dim, other.dim, self.width, other.width
            )));
        }
        Ok(())
    }

    /// Calls `f(k, a_k, b_k)` for every index stored in either state, in index
    /// order. Missing amplitudes are passed as `None`.
    pub fn for_each_union<'a>(
        &'a self,
        other: &'a Self,
        mut f: impl FnMut(&'a MultiIndex, Option<&'a [Complex<F>]>, Option<&'a [Complex<F>]>),
    ) {
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let ord = match (self.idx.get(i), other.idx.get(j)) {
                (Some(a), Some(b)) => a.cmp(b),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    f(&self.idx[i], Some(self.amplitude_at(i)), None);
                    i += 1;
                }
                Ordering::Greater => {
                    f(&other.idx[j], None, Some(other.amplitude_at(j)));
                    j += 1;
                }
                Ordering::Equal => {
                    f(
                        &self.idx[i],
                        Some(self.amplitude_at(i)),
                        Some(other.amplitude_at(j)),
                    );
                    i += 1;
                    j += 1;
                }
            }
        }
    }

    /// Converts to another scalar type.
    pub fn cast<G: Scalar>(&self) -> CoeffState<G> {
        CoeffState {
            space: self.space.clone(),
            dim: self.dim,
            width: self.width,
            idx: self.idx.clone(),
            val: self
                .val
                .iter()
                .map(|z| Complex::new(G::lit(z.re.as_f64()), G::lit(z.im.as_f64())))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parts_are_sorted_and_validated() {
        let s = CoeffState::<f64>::from_real("l2", [(3, 1.0), (-2, 2.0), (0, 0.5)]).unwrap();
        assert_eq!(s.indices(), &[[-2, 0, 0], [0, 0, 0], [3, 0, 0]]);
        assert_eq!(s.coeff(-2).re, 2.0);
        assert_eq!(s.coeff(7).re, 0.0);
    }

    #[test]
    fn rejects_duplicates_nan_and_length_mismatch() {
        assert!(CoeffState::<f64>::from_real("l2", [(1, 1.0), (1, 2.0)]).is_err());
        assert!(CoeffState::<f64>::from_real("l2", [(1, f64::NAN)]).is_err());
        assert!(CoeffState::<f64>::from_real("l2", [(1, f64::INFINITY)]).is_err());
        let bad =
            CoeffState::<f64>::from_parts("x", 1, 2, vec![[0, 0, 0]], vec![Complex::new(1.0, 0.0)]);
        assert!(bad.is_err());
        let stray_axis =
            CoeffState::<f64>::from_parts("x", 1, 1, vec![[0, 1, 0]], vec![Complex::new(1.0, 0.0)]);
        assert!(stray_axis.is_err());
    }

    #[test]
    fn union_walk_visits_each_index_once() {
        let a = CoeffState::<f64>::from_real("l2", [(0, 1.0), (2, 1.0)]).unwrap();
        let b = CoeffState::<f64>::from_real("l2", [(1, 1.0), (2, 3.0)]).unwrap();
        let mut seen = Vec::new();
        a.for_each_union(&b, |k, x, y| seen.push((k[0], x.is_some(), y.is_some())));
        assert_eq!(
            seen,
            vec![(0, true, false), (1, false, true), (2, true, true)]
        );
    }
}
