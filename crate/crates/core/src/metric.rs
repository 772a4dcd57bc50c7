//! Strong and weak metrics over coefficient spaces, set semi-distances and
//! greedy epsilon-nets.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::scalar::Scalar;
use crate::state::{index_len, index_max_norm, CoeffState, MultiIndex};

/// Which of the two metrics of a dual metric space to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Strong,
    Weak,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Strong => "strong",
            MetricKind::Weak => "weak",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strong" | "s" => Ok(MetricKind::Strong),
            "weak" | "w" => Ok(MetricKind::Weak),
            other => usage(format!("unknown metric `{other}` (expected strong|weak)")),
        }
    }
}

/// Per-index quadrature weights of the strong norm.
#[derive(Clone, Debug, PartialEq)]
pub enum Quadrature<F> {
    /// All weights one (sequence spaces, Fourier coefficients).
    Unit,
    /// Trapezoid rule on the uniform grid `k * h`, `|k| <= half_width`.
    Trapezoid { h: F, half_width: i32 },
}

impl<F: Scalar> Quadrature<F> {
    #[inline]
    pub fn weight(&self, k: &MultiIndex) -> F {
        match *self {
            Quadrature::Unit => F::one(),
            Quadrature::Trapezoid { h, half_width } => {
                if k[0].abs() == half_width {
                    h * F::lit(0.5)
                } else {
                    h
                }
            }
        }
    }
}

/// Form of the weak metric.
#[derive(Clone, Debug, PartialEq)]
pub enum WeakMetric<F> {
    /// `sum_k base^{-|k|} d_k / (1 + d_k)` over `max|k_i| <= truncation`, where
    /// `d_k` is the quadrature-scaled coefficient difference.
    Series { weight_base: F, truncation: i32 },
    /// The weak metric coincides with the strong one.
    SameAsStrong,
}

/// Weak distance of a truncated series together with the bound on what the
/// discarded indices could have added.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncated<F> {
    pub value: F,
    pub tail_bound: F,
}

/// A phase space with a strong (norm) metric and a weak metric.
#[derive(Clone, Debug)]
pub struct DualMetricSpace<F> {
    tag: Arc<str>,
    index_dim: usize,
    width: usize,
    weak: WeakMetric<F>,
    quadrature: Quadrature<F>,
    ball_radius: Option<F>,
    tail: F,
}

impl<F: Scalar> DualMetricSpace<F> {
    /// Defaults: weak series with base 2, truncation 32 in 1-D and 8 per axis
    /// otherwise, unit quadrature, no ball.
    pub fn new(tag: impl Into<Arc<str>>, index_dim: usize, width: usize) -> Result<Self> {
        if !(1..=3).contains(&index_dim) {
            return usage(format!("index dimension {index_dim} not in 1..=3"));
        }
        if width == 0 {
            return usage("component width must be positive");
        }
        let truncation = if index_dim == 1 { 32 } else { 8 };
        let mut space = Self {
            tag: tag.into(),
            index_dim,
            width,
            weak: WeakMetric::Series {
                weight_base: F::lit(2.0),
                truncation,
            },
            quadrature: Quadrature::Unit,
            ball_radius: None,
            tail: F::zero(),
        };
        space.tail = space.compute_tail();
        Ok(space)
    }

    /// Unit ball of `l2(Z)` with the base-2 weak series.
    pub fn ell2_unit_ball(tag: impl Into<Arc<str>>) -> Self {
        Self::new(tag, 1, 1)
            .and_then(|s| s.with_ball_radius(F::one()))
            .expect("valid l2 space")
    }

    pub fn with_weak(mut self, weak: WeakMetric<F>) -> Result<Self> {
        if let WeakMetric::Series {
            weight_base,
            truncation,
        } = weak
        {
            if !(weight_base > F::one()) {
                return usage("weak weight base must exceed 1");
            }
            if truncation <= 0 {
                return usage("weak truncation radius must be positive");
            }
        }
        self.weak = weak;
        self.tail = self.compute_tail();
        Ok(self)
    }

    pub fn with_weight_base(self, weight_base: F) -> Result<Self> {
        let truncation = self.truncation().unwrap_or(32);
        self.with_weak(WeakMetric::Series {
            weight_base,
            truncation,
        })
    }

    pub fn with_truncation(self, truncation: i32) -> Result<Self> {
        let weight_base = self.weight_base().unwrap_or_else(|| F::lit(2.0));
        self.with_weak(WeakMetric::Series {
            weight_base,
            truncation,
        })
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature<F>) -> Result<Self> {
        if let Quadrature::Trapezoid { h, half_width } = quadrature {
            if !(h > F::zero()) || half_width <= 0 {
                return usage("trapezoid grid needs h > 0 and a positive half width");
            }
        }
        self.quadrature = quadrature;
        Ok(self)
    }

    pub fn with_ball_radius(mut self, radius: F) -> Result<Self> {
        if !(radius > F::zero()) {
            return usage("ball radius must be positive");
        }
        self.ball_radius = Some(radius);
        Ok(self)
    }

    pub fn without_ball(mut self) -> Self {
        self.ball_radius = None;
        self
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn tag_arc(&self) -> &Arc<str> {
        &self.tag
    }

    pub fn index_dim(&self) -> usize {
        self.index_dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn weak_metric(&self) -> &WeakMetric<F> {
        &self.weak
    }

    pub fn quadrature(&self) -> &Quadrature<F> {
        &self.quadrature
    }

    pub fn ball_radius(&self) -> Option<F> {
        self.ball_radius
    }

    pub fn weight_base(&self) -> Option<F> {
        match self.weak {
            WeakMetric::Series { weight_base, .. } => Some(weight_base),
            WeakMetric::SameAsStrong => None,
        }
    }

    pub fn truncation(&self) -> Option<i32> {
        match self.weak {
            WeakMetric::Series { truncation, .. } => Some(truncation),
            WeakMetric::SameAsStrong => None,
        }
    }

    /// `sum_{max|k_i| > K} base^{-|k|}`, an upper bound on the discarded part
    /// of the weak series (each term's fraction is below one).
    pub fn tail_bound(&self) -> F {
        self.tail
    }

    fn compute_tail(&self) -> F {
        let WeakMetric::Series {
            weight_base,
            truncation,
        } = self.weak
        else {
            return F::zero();
        };
        let base = weight_base.as_f64();
        let d = self.index_dim as i32;
        // Shell `max|k_i| = m` has (2m+1)^d - (2m-1)^d points, each with |k| >= m.
        let mut total = 0.0f64;
        let mut m = truncation as f64 + 1.0;
        loop {
            let shell = (2.0 * m + 1.0).powi(d) - (2.0 * m - 1.0).powi(d);
            let term = shell * base.powf(-m);
            total += term;
            if term < 1e-20 * total.max(1e-300) || term < 1e-300 {
                break;
            }
            m += 1.0;
        }
        F::lit(total)
    }

    /// Zero state of this space.
    pub fn zero(&self) -> CoeffState<F> {
        CoeffState::zero(self.tag.clone(), self.index_dim, self.width)
    }

    /// Checks the state belongs to this space (tag, dimension and width).
    pub fn check_member(&self, x: &CoeffState<F>) -> Result<()> {
        if x.space() != &*self.tag {
            return Err(Error::SpaceMismatch {
                left: self.tag.to_string(),
                right: x.space().to_string(),
            });
        }
        if x.dim() != self.index_dim || x.width() != self.width {
            return Err(Error::InvalidState(format!(
                "state shape (dim {}, width {}) does not match space `{}`",
                x.dim(),
                x.width(),
                self.tag
            )));
        }
        Ok(())
    }

    /// Membership plus ball confinement, when the space is a ball.
    pub fn check_in_ball(&self, x: &CoeffState<F>) -> Result<()> {
        self.check_member(x)?;
        if let Some(r) = self.ball_radius {
            let norm = self.strong_norm_unchecked(x);
            if norm > r + self.ball_slack(r) {
                return Err(Error::OutsideBall {
                    seed: "<metric argument>".into(),
                    norm: norm.as_f64(),
                    radius: r.as_f64(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn ball_slack(&self, r: F) -> F {
        F::lit(1e-9) + F::lit(64.0) * F::epsilon() * r
    }

    #[inline]
    fn diff_norm_sqr(a: Option<&[Complex<F>]>, b: Option<&[Complex<F>]>) -> F {
        match (a, b) {
            (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum(),
            (Some(a), None) | (None, Some(a)) => a.iter().map(|x| x.norm_sqr()).sum(),
            (None, None) => F::zero(),
        }
    }

    fn strong_norm_unchecked(&self, x: &CoeffState<F>) -> F {
        x.iter()
            .map(|(k, a)| self.quadrature.weight(k) * a.iter().map(|z| z.norm_sqr()).sum::<F>())
            .sum::<F>()
            .sqrt()
    }

    pub(crate) fn strong_dist_unchecked(&self, a: &CoeffState<F>, b: &CoeffState<F>) -> F {
        let mut acc = F::zero();
        a.for_each_union(b, |k, x, y| {
            acc += self.quadrature.weight(k) * Self::diff_norm_sqr(x, y)
        });
        acc.sqrt()
    }

    pub(crate) fn weak_dist_unchecked(&self, a: &CoeffState<F>, b: &CoeffState<F>) -> F {
        match self.weak {
            WeakMetric::SameAsStrong => self.strong_dist_unchecked(a, b),
            WeakMetric::Series {
                weight_base,
                truncation,
            } => {
                let mut acc = F::zero();
                a.for_each_union(b, |k, x, y| {
                    if index_max_norm(k) > truncation {
                        return;
                    }
                    let d = (self.quadrature.weight(k) * Self::diff_norm_sqr(x, y)).sqrt();
                    if d > F::zero() {
                        let w = weight_base.powf(-F::lit(index_len(k)));
                        acc += w * d / (F::one() + d);
                    }
                });
                acc
            }
        }
    }

    pub(crate) fn dist_unchecked(
        &self,
        kind: MetricKind,
        a: &CoeffState<F>,
        b: &CoeffState<F>,
    ) -> F {
        match kind {
            MetricKind::Strong => self.strong_dist_unchecked(a, b),
            MetricKind::Weak => self.weak_dist_unchecked(a, b),
        }
    }

    /// Strong norm `sqrt(sum_k w_k |x_k|^2)`.
    pub fn strong_norm(&self, x: &CoeffState<F>) -> Result<F> {
        self.check_member(x)?;
        Ok(self.strong_norm_unchecked(x))
    }

    /// `sqrt(sum_k w_k |a_k - b_k|^2)` over the union of stored indices.
    pub fn strong_dist(&self, a: &CoeffState<F>, b: &CoeffState<F>) -> Result<F> {
        self.check_in_ball(a)?;
        self.check_in_ball(b)?;
        Ok(self.strong_dist_unchecked(a, b))
    }

    /// Truncated weak series; see [`Self::weak_dist_bounded`] for the tail.
    pub fn weak_dist(&self, a: &CoeffState<F>, b: &CoeffState<F>) -> Result<F> {
        self.check_in_ball(a)?;
        self.check_in_ball(b)?;
        Ok(self.weak_dist_unchecked(a, b))
    }

    pub fn weak_dist_bounded(&self, a: &CoeffState<F>, b: &CoeffState<F>) -> Result<Truncated<F>> {
        Ok(Truncated {
            value: self.weak_dist(a, b)?,
            tail_bound: self.tail,
        })
    }

    pub fn dist(&self, kind: MetricKind, a: &CoeffState<F>, b: &CoeffState<F>) -> Result<F> {
        match kind {
            MetricKind::Strong => self.strong_dist(a, b),
            MetricKind::Weak => self.weak_dist(a, b),
        }
    }

    fn check_all(&self, xs: &[CoeffState<F>]) -> Result<()> {
        xs.iter().try_for_each(|x| self.check_in_ball(x))
    }

    /// Distance from `x` to the nearest member of `set` (infinite for an empty set).
    pub fn dist_to_set(
        &self,
        kind: MetricKind,
        x: &CoeffState<F>,
        set: &[CoeffState<F>],
    ) -> Result<F> {
        self.check_in_ball(x)?;
        self.check_all(set)?;
        Ok(self.dist_to_set_unchecked(kind, x, set))
    }

    pub(crate) fn dist_to_set_unchecked(
        &self,
        kind: MetricKind,
        x: &CoeffState<F>,
        set: &[CoeffState<F>],
    ) -> F {
        set.iter()
            .map(|b| self.dist_unchecked(kind, x, b))
            .fold(F::infinity(), F::min)
    }

    /// Hausdorff semi-distance `sup_{a in A} inf_{b in B} d(a, b)`.
    pub fn set_semidist(
        &self,
        a: &[CoeffState<F>],
        b: &[CoeffState<F>],
        kind: MetricKind,
    ) -> Result<F> {
        if a.is_empty() || b.is_empty() {
            return usage("set semi-distance needs two nonempty sets");
        }
        self.check_all(a)?;
        self.check_all(b)?;
        Ok(self.set_semidist_unchecked(a, b, kind))
    }

    pub(crate) fn set_semidist_unchecked(
        &self,
        a: &[CoeffState<F>],
        b: &[CoeffState<F>],
        kind: MetricKind,
    ) -> F {
        // max is order independent, so the parallel reduction is deterministic
        a.par_iter()
            .map(|x| self.dist_to_set_unchecked(kind, x, b))
            .reduce(F::zero, F::max)
    }

    /// Symmetric Hausdorff distance.
    pub fn hausdorff(
        &self,
        a: &[CoeffState<F>],
        b: &[CoeffState<F>],
        kind: MetricKind,
    ) -> Result<F> {
        Ok(self
            .set_semidist(a, b, kind)?
            .max(self.set_semidist(b, a, kind)?))
    }

    /// Greedy first-come epsilon-net. Returns positions into `points`.
    ///
    /// Points are scanned in input order; a point joins the net when it is
    /// farther than `eps` from every member chosen so far.
    pub fn epsilon_net_indices(
        &self,
        points: &[CoeffState<F>],
        eps: F,
        kind: MetricKind,
    ) -> Result<Vec<usize>> {
        if !(eps > F::zero()) {
            return usage("epsilon-net radius must be positive");
        }
        self.check_all(points)?;
        Ok(self.epsilon_net_unchecked(points, eps, kind))
    }

    pub(crate) fn epsilon_net_unchecked(
        &self,
        points: &[CoeffState<F>],
        eps: F,
        kind: MetricKind,
    ) -> Vec<usize> {
        let mut net: Vec<usize> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let covered = net
                .iter()
                .any(|&j| self.dist_unchecked(kind, p, &points[j]) <= eps);
            if !covered {
                net.push(i);
            }
        }
        net
    }

    pub fn epsilon_net(
        &self,
        points: &[CoeffState<F>],
        eps: F,
        kind: MetricKind,
    ) -> Result<Vec<CoeffState<F>>> {
        Ok(self
            .epsilon_net_indices(points, eps, kind)?
            .into_iter()
            .map(|i| points[i].clone())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l2() -> DualMetricSpace<f64> {
        DualMetricSpace::ell2_unit_ball("l2")
    }

    fn e(k: i32) -> CoeffState<f64> {
        CoeffState::basis("l2", k)
    }

    #[test]
    fn strong_examples() {
        let s = l2();
        let zero = s.zero();
        assert_eq!(s.strong_dist(&e(0), &e(0)).unwrap(), 0.0);
        assert!((s.strong_dist(&e(0), &e(1)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.strong_dist(&e(0), &zero).unwrap(), 1.0);
    }

    #[test]
    fn weak_examples() {
        let s = l2();
        let zero = s.zero();
        assert!((s.weak_dist(&e(0), &zero).unwrap() - 0.5).abs() < 1e-15);
        assert!((s.weak_dist(&e(3), &zero).unwrap() - 0.0625).abs() < 1e-15);
        assert_eq!(s.weak_dist(&e(4), &e(4)).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_space_is_usage_error() {
        let s = l2();
        let other = CoeffState::<f64>::basis("other", 0);
        assert!(matches!(
            s.strong_dist(&e(0), &other),
            Err(Error::SpaceMismatch { .. })
        ));
        assert!(matches!(
            s.weak_dist(&other, &e(0)),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn semidist_examples() {
        let s = l2();
        let zero = vec![s.zero()];
        assert_eq!(
            s.set_semidist(&[e(0)], &[e(0), e(1)], MetricKind::Strong)
                .unwrap(),
            0.0
        );
        assert!(
            (s.set_semidist(&[e(0), e(1)], &[e(0)], MetricKind::Strong)
                .unwrap()
                - 2f64.sqrt())
            .abs()
                < 1e-15
        );
        assert!(
            (s.set_semidist(&[e(5)], &zero, MetricKind::Weak).unwrap() - 0.015625).abs() < 1e-15
        );
        assert!(s.set_semidist(&[], &zero, MetricKind::Weak).is_err());
        assert!(s.set_semidist(&zero, &[], MetricKind::Weak).is_err());
    }

    #[test]
    fn net_examples() {
        let s = l2();
        let x = CoeffState::from_real("l2", [(0, 0.3), (2, -0.4)]).unwrap();
        assert_eq!(
            s.epsilon_net(std::slice::from_ref(&x), 0.1, MetricKind::Strong)
                .unwrap(),
            vec![x]
        );

        // weak_dist(0, e9) = 2^-9 / 2 < 0.01, so the second point is covered
        let pts = vec![s.zero(), e(9)];
        assert_eq!(
            s.epsilon_net_indices(&pts, 0.01, MetricKind::Weak).unwrap(),
            vec![0]
        );
        assert_eq!(
            s.epsilon_net_indices(&pts, 0.0009, MetricKind::Weak)
                .unwrap(),
            vec![0, 1]
        );

        let copies = vec![e(0); 100];
        assert_eq!(
            s.epsilon_net(&copies, 1e-6, MetricKind::Strong).unwrap(),
            vec![e(0)]
        );
    }

    #[test]
    fn ball_confinement_enforced() {
        let s = l2();
        let big = CoeffState::from_real("l2", [(0, 1.5)]).unwrap();
        assert!(matches!(
            s.strong_dist(&big, &e(0)),
            Err(Error::OutsideBall { .. })
        ));
        let edge = CoeffState::from_real("l2", [(0, 1.0 + 5e-10)]).unwrap();
        assert!(s.strong_dist(&edge, &e(0)).is_ok());
    }

    #[test]
    fn tail_bound_matches_geometric_sum() {
        // 1-D: 2 * sum_{m > 32} 2^-m = 2^-31
        let s = l2();
        assert!((s.tail_bound() - 2f64.powi(-31)).abs() < 1e-24);
        // 3-D: must dominate the exact lattice sum over shells 9..=20
        let s3 = DualMetricSpace::<f64>::new("nse", 3, 3).unwrap();
        let mut exact = 0.0;
        for a in -20i32..=20 {
            for b in -20i32..=20 {
                for c in -20i32..=20 {
                    let k = [a, b, c];
                    if index_max_norm(&k) > 8 {
                        exact += 2f64.powf(-index_len(&k));
                    }
                }
            }
        }
        assert!(s3.tail_bound().is_finite());
        assert!(s3.tail_bound() >= exact);
    }

    #[test]
    fn same_as_strong_weak_metric() {
        let s = DualMetricSpace::<f64>::new("line", 1, 1)
            .unwrap()
            .with_weak(WeakMetric::SameAsStrong)
            .unwrap();
        let a = CoeffState::from_real("line", [(0, 5.0)]).unwrap();
        let b = CoeffState::from_real("line", [(0, 2.0)]).unwrap();
        assert_eq!(s.weak_dist(&a, &b).unwrap(), 3.0);
        assert_eq!(s.tail_bound(), 0.0);
    }

    #[test]
    fn works_in_f32() {
        let s = DualMetricSpace::<f32>::ell2_unit_ball("l2");
        let z = s.zero();
        let e3 = CoeffState::<f32>::basis("l2", 3);
        assert!((s.weak_dist(&e3, &z).unwrap() - 0.0625).abs() < 1e-7);
    }
}
