//! Linear maps between metric fibers.
//!
//! Everything here is measured against the Riemannian inner products on the
//! two sides: singular values are those of `G_dst^{1/2} · M · G_src^{-1/2}`,
//! where `M` is the matrix of the map in the chosen coordinate bases.

mod svd;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::multi_index::Basis;
use crate::exterior::{binomial, KCovector, Metric};
use crate::linalg::minor;

pub use svd::jacobi_singular_values;

/// Orientation of a coordinate basis relative to the oriented fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FiberLinearMap {
    pub matrix: DMatrix<f64>,
    pub src_metric: Metric,
    pub dst_metric: Metric,
    pub src_orientation: Orientation,
    pub dst_orientation: Orientation,
}

impl FiberLinearMap {
    pub fn new(matrix: DMatrix<f64>, src_metric: Metric, dst_metric: Metric) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.ncols(),
            });
        }
        for g in [&src_metric, &dst_metric] {
            if g.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.dim(),
                });
            }
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear map"));
        }
        Ok(Self {
            matrix,
            src_metric,
            dst_metric,
            src_orientation: Orientation::Positive,
            dst_orientation: Orientation::Positive,
        })
    }

    /// Map between Euclidean fibers with the standard orientation.
    pub fn euclidean(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, Metric::identity(n), Metric::identity(n))
    }

    pub fn with_orientations(mut self, src: Orientation, dst: Orientation) -> Self {
        self.src_orientation = src;
        self.dst_orientation = dst;
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Matrix of the map in orthonormal bases of the two fibers.
    pub fn whitened(&self) -> DMatrix<f64> {
        let left = if self.dst_metric.is_identity() {
            None
        } else {
            Some(self.dst_metric.sqrt_pair().0)
        };
        let right = if self.src_metric.is_identity() {
            None
        } else {
            Some(self.src_metric.sqrt_pair().1)
        };
        match (left, right) {
            (None, None) => self.matrix.clone(),
            (Some(l), None) => l * &self.matrix,
            (None, Some(r)) => &self.matrix * r,
            (Some(l), Some(r)) => l * &self.matrix * r,
        }
    }

    /// Composition `self ∘ inner`.
    pub fn compose(&self, inner: &FiberLinearMap) -> Result<FiberLinearMap> {
        if inner.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: inner.dim(),
            });
        }
        Ok(FiberLinearMap {
            matrix: &self.matrix * &inner.matrix,
            src_metric: inner.src_metric.clone(),
            dst_metric: self.dst_metric.clone(),
            src_orientation: inner.src_orientation,
            dst_orientation: self.dst_orientation,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdSummary {
    /// σ_1 ≥ ... ≥ σ_n ≥ 0.
    pub singvals: Vec<f64>,
    /// Operator norm |L| = σ_1.
    pub opnorm: f64,
    /// l(L) = min over unit vectors of |Lv| = σ_n.
    pub lmin: f64,
    pub absdet: f64,
    /// Determinant in positively oriented orthonormal bases.
    pub signed_jac: f64,
}

impl SvdSummary {
    pub fn dim(&self) -> usize {
        self.singvals.len()
    }
}

pub fn svd_analysis(l: &FiberLinearMap) -> SvdSummary {
    let w = l.whitened();
    summarize(&w, l.src_orientation.sign() * l.dst_orientation.sign())
}

/// SVD summary of a matrix already expressed in orthonormal bases.
pub(crate) fn summarize(w: &DMatrix<f64>, orientation: f64) -> SvdSummary {
    let singvals = jacobi_singular_values(w);
    let absdet: f64 = singvals.iter().product();
    let det_sign = if absdet == 0.0 {
        0.0
    } else {
        w.determinant().signum()
    };
    SvdSummary {
        opnorm: singvals[0],
        lmin: *singvals.last().expect("nonempty"),
        absdet,
        signed_jac: det_sign * orientation * absdet,
        singvals,
    }
}

/// Gaps in `l(L)^n ≤ |det L| ≤ |L|^n`; both are ≤ 0 when the chain holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianInequalities {
    pub lower_gap: f64,
    pub upper_gap: f64,
    /// |L|^n, the natural scale for relative tolerances.
    pub scale: f64,
}

impl JacobianInequalities {
    pub fn holds(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * self.scale.max(f64::MIN_POSITIVE);
        self.lower_gap <= slack && self.upper_gap <= slack
    }

    pub fn max_violation(&self) -> f64 {
        self.lower_gap.max(self.upper_gap).max(0.0) / self.scale.max(f64::MIN_POSITIVE)
    }
}

pub fn jacobian_inequalities(s: &SvdSummary) -> JacobianInequalities {
    let n = s.dim() as i32;
    let upper = s.opnorm.powi(n);
    JacobianInequalities {
        lower_gap: s.lmin.powi(n) - s.absdet,
        upper_gap: s.absdet - upper,
        scale: upper,
    }
}

/// Outer and inner dilatation of a linear map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dilatation {
    /// `|L|^n / J`, or `+∞` when `J ≤ 0`.
    pub outer: f64,
    /// `J / l(L)^n`; `+∞` for `l = 0 < J`; `None` when `J ≤ 0` and `l = 0`.
    pub inner: Option<f64>,
}

pub fn dilatation(s: &SvdSummary) -> Dilatation {
    let n = s.dim() as i32;
    let outer = if s.signed_jac > 0.0 {
        s.opnorm.powi(n) / s.signed_jac
    } else {
        f64::INFINITY
    };
    let inner = if s.lmin > 0.0 {
        Some(s.signed_jac / s.lmin.powi(n))
    } else if s.signed_jac > 0.0 {
        Some(f64::INFINITY)
    } else {
        None
    };
    Dilatation { outer, inner }
}

/// Pull-back `(L^*α)(v_1 ∧ ... ∧ v_k) = α(Lv_1 ∧ ... ∧ Lv_k)`.
pub fn pullback_linear(alpha: &KCovector, l: &FiberLinearMap) -> Result<KCovector> {
    if alpha.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: alpha.dim(),
        });
    }
    Ok(KCovector::from_parts(
        alpha.dim(),
        alpha.grade(),
        pullback_coeffs(&l.matrix, alpha.grade(), alpha.coeffs()),
    ))
}

/// `(M^*α)_I = Σ_J α_J det M[J, I]`.
pub(crate) fn pullback_coeffs(m: &DMatrix<f64>, k: usize, alpha: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    match k {
        0 => return alpha.to_vec(),
        1 => {
            let a = DVector::from_column_slice(alpha);
            return (m.transpose() * a).iter().copied().collect();
        }
        _ if k == n => return vec![alpha[0] * m.determinant()],
        _ => {}
    }
    let basis = Basis::new(n, k);
    debug_assert_eq!(alpha.len(), binomial(n, k));
    basis
        .masks
        .iter()
        .map(|&i| {
            basis
                .masks
                .iter()
                .zip(alpha)
                .filter(|(_, &a)| a != 0.0)
                .map(|(&j, &a)| a * minor(m, j, i))
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::KVector;

    fn diag(d: &[f64]) -> FiberLinearMap {
        FiberLinearMap::euclidean(DMatrix::from_diagonal(&DVector::from_column_slice(d))).unwrap()
    }

    fn rotation(t: f64) -> FiberLinearMap {
        FiberLinearMap::euclidean(DMatrix::from_row_slice(
            2,
            2,
            &[t.cos(), -t.sin(), t.sin(), t.cos()],
        ))
        .unwrap()
    }

    #[test]
    fn diagonal_summary() {
        let s = svd_analysis(&diag(&[3.0, 1.0]));
        assert_eq!(s.singvals, vec![3.0, 1.0]);
        assert_eq!((s.opnorm, s.lmin, s.signed_jac), (3.0, 1.0, 3.0));
    }

    #[test]
    fn rotation_is_isometry() {
        let s = svd_analysis(&rotation(0.7));
        assert!((s.singvals[0] - 1.0).abs() < 1e-15 && (s.singvals[1] - 1.0).abs() < 1e-15);
        assert!((s.signed_jac - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orientation_flips_jacobian_sign() {
        let l = diag(&[2.0, 1.0]).with_orientations(Orientation::Negative, Orientation::Positive);
        assert_eq!(svd_analysis(&l).signed_jac, -2.0);
        let r = diag(&[-2.0, 1.0]);
        assert_eq!(svd_analysis(&r).signed_jac, -2.0);
    }

    #[test]
    fn metric_adjusted_singular_values() {
        // identity matrix from (R^2, diag(4,1)) to Euclidean: σ(G^{-1/2}) = (1, 1/2)
        let l = FiberLinearMap::new(
            DMatrix::identity(2, 2),
            Metric::diagonal(&[4.0, 1.0]).unwrap(),
            Metric::identity(2),
        )
        .unwrap();
        let s = svd_analysis(&l);
        assert!((s.singvals[0] - 1.0).abs() < 1e-15 && (s.singvals[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jacobian_chain_examples() {
        let j = jacobian_inequalities(&svd_analysis(&diag(&[2.0, 1.0, 1.0])));
        assert_eq!((j.lower_gap, j.upper_gap), (1.0 - 2.0, 2.0 - 8.0));
        assert!(j.holds(0.0));
        let iso = jacobian_inequalities(&svd_analysis(&rotation(1.3)));
        assert!(iso.lower_gap.abs() < 1e-14 && iso.upper_gap.abs() < 1e-14);
    }

    #[test]
    fn dilatation_examples() {
        let d = dilatation(&svd_analysis(&diag(&[2.0, 1.0])));
        assert_eq!(d.outer, 2.0);
        assert_eq!(d.inner, Some(2.0));
        let c = dilatation(&svd_analysis(&diag(&[1.7, 1.7, 1.7])));
        assert!((c.outer - 1.0).abs() < 1e-14);
        assert!((c.inner.unwrap() - 1.0).abs() < 1e-14);
        let zero = dilatation(&svd_analysis(&diag(&[0.0, 0.0])));
        assert_eq!(zero.outer, f64::INFINITY);
        assert_eq!(zero.inner, None);
        let flip = dilatation(&svd_analysis(&diag(&[-1.0, 1.0])));
        assert_eq!(flip.outer, f64::INFINITY);
        assert_eq!(flip.inner, Some(-1.0));
    }

    #[test]
    fn pullback_examples() {
        let a = KCovector::new(2, 2, vec![1.0]).unwrap();
        let p = pullback_linear(&a, &diag(&[3.0, 5.0])).unwrap();
        assert_eq!(p.coeffs(), &[15.0]);
        let b = KCovector::new(3, 2, vec![1.0, -2.0, 0.5]).unwrap();
        let id = FiberLinearMap::euclidean(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(pullback_linear(&b, &id).unwrap(), b);
    }

    #[test]
    fn rotated_covector_by_direct_evaluation() {
        let t: f64 = 0.4;
        let l = rotation(t);
        let e1 = KCovector::basis(2, &[0]).unwrap();
        let p = pullback_linear(&e1, &l).unwrap();
        for i in 0..2 {
            let ei = KVector::basis(2, &[i]).unwrap();
            let lv: Vec<f64> = l.matrix.column(i).iter().copied().collect();
            let direct = e1.eval(&KVector::from_coords(&lv).unwrap()).unwrap();
            assert!((p.eval(&ei).unwrap() - direct).abs() < 1e-12);
        }
    }
}
