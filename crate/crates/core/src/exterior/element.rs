use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::multi_index::{binomial, subsets, wedge_sign, Basis, MAX_DIM};
use crate::error::{Error, Result};

/// Marker for elements of `∧^k V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Vectors;

/// Marker for elements of `∧^k V*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Covectors;

/// A homogeneous element of the exterior algebra of an `n`-dimensional space.
///
/// Coefficients are stored against the basis `e_I = e_{i_1} ∧ ... ∧ e_{i_k}`
/// with `i_1 < ... < i_k`, multi-indices in lexicographic order. The marker
/// type distinguishes k-vectors from k-covectors so that the two cannot be
/// mixed up in metric operations.
///
/// JSON schema: `{"dim": n, "grade": k, "coeffs": [c_0, ..., c_{C(n,k)-1}]}`.
#[derive(Serialize, Deserialize)]
#[serde(try_from = "RawGraded", into = "RawGraded", bound = "")]
pub struct Graded<V> {
    dim: usize,
    grade: usize,
    coeffs: Vec<f64>,
    _kind: PhantomData<V>,
}

pub type KVector = Graded<Vectors>;
pub type KCovector = Graded<Covectors>;

#[derive(Serialize, Deserialize)]
struct RawGraded {
    dim: usize,
    grade: usize,
    coeffs: Vec<f64>,
}

impl<V> Clone for Graded<V> {
    fn clone(&self) -> Self {
        Self::from_parts(self.dim, self.grade, self.coeffs.clone())
    }
}

impl<V> PartialEq for Graded<V> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.grade == other.grade && self.coeffs == other.coeffs
    }
}

impl<V> TryFrom<RawGraded> for Graded<V> {
    type Error = Error;
    fn try_from(raw: RawGraded) -> Result<Self> {
        Graded::new(raw.dim, raw.grade, raw.coeffs)
    }
}

impl<V> From<Graded<V>> for RawGraded {
    fn from(g: Graded<V>) -> Self {
        RawGraded {
            dim: g.dim,
            grade: g.grade,
            coeffs: g.coeffs,
        }
    }
}

impl<V> fmt::Debug for Graded<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graded(n={}, k={}, {:?})", self.dim, self.grade, self.coeffs)
    }
}

impl<V> Graded<V> {
    pub fn new(dim: usize, grade: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrade { grade, dim });
        }
        if grade > dim {
            return Err(Error::InvalidGrade { grade, dim });
        }
        let expected = binomial(dim, grade);
        if coeffs.len() != expected {
            return Err(Error::CoefficientLength {
                dim,
                grade,
                expected,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("exterior coefficients"));
        }
        Ok(Self {
            dim,
            grade,
            coeffs,
            _kind: PhantomData,
        })
    }

    /// Constructor for internal call sites that already satisfy the invariants.
    pub(crate) fn from_parts(dim: usize, grade: usize, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), binomial(dim, grade));
        Self {
            dim,
            grade,
            coeffs,
            _kind: PhantomData,
        }
    }

    pub fn zero(dim: usize, grade: usize) -> Self {
        Self::from_parts(dim, grade, vec![0.0; binomial(dim, grade)])
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        Self::from_parts(dim, 0, vec![value])
    }

    /// Grade-1 element with the given coordinates.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        Self::new(coords.len(), 1, coords.to_vec())
    }

    /// Basis element `e_I` for 0-based increasing `indices`.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self> {
        let grade = indices.len();
        if grade > dim || indices.iter().any(|&i| i >= dim) {
            return Err(Error::InvalidGrade { grade, dim });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrade { grade, dim });
        }
        let mask = indices.iter().fold(0u32, |m, &i| m | (1 << i));
        let mut out = Self::zero(dim, grade);
        let basis = Basis::new(dim, grade);
        out.coeffs[basis.rank(mask)] = 1.0;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient on `e_I` for 0-based increasing `indices`.
    pub fn coeff(&self, indices: &[usize]) -> f64 {
        let mask = indices.iter().fold(0u32, |m, &i| m | (1 << i));
        let basis = Basis::new(self.dim, self.grade);
        self.coeffs[basis.rank(mask)]
    }

    /// Euclidean norm of the coefficient array, which is the Grassmann norm
    /// when the underlying basis is orthonormal.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.grade != other.grade {
            return Err(Error::GradeMismatch {
                expected: self.grade,
                found: other.grade,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let c = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_parts(self.dim, self.grade, c))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_parts(self.dim, self.grade, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Exterior product. Bilinear, associative and graded-anticommutative:
    /// `a ∧ b = (-1)^{|a||b|} b ∧ a`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let grade = self.grade + other.grade;
        if grade > self.dim {
            return Err(Error::GradeOverflow {
                left: self.grade,
                right: other.grade,
                dim: self.dim,
            });
        }
        Ok(Self::from_parts(
            self.dim,
            grade,
            wedge_coeffs(self.dim, self.grade, &self.coeffs, other.grade, &other.coeffs),
        ))
    }

    /// Wedge of a list of grade-1 factors; the empty product is the scalar 1.
    pub fn wedge_all(dim: usize, factors: &[Self]) -> Result<Self> {
        let mut acc = Self::scalar(dim, 1.0);
        for f in factors {
            if f.grade != 1 {
                return Err(Error::GradeMismatch {
                    expected: 1,
                    found: f.grade,
                });
            }
            acc = acc.wedge(f)?;
        }
        Ok(acc)
    }
}

/// Coefficient-level exterior product shared with the grid kernels.
pub(crate) fn wedge_coeffs(n: usize, ka: usize, a: &[f64], kb: usize, b: &[f64]) -> Vec<f64> {
    let ma = subsets(n, ka);
    let mb = subsets(n, kb);
    let out_basis = Basis::new(n, ka + kb);
    let mut out = vec![0.0; out_basis.len()];
    for (i, &x) in ma.iter().enumerate() {
        if a[i] == 0.0 {
            continue;
        }
        for (j, &y) in mb.iter().enumerate() {
            if let Some(s) = wedge_sign(x, y) {
                out[out_basis.rank(x | y)] += s * a[i] * b[j];
            }
        }
    }
    out
}

impl KCovector {
    /// Dual pairing `α(v) = Σ_I α_I v_I` against the coordinate basis.
    pub fn eval(&self, v: &KVector) -> Result<f64> {
        if self.dim != v.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim,
            });
        }
        if self.grade != v.grade {
            return Err(Error::GradeMismatch {
                expected: self.grade,
                found: v.grade,
            });
        }
        Ok(self.coeffs.iter().zip(&v.coeffs).map(|(a, b)| a * b).sum())
    }
}

impl<V> Add for &Graded<V> {
    type Output = Graded<V>;
    fn add(self, rhs: Self) -> Graded<V> {
        self.try_add(rhs).expect("shape mismatch in exterior addition")
    }
}

impl<V> Sub for &Graded<V> {
    type Output = Graded<V>;
    fn sub(self, rhs: Self) -> Graded<V> {
        self.try_add(&rhs.scaled(-1.0))
            .expect("shape mismatch in exterior subtraction")
    }
}

impl<V> Neg for &Graded<V> {
    type Output = Graded<V>;
    fn neg(self) -> Graded<V> {
        self.scaled(-1.0)
    }
}

impl<V> Mul<f64> for &Graded<V> {
    type Output = Graded<V>;
    fn mul(self, rhs: f64) -> Graded<V> {
        self.scaled(rhs)
    }
}
