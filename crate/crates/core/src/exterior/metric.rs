use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::element::{Graded, KCovector, KVector};
use crate::error::{Error, Result};
use crate::linalg::{compound, spd_sqrt_pair};

const SYMMETRY_TOL: f64 = 1e-12;

/// Inner product on a tangent fiber, given by its Gram matrix in the
/// coordinate basis. Serialized as a JSON array of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    gram: DMatrix<f64>,
}

impl Metric {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        let n = gram.nrows();
        if n == 0 || gram.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: gram.ncols(),
            });
        }
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("metric"));
        }
        let scale = gram.abs().max().max(f64::MIN_POSITIVE);
        let asym = (&gram - gram.transpose()).abs().max() / scale;
        if asym > SYMMETRY_TOL {
            return Err(Error::AsymmetricMetric(asym));
        }
        let sym = (&gram + gram.transpose()) * 0.5;
        let min_eig = sym.clone().symmetric_eigen().eigenvalues.min();
        if min_eig.is_nan() || min_eig <= 0.0 {
            return Err(Error::IndefiniteMetric(min_eig));
        }
        Ok(Self { gram: sym })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            gram: DMatrix::identity(n, n),
        }
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rows.iter().map(|r| r.len()).find(|&l| l != n).unwrap_or(n),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn inverse_gram(&self) -> DMatrix<f64> {
        self.gram
            .clone()
            .cholesky()
            .expect("metric invariant guarantees positive definiteness")
            .inverse()
    }

    /// `(G^{1/2}, G^{-1/2})`.
    pub fn sqrt_pair(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        spd_sqrt_pair(&self.gram)
    }

    pub fn is_identity(&self) -> bool {
        self.gram == DMatrix::identity(self.dim(), self.dim())
    }

    /// Grassmann inner product of grade-k vectors: `a^T (∧^k G) b`.
    pub fn inner(&self, a: &KVector, b: &KVector) -> Result<f64> {
        check_pair(self, a, b)?;
        Ok(bilinear(&self.gram, a.grade(), a.coeffs(), b.coeffs()))
    }

    /// Induced inner product on k-covectors: `α^T (∧^k G^{-1}) β`.
    pub fn covector_inner(&self, a: &KCovector, b: &KCovector) -> Result<f64> {
        check_pair(self, a, b)?;
        Ok(bilinear(&self.inverse_gram(), a.grade(), a.coeffs(), b.coeffs()))
    }

    pub fn norm(&self, a: &KVector) -> Result<f64> {
        Ok(self.inner(a, a)?.max(0.0).sqrt())
    }

    pub fn covector_norm(&self, a: &KCovector) -> Result<f64> {
        Ok(self.covector_inner(a, a)?.max(0.0).sqrt())
    }
}

fn check_pair<V>(g: &Metric, a: &Graded<V>, b: &Graded<V>) -> Result<()> {
    for x in [a, b] {
        if x.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim(),
                found: x.dim(),
            });
        }
    }
    if a.grade() != b.grade() {
        return Err(Error::GradeMismatch {
            expected: a.grade(),
            found: b.grade(),
        });
    }
    Ok(())
}

fn bilinear(gram: &DMatrix<f64>, k: usize, a: &[f64], b: &[f64]) -> f64 {
    let c = compound(gram, k);
    let bv = DVector::from_column_slice(b);
    let cb = c * bv;
    a.iter().zip(cb.iter()).map(|(x, y)| x * y).sum()
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| self.gram.row(i).iter().copied().collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Metric::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Grassmann inner product `⟨a, b⟩`; on simple inputs this is
/// `det[⟨v_i, w_j⟩]`.
pub fn grassmann_inner(a: &KVector, b: &KVector, g: &Metric) -> Result<f64> {
    g.inner(a, b)
}

/// Metric duality `v ↦ ⟨v, ·⟩`, extended to grade k.
pub fn metric_flat(v: &KVector, g: &Metric) -> Result<KCovector> {
    if v.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: v.dim(),
        });
    }
    let c = compound(g.gram(), v.grade()) * DVector::from_column_slice(v.coeffs());
    Ok(KCovector::from_parts(
        v.dim(),
        v.grade(),
        c.iter().copied().collect(),
    ))
}

/// Inverse of [`metric_flat`].
pub fn metric_sharp(a: &KCovector, g: &Metric) -> Result<KVector> {
    if a.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: a.dim(),
        });
    }
    let c = compound(&g.inverse_gram(), a.grade()) * DVector::from_column_slice(a.coeffs());
    Ok(KVector::from_parts(
        a.dim(),
        a.grade(),
        c.iter().copied().collect(),
    ))
}

/// Result of [`simple_orthogonalize`].
#[derive(Debug, Clone)]
pub struct Orthogonalized {
    pub factors: Vec<KVector>,
    /// Input factors were linearly dependent; the wedge is zero and the
    /// offending factors are returned as zero vectors.
    pub degenerate: bool,
}

const DEPENDENCE_TOL: f64 = 1e-10;

/// Gram-Schmidt on the factors of a simple k-vector. Each factor has its
/// projections onto the earlier (already orthogonal) factors removed, which
/// leaves `v_1 ∧ ... ∧ v_k` unchanged.
pub fn simple_orthogonalize(factors: &[KVector], g: &Metric) -> Result<Orthogonalized> {
    let n = g.dim();
    if factors.is_empty() || factors.len() > n {
        return Err(Error::InvalidGrade {
            grade: factors.len(),
            dim: n,
        });
    }
    let mut out: Vec<KVector> = Vec::with_capacity(factors.len());
    let mut sq_norms: Vec<f64> = Vec::with_capacity(factors.len());
    let mut degenerate = false;
    for f in factors {
        if f.grade() != 1 || f.dim() != n {
            return Err(Error::GradeMismatch {
                expected: 1,
                found: f.grade(),
            });
        }
        let original = g.inner(f, f)?.sqrt();
        let mut v = f.clone();
        for (u, &uu) in out.iter().zip(&sq_norms) {
            if uu == 0.0 {
                continue;
            }
            let c = g.inner(&v, u)? / uu;
            v = &v - &(u * c);
        }
        let vv = g.inner(&v, &v)?;
        if vv.sqrt() <= DEPENDENCE_TOL * original || original == 0.0 {
            degenerate = true;
            v = KVector::zero(n, 1);
            sq_norms.push(0.0);
        } else {
            sq_norms.push(vv);
        }
        out.push(v);
    }
    Ok(Orthogonalized {
        factors: out,
        degenerate,
    })
}
