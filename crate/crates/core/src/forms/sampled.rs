use rayon::prelude::*;

use super::grid::GridDomain;
use crate::error::{Error, Result};
use crate::exterior::{binomial, wedge_coeffs, KCovector};

/// A k-form on a grid chart: one k-covector per node, stored node-major with
/// `C(n, k)` coefficients per node in lexicographic multi-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledForm {
    domain: GridDomain,
    grade: usize,
    values: Vec<f64>,
}

impl SampledForm {
    pub fn new(domain: GridDomain, grade: usize, values: Vec<f64>) -> Result<Self> {
        let n = domain.dim();
        if grade > n {
            return Err(Error::InvalidGrade { grade, dim: n });
        }
        let expected = domain.node_count() * binomial(n, grade);
        if values.len() != expected {
            return Err(Error::CoefficientLength {
                dim: n,
                grade,
                expected,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sampled form"));
        }
        Ok(Self {
            domain,
            grade,
            values,
        })
    }

    pub(crate) fn from_parts(domain: GridDomain, grade: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.node_count() * binomial(domain.dim(), grade));
        Self {
            domain,
            grade,
            values,
        }
    }

    pub fn zeros(domain: &GridDomain, grade: usize) -> Self {
        let len = domain.node_count() * binomial(domain.dim(), grade);
        Self::from_parts(domain.clone(), grade, vec![0.0; len])
    }

    /// Samples a coefficient function `f(x, out)` that writes the `C(n, k)`
    /// coefficients at `x`.
    pub fn from_fn<F>(domain: &GridDomain, grade: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let n = domain.dim();
        let stride = binomial(n, grade);
        let mut values = vec![0.0; domain.node_count() * stride];
        values
            .par_chunks_mut(stride.max(1))
            .enumerate()
            .for_each(|(node, out)| {
                let p = domain.point(node);
                f(&p, out);
            });
        Self::new(domain.clone(), grade, values)
    }

    /// Scalar field as a 0-form.
    pub fn scalar<F: Fn(&[f64]) -> f64 + Sync>(domain: &GridDomain, f: F) -> Result<Self> {
        Self::from_fn(domain, 0, |x, out| out[0] = f(x))
    }

    pub fn constant(domain: &GridDomain, value: &KCovector) -> Result<Self> {
        if value.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: value.dim(),
            });
        }
        let values = value
            .coeffs()
            .iter()
            .copied()
            .cycle()
            .take(domain.node_count() * value.coeffs().len())
            .collect();
        Ok(Self::from_parts(domain.clone(), value.grade(), values))
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn stride(&self) -> usize {
        binomial(self.dim(), self.grade)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let s = self.stride();
        &self.values[node * s..(node + 1) * s]
    }

    pub fn covector(&self, node: usize) -> KCovector {
        KCovector::from_parts(self.dim(), self.grade, self.at(node).to_vec())
    }

    /// Grassmann norm at a node (the coordinate covectors are orthonormal).
    pub fn pointwise_norm(&self, node: usize) -> f64 {
        self.at(node).iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn pointwise_norms(&self) -> Vec<f64> {
        (0..self.domain.node_count())
            .map(|i| self.pointwise_norm(i))
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_parts(
            self.domain.clone(),
            self.grade,
            self.values.iter().map(|v| v * s).collect(),
        )
    }

    fn check_compatible(&self, other: &SampledForm) -> Result<()> {
        if !self.domain.same_shape(&other.domain) {
            return Err(Error::GridMismatch);
        }
        if self.grade != other.grade {
            return Err(Error::GradeMismatch {
                expected: self.grade,
                found: other.grade,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &SampledForm) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::from_parts(
            self.domain.clone(),
            self.grade,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &SampledForm) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// Largest nodewise Grassmann norm of `self - other`, optionally over a
    /// subset of nodes.
    pub fn max_norm_diff(&self, other: &SampledForm, mask: Option<&[bool]>) -> Result<f64> {
        self.check_compatible(other)?;
        let s = self.stride();
        Ok((0..self.domain.node_count())
            .filter(|&i| mask.is_none_or(|m| m[i]))
            .map(|i| {
                (0..s)
                    .map(|c| (self.values[i * s + c] - other.values[i * s + c]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max))
    }

    pub fn max_norm(&self, mask: Option<&[bool]>) -> f64 {
        (0..self.domain.node_count())
            .filter(|&i| mask.is_none_or(|m| m[i]))
            .map(|i| self.pointwise_norm(i))
            .fold(0.0, f64::max)
    }

    /// Multilinear interpolation of every coefficient at `p`; `None` when
    /// `p` is outside the grid box.
    pub fn interpolate(&self, p: &[f64]) -> Option<Vec<f64>> {
        let g = &self.domain;
        let n = g.dim();
        if p.len() != n || !g.contains(p) {
            return None;
        }
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for a in 0..n {
            let t = (p[a] - g.lower()[a]) / g.spacing(a);
            let i = (t.floor() as usize).min(g.samples()[a] - 2);
            base[a] = i;
            frac[a] = (t - i as f64).clamp(0.0, 1.0);
        }
        let s = self.stride();
        let mut out = vec![0.0; s];
        let mut corner = vec![0usize; n];
        for bits in 0..(1usize << n) {
            let mut w = 1.0;
            for a in 0..n {
                let up = (bits >> a) & 1 == 1;
                corner[a] = base[a] + up as usize;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let node = g.node(&corner);
            for (o, v) in out.iter_mut().zip(self.at(node)) {
                *o += w * v;
            }
        }
        Some(out)
    }
}

/// Nodewise exterior product of two forms on the same grid.
pub fn wedge_sampled(a: &SampledForm, b: &SampledForm) -> Result<SampledForm> {
    if !a.domain.same_shape(&b.domain) {
        return Err(Error::GridMismatch);
    }
    let n = a.dim();
    if a.grade + b.grade > n {
        return Err(Error::GradeOverflow {
            left: a.grade,
            right: b.grade,
            dim: n,
        });
    }
    let nodes = a.domain.node_count();
    let out_stride = binomial(n, a.grade + b.grade);
    let mut values = vec![0.0; nodes * out_stride];
    values
        .par_chunks_mut(out_stride)
        .enumerate()
        .for_each(|(i, out)| {
            out.copy_from_slice(&wedge_coeffs(n, a.grade, a.at(i), b.grade, b.at(i)));
        });
    Ok(SampledForm::from_parts(
        a.domain.clone(),
        a.grade + b.grade,
        values,
    ))
}
