//! Differentiable map catalogue, dilatation fields and pull-back checks.

mod map;
mod region;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use map::{
    chart_conjugate, identity, linear, map_library, mobius2d, radial_stretch, winding2d, winding3d,
    DifferentiableMap, MapKernel, MapSpec, MapTags,
};
pub use region::Region;

use crate::error::{Error, Result};
use crate::exterior::binomial;
use crate::forms::{weak_derivative_residual, GridDomain, SampledForm, TestFormFamily, WeakResidual};
use crate::linalg::fd_jacobian;
use crate::linear::{pullback_coeffs, summarize};
use crate::manifolds::{bilipschitz_constant_estimate, Chart};

/// Sub-samples per axis used for fractional cell weights of regions.
pub const REGION_SUBSAMPLES: usize = 8;

/// Quasiregularity verdict from a sampled dilatation field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QRVerdict {
    /// Largest `|Df|ⁿ / J_f` over nodes with `|J_f| ≥ j_tol`.
    pub k_hat: Option<f64>,
    /// `(∫ |Df|ⁿ)^{1/n}` over the sampled nodes.
    pub sobolev_proxy: f64,
    /// Fraction of nodes with `J_f ≥ -j_tol`.
    pub orientation_ok: f64,
    /// Nodes excluded as branch-degenerate.
    pub excluded: usize,
    pub j_tol: f64,
    pub pass: bool,
}

/// Largest relative violation of `K⁻¹|Df|ⁿ ≤ J ≤ |Df|ⁿ` and
/// `lⁿ ≤ J ≤ K^{n-1} lⁿ` over the retained nodes, with `K = K_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilatationInequalities {
    pub max_violation: f64,
    pub nodes: usize,
}

impl DilatationInequalities {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.max_violation <= rel_tol
    }
}

/// Nodewise dilatation data on a grid.
#[derive(Debug, Clone)]
pub struct DilatationField {
    pub grid: GridDomain,
    /// Nodes that were sampled (inside the map's domain and any mask).
    pub active: Vec<bool>,
    /// `K_outer` per node; `None` when inactive or branch-degenerate.
    pub k_outer: Vec<Option<f64>>,
    pub jacobian: Vec<f64>,
    pub opnorm: Vec<f64>,
    pub lmin: Vec<f64>,
    pub verdict: QRVerdict,
    pub inequalities: DilatationInequalities,
}

impl DilatationField {
    /// Nodes with `|J_f| < j_tol` among the active ones.
    pub fn branch_nodes(&self) -> Vec<usize> {
        (0..self.jacobian.len())
            .filter(|&i| self.active[i] && self.jacobian[i].abs() < self.verdict.j_tol)
            .collect()
    }
}

/// Dilatation field of `f` on every grid node inside the map's domain.
pub fn dilatation_field(f: &DifferentiableMap, grid: &GridDomain) -> Result<DilatationField> {
    dilatation_field_masked(f, grid, None)
}

/// As [`dilatation_field`], restricted further to `mask`.
pub fn dilatation_field_masked(
    f: &DifferentiableMap,
    grid: &GridDomain,
    mask: Option<&[bool]>,
) -> Result<DilatationField> {
    let n = grid.dim();
    if f.src_dim() != n || f.dst_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.src_dim(),
        });
    }
    let active: Vec<bool> = (0..grid.node_count())
        .map(|i| mask.is_none_or(|m| m[i]) && f.domain().is_none_or(|d| d.contains(&grid.point(i))))
        .collect();
    let nodes: Vec<(f64, f64, f64)> = (0..grid.node_count())
        .into_par_iter()
        .map(|i| {
            if !active[i] {
                return Ok((f64::NAN, f64::NAN, f64::NAN));
            }
            let d = f.jacobian(&grid.point(i));
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("map derivative"));
            }
            let s = summarize(&d, 1.0);
            Ok((s.signed_jac, s.opnorm, s.lmin))
        })
        .collect::<Result<Vec<_>>>()?;
    let ni = n as i32;
    let count = active.iter().filter(|&&a| a).count();
    if count == 0 {
        return Err(Error::AllNodesDegenerate);
    }
    let max_df_n = nodes
        .iter()
        .zip(&active)
        .filter(|(_, &a)| a)
        .map(|(v, _)| v.1.powi(ni))
        .fold(0.0, f64::max);
    let j_tol = 1e-10 * max_df_n;
    let mut k_outer = vec![None; nodes.len()];
    let mut k_hat: Option<f64> = None;
    let mut excluded = 0;
    let mut oriented = 0;
    let mut sobolev = 0.0;
    for (i, &(j, op, _)) in nodes.iter().enumerate() {
        if !active[i] {
            continue;
        }
        sobolev += grid.trapezoid_weight(i) * op.powi(ni);
        if j >= -j_tol {
            oriented += 1;
        }
        if j.abs() < j_tol || max_df_n == 0.0 {
            excluded += 1;
            continue;
        }
        let k = if j > 0.0 { op.powi(ni) / j } else { f64::INFINITY };
        k_outer[i] = Some(k);
        k_hat = Some(k_hat.map_or(k, |m: f64| m.max(k)));
    }
    if excluded == count {
        return Err(Error::AllNodesDegenerate);
    }
    let sobolev_proxy = sobolev.powf(1.0 / n as f64);
    let orientation_ok = oriented as f64 / count as f64;
    let pass = orientation_ok == 1.0 && sobolev_proxy.is_finite() && k_hat.is_some_and(|k| k.is_finite());

    let mut max_violation: f64 = 0.0;
    let mut checked = 0;
    if let Some(k) = k_hat.filter(|k| k.is_finite()) {
        for (i, &(j, op, l)) in nodes.iter().enumerate() {
            if k_outer[i].is_none() {
                continue;
            }
            checked += 1;
            let upper = op.powi(ni);
            let ln = l.powi(ni);
            let gaps = [upper / k - j, j - upper, ln - j, j - k.powi(ni - 1) * ln];
            let scale = upper.max(f64::MIN_POSITIVE);
            for g in gaps {
                max_violation = max_violation.max(g / scale);
            }
        }
    } else {
        max_violation = f64::INFINITY;
    }

    Ok(DilatationField {
        grid: grid.clone(),
        active,
        k_outer,
        jacobian: nodes.iter().map(|v| v.0).collect(),
        opnorm: nodes.iter().map(|v| v.1).collect(),
        lmin: nodes.iter().map(|v| v.2).collect(),
        verdict: QRVerdict {
            k_hat,
            sobolev_proxy,
            orientation_ok,
            excluded,
            j_tol,
            pass,
        },
        inequalities: DilatationInequalities {
            max_violation: max_violation.max(0.0),
            nodes: checked,
        },
    })
}

/// Result of testing `ψ ∘ f ∘ φ⁻¹` against a dilatation bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartVerdict {
    pub k_prime: f64,
    pub k_conjugate: Option<f64>,
    pub l_phi: f64,
    pub l_psi: f64,
    pub pass: bool,
}

impl ChartVerdict {
    /// `K_f · (L_φ L_ψ)^{2n}`, the constant the conjugate must satisfy
    /// whenever `f` itself is `K_f`-quasiregular.
    pub fn transferred_bound(&self, k_f: f64, n: usize) -> f64 {
        k_f * (self.l_phi * self.l_psi).powi(2 * n as i32)
    }

    /// Whether the measured conjugate constant respects
    /// [`ChartVerdict::transferred_bound`].
    pub fn consistent_with(&self, k_f: f64, n: usize) -> bool {
        self.k_conjugate
            .is_some_and(|k| k <= self.transferred_bound(k_f, n) * (1.0 + 1e-9))
    }
}

/// Tests the conjugated map `ψ ∘ f ∘ φ⁻¹` on the grid nodes inside the
/// domain of `φ` against `K′`.
pub fn chart_definition_verdict(
    f: &DifferentiableMap,
    phi: Arc<dyn Chart>,
    psi: Arc<dyn Chart>,
    k_prime: f64,
    grid: &GridDomain,
) -> Result<ChartVerdict> {
    let l_phi = bilipschitz_constant_estimate(phi.as_ref(), 1000)?;
    let l_psi = bilipschitz_constant_estimate(psi.as_ref(), 1000)?;
    let conj = chart_conjugate(f, phi.clone(), psi)?;
    let domain = phi.domain();
    for i in 0..grid.node_count() {
        let u = grid.point(i);
        if domain.contains(&u) {
            conj.try_eval(&u)?;
        }
    }
    let field = dilatation_field(&conj, grid)?;
    let k = field.verdict.k_hat;
    Ok(ChartVerdict {
        k_prime,
        k_conjugate: k,
        l_phi,
        l_psi,
        pass: field.verdict.pass && k.is_some_and(|k| k <= k_prime * (1.0 + 1e-9)),
    })
}

/// `f^*ω` on `src`, with `ω` interpolated multilinearly at `f(x)`.
pub fn pullback_form(f: &DifferentiableMap, omega: &SampledForm, src: &GridDomain) -> Result<SampledForm> {
    pullback_form_masked(f, omega, src, None)
}

/// As [`pullback_form`], evaluated only where `mask` holds (zero elsewhere).
pub fn pullback_form_masked(
    f: &DifferentiableMap,
    omega: &SampledForm,
    src: &GridDomain,
    mask: Option<&[bool]>,
) -> Result<SampledForm> {
    let n = src.dim();
    if f.src_dim() != n || f.dst_dim() != omega.dim() {
        return Err(Error::DimensionMismatch {
            expected: omega.dim(),
            found: f.dst_dim(),
        });
    }
    let k = omega.grade();
    let stride = binomial(n, k);
    let chunks: Vec<Vec<f64>> = (0..src.node_count())
        .into_par_iter()
        .map(|i| {
            if mask.is_some_and(|m| !m[i]) {
                return Ok(vec![0.0; stride]);
            }
            let x = src.point(i);
            let y = f.try_eval(&x)?;
            let w = omega.interpolate(&y).ok_or(Error::OutsideDomain)?;
            Ok(pullback_coeffs(&f.jacobian(&x), k, &w))
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(stride * chunks.len());
    for c in chunks {
        values.extend(c);
    }
    SampledForm::new(src.clone(), k, values)
}

/// Two-sided conformal-exponent estimate
/// `C^{-n/2k} K^{-(n+1)} ∫ N|ω|^{n/k} ≤ ∫_E |f^*ω|^{n/k} ≤ C^{n/2k} K ∫ N|ω|^{n/k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRecord {
    pub exponent: f64,
    pub k: f64,
    pub pulled: f64,
    pub weighted: f64,
    pub lower_const: f64,
    pub upper_const: f64,
    /// `pulled / weighted`.
    pub ratio: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Relative slack applied to the Lᵖ inequalities.
pub const LP_SLACK: f64 = 0.02;

fn k_hat_on(f: &DifferentiableMap, src: &GridDomain, region: &Region) -> Result<f64> {
    let mask = region.mask(src);
    dilatation_field_masked(f, src, Some(&mask))?
        .verdict
        .k_hat
        .ok_or(Error::AllNodesDegenerate)
}

/// Checks the conformal-exponent estimate for `f` on `region ⊂ src`, with
/// `multiplicity(y) = N(f, y, E)` evaluated at the nodes of `ω`'s grid.
/// `K` is the measured `K_hat` of `f` over the region.
pub fn pullback_lp_check(
    f: &DifferentiableMap,
    omega: &SampledForm,
    src: &GridDomain,
    region: &Region,
    multiplicity: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<LpRecord> {
    let n = src.dim();
    let k = omega.grade();
    if k == 0 {
        return Err(Error::ZeroGradeExponent);
    }
    let p = n as f64 / k as f64;
    let kq = k_hat_on(f, src, region)?;
    let w = region.weights(src, REGION_SUBSAMPLES);
    let support: Vec<bool> = w.iter().map(|&v| v > 0.0).collect();
    let pulled_form = pullback_form_masked(f, omega, src, Some(&support))?;
    let pulled: f64 = (0..src.node_count())
        .filter(|&i| w[i] > 0.0)
        .map(|i| w[i] * pulled_form.pointwise_norm(i).powf(p))
        .sum();
    let dst = omega.domain();
    let weighted: f64 = (0..dst.node_count())
        .into_par_iter()
        .map(|i| {
            let norm = omega.pointwise_norm(i);
            if norm == 0.0 {
                return 0.0;
            }
            let m = multiplicity(&dst.point(i));
            dst.trapezoid_weight(i) * m * norm.powf(p)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let c = binomial(n, k) as f64;
    let lower_const = c.powf(-p / 2.0) * kq.powi(-(n as i32 + 1));
    let upper_const = c.powf(p / 2.0) * kq;
    let holds = lower_const * weighted * (1.0 - LP_SLACK) <= pulled
        && pulled <= upper_const * weighted * (1.0 + LP_SLACK);
    Ok(LpRecord {
        exponent: p,
        k: kq,
        pulled,
        weighted,
        lower_const,
        upper_const,
        ratio: pulled / weighted,
        slack: LP_SLACK,
        holds,
    })
}

/// Norm comparison for proper maps of degree `deg`:
/// `deg^{k/n} / (C^{1/2} K^{k(n-1)/n}) ‖ω‖ ≤ ‖f^*ω‖ ≤ C^{1/2} K^{k/n} deg^{k/n} ‖ω‖`
/// in `L^{n/k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProperRecord {
    pub exponent: f64,
    pub k: f64,
    pub degree: f64,
    pub pulled_norm: f64,
    pub norm: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

pub fn pullback_proper_check(
    f: &DifferentiableMap,
    omega: &SampledForm,
    src: &GridDomain,
    src_region: &Region,
    dst_region: &Region,
    degree: u32,
) -> Result<ProperRecord> {
    let n = src.dim();
    let k = omega.grade();
    if k == 0 {
        return Err(Error::ZeroGradeExponent);
    }
    let p = n as f64 / k as f64;
    let kq = k_hat_on(f, src, src_region)?;
    let support: Vec<bool> = src_region
        .weights(src, REGION_SUBSAMPLES)
        .iter()
        .map(|&v| v > 0.0)
        .collect();
    let pulled_form = pullback_form_masked(f, omega, src, Some(&support))?;
    let lp = |form: &SampledForm, region: &Region| -> f64 {
        let w = region.weights(form.domain(), REGION_SUBSAMPLES);
        (0..w.len())
            .filter(|&i| w[i] > 0.0)
            .map(|i| w[i] * form.pointwise_norm(i).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    };
    let pulled_norm = lp(&pulled_form, src_region);
    let norm = lp(omega, dst_region);
    let c = (binomial(n, k) as f64).sqrt();
    let d = (degree as f64).powf(k as f64 / n as f64);
    let lower = d / (c * kq.powf(k as f64 * (n as f64 - 1.0) / n as f64)) * norm;
    let upper = c * kq.powf(k as f64 / n as f64) * d * norm;
    Ok(ProperRecord {
        exponent: p,
        k: kq,
        degree: degree as f64,
        pulled_norm,
        norm,
        lower,
        upper,
        holds: lower * (1.0 - LP_SLACK) <= pulled_norm && pulled_norm <= upper * (1.0 + LP_SLACK),
    })
}

/// Degree-zero case: `sup_E |ω ∘ f|` against `sup_{f(E)} |ω|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupRecord {
    pub pulled_sup: f64,
    pub sup: f64,
    pub relative_difference: f64,
}

pub fn pullback_sup_check(
    f: &DifferentiableMap,
    omega: &SampledForm,
    src: &GridDomain,
    src_region: &Region,
    image_region: &Region,
) -> Result<SupRecord> {
    if omega.grade() != 0 {
        return Err(Error::GradeMismatch {
            expected: 0,
            found: omega.grade(),
        });
    }
    let src_mask = src_region.mask(src);
    let pulled = pullback_form_masked(f, omega, src, Some(&src_mask))?;
    let dst_mask = image_region.mask(omega.domain());
    let pulled_sup = pulled.max_norm(Some(&src_mask));
    let sup = omega.max_norm(Some(&dst_mask));
    Ok(SupRecord {
        pulled_sup,
        sup,
        relative_difference: (pulled_sup - sup).abs() / sup.max(f64::MIN_POSITIVE),
    })
}

/// Both sides of `∫_U (g∘f) J_f = ∫ N(f, y, U) g(y) dy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeOfVariables {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / ∫_U |g∘f| |J_f|`.
    pub residual: f64,
}

/// Change-of-variables check. With `signed`, the Jacobian keeps its sign
/// and `multiplicity` should return the signed preimage count.
pub fn change_of_variables_check(
    f: &DifferentiableMap,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    src: &GridDomain,
    region: &Region,
    dst: &GridDomain,
    multiplicity: &(dyn Fn(&[f64]) -> f64 + Sync),
    signed: bool,
) -> Result<ChangeOfVariables> {
    let w = region.weights(src, REGION_SUBSAMPLES);
    let parts: Vec<(f64, f64)> = (0..src.node_count())
        .into_par_iter()
        .map(|i| {
            if w[i] == 0.0 {
                return Ok((0.0, 0.0));
            }
            let x = src.point(i);
            let y = f.try_eval(&x)?;
            let j = f.jacobian(&x).determinant();
            let gy = g(&y);
            let jj = if signed { j } else { j.abs() };
            Ok((w[i] * gy * jj, w[i] * (gy * j).abs()))
        })
        .collect::<Result<_>>()?;
    let lhs: f64 = parts.iter().map(|p| p.0).sum();
    let scale: f64 = parts.iter().map(|p| p.1).sum();
    let rhs: f64 = (0..dst.node_count())
        .into_par_iter()
        .map(|i| {
            let y = dst.point(i);
            let m = multiplicity(&y);
            if m == 0.0 {
                0.0
            } else {
                dst.trapezoid_weight(i) * m * g(&y)
            }
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(ChangeOfVariables {
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE),
    })
}

/// Weak residual of `d(f^*ω) = f^*(dω)` on `src`.
pub fn pullback_commutation_residual(
    f: &DifferentiableMap,
    omega: &SampledForm,
    d_omega: &SampledForm,
    src: &GridDomain,
    tests: &TestFormFamily,
) -> Result<WeakResidual> {
    if d_omega.grade() != omega.grade() + 1 {
        return Err(Error::GradeMismatch {
            expected: omega.grade() + 1,
            found: d_omega.grade(),
        });
    }
    let a = pullback_form(f, omega, src)?;
    let b = pullback_form(f, d_omega, src)?;
    weak_derivative_residual(&a, &b, tests)
}

/// `‖f ∘ h‖_{1,p}` against `L^{1+n/p} ‖f‖_{1,p}` for `h = φ⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionRecord {
    pub lipschitz: f64,
    pub composed_norm: f64,
    pub norm: f64,
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Relative slack on the composition bound.
pub const COMPOSITION_SLACK: f64 = 0.05;

/// Compares Sobolev-proxy norms of `f ∘ φ⁻¹` (Euclidean, on the chart
/// domain) and `f` (Riemannian, on the chart image). `f` should be
/// supported inside the chart image.
pub fn composition_constant_check(
    chart: &dyn Chart,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    p: f64,
    samples_per_axis: usize,
) -> Result<CompositionRecord> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let n = chart.dim();
    let lipschitz = bilipschitz_constant_estimate(chart, 1000)?;
    let domain = chart.domain();
    let grid = domain.bounding_grid(n, samples_per_axis)?;
    let h = 1e-6 * grid.max_spacing().max(1e-3);
    let (composed, plain) = (0..grid.node_count())
        .into_par_iter()
        .map(|i| {
            let u = grid.point(i);
            if !domain.contains(&u) {
                return (0.0, 0.0);
            }
            let val = f(&chart.to_point(&u));
            let grad = fd_jacobian(|x| vec![f(&chart.to_point(x))], &u, h);
            let gv = DVector::from_iterator(n, grad.iter().copied());
            let metric = chart.metric(&u);
            let ginv = metric.inverse_gram();
            let g_norm = (gv.transpose() * ginv * &gv)[(0, 0)].max(0.0).sqrt();
            let e_norm = gv.norm();
            let w = grid.trapezoid_weight(i);
            (
                w * (val.abs().powf(p) + e_norm.powf(p)),
                w * (val.abs().powf(p) + g_norm.powf(p)) * chart.volume_density(&u),
            )
        })
        .collect::<Vec<_>>()
        .iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let composed_norm = composed.powf(1.0 / p);
    let norm = plain.powf(1.0 / p);
    let ratio = composed_norm / norm;
    let bound = lipschitz.powf(1.0 + n as f64 / p);
    Ok(CompositionRecord {
        lipschitz,
        composed_norm,
        norm,
        ratio,
        bound,
        holds: ratio <= bound * (1.0 + COMPOSITION_SLACK),
    })
}

/// Largest relative mismatch of `D(u∘f)(x)` (finite differences) and
/// `Du(f(x)) Df(x)` over coordinate functionals and a Gaussian bump.
pub fn colocal_check(f: &DifferentiableMap, points: &[Vec<f64>]) -> f64 {
    let m = f.dst_dim();
    points
        .iter()
        .map(|x| {
            let y = f.eval(x);
            let df = f.jacobian(x);
            let center: Vec<f64> = y.iter().map(|v| v + 0.25).collect();
            let mut worst: f64 = 0.0;
            for a in 0..=m {
                let u = |q: &[f64]| -> f64 {
                    if a < m {
                        q[a]
                    } else {
                        (-q.iter().zip(&center).map(|(s, c)| (s - c) * (s - c)).sum::<f64>()).exp()
                    }
                };
                let du: DMatrix<f64> = if a < m {
                    DMatrix::from_fn(1, m, |_, j| (j == a) as u8 as f64)
                } else {
                    let e = u(&y);
                    DMatrix::from_fn(1, m, |_, j| -2.0 * (y[j] - center[j]) * e)
                };
                let lhs = fd_jacobian(|p| vec![u(&f.eval(p))], x, 1e-6);
                let rhs = du * &df;
                let scale = rhs.abs().max().max(1.0);
                worst = worst.max((lhs - rhs).abs().max() / scale);
            }
            worst
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_field() {
        let g = GridDomain::cube(2, -1.0, 1.0, 17).unwrap();
        let d = dilatation_field(&identity(2).unwrap(), &g).unwrap();
        assert_eq!(d.verdict.k_hat, Some(1.0));
        assert!(d.verdict.pass);
        assert!(d.branch_nodes().is_empty());
    }

    #[test]
    fn winding_field_excludes_origin() {
        let g = GridDomain::cube(2, -1.0, 1.0, 33).unwrap();
        let d = dilatation_field(&winding2d(3).unwrap(), &g).unwrap();
        assert!((d.verdict.k_hat.unwrap() - 3.0).abs() < 1e-10);
        assert_eq!(d.branch_nodes(), vec![g.node(&[16, 16])]);
        assert!(d.inequalities.holds(1e-12));
    }

    #[test]
    fn orientation_reversing_fails() {
        let g = GridDomain::cube(2, -1.0, 1.0, 9).unwrap();
        let f = linear(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        let d = dilatation_field(&f, &g).unwrap();
        assert!(!d.verdict.pass);
        assert_eq!(d.verdict.orientation_ok, 0.0);
    }

    #[test]
    fn constant_map_is_degenerate() {
        let g = GridDomain::cube(2, -1.0, 1.0, 9).unwrap();
        let f = linear(DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(dilatation_field(&f, &g), Err(Error::AllNodesDegenerate)));
    }
}
