use super::grid::GridDomain;
use super::sampled::SampledForm;
use crate::error::{Error, Result};

/// Value of a masked top-form integral. `empty_mask` is set when no node was
/// selected, in which case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub empty_mask: bool,
}

/// Composite trapezoid rule for a scalar nodal field over the selected nodes.
pub fn integrate_nodal(g: &GridDomain, values: &[f64], mask: Option<&[bool]>) -> Integral {
    debug_assert_eq!(values.len(), g.node_count());
    let mut acc = 0.0;
    let mut any = false;
    for (node, v) in values.iter().enumerate() {
        if mask.is_none_or(|m| m[node]) {
            any = true;
            acc += g.trapezoid_weight(node) * v;
        }
    }
    Integral {
        value: acc,
        empty_mask: !any,
    }
}

/// `∫ ω` for a top-degree form, i.e. the trapezoid quadrature of the
/// coefficient of `dx_1 ∧ ... ∧ dx_n`.
pub fn integrate_top_form(form: &SampledForm, mask: Option<&[bool]>) -> Result<Integral> {
    if form.grade() != form.dim() {
        return Err(Error::GradeMismatch {
            expected: form.dim(),
            found: form.grade(),
        });
    }
    if let Some(m) = mask {
        if m.len() != form.domain().node_count() {
            return Err(Error::GridMismatch);
        }
    }
    Ok(integrate_nodal(form.domain(), form.values(), mask))
}

/// `‖ω‖_p = (∫ |ω|^p)^{1/p}` with the pointwise Grassmann norm; `p = ∞`
/// returns the largest nodal norm.
pub fn lp_norm(form: &SampledForm, p: f64, mask: Option<&[bool]>) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(form.max_norm(mask));
    }
    let powered: Vec<f64> = form.pointwise_norms().iter().map(|v| v.powf(p)).collect();
    Ok(integrate_nodal(form.domain(), &powered, mask).value.powf(1.0 / p))
}
