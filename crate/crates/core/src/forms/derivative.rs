use super::grid::GridDomain;
use super::sampled::SampledForm;
use crate::error::{Error, Result};
use crate::exterior::multi_index::{members, Basis};

/// Finite-difference exterior derivative.
///
/// `(dω)_J = Σ_p (-1)^p ∂_{j_p} ω_{J \ j_p}` over the positions `p` of the
/// indices `j_p ∈ J`. Partial derivatives use centered differences in the
/// interior and second-order one-sided stencils on the faces, so the result
/// is exact when each coefficient is a polynomial of degree ≤ 2 in the
/// differentiated variable.
pub fn exterior_derivative_fd(form: &SampledForm) -> Result<SampledForm> {
    let n = form.dim();
    let k = form.grade();
    if k >= n {
        return Err(Error::InvalidGrade { grade: k + 1, dim: n });
    }
    let g = form.domain();
    let src = Basis::new(n, k);
    let dst = Basis::new(n, k + 1);
    let nodes = g.node_count();
    let (ss, ds) = (src.len(), dst.len());
    let mut out = vec![0.0; nodes * ds];

    let mut column = vec![0.0; nodes];
    let mut deriv = vec![0.0; nodes];
    for (ci, &imask) in src.masks.iter().enumerate() {
        for (node, c) in column.iter_mut().enumerate() {
            *c = form.values()[node * ss + ci];
        }
        for axis in (0..n).filter(|a| imask & (1 << a) == 0) {
            partial(g, &column, axis, &mut deriv);
            let jmask = imask | (1 << axis);
            // position of `axis` inside J
            let pos = members(jmask).position(|m| m == axis).expect("member");
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            let slot = dst.rank(jmask);
            for node in 0..nodes {
                out[node * ds + slot] += sign * deriv[node];
            }
        }
    }
    Ok(SampledForm::from_parts(g.clone(), k + 1, out))
}

/// Partial derivative of a nodal scalar field along one axis.
pub fn partial(g: &GridDomain, f: &[f64], axis: usize, out: &mut [f64]) {
    let h = g.spacing(axis);
    let st = g.stride(axis);
    let len = g.samples()[axis];
    let inv2h = 0.5 / h;
    for node in 0..f.len() {
        let i = (node / st) % len;
        out[node] = if i == 0 {
            (-3.0 * f[node] + 4.0 * f[node + st] - f[node + 2 * st]) * inv2h
        } else if i + 1 == len {
            (3.0 * f[node] - 4.0 * f[node - st] + f[node - 2 * st]) * inv2h
        } else {
            (f[node + st] - f[node - st]) * inv2h
        };
    }
}

/// Nodal gradient of a scalar field, `out[node * n + axis]`.
pub fn gradient(g: &GridDomain, f: &[f64]) -> Vec<f64> {
    let n = g.dim();
    let mut out = vec![0.0; f.len() * n];
    let mut d = vec![0.0; f.len()];
    for axis in 0..n {
        partial(g, f, axis, &mut d);
        for (node, v) in d.iter().enumerate() {
            out[node * n + axis] = *v;
        }
    }
    out
}
