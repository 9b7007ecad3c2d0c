//! Differential forms sampled on regular grids over open boxes in ℝⁿ.

mod derivative;
mod grid;
pub mod io;
mod mollifier;
mod quadrature;
mod sampled;
mod weak;

pub use derivative::{exterior_derivative_fd, gradient, partial};
pub use grid::{GridDomain, NodeMask};
pub use mollifier::{bump, bump_ds, convolve_form, DiscreteKernel, Mollifier};
pub use quadrature::{integrate_nodal, integrate_top_form, lp_norm, Integral};
pub use sampled::{wedge_sampled, SampledForm};
pub use weak::{
    leibniz_residual, weak_derivative_residual, LeibnizReport, TestForm, TestFormFamily, WeakResidual,
};
