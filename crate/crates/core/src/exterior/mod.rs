//! Exterior algebra over a single metric fiber.

mod comass;
mod element;
mod metric;
pub mod multi_index;

pub use comass::{comass_norm, ComassBudget, ComassEstimate};
pub(crate) use element::wedge_coeffs;
pub use element::{Covectors, Graded, KCovector, KVector, Vectors};
pub use metric::{grassmann_inner, metric_flat, metric_sharp, simple_orthogonalize, Metric, Orthogonalized};
pub use multi_index::{binomial, Basis};
