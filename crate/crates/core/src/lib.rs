//! Numerical verification toolkit for quasiregular maps on Riemannian chart
//! domains.
//!
//! The crate is organised bottom-up:
//!
//! * [`exterior`]: k-vectors and k-covectors over a metric fiber, Grassmann
//!   inner products, metric duality and the comass norm.
//! * [`linear`]: metric-adjusted singular values, Jacobians, dilatations and
//!   linear pull-backs.
//! * [`forms`]: differential forms sampled on regular grids, with finite
//!   difference exterior derivatives, quadrature, mollification and weak
//!   derivative residuals.
//! * [`manifolds`]: charts and atlases for the round sphere, the flat torus
//!   and Euclidean boxes.
//! * [`qr`]: the map catalogue, dilatation fields, pull-backs and the
//!   change-of-variables checks.
//! * [`degree`]: preimage counting, local index, normal neighborhoods and
//!   branch-set sampling.
//! * [`suite`]: the configuration-driven verification runner behind the
//!   `qrforms` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod degree;
pub mod error;
pub mod exterior;
pub mod forms;
pub mod linalg;
pub mod linear;
pub mod manifolds;
pub mod qr;
pub mod rng;
pub mod suite;

pub use error::{Error, Result};
