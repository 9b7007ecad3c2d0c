use std::fmt::Debug;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::Metric;
use crate::forms::{bump, GridDomain};
use crate::linalg::fd_jacobian;

/// Coordinate region of a chart.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartDomain {
    /// Open ball of the given radius about the origin.
    Disk { radius: f64 },
    /// Open box.
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl ChartDomain {
    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            ChartDomain::Disk { radius } => u.iter().map(|x| x * x).sum::<f64>() < radius * radius,
            ChartDomain::Box { lower, upper } => {
                u.iter().enumerate().all(|(a, &x)| x > lower[a] && x < upper[a])
            }
        }
    }

    /// Grid on the bounding box of the domain.
    pub fn bounding_grid(&self, dim: usize, samples: usize) -> Result<GridDomain> {
        match self {
            ChartDomain::Disk { radius } => GridDomain::cube(dim, -radius, *radius, samples),
            ChartDomain::Box { lower, upper } => {
                GridDomain::new(lower.clone(), upper.clone(), vec![samples; dim])
            }
        }
    }

    /// Bump supported on the domain shrunk by 10% towards its centre.
    pub fn shrunk_bump(&self, u: &[f64]) -> f64 {
        match self {
            ChartDomain::Disk { radius } => {
                let r = 0.9 * radius;
                bump(u.iter().map(|x| x * x).sum::<f64>() / (r * r))
            }
            ChartDomain::Box { lower, upper } => u
                .iter()
                .enumerate()
                .map(|(a, &x)| {
                    let c = 0.5 * (lower[a] + upper[a]);
                    let half = 0.45 * (upper[a] - lower[a]);
                    bump(((x - c) / half).powi(2))
                })
                .product(),
        }
    }

    /// Distance from `u` to the complement of the domain (coordinate units).
    pub fn margin(&self, u: &[f64]) -> f64 {
        match self {
            ChartDomain::Disk { radius } => radius - u.iter().map(|x| x * x).sum::<f64>().sqrt(),
            ChartDomain::Box { lower, upper } => u
                .iter()
                .enumerate()
                .map(|(a, &x)| (x - lower[a]).min(upper[a] - x))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// A coordinate chart `φ: U ⊂ M → ℝⁿ`. Manifold points are given in the
/// manifold's ambient representation (ℝ³ for the sphere, `[0,1)²` for the
/// torus, ℝⁿ for Euclidean boxes).
pub trait Chart: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn domain(&self) -> ChartDomain;
    /// `φ(p)`, or `None` when `p` lies outside the chart.
    fn to_coords(&self, p: &[f64]) -> Option<Vec<f64>>;
    /// `φ⁻¹(u)`.
    fn to_point(&self, u: &[f64]) -> Vec<f64>;
    /// Riemannian metric in chart coordinates.
    fn metric(&self, u: &[f64]) -> Metric;

    /// Weight of this chart in the partition of unity, before normalization.
    fn partition_weight(&self, u: &[f64]) -> f64 {
        self.domain().shrunk_bump(u)
    }

    /// `√det G(u)`, the density of the Riemannian volume in coordinates.
    fn volume_density(&self, u: &[f64]) -> f64 {
        self.metric(u).gram().determinant().max(0.0).sqrt()
    }

    /// Ambient Jacobian of `φ⁻¹` at `u`.
    fn inverse_jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        fd_jacobian(|x| self.to_point(x), u, 1e-6)
    }
}

/// Geodesic normal coordinates on the unit sphere about `center`, given by
/// the inverse of the exponential map on the ball of radius `radius`.
#[derive(Debug, Clone)]
pub struct ExpChart {
    center: [f64; 3],
    e1: [f64; 3],
    e2: [f64; 3],
    radius: f64,
}

fn dot3(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = dot3(&v, &v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl ExpChart {
    pub fn new(center: &[f64], radius: f64) -> Result<Self> {
        if center.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: center.len(),
            });
        }
        if !(radius > 0.0 && radius < std::f64::consts::PI) {
            return Err(Error::InvalidRadius(radius));
        }
        let c = normalize3([center[0], center[1], center[2]]);
        // any vector not parallel to c
        let seed = if c[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let d = dot3(&seed, &c);
        let e1 = normalize3([seed[0] - d * c[0], seed[1] - d * c[1], seed[2] - d * c[2]]);
        // (e1, e2, c) right-handed, so the chart is positively oriented for
        // the outward normal
        let e2 = cross3(&c, &e1);
        Ok(Self {
            center: c,
            e1,
            e2,
            radius,
        })
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl Chart for ExpChart {
    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> ChartDomain {
        ChartDomain::Disk { radius: self.radius }
    }

    fn to_coords(&self, p: &[f64]) -> Option<Vec<f64>> {
        let cos_t = dot3(p, &self.center).clamp(-1.0, 1.0);
        let theta = cos_t.acos();
        if theta >= self.radius {
            return None;
        }
        let t = [
            p[0] - cos_t * self.center[0],
            p[1] - cos_t * self.center[1],
            p[2] - cos_t * self.center[2],
        ];
        let s = theta.sin();
        let scale = if s == 0.0 { 1.0 } else { theta / s };
        Some(vec![scale * dot3(&t, &self.e1), scale * dot3(&t, &self.e2)])
    }

    fn to_point(&self, u: &[f64]) -> Vec<f64> {
        let rho = (u[0] * u[0] + u[1] * u[1]).sqrt();
        if rho == 0.0 {
            return self.center.to_vec();
        }
        let (s, c) = rho.sin_cos();
        (0..3)
            .map(|i| c * self.center[i] + s * (u[0] * self.e1[i] + u[1] * self.e2[i]) / rho)
            .collect()
    }

    /// Radial direction has unit length, the angular direction is scaled by
    /// `sin ρ / ρ`.
    fn metric(&self, u: &[f64]) -> Metric {
        let rho = (u[0] * u[0] + u[1] * u[1]).sqrt();
        if rho == 0.0 {
            return Metric::identity(2);
        }
        let f = (rho.sin() / rho).powi(2);
        let (a, b) = (u[0] / rho, u[1] / rho);
        let g = DMatrix::from_row_slice(
            2,
            2,
            &[
                a * a + f * (1.0 - a * a),
                a * b * (1.0 - f),
                a * b * (1.0 - f),
                b * b + f * (1.0 - b * b),
            ],
        );
        Metric::new(g).expect("normal-coordinate metric is positive definite inside the injectivity radius")
    }
}

/// Stereographic projection of the unit sphere from one pole, restricted to
/// the coordinate disk of radius `radius`, optionally followed by the
/// reflection `(x₁, x₂) ↦ (x₁, -x₂)`.
#[derive(Debug, Clone)]
pub struct StereographicChart {
    from_north: bool,
    reflect: bool,
    radius: f64,
}

impl StereographicChart {
    pub fn new(from_north: bool, reflect: bool, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRadius(radius));
        }
        Ok(Self {
            from_north,
            reflect,
            radius,
        })
    }

    /// Conformal factor `λ = 2 / (1 + |x|²)`, so that `G = λ² I`.
    pub fn conformal_factor(u: &[f64]) -> f64 {
        2.0 / (1.0 + u[0] * u[0] + u[1] * u[1])
    }
}

impl Chart for StereographicChart {
    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> ChartDomain {
        ChartDomain::Disk { radius: self.radius }
    }

    fn to_coords(&self, p: &[f64]) -> Option<Vec<f64>> {
        let denom = if self.from_north { 1.0 - p[2] } else { 1.0 + p[2] };
        if denom <= 0.0 {
            return None;
        }
        let mut u = vec![p[0] / denom, p[1] / denom];
        if self.reflect {
            u[1] = -u[1];
        }
        self.domain().contains(&u).then_some(u)
    }

    fn to_point(&self, u: &[f64]) -> Vec<f64> {
        let (x, y) = (u[0], if self.reflect { -u[1] } else { u[1] });
        let r2 = x * x + y * y;
        let z = (r2 - 1.0) / (1.0 + r2);
        vec![
            2.0 * x / (1.0 + r2),
            2.0 * y / (1.0 + r2),
            if self.from_north { z } else { -z },
        ]
    }

    fn metric(&self, u: &[f64]) -> Metric {
        let l = Self::conformal_factor(u);
        Metric::diagonal(&[l * l, l * l]).expect("positive conformal factor")
    }

    fn volume_density(&self, u: &[f64]) -> f64 {
        Self::conformal_factor(u).powi(2)
    }
}

/// Graph chart over the hemisphere `sign · p_axis > 0`, coordinates are two
/// of the remaining ambient coordinates ordered for positive orientation.
#[derive(Debug, Clone)]
pub struct GraphChart {
    axis: usize,
    sign: f64,
    coords: [usize; 2],
    radius: f64,
}

impl GraphChart {
    pub fn new(axis: usize, positive: bool, radius: f64) -> Result<Self> {
        if axis > 2 {
            return Err(Error::InvalidParams {
                map: "graph chart".into(),
                reason: format!("axis {axis} out of range"),
            });
        }
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::InvalidRadius(radius));
        }
        let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
        let coords = if positive { [i, j] } else { [j, i] };
        Ok(Self {
            axis,
            sign: if positive { 1.0 } else { -1.0 },
            coords,
            radius,
        })
    }
}

impl Chart for GraphChart {
    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> ChartDomain {
        ChartDomain::Disk { radius: self.radius }
    }

    fn to_coords(&self, p: &[f64]) -> Option<Vec<f64>> {
        if self.sign * p[self.axis] <= 0.0 {
            return None;
        }
        let u = vec![p[self.coords[0]], p[self.coords[1]]];
        self.domain().contains(&u).then_some(u)
    }

    fn to_point(&self, u: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; 3];
        p[self.coords[0]] = u[0];
        p[self.coords[1]] = u[1];
        p[self.axis] = self.sign * (1.0 - u[0] * u[0] - u[1] * u[1]).max(0.0).sqrt();
        p
    }

    fn metric(&self, u: &[f64]) -> Metric {
        let q = 1.0 - u[0] * u[0] - u[1] * u[1];
        let g = DMatrix::from_fn(2, 2, |i, j| (i == j) as u8 as f64 + u[i] * u[j] / q);
        Metric::new(g).expect("graph metric is positive definite inside the unit disk")
    }

    fn volume_density(&self, u: &[f64]) -> f64 {
        1.0 / (1.0 - u[0] * u[0] - u[1] * u[1]).sqrt()
    }
}

/// Translation chart on the flat torus `ℝ²/ℤ²`: `p ↦ p - c` reduced to
/// `[-1/2, 1/2)²` and restricted to the open square of half-width `half`.
#[derive(Debug, Clone)]
pub struct TranslationChart {
    center: [f64; 2],
    half: f64,
}

impl TranslationChart {
    pub fn new(center: [f64; 2], half: f64) -> Result<Self> {
        if !(half > 0.0 && half < 0.5) {
            return Err(Error::InvalidRadius(half));
        }
        Ok(Self { center, half })
    }
}

fn wrap_half(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

impl Chart for TranslationChart {
    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> ChartDomain {
        ChartDomain::Box {
            lower: vec![-self.half; 2],
            upper: vec![self.half; 2],
        }
    }

    fn to_coords(&self, p: &[f64]) -> Option<Vec<f64>> {
        let u = vec![wrap_half(p[0] - self.center[0]), wrap_half(p[1] - self.center[1])];
        self.domain().contains(&u).then_some(u)
    }

    fn to_point(&self, u: &[f64]) -> Vec<f64> {
        (0..2)
            .map(|a| {
                let t = self.center[a] + u[a];
                t - t.floor()
            })
            .collect()
    }

    fn metric(&self, _u: &[f64]) -> Metric {
        Metric::identity(2)
    }

    fn volume_density(&self, _u: &[f64]) -> f64 {
        1.0
    }

    fn inverse_jacobian(&self, _u: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }
}

/// Linear chart `x ↦ A x` on a Euclidean box.
#[derive(Debug, Clone)]
pub struct LinearChart {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearChart {
    /// `lower`/`upper` describe the box in the manifold (source) coordinates.
    pub fn new(matrix: DMatrix<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: lower.len(),
            });
        }
        let inverse = matrix.clone().try_inverse().ok_or_else(|| Error::InvalidParams {
            map: "linear chart".into(),
            reason: "singular matrix".into(),
        })?;
        Ok(Self {
            matrix,
            inverse,
            lower,
            upper,
        })
    }

    pub fn identity(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = lower.len();
        Self::new(DMatrix::identity(n, n), lower, upper)
    }

    fn in_box(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(a, &x)| x > self.lower[a] && x < self.upper[a])
    }
}

impl Chart for LinearChart {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Bounding box of the image of the source box.
    fn domain(&self) -> ChartDomain {
        let n = self.dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for corner in 0..(1usize << n) {
            let p: Vec<f64> = (0..n)
                .map(|a| {
                    if (corner >> a) & 1 == 1 {
                        self.upper[a]
                    } else {
                        self.lower[a]
                    }
                })
                .collect();
            let u = &self.matrix * nalgebra::DVector::from_vec(p);
            for a in 0..n {
                lo[a] = lo[a].min(u[a]);
                hi[a] = hi[a].max(u[a]);
            }
        }
        ChartDomain::Box { lower: lo, upper: hi }
    }

    fn to_coords(&self, p: &[f64]) -> Option<Vec<f64>> {
        self.in_box(p).then(|| {
            (&self.matrix * nalgebra::DVector::from_column_slice(p))
                .iter()
                .copied()
                .collect()
        })
    }

    fn to_point(&self, u: &[f64]) -> Vec<f64> {
        (&self.inverse * nalgebra::DVector::from_column_slice(u))
            .iter()
            .copied()
            .collect()
    }

    /// `G = A^{-T} A^{-1}`.
    fn metric(&self, _u: &[f64]) -> Metric {
        Metric::new(self.inverse.transpose() * &self.inverse).expect("invertible chart")
    }

    fn partition_weight(&self, u: &[f64]) -> f64 {
        if self.in_box(&self.to_point(u)) {
            1.0
        } else {
            0.0
        }
    }

    fn inverse_jacobian(&self, _u: &[f64]) -> DMatrix<f64> {
        self.inverse.clone()
    }
}
