use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::fd_jacobian;
use crate::linear::FiberLinearMap;
use crate::manifolds::{Chart, ChartDomain};

/// Point evaluation and (optionally analytic) derivative of a map ℝⁿ → ℝᵐ.
pub trait MapKernel: Debug + Send + Sync {
    fn src_dim(&self) -> usize;
    fn dst_dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    /// Analytic derivative; `None` selects finite differences.
    fn deriv(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

/// Catalogue metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapTags {
    pub is_proper: bool,
    pub known_degree: Option<i64>,
    pub branch_locus: Option<String>,
}

/// A named map with derivative and tags.
#[derive(Debug, Clone)]
pub struct DifferentiableMap {
    name: String,
    kernel: Arc<dyn MapKernel>,
    fd_step: f64,
    tags: MapTags,
    domain: Option<ChartDomain>,
}

impl DifferentiableMap {
    pub fn new(name: impl Into<String>, kernel: Arc<dyn MapKernel>, tags: MapTags) -> Self {
        Self {
            name: name.into(),
            kernel,
            fd_step: 1e-6,
            tags,
            domain: None,
        }
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn with_domain(mut self, domain: ChartDomain) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tags(&self) -> &MapTags {
        &self.tags
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// Source region, when narrower than all of ℝⁿ.
    pub fn domain(&self) -> Option<&ChartDomain> {
        self.domain.as_ref()
    }

    pub fn src_dim(&self) -> usize {
        self.kernel.src_dim()
    }

    pub fn dst_dim(&self) -> usize {
        self.kernel.dst_dim()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.kernel.eval(x)
    }

    /// Evaluation that rejects non-finite images.
    pub fn try_eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = self.kernel.eval(x);
        if y.iter().all(|v| v.is_finite()) {
            Ok(y)
        } else {
            Err(Error::OutsideDomain)
        }
    }

    /// Jacobian matrix (analytic when available).
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.kernel.deriv(x).unwrap_or_else(|| self.fd_jacobian(x))
    }

    pub fn fd_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        fd_jacobian(|p| self.kernel.eval(p), x, self.fd_step)
    }

    pub fn has_analytic_derivative(&self, x: &[f64]) -> bool {
        self.kernel.deriv(x).is_some()
    }

    /// `Df(x)` between Euclidean fibres.
    pub fn deriv(&self, x: &[f64]) -> Result<FiberLinearMap> {
        FiberLinearMap::euclidean(self.jacobian(x))
    }

    /// `outer ∘ self`.
    pub fn then(&self, outer: &DifferentiableMap) -> Result<DifferentiableMap> {
        if self.dst_dim() != outer.src_dim() {
            return Err(Error::DimensionMismatch {
                expected: outer.src_dim(),
                found: self.dst_dim(),
            });
        }
        let tags = MapTags {
            is_proper: self.tags.is_proper && outer.tags.is_proper,
            known_degree: self
                .tags
                .known_degree
                .zip(outer.tags.known_degree)
                .map(|(a, b)| a * b),
            branch_locus: None,
        };
        let mut out = DifferentiableMap::new(
            format!("{}∘{}", outer.name, self.name),
            Arc::new(Composite {
                inner: self.clone(),
                outer: outer.clone(),
            }),
            tags,
        );
        out.domain = self.domain.clone();
        Ok(out)
    }

    /// Largest `|Df_analytic - Df_fd|` relative to `max(1e-6, 10·h²·scale)`
    /// over `points`; values ≤ 1 mean agreement.
    pub fn derivative_consistency(&self, points: &[Vec<f64>]) -> f64 {
        let step = 1e-5;
        points
            .iter()
            .filter_map(|x| {
                let a = self.kernel.deriv(x)?;
                let fd = fd_jacobian(|p| self.kernel.eval(p), x, step);
                let scale = a.abs().max().max(1.0);
                let tol = f64::max(1e-6, 10.0 * step * step * scale);
                Some((a - fd).abs().max() / tol)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug)]
struct Composite {
    inner: DifferentiableMap,
    outer: DifferentiableMap,
}

impl MapKernel for Composite {
    fn src_dim(&self) -> usize {
        self.inner.src_dim()
    }
    fn dst_dim(&self) -> usize {
        self.outer.dst_dim()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.outer.eval(&self.inner.eval(x))
    }
    fn deriv(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.outer.jacobian(&self.inner.eval(x)) * self.inner.jacobian(x))
    }
}

#[derive(Debug)]
struct Linear {
    matrix: DMatrix<f64>,
}

impl MapKernel for Linear {
    fn src_dim(&self) -> usize {
        self.matrix.ncols()
    }
    fn dst_dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (&self.matrix * nalgebra::DVector::from_column_slice(x))
            .iter()
            .copied()
            .collect()
    }
    fn deriv(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.matrix.clone())
    }
}

/// `(r, θ) ↦ (r, kθ)`.
#[derive(Debug)]
struct Winding {
    k: u32,
    dim: usize,
}

fn rotation(t: f64) -> DMatrix<f64> {
    let (s, c) = t.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

impl MapKernel for Winding {
    fn src_dim(&self) -> usize {
        self.dim
    }
    fn dst_dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let r = x[0].hypot(x[1]);
        let t = self.k as f64 * x[1].atan2(x[0]);
        let mut y = x.to_vec();
        y[0] = r * t.cos();
        y[1] = r * t.sin();
        y
    }
    /// `R(kθ) diag(1, k) R(θ)ᵀ` off the axis; zero on it.
    fn deriv(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let mut d = DMatrix::identity(self.dim, self.dim);
        let planar = if x[0] == 0.0 && x[1] == 0.0 {
            DMatrix::zeros(2, 2)
        } else {
            let t = x[1].atan2(x[0]);
            let k = self.k as f64;
            rotation(k * t) * DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, k]) * rotation(-t)
        };
        d.view_mut((0, 0), (2, 2)).copy_from(&planar);
        Some(d)
    }
}

/// `x ↦ |x|^{a-1} x`.
#[derive(Debug)]
struct RadialStretch {
    a: f64,
    dim: usize,
}

impl MapKernel for RadialStretch {
    fn src_dim(&self) -> usize {
        self.dim
    }
    fn dst_dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return vec![0.0; self.dim];
        }
        let s = r.powf(self.a - 1.0);
        x.iter().map(|v| s * v).collect()
    }
    /// `r^{a-1} (I + (a-1) x̂ x̂ᵀ)`; zero at the origin unless `a = 1`.
    fn deriv(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.dim;
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Some(if self.a == 1.0 {
                DMatrix::identity(n, n)
            } else {
                DMatrix::zeros(n, n)
            });
        }
        let s = r.powf(self.a - 1.0);
        Some(DMatrix::from_fn(n, n, |i, j| {
            s * ((i == j) as u8 as f64 + (self.a - 1.0) * x[i] * x[j] / (r * r))
        }))
    }
}

/// Complex Möbius transformation `z ↦ (az + b)/(cz + d)`.
#[derive(Debug)]
struct Mobius {
    coef: [(f64, f64); 4],
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

fn cadd(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

impl MapKernel for Mobius {
    fn src_dim(&self) -> usize {
        2
    }
    fn dst_dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let [a, b, c, d] = self.coef;
        let z = (x[0], x[1]);
        let den = cadd(cmul(c, z), d);
        if den.0 == 0.0 && den.1 == 0.0 {
            return vec![f64::INFINITY; 2];
        }
        let w = cdiv(cadd(cmul(a, z), b), den);
        vec![w.0, w.1]
    }
    /// Multiplication by `f'(z) = (ad - bc)/(cz + d)²`.
    fn deriv(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let [a, b, c, d] = self.coef;
        let z = (x[0], x[1]);
        let den = cadd(cmul(c, z), d);
        let det = cadd(cmul(a, d), {
            let bc = cmul(b, c);
            (-bc.0, -bc.1)
        });
        let w = cdiv(det, cmul(den, den));
        Some(DMatrix::from_row_slice(2, 2, &[w.0, -w.1, w.1, w.0]))
    }
}

/// `ψ ∘ f ∘ φ⁻¹` on chart coordinates.
#[derive(Debug)]
struct Conjugate {
    f: DifferentiableMap,
    phi: Arc<dyn Chart>,
    psi: Arc<dyn Chart>,
}

/// Differential of a chart at `φ⁻¹(v)` as the left inverse of `Dφ⁻¹(v)`.
fn chart_differential(chart: &dyn Chart, v: &[f64]) -> DMatrix<f64> {
    let j = chart.inverse_jacobian(v);
    let jt = j.transpose();
    (&jt * &j)
        .try_inverse()
        .map(|g| g * jt)
        .unwrap_or_else(|| DMatrix::from_element(j.ncols(), j.nrows(), f64::NAN))
}

impl MapKernel for Conjugate {
    fn src_dim(&self) -> usize {
        self.phi.dim()
    }
    fn dst_dim(&self) -> usize {
        self.psi.dim()
    }
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let q = self.f.eval(&self.phi.to_point(u));
        self.psi
            .to_coords(&q)
            .unwrap_or_else(|| vec![f64::NAN; self.psi.dim()])
    }
    fn deriv(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        let p = self.phi.to_point(u);
        let q = self.f.eval(&p);
        let v = self.psi.to_coords(&q)?;
        Some(chart_differential(self.psi.as_ref(), &v) * self.f.jacobian(&p) * self.phi.inverse_jacobian(u))
    }
}

/// Serializable catalogue entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Identity {
        dim: usize,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    Winding2d {
        k: u32,
    },
    Winding3d {
        k: u32,
    },
    RadialStretch {
        a: f64,
        #[serde(default = "two")]
        dim: usize,
    },
    Mobius2d {
        a: [f64; 2],
        b: [f64; 2],
        c: [f64; 2],
        d: [f64; 2],
    },
}

fn two() -> usize {
    2
}

impl MapSpec {
    pub fn build(&self) -> Result<DifferentiableMap> {
        match self {
            MapSpec::Identity { dim } => identity(*dim),
            MapSpec::Linear { matrix } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(invalid("linear", "matrix must be square and nonempty"));
                }
                linear(DMatrix::from_fn(n, n, |i, j| matrix[i][j]))
            }
            MapSpec::Winding2d { k } => winding2d(*k),
            MapSpec::Winding3d { k } => winding3d(*k),
            MapSpec::RadialStretch { a, dim } => radial_stretch(*a, *dim),
            MapSpec::Mobius2d { a, b, c, d } => mobius2d([*a, *b, *c, *d]),
        }
    }

    pub fn label(&self) -> String {
        match self {
            MapSpec::Identity { dim } => format!("identity({dim})"),
            MapSpec::Linear { matrix } => format!("linear({matrix:?})"),
            MapSpec::Winding2d { k } => format!("winding2d({k})"),
            MapSpec::Winding3d { k } => format!("winding3d({k})"),
            MapSpec::RadialStretch { a, dim } => format!("radial_stretch({a},{dim})"),
            MapSpec::Mobius2d { a, b, c, d } => format!("mobius2d({a:?},{b:?},{c:?},{d:?})"),
        }
    }
}

fn invalid(map: &str, reason: &str) -> Error {
    Error::InvalidParams {
        map: map.into(),
        reason: reason.into(),
    }
}

/// Looks up a catalogue map by name with flat numeric parameters:
/// `identity [n]`, `linear [n² entries, row-major]`, `winding2d [k]`,
/// `winding3d [k]`, `radial_stretch [a] | [a, n]`,
/// `mobius2d [a, b, c, d as re/im pairs]`.
pub fn map_library(name: &str, params: &[f64]) -> Result<DifferentiableMap> {
    let int = |v: f64, map: &str| -> Result<u32> {
        if v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64 {
            Err(invalid(map, "k must be a positive integer"))
        } else {
            Ok(v as u32)
        }
    };
    let need = |len: usize| -> Result<()> {
        if params.len() == len {
            Ok(())
        } else {
            Err(invalid(
                name,
                &format!("expected {len} parameters, got {}", params.len()),
            ))
        }
    };
    match name {
        "identity" => {
            need(1)?;
            identity(int(params[0], name)? as usize)
        }
        "linear" => {
            let n = (params.len() as f64).sqrt().round() as usize;
            if n == 0 || n * n != params.len() {
                return Err(invalid(name, "expected n² entries"));
            }
            linear(DMatrix::from_row_slice(n, n, params))
        }
        "winding2d" => {
            need(1)?;
            winding2d(int(params[0], name)?)
        }
        "winding3d" => {
            need(1)?;
            winding3d(int(params[0], name)?)
        }
        "radial_stretch" => match params {
            [a] => radial_stretch(*a, 2),
            [a, n] => radial_stretch(*a, int(*n, name)? as usize),
            _ => Err(invalid(name, "expected [a] or [a, n]")),
        },
        "mobius2d" => {
            need(8)?;
            let p = |i: usize| [params[2 * i], params[2 * i + 1]];
            mobius2d([p(0), p(1), p(2), p(3)])
        }
        "chart_conjugate" => Err(invalid(name, "build with chart_conjugate(f, φ, ψ)")),
        other => Err(Error::UnknownMap(other.into())),
    }
}

pub fn identity(dim: usize) -> Result<DifferentiableMap> {
    if dim == 0 {
        return Err(invalid("identity", "dimension must be positive"));
    }
    let mut m = linear(DMatrix::identity(dim, dim))?;
    m.name = format!("identity({dim})");
    Ok(m)
}

pub fn linear(matrix: DMatrix<f64>) -> Result<DifferentiableMap> {
    if !matrix.is_square() || matrix.nrows() == 0 {
        return Err(invalid("linear", "matrix must be square and nonempty"));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear map matrix"));
    }
    let det = matrix.determinant();
    let tags = MapTags {
        is_proper: det != 0.0,
        known_degree: (det != 0.0).then_some(det.signum() as i64),
        branch_locus: None,
    };
    Ok(DifferentiableMap::new(
        "linear",
        Arc::new(Linear { matrix }),
        tags,
    ))
}

pub fn winding2d(k: u32) -> Result<DifferentiableMap> {
    if k < 1 {
        return Err(invalid("winding2d", "k must be at least 1"));
    }
    Ok(DifferentiableMap::new(
        format!("winding2d({k})"),
        Arc::new(Winding { k, dim: 2 }),
        MapTags {
            is_proper: true,
            known_degree: Some(k as i64),
            branch_locus: (k > 1).then(|| "origin".to_string()),
        },
    ))
}

/// Planar winding times the identity on the third axis.
pub fn winding3d(k: u32) -> Result<DifferentiableMap> {
    if k < 1 {
        return Err(invalid("winding3d", "k must be at least 1"));
    }
    Ok(DifferentiableMap::new(
        format!("winding3d({k})"),
        Arc::new(Winding { k, dim: 3 }),
        MapTags {
            is_proper: true,
            known_degree: Some(k as i64),
            branch_locus: (k > 1).then(|| "x3 axis".to_string()),
        },
    ))
}

pub fn radial_stretch(a: f64, dim: usize) -> Result<DifferentiableMap> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid("radial_stretch", "a must be positive"));
    }
    if dim == 0 {
        return Err(invalid("radial_stretch", "dimension must be positive"));
    }
    Ok(DifferentiableMap::new(
        format!("radial_stretch({a})"),
        Arc::new(RadialStretch { a, dim }),
        MapTags {
            is_proper: true,
            known_degree: Some(1),
            branch_locus: None,
        },
    ))
}

/// `coef = [a, b, c, d]` as `[re, im]` pairs.
pub fn mobius2d(coef: [[f64; 2]; 4]) -> Result<DifferentiableMap> {
    let c: [(f64, f64); 4] = coef.map(|p| (p[0], p[1]));
    let det = cadd(cmul(c[0], c[3]), {
        let bc = cmul(c[1], c[2]);
        (-bc.0, -bc.1)
    });
    if det.0 == 0.0 && det.1 == 0.0 {
        return Err(invalid("mobius2d", "ad - bc must be nonzero"));
    }
    let affine = c[2] == (0.0, 0.0);
    Ok(DifferentiableMap::new(
        "mobius2d",
        Arc::new(Mobius { coef: c }),
        MapTags {
            is_proper: affine,
            known_degree: Some(1),
            branch_locus: None,
        },
    ))
}

/// `ψ ∘ f ∘ φ⁻¹`, defined on the coordinate domain of `φ`. Points whose
/// image leaves the chart `ψ` evaluate to NaN.
pub fn chart_conjugate(
    f: &DifferentiableMap,
    phi: Arc<dyn Chart>,
    psi: Arc<dyn Chart>,
) -> Result<DifferentiableMap> {
    let domain = phi.domain();
    let name = format!("conjugate({})", f.name());
    Ok(DifferentiableMap::new(
        name,
        Arc::new(Conjugate {
            f: f.clone(),
            phi,
            psi,
        }),
        MapTags {
            is_proper: false,
            known_degree: None,
            branch_locus: f.tags.branch_locus.clone(),
        },
    )
    .with_domain(domain))
}
