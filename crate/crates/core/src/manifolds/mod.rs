//! Round sphere, flat torus and Euclidean boxes with explicit atlases.

mod chart;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use chart::{
    Chart, ChartDomain, ExpChart, GraphChart, LinearChart, StereographicChart, TranslationChart,
};

use crate::error::{Error, Result};
use crate::exterior::Metric;
use crate::forms::bump;
use crate::linalg::fd_jacobian;
use crate::linear::{svd_analysis, FiberLinearMap};

/// Supported manifolds.
#[derive(Debug, Clone, PartialEq)]
pub enum Manifold {
    /// Unit sphere in ℝ³.
    Sphere,
    /// `ℝ²/ℤ²`, points represented in `[0,1)²`.
    FlatTorus,
    /// Open box in ℝⁿ.
    EuclideanBox { lower: Vec<f64>, upper: Vec<f64> },
}

impl Manifold {
    /// Parses `sphere`, `flat_torus` or `euclidean_box` (unit square).
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "sphere" => Ok(Manifold::Sphere),
            "flat_torus" => Ok(Manifold::FlatTorus),
            "euclidean_box" => Ok(Manifold::EuclideanBox {
                lower: vec![0.0; 2],
                upper: vec![1.0; 2],
            }),
            other => Err(Error::Unsupported(format!("manifold '{other}'"))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Manifold::Sphere => "sphere",
            Manifold::FlatTorus => "flat_torus",
            Manifold::EuclideanBox { .. } => "euclidean_box",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::Sphere | Manifold::FlatTorus => 2,
            Manifold::EuclideanBox { lower, .. } => lower.len(),
        }
    }

    /// Total Riemannian volume.
    pub fn volume(&self) -> f64 {
        match self {
            Manifold::Sphere => 4.0 * PI,
            Manifold::FlatTorus => 1.0,
            Manifold::EuclideanBox { lower, upper } => lower.iter().zip(upper).map(|(l, u)| u - l).product(),
        }
    }

    /// Distance used for bump supports: chordal on the sphere, wrapped on
    /// the torus, Euclidean on boxes.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Manifold::FlatTorus => p
                .iter()
                .zip(q)
                .map(|(a, b)| {
                    let d = (a - b) - (a - b + 0.5).floor();
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            _ => p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Deterministic, roughly uniform sample of about `count` points
    /// (Fibonacci lattice on the sphere, tensor lattices otherwise).
    pub fn sample_points(&self, count: usize) -> Vec<Vec<f64>> {
        match self {
            Manifold::Sphere => {
                let golden = PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|i| {
                        let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = golden * i as f64;
                        vec![r * phi.cos(), r * phi.sin(), z]
                    })
                    .collect()
            }
            Manifold::FlatTorus => {
                let m = (count as f64).sqrt().ceil() as usize;
                let mut out = Vec::with_capacity(m * m);
                for i in 0..m {
                    for j in 0..m {
                        out.push(vec![i as f64 / m as f64, j as f64 / m as f64]);
                    }
                }
                out
            }
            Manifold::EuclideanBox { lower, upper } => {
                let n = lower.len();
                let m = (count as f64).powf(1.0 / n as f64).ceil() as usize;
                let total = m.pow(n as u32);
                (0..total)
                    .map(|mut idx| {
                        let mut p = vec![0.0; n];
                        for a in (0..n).rev() {
                            let i = idx % m;
                            idx /= m;
                            p[a] = lower[a] + (i as f64 + 0.5) / m as f64 * (upper[a] - lower[a]);
                        }
                        p
                    })
                    .collect()
            }
        }
    }
}

/// Metric of a chart as a function of its coordinates.
#[derive(Debug, Clone)]
pub struct MetricField {
    chart: Arc<dyn Chart>,
}

impl MetricField {
    pub fn new(chart: Arc<dyn Chart>) -> Self {
        Self { chart }
    }

    pub fn at(&self, u: &[f64]) -> Metric {
        self.chart.metric(u)
    }

    /// Re-validates the Gram matrix at every sample inside the domain
    /// (symmetric, positive definite, finite) and returns how many were checked.
    pub fn check(&self, samples: &[Vec<f64>]) -> Result<usize> {
        let domain = self.chart.domain();
        let mut checked = 0;
        for u in samples.iter().filter(|u| domain.contains(u)) {
            Metric::new(self.at(u).gram().clone())?;
            checked += 1;
        }
        Ok(checked)
    }
}

/// A manifold together with an oriented atlas.
#[derive(Debug, Clone)]
pub struct ChartAtlas {
    manifold: Manifold,
    charts: Vec<Arc<dyn Chart>>,
}

/// Coordinate radius of the stereographic charts.
pub const STEREOGRAPHIC_RADIUS: f64 = 2.0;
/// Coordinate radius of the six graph charts of the sphere.
pub const GRAPH_RADIUS: f64 = 0.95;
/// Half-width of the torus translation charts.
pub const TORUS_HALF_WIDTH: f64 = 0.375;

impl ChartAtlas {
    pub fn new(manifold: Manifold, charts: Vec<Arc<dyn Chart>>) -> Result<Self> {
        if charts.is_empty() {
            return Err(Error::Unsupported("atlas without charts".into()));
        }
        let dim = manifold.dim();
        if let Some(c) = charts.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
        Ok(Self { manifold, charts })
    }

    /// Stereographic projections from both poles. With `reflect` the
    /// north-pole chart is composed with `(x₁, x₂) ↦ (x₁, -x₂)` so both
    /// charts induce the outward orientation.
    pub fn sphere_stereographic(reflect: bool) -> Self {
        let charts: Vec<Arc<dyn Chart>> = vec![
            Arc::new(StereographicChart::new(true, reflect, STEREOGRAPHIC_RADIUS).unwrap()),
            Arc::new(StereographicChart::new(false, false, STEREOGRAPHIC_RADIUS).unwrap()),
        ];
        Self {
            manifold: Manifold::Sphere,
            charts,
        }
    }

    /// Six graph charts over the coordinate hemispheres.
    pub fn sphere_graphs() -> Self {
        let mut charts: Vec<Arc<dyn Chart>> = Vec::new();
        for axis in 0..3 {
            for positive in [true, false] {
                charts.push(Arc::new(GraphChart::new(axis, positive, GRAPH_RADIUS).unwrap()));
            }
        }
        Self {
            manifold: Manifold::Sphere,
            charts,
        }
    }

    /// Four translation charts centred at `{0, 1/2}²`.
    pub fn flat_torus() -> Self {
        let mut charts: Vec<Arc<dyn Chart>> = Vec::new();
        for cx in [0.0, 0.5] {
            for cy in [0.0, 0.5] {
                charts.push(Arc::new(
                    TranslationChart::new([cx, cy], TORUS_HALF_WIDTH).unwrap(),
                ));
            }
        }
        Self {
            manifold: Manifold::FlatTorus,
            charts,
        }
    }

    /// Single identity chart on a box.
    pub fn euclidean_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let chart = LinearChart::identity(lower.clone(), upper.clone())?;
        Ok(Self {
            manifold: Manifold::EuclideanBox { lower, upper },
            charts: vec![Arc::new(chart)],
        })
    }

    /// Default atlas for a manifold id.
    pub fn for_manifold(id: &str) -> Result<Self> {
        match Manifold::from_id(id)? {
            Manifold::Sphere => Ok(Self::sphere_stereographic(true)),
            Manifold::FlatTorus => Ok(Self::flat_torus()),
            Manifold::EuclideanBox { lower, upper } => Self::euclidean_box(lower, upper),
        }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn charts(&self) -> &[Arc<dyn Chart>] {
        &self.charts
    }

    pub fn metric_field(&self, chart: usize) -> MetricField {
        MetricField::new(self.charts[chart].clone())
    }

    /// Fraction of `count` manifold samples lying in at least one chart.
    pub fn coverage(&self, count: usize) -> f64 {
        let pts = self.manifold.sample_points(count);
        let covered = pts
            .iter()
            .filter(|p| self.charts.iter().any(|c| c.to_coords(p).is_some()))
            .count();
        covered as f64 / pts.len() as f64
    }

    /// Unnormalized partition weights of every chart at `p`.
    fn raw_weights(&self, p: &[f64]) -> f64 {
        self.charts
            .iter()
            .map(|c| c.to_coords(p).map_or(0.0, |u| c.partition_weight(&u)))
            .sum()
    }

    /// Largest deviation from 1 of the normalized partition of unity over
    /// `count` manifold samples; `∞` when some sample has no positive weight.
    pub fn partition_deviation(&self, count: usize) -> f64 {
        self.manifold
            .sample_points(count)
            .par_iter()
            .map(|p| {
                let total = self.raw_weights(p);
                if !(total > 0.0) {
                    return f64::INFINITY;
                }
                let sum: f64 = self
                    .charts
                    .iter()
                    .map(|c| c.to_coords(p).map_or(0.0, |u| c.partition_weight(&u) / total))
                    .sum();
                (sum - 1.0).abs()
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Largest of `max(|Dφ|, 1/l(Dφ))` over sample points of the chart domain,
/// measured with the chart metric on the source and the Euclidean metric on
/// the target. Returns `∞` if a sampled differential is degenerate.
pub fn bilipschitz_constant_estimate(chart: &dyn Chart, samples: usize) -> Result<f64> {
    let n = chart.dim();
    let pts = domain_samples(&chart.domain(), n, samples.max(1));
    let id = DMatrix::identity(n, n);
    let mut worst: f64 = 1.0;
    for u in &pts {
        let map = FiberLinearMap::new(id.clone(), chart.metric(u), Metric::identity(n))?;
        let s = svd_analysis(&map);
        if s.lmin <= 0.0 {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(s.opnorm).max(1.0 / s.lmin);
    }
    Ok(worst)
}

/// Deterministic samples of a chart domain, including points on its
/// boundary (limits of interior points).
pub fn domain_samples(domain: &ChartDomain, dim: usize, count: usize) -> Vec<Vec<f64>> {
    match domain {
        ChartDomain::Disk { radius } if dim == 2 => {
            // rings at radii (i/m)·r with the outermost on the boundary
            let rings = ((count as f64).sqrt().ceil() as usize).max(1);
            let per_ring = count.div_ceil(rings).max(1);
            let mut out = vec![vec![0.0, 0.0]];
            for i in 1..=rings {
                let rho = radius * i as f64 / rings as f64;
                for j in 0..per_ring {
                    let t = 2.0 * PI * (j as f64 + 0.5 * (i % 2) as f64) / per_ring as f64;
                    out.push(vec![rho * t.cos(), rho * t.sin()]);
                }
            }
            out
        }
        ChartDomain::Disk { radius } => {
            let m = ((count as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
            lattice(&vec![-radius; dim], &vec![*radius; dim], m)
                .into_iter()
                .filter(|u| u.iter().map(|x| x * x).sum::<f64>() <= radius * radius)
                .collect()
        }
        ChartDomain::Box { lower, upper } => {
            let m = ((count as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
            lattice(lower, upper, m)
        }
    }
}

fn lattice(lower: &[f64], upper: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = lower.len();
    (0..m.pow(n as u32))
        .map(|mut idx| {
            let mut p = vec![0.0; n];
            for a in (0..n).rev() {
                let i = idx % m;
                idx /= m;
                p[a] = lower[a] + i as f64 / (m - 1) as f64 * (upper[a] - lower[a]);
            }
            p
        })
        .collect()
}

/// Inverse exponential chart of the unit sphere about `center`.
pub fn exp_chart(manifold: &Manifold, center: &[f64], radius: f64) -> Result<ExpChart> {
    if *manifold != Manifold::Sphere {
        return Err(Error::Unsupported(format!(
            "exponential chart on {}",
            manifold.id()
        )));
    }
    ExpChart::new(center, radius)
}

/// `∫_M f` using the bump partition of unity subordinate to the atlas and
/// trapezoidal quadrature with `samples_per_axis` nodes per chart axis.
pub fn riemannian_integral<F>(atlas: &ChartAtlas, f: F, samples_per_axis: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dev = atlas.partition_deviation(10_000);
    if !(dev <= 1e-8) {
        return Err(Error::PartitionOfUnity);
    }
    let n = atlas.manifold.dim();
    let mut total = 0.0;
    for chart in &atlas.charts {
        let domain = chart.domain();
        let grid = domain.bounding_grid(n, samples_per_axis)?;
        let sum: f64 = (0..grid.node_count())
            .into_par_iter()
            .map(|idx| {
                let u = grid.point(idx);
                if !domain.contains(&u) {
                    return 0.0;
                }
                let w = chart.partition_weight(&u);
                if w == 0.0 {
                    return 0.0;
                }
                let p = chart.to_point(&u);
                let psi = w / atlas.raw_weights(&p);
                psi * f(&p) * chart.volume_density(&u) * grid.trapezoid_weight(idx)
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        total += sum;
    }
    Ok(total)
}

/// Integral of `g` over one chart: `∫ g(φ⁻¹(u)) √det G(u) du`.
pub fn chart_integral<F>(chart: &dyn Chart, g: F, samples_per_axis: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let domain = chart.domain();
    let grid = domain.bounding_grid(chart.dim(), samples_per_axis)?;
    let vals: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map(|idx| {
            let u = grid.point(idx);
            if !domain.contains(&u) {
                return 0.0;
            }
            g(&chart.to_point(&u)) * chart.volume_density(&u) * grid.trapezoid_weight(idx)
        })
        .collect();
    Ok(vals.iter().sum())
}

/// Outcome of [`transition_check`] for one ordered chart pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPair {
    pub from: usize,
    pub to: usize,
    pub samples: usize,
    pub min_jacobian: f64,
    pub max_roundtrip: f64,
}

/// Aggregate transition report for an atlas.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionReport {
    pub pairs: Vec<TransitionPair>,
    /// Total overlap samples examined.
    pub samples: usize,
    pub min_jacobian: f64,
    pub max_roundtrip: f64,
    /// `false` when some transition Jacobian is non-positive.
    pub orientation_consistent: bool,
    /// `|∫_{φ_i} b - ∫_{φ_j} b|` for a bump `b` supported in the overlap of
    /// the first overlapping pair.
    pub bump_discrepancy: f64,
    /// Common value of that bump integral (chart `i`).
    pub bump_integral: f64,
}

/// Samples transition maps `φ_j ∘ φ_i⁻¹` on chart overlaps: sign of the
/// Jacobian, round-trip error, and agreement of a bump integral computed in
/// two overlapping charts.
pub fn transition_check(atlas: &ChartAtlas, samples: usize) -> Result<TransitionReport> {
    if atlas.charts.len() < 2 {
        return Err(Error::Unsupported("transition check needs two charts".into()));
    }
    let pool = atlas.manifold.sample_points(20_000);
    let mut pairs = Vec::new();
    let mut best: Option<(f64, usize, usize, Vec<f64>)> = None;
    for i in 0..atlas.charts.len() {
        for j in 0..atlas.charts.len() {
            if i == j {
                continue;
            }
            let (ci, cj) = (&atlas.charts[i], &atlas.charts[j]);
            let (di, dj) = (ci.domain(), cj.domain());
            let all: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = pool
                .iter()
                .filter_map(|p| Some((p.clone(), ci.to_coords(p)?, cj.to_coords(p)?)))
                .filter(|(_, u, v)| di.margin(u) > 1e-4 && dj.margin(v) > 1e-4)
                .collect();
            // evenly spaced subsample of the whole overlap
            let take = samples.max(1).min(all.len());
            let overlap: Vec<_> = (0..take).map(|t| all[t * all.len() / take].clone()).collect();
            if overlap.is_empty() {
                continue;
            }
            let results: Vec<(f64, f64)> = overlap
                .par_iter()
                .map(|(_, u, v)| {
                    let tau = |x: &[f64]| {
                        let q = ci.to_point(x);
                        cj.to_coords(&q).unwrap_or_else(|| vec![f64::NAN; x.len()])
                    };
                    let jac = fd_jacobian(tau, u, 1e-6).determinant();
                    let back = ci
                        .to_coords(&cj.to_point(v))
                        .map(|w| w.iter().zip(u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                        .unwrap_or(f64::INFINITY);
                    (jac, back)
                })
                .collect();
            let min_jacobian = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
            let max_roundtrip = results.iter().map(|r| r.1).fold(0.0, f64::max);
            for (p, u, v) in &overlap {
                let m = di.margin(u).min(dj.margin(v));
                if best.as_ref().is_none_or(|b| m > b.0) {
                    best = Some((m, i, j, p.clone()));
                }
            }
            pairs.push(TransitionPair {
                from: i,
                to: j,
                samples: overlap.len(),
                min_jacobian,
                max_roundtrip,
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::Unsupported("atlas charts do not overlap".into()));
    }
    let (_, i, j, p0) = best.expect("some overlap sample");
    let rho = match atlas.manifold {
        Manifold::Sphere => 0.3,
        _ => 0.1,
    };
    let manifold = atlas.manifold.clone();
    let b = |p: &[f64]| bump((manifold.distance(p, &p0) / rho).powi(2));
    let ii = chart_integral(atlas.charts[i].as_ref(), b, 257)?;
    let ij = chart_integral(atlas.charts[j].as_ref(), b, 257)?;
    let min_jacobian = pairs.iter().map(|p| p.min_jacobian).fold(f64::INFINITY, f64::min);
    Ok(TransitionReport {
        samples: pairs.iter().map(|p| p.samples).sum(),
        max_roundtrip: pairs.iter().map(|p| p.max_roundtrip).fold(0.0, f64::max),
        orientation_consistent: min_jacobian > 0.0,
        min_jacobian,
        pairs,
        bump_discrepancy: (ii - ij).abs(),
        bump_integral: ii,
    })
}
