//! Preimage counting, local index, degree sums and normal neighbourhoods.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::GridDomain;
use crate::qr::{DifferentiableMap, Region};

/// A located preimage with its final residual `|f(x) - y|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub x: Vec<f64>,
    pub residual: f64,
}

/// Preimages of `y` inside a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreimageFiber {
    pub y: Vec<f64>,
    pub points: Vec<FiberPoint>,
    pub count: usize,
    /// `y` lies within `2h + Lip·h/2` of the sampled image of the region
    /// boundary.
    pub unstable: bool,
}

/// Newton iterations per seed.
pub const NEWTON_ITERATIONS: usize = 20;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(s, t)| (s - t) * (s - t))
        .sum::<f64>()
        .sqrt()
}

/// Reusable preimage search: map values on a scan grid restricted to a
/// region, plus the image of the region boundary.
#[derive(Debug, Clone)]
pub struct PreimageSolver {
    f: DifferentiableMap,
    region: Region,
    grid: GridDomain,
    inside: Vec<bool>,
    values: Vec<Vec<f64>>,
    boundary_images: Vec<Vec<f64>>,
    lipschitz: f64,
    tolerance_scale: f64,
    separation: f64,
}

impl PreimageSolver {
    pub fn new(f: &DifferentiableMap, region: &Region, grid: &GridDomain) -> Result<Self> {
        let n = grid.dim();
        if f.src_dim() != n || f.dst_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.src_dim(),
            });
        }
        let inside = region.mask(grid);
        let values: Vec<Vec<f64>> = (0..grid.node_count())
            .into_par_iter()
            .map(|i| {
                if inside[i] {
                    f.eval(&grid.point(i))
                } else {
                    Vec::new()
                }
            })
            .collect();
        // Lipschitz estimate from neighbour differences along grid edges
        let mut lipschitz: f64 = 0.0;
        let mut boundary_images = Vec::new();
        for i in 0..grid.node_count() {
            if !inside[i] {
                continue;
            }
            let mut on_boundary = grid.is_boundary(i);
            for j in grid.neighbors(i) {
                if inside[j] {
                    if j > i {
                        let d = dist(&values[i], &values[j]) / dist(&grid.point(i), &grid.point(j));
                        if d.is_finite() {
                            lipschitz = lipschitz.max(d);
                        }
                    }
                } else {
                    on_boundary = true;
                }
            }
            if on_boundary {
                boundary_images.push(values[i].clone());
            }
        }
        let diam = dist(grid.lower(), grid.upper());
        Ok(Self {
            f: f.clone(),
            region: region.clone(),
            grid: grid.clone(),
            inside,
            values,
            boundary_images,
            lipschitz,
            tolerance_scale: 1.0,
            separation: 1e-6 * diam.max(1.0),
        })
    }

    /// Lipschitz estimate of `f` on the scan grid.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn grid(&self) -> &GridDomain {
        &self.grid
    }

    /// Damped Newton polish from `x0`; returns the point and residual.
    fn newton(&self, x0: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
        let n = x0.len();
        let mut x = x0.to_vec();
        let mut fx = self.f.eval(&x);
        let mut res = dist(&fx, y);
        for _ in 0..NEWTON_ITERATIONS {
            if res == 0.0 {
                break;
            }
            let j = self.f.jacobian(&x);
            let r = DVector::from_iterator(n, fx.iter().zip(y).map(|(a, b)| a - b));
            let Some(step) = j.lu().solve(&r) else { break };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
                let fc = self.f.eval(&cand);
                let rc = dist(&fc, y);
                if rc < res {
                    x = cand;
                    fx = fc;
                    res = rc;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (x, res)
    }

    pub fn solve(&self, y: &[f64]) -> PreimageFiber {
        let g = &self.grid;
        let h = g.max_spacing();
        let n = g.dim() as f64;
        let threshold = 2.0 * self.lipschitz.max(1e-300) * h * n.sqrt();
        let d: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| if self.inside[i] { dist(v, y) } else { f64::INFINITY })
            .collect();
        let tol = 1e-8
            * self
                .tolerance_scale
                .max(y.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let mut points: Vec<FiberPoint> = Vec::new();
        for i in 0..g.node_count() {
            if !(d[i] < threshold) || g.neighbors(i).any(|j| d[j] < d[i]) {
                continue;
            }
            let (x, residual) = self.newton(&g.point(i), y);
            if residual > tol || !self.region.contains(&x) || !g.contains(&x) {
                continue;
            }
            if points.iter().any(|p| dist(&p.x, &x) < self.separation) {
                continue;
            }
            points.push(FiberPoint { x, residual });
        }
        // 2h in the image, widened by half the spacing of the sampled
        // boundary image
        let band = 2.0 * h + 0.5 * h * self.lipschitz;
        let unstable = self.boundary_images.iter().any(|b| dist(b, y) < band);
        PreimageFiber {
            y: y.to_vec(),
            count: points.len(),
            points,
            unstable,
        }
    }

    /// `N(f, y, U)` as a float, for use as a multiplicity weight.
    pub fn multiplicity(&self, y: &[f64]) -> f64 {
        self.solve(y).count as f64
    }
}

/// `N(f, y, U)` with `U = region`, scanning `grid`.
pub fn preimage_count(
    f: &DifferentiableMap,
    y: &[f64],
    region: &Region,
    grid: &GridDomain,
) -> Result<PreimageFiber> {
    Ok(PreimageSolver::new(f, region, grid)?.solve(y))
}

/// Winding number of `f - f(x)` around a circle about `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalIndex {
    pub index: i64,
    /// Distance of the raw winding number to `index`.
    pub residual: f64,
    /// Circle radius finally used.
    pub radius: f64,
}

/// Samples on each index circle.
pub const INDEX_SAMPLES: usize = 1 << 10;

fn winding_number(f: &DifferentiableMap, x: &[f64], y0: &[f64], r: f64) -> Option<f64> {
    let mut total = 0.0;
    let mut min_mod = f64::INFINITY;
    let mut max_mod: f64 = 0.0;
    let point = |t: f64| {
        let mut p = x.to_vec();
        p[0] += r * t.cos();
        p[1] += r * t.sin();
        let v = f.eval(&p);
        (v[0] - y0[0], v[1] - y0[1])
    };
    let mut prev = point(0.0);
    for s in 1..=INDEX_SAMPLES {
        let cur = point(2.0 * PI * s as f64 / INDEX_SAMPLES as f64);
        let m = cur.0.hypot(cur.1);
        min_mod = min_mod.min(m);
        max_mod = max_mod.max(m);
        let mut da = cur.1.atan2(cur.0) - prev.1.atan2(prev.0);
        if da > PI {
            da -= 2.0 * PI;
        } else if da <= -PI {
            da += 2.0 * PI;
        }
        // the angle step must be resolved by the sampling
        if da.abs() > PI / 2.0 {
            return None;
        }
        total += da;
        prev = cur;
    }
    if !(min_mod > 1e-6 * max_mod) {
        return None;
    }
    Some(total / (2.0 * PI))
}

/// Local index `i(f, x)` by the argument principle, for planar maps or
/// maps of the form (planar map) × identity, using the first two
/// coordinates. Circles of radius `r` and `r/2` must agree; otherwise the
/// radius is halved, up to eight times.
pub fn local_index_2d(f: &DifferentiableMap, x: &[f64], radius: f64) -> Result<LocalIndex> {
    if f.src_dim() < 2 || f.src_dim() != f.dst_dim() || x.len() != f.src_dim() {
        return Err(Error::Unsupported(
            "local index needs a planar (or planar × identity) map".into(),
        ));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidRadius(radius));
    }
    let y0 = f.eval(x);
    let mut r = radius;
    for _ in 0..8 {
        if let (Some(a), Some(b)) = (winding_number(f, x, &y0, r), winding_number(f, x, &y0, r / 2.0)) {
            let ia = a.round();
            let res = (a - ia).abs().max((b - ia).abs());
            if ia == b.round() && res < 0.1 {
                return Ok(LocalIndex {
                    index: ia as i64,
                    residual: res,
                    radius: r,
                });
            }
        }
        r *= 0.5;
    }
    Err(Error::IndexFailure(format!(
        "no stable winding number around {x:?} down to radius {r:e}"
    )))
}

/// One fiber of a degree-sum check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberIndices {
    pub y: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub indices: Vec<i64>,
    pub index_residuals: Vec<f64>,
    pub sum: i64,
    pub count: usize,
}

/// Degree-sum identity over a list of target points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub fibers: Vec<FiberIndices>,
    /// Target points skipped because their fiber is unstable.
    pub excluded: Vec<Vec<f64>>,
    /// Common index sum, if all retained fibers agree.
    pub degree: Option<i64>,
    /// At fibers free of branch points, the count equals the index sum.
    pub counts_match: bool,
}

/// `Σ_{x ∈ f⁻¹(y)} i(f, x)` for every `y` in `ys`.
pub fn degree_sum_check(
    f: &DifferentiableMap,
    region: &Region,
    grid: &GridDomain,
    ys: &[Vec<f64>],
) -> Result<DegreeReport> {
    let solver = PreimageSolver::new(f, region, grid)?;
    let base = 0.05 * dist(grid.lower(), grid.upper());
    let mut fibers = Vec::new();
    let mut excluded = Vec::new();
    for y in ys {
        let fiber = solver.solve(y);
        if fiber.unstable {
            excluded.push(y.clone());
            continue;
        }
        let mut indices = Vec::new();
        let mut residuals = Vec::new();
        for (a, p) in fiber.points.iter().enumerate() {
            let nearest = fiber
                .points
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .map(|(_, q)| dist(&p.x, &q.x))
                .fold(f64::INFINITY, f64::min);
            let r = base.min(0.4 * nearest);
            let li = local_index_2d(f, &p.x, r)?;
            indices.push(li.index);
            residuals.push(li.residual);
        }
        fibers.push(FiberIndices {
            y: y.clone(),
            points: fiber.points.iter().map(|p| p.x.clone()).collect(),
            sum: indices.iter().sum(),
            indices,
            index_residuals: residuals,
            count: fiber.count,
        });
    }
    let degree = fibers.first().map(|f| f.sum);
    let consistent = fibers.iter().all(|f| Some(f.sum) == degree);
    let counts_match = fibers
        .iter()
        .filter(|f| f.indices.iter().all(|&i| i == 1))
        .all(|f| f.count as i64 == f.sum);
    Ok(DegreeReport {
        fibers,
        excluded,
        degree: if consistent { degree } else { None },
        counts_match,
    })
}

/// Component of `f⁻¹ B(f(x), r)` containing `x`, with boundary diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalNeighborhood {
    pub center: Vec<f64>,
    pub radius: f64,
    pub nodes: Vec<usize>,
    /// Preimages of `f(x)` located in the component.
    pub fiber_points: usize,
    /// Fraction of lattice points of `B(f(x), r - 2h)` within `Lip·h` of the
    /// image of a component node.
    pub coverage: f64,
    /// Range of `|f(b) - f(x)|` over component boundary nodes.
    pub boundary_range: (f64, f64),
    /// Boundary images lie in `[r - Lip·h, r]`.
    pub boundary_ok: bool,
    pub diameter: f64,
}

/// Builds `U_f(x, r)` on `grid` by 2n-connected labeling. Fails when the
/// component touches the grid boundary or holds a second fiber point.
pub fn normal_neighborhood(
    f: &DifferentiableMap,
    x: &[f64],
    r: f64,
    grid: &GridDomain,
) -> Result<NormalNeighborhood> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidRadius(r));
    }
    let n = grid.dim();
    let y0 = f.eval(x);
    let values: Vec<Vec<f64>> = (0..grid.node_count())
        .into_par_iter()
        .map(|i| f.eval(&grid.point(i)))
        .collect();
    let inside: Vec<bool> = values.iter().map(|v| dist(v, &y0) < r).collect();
    let start = grid.nearest_node(x);
    if !inside[start] {
        return Err(Error::RadiusTooLarge(format!(
            "radius {r} is below the grid resolution at {x:?}"
        )));
    }
    let mut label = vec![false; grid.node_count()];
    let mut queue = VecDeque::from([start]);
    label[start] = true;
    let mut nodes = Vec::new();
    while let Some(i) = queue.pop_front() {
        nodes.push(i);
        if grid.is_boundary(i) {
            return Err(Error::RadiusTooLarge(format!(
                "component of radius {r} reaches the grid boundary"
            )));
        }
        for j in grid.neighbors(i) {
            if inside[j] && !label[j] {
                label[j] = true;
                queue.push_back(j);
            }
        }
    }
    nodes.sort_unstable();

    let h = grid.max_spacing();
    let mut lip: f64 = 0.0;
    let mut boundary = Vec::new();
    for &i in &nodes {
        let mut is_edge = false;
        for j in grid.neighbors(i) {
            let d = dist(&values[i], &values[j]) / dist(&grid.point(i), &grid.point(j));
            lip = lip.max(d);
            if !label[j] {
                is_edge = true;
            }
        }
        if is_edge {
            boundary.push(i);
        }
    }

    // fiber points inside the component
    let solver = PreimageSolver::new(f, &Region::All, grid)?;
    let fiber = solver.solve(&y0);
    let fiber_points = fiber
        .points
        .iter()
        .filter(|p| label[grid.nearest_node(&p.x)])
        .count();
    if fiber_points > 1 {
        return Err(Error::RadiusTooLarge(format!(
            "component of radius {r} contains {fiber_points} fiber points"
        )));
    }

    // image coverage by binning component images
    let cell = (lip * h).max(f64::MIN_POSITIVE);
    let key = |v: &[f64]| -> Vec<i64> { v.iter().map(|c| (c / cell).floor() as i64).collect() };
    let mut bins: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for &i in &nodes {
        bins.entry(key(&values[i])).or_default().push(i);
    }
    let inner = r - 2.0 * h;
    let mut covered = 0usize;
    let mut total = 0usize;
    if inner > 0.0 {
        let m = (inner / h).ceil() as i64;
        let mut offsets = vec![-m; n];
        'outer: loop {
            let t: Vec<f64> = (0..n).map(|a| y0[a] + offsets[a] as f64 * h).collect();
            if dist(&t, &y0) < inner {
                total += 1;
                let kt = key(&t);
                let mut found = false;
                for nb in 0..3usize.pow(n as u32) {
                    let mut k = kt.clone();
                    let mut rem = nb;
                    for c in k.iter_mut() {
                        *c += (rem % 3) as i64 - 1;
                        rem /= 3;
                    }
                    if let Some(list) = bins.get(&k) {
                        if list.iter().any(|&i| dist(&values[i], &t) <= cell) {
                            found = true;
                            break;
                        }
                    }
                }
                if found {
                    covered += 1;
                }
            }
            for o in offsets.iter_mut() {
                *o += 1;
                if *o <= m {
                    continue 'outer;
                }
                *o = -m;
            }
            break;
        }
    }
    let coverage = if total == 0 {
        1.0
    } else {
        covered as f64 / total as f64
    };

    let dists: Vec<f64> = boundary.iter().map(|&i| dist(&values[i], &y0)).collect();
    let lo = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = dists.iter().copied().fold(0.0, f64::max);
    let boundary_ok = lo >= r - lip * h * 1.000001 && hi < r;
    let pts: Vec<Vec<f64>> = boundary.iter().map(|&i| grid.point(i)).collect();
    let mut diameter: f64 = 0.0;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            diameter = diameter.max(dist(&pts[a], &pts[b]));
        }
    }
    Ok(NormalNeighborhood {
        center: x.to_vec(),
        radius: r,
        nodes,
        fiber_points,
        coverage,
        boundary_range: (lo, hi),
        boundary_ok,
        diameter,
    })
}

/// Largest `r = r_max·j/steps` for which [`normal_neighborhood`] succeeds.
pub fn normal_radius_limit(
    f: &DifferentiableMap,
    x: &[f64],
    r_max: f64,
    steps: usize,
    grid: &GridDomain,
) -> Option<f64> {
    let mut best = None;
    for j in 1..=steps {
        let r = r_max * j as f64 / steps as f64;
        match normal_neighborhood(f, x, r, grid) {
            Ok(_) => best = Some(r),
            Err(Error::RadiusTooLarge(_)) if best.is_none() => continue,
            Err(_) => break,
        }
    }
    best
}

/// Nodes where `|J_f| < 1e-10·max|Df|ⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub nodes: Vec<usize>,
    /// `count × cell volume`.
    pub measure: f64,
    pub j_tol: f64,
}

pub fn branch_set_sample(f: &DifferentiableMap, grid: &GridDomain) -> Result<BranchSample> {
    let n = grid.dim();
    if f.src_dim() != n || f.dst_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.src_dim(),
        });
    }
    let data: Vec<(f64, f64)> = (0..grid.node_count())
        .into_par_iter()
        .map(|i| {
            let d = f.jacobian(&grid.point(i));
            let op = d.clone().svd(false, false).singular_values.max();
            (d.determinant(), op)
        })
        .collect();
    let max_df_n = data.iter().map(|v| v.1.powi(n as i32)).fold(0.0, f64::max);
    let j_tol = 1e-10 * max_df_n;
    let nodes: Vec<usize> = (0..data.len()).filter(|&i| data[i].0.abs() < j_tol).collect();
    Ok(BranchSample {
        measure: nodes.len() as f64 * grid.cell_volume(),
        nodes,
        j_tol,
    })
}
