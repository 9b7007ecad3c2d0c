use serde_json::json;

use super::qr::SCAN_SAMPLES;
use super::{at_least, at_most, disk_image_radius, square, Context, Outcome, Planned, SelectedMap};
use crate::degree::{
    branch_set_sample, degree_sum_check, local_index_2d, normal_neighborhood, PreimageSolver,
};
use crate::error::Result;
use crate::forms::GridDomain;
use crate::qr::Region;

pub(crate) const FIBER_TARGETS: [[f64; 2]; 3] = [[0.3, 0.1], [-0.2, 0.5], [0.1, -0.6]];

fn targets() -> Vec<Vec<f64>> {
    FIBER_TARGETS.iter().map(|y| y.to_vec()).collect()
}

/// `(max |N - deg|, max |Σ i - deg|, max index residual)` over the fibers.
fn fibers(m: &SelectedMap, degree: i64) -> Result<(f64, f64, f64)> {
    let scan = square(-1.0, 1.0, SCAN_SAMPLES)?;
    let rep = degree_sum_check(&m.map, &Region::disk(1.0), &scan, &targets())?;
    let mut count: f64 = 0.0;
    let mut sum: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for fib in &rep.fibers {
        count = count.max((fib.count as f64 - degree as f64).abs());
        sum = sum.max((fib.sum - degree).abs() as f64);
        residual = fib.index_residuals.iter().fold(residual, |r, &v| r.max(v));
    }
    // every target must produce a fiber
    if rep.fibers.len() != FIBER_TARGETS.len() {
        count = f64::INFINITY;
        sum = f64::INFINITY;
    }
    Ok((count, sum, residual))
}

fn branch_index(m: &SelectedMap, degree: i64) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for r in [0.2, 0.01] {
        let li = local_index_2d(&m.map, &[0.0, 0.0], r)?;
        worst = worst.max((li.index - degree).abs() as f64);
        residual = residual.max(li.residual);
    }
    Ok(Outcome::new(worst).with("max_residual", residual))
}

/// Neighborhood grids are refined once so that the smallest radius spans
/// several cells.
fn neighborhood_grid(samples: usize) -> Result<GridDomain> {
    square(-1.0, 1.0, 2 * samples - 1)
}

fn neighborhood(m: &SelectedMap, samples: usize) -> Result<Outcome> {
    let g = neighborhood_grid(samples)?;
    let mut ok = true;
    let mut coverage: f64 = 1.0;
    for (x, r) in [([0.0, 0.0], 0.3), ([0.3, 0.2], 0.1)] {
        let nb = normal_neighborhood(&m.map, &x, r, &g)?;
        coverage = coverage.min(nb.coverage);
        ok &= nb.boundary_ok && nb.fiber_points == 1;
    }
    Ok(Outcome::new(if ok { coverage } else { 0.0 }).with("min_coverage", coverage))
}

fn shrinks(m: &SelectedMap, samples: usize) -> Result<Outcome> {
    let g = neighborhood_grid(samples)?;
    let diams = [0.2, 0.1, 0.05]
        .iter()
        .map(|&r| normal_neighborhood(&m.map, &[0.3, 0.2], r, &g).map(|nb| nb.diameter))
        .collect::<Result<Vec<_>>>()?;
    let stalls = diams.windows(2).filter(|w| w[1] >= w[0]).count();
    Ok(Outcome::new(stalls as f64)
        .with("diameter_0.2", diams[0])
        .with("diameter_0.1", diams[1])
        .with("diameter_0.05", diams[2]))
}

fn branch_measure(m: &SelectedMap, samples: usize) -> Result<Outcome> {
    let n = m.map.src_dim();
    let g = if n == 2 {
        square(-1.0, 1.0, samples)?
    } else {
        GridDomain::cube(n, -1.0, 1.0, (samples / 2 + 1).clamp(9, 33))?
    };
    let b = branch_set_sample(&m.map, &g)?;
    let h = g.max_spacing();
    Ok(Outcome::new(b.measure / (h * h))
        .with("nodes", b.nodes.len() as f64)
        .with("h", h))
}

/// Nodes of a target grid where `N(f, y, B(0,1))` differs from `deg` inside
/// the unit disk or from 0 outside, away from the critical values
/// `{0} ∪ S¹`. Targets within the solver's resolution band of a critical
/// value are skipped.
fn multiplicity_constant(m: &SelectedMap, samples: usize, degree: i64) -> Result<Outcome> {
    let solver = PreimageSolver::new(&m.map, &Region::disk(1.0), &square(-1.0, 1.0, SCAN_SAMPLES)?)?;
    let scan_h = solver.grid().max_spacing();
    let target = square(-1.2, 1.2, samples)?;
    let band = (2.0 * target.max_spacing()).max(2.0 * scan_h + 0.5 * scan_h * solver.lipschitz());
    let mut wrong = 0usize;
    let mut checked = 0usize;
    for i in 0..target.node_count() {
        let y = target.point(i);
        let r = y[0].hypot(y[1]);
        if r < band || (r - 1.0).abs() < band {
            continue;
        }
        let fiber = solver.solve(&y);
        if fiber.unstable {
            continue;
        }
        checked += 1;
        let expected = if r < 1.0 { degree as usize } else { 0 };
        wrong += (fiber.count != expected) as usize;
    }
    Ok(Outcome::new(wrong as f64).with("checked", checked as f64))
}

pub(super) fn plan(ctx: &Context) -> Vec<Planned> {
    let mut out = Vec::new();
    let planar: Vec<(SelectedMap, i64)> = ctx
        .maps
        .iter()
        .filter(|m| m.map.src_dim() == 2 && disk_image_radius(&m.spec, 1.0) == Some(1.0))
        .filter_map(|m| m.map.tags().known_degree.map(|d| (m.clone(), d)))
        .collect();
    for (m, deg) in &planar {
        let (label, deg) = (&m.label, *deg);
        let inputs = json!({"map": m.spec, "region": Region::disk(1.0), "targets": FIBER_TARGETS, "scan": SCAN_SAMPLES});
        let mm = m.clone();
        out.push(at_most(
            format!("degree.fiber_counts.{label}"),
            "N(f, y, U) = deg f for regular values y ∈ f(U) away from f(∂U)",
            0.0,
            inputs.clone(),
            move || {
                let (c, _, _) = fibers(&mm, deg)?;
                Ok(Outcome::new(c))
            },
        ));
        let mm = m.clone();
        out.push(at_most(
            format!("degree.index_sum.{label}"),
            "Σ_{x ∈ f⁻¹(y)} i(f, x) = deg f",
            0.0,
            inputs.clone(),
            move || {
                let (_, s, _) = fibers(&mm, deg)?;
                Ok(Outcome::new(s))
            },
        ));
        let mm = m.clone();
        out.push(at_most(
            format!("degree.index_residual.{label}"),
            "winding numbers are integral",
            0.1,
            inputs,
            move || {
                let (_, _, r) = fibers(&mm, deg)?;
                Ok(Outcome::new(r))
            },
        ));
        let mm = m.clone();
        out.push(at_most(
            format!("degree.branch_index.{label}"),
            "i(f, 0) = deg f at the branch point",
            0.0,
            json!({"map": m.spec, "radii": [0.2, 0.01]}),
            move || branch_index(&mm, deg),
        ));
    }
    for &r in &ctx.resolutions {
        for (m, deg) in &planar {
            let (label, deg) = (&m.label, *deg);
            let mm = m.clone();
            out.push(at_least(
                format!("degree.normal_neighborhood.{label}@{r}"),
                "U(x, r) is a normal domain with f(U) = B(f(x), r)",
                1.0,
                json!({"map": m.spec, "samples": 2 * r - 1, "centers": [[0.0, 0.0], [0.3, 0.2]], "radii": [0.3, 0.1]}),
                move || neighborhood(&mm, r),
            ));
            let mm = m.clone();
            out.push(at_most(
                format!("degree.neighborhood_shrinks.{label}@{r}"),
                "diam U(x, r) → 0 as r → 0",
                0.0,
                json!({"map": m.spec, "samples": 2 * r - 1, "center": [0.3, 0.2], "radii": [0.2, 0.1, 0.05]}),
                move || shrinks(&mm, r),
            ));
            let mm = m.clone();
            out.push(at_most(
                format!("degree.multiplicity_constant.{label}@{r}"),
                "N(f, y, U) is locally constant off f(∂U) ∪ f(B_f)",
                0.0,
                json!({"map": m.spec, "samples": r, "target": [-1.2, 1.2]}),
                move || multiplicity_constant(&mm, r, deg),
            ));
        }
        for m in &ctx.maps {
            if m.map.tags().known_degree.is_none() || m.map.tags().branch_locus.is_none() {
                continue;
            }
            let label = &m.label;
            let mm = m.clone();
            out.push(at_most(
                format!("degree.branch_measure.{label}@{r}"),
                "the sampled branch set has measure O(h²)",
                4.0,
                json!({"map": m.spec, "samples": r}),
                move || branch_measure(&mm, r),
            ));
        }
    }
    out
}
