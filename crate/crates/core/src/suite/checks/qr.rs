use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde_json::json;

use super::{
    at_least, at_most, disk_image_radius, image_half_width, scaled_tolerance, square, Context, Outcome,
    Planned, SelectedMap,
};
use crate::degree::PreimageSolver;
use crate::error::Result;
use crate::exterior::KCovector;
use crate::forms::{bump, GridDomain, SampledForm, TestFormFamily};
use crate::manifolds::{exp_chart, Chart, LinearChart, Manifold};
use crate::qr::{
    change_of_variables_check, chart_definition_verdict, colocal_check, composition_constant_check,
    dilatation_field, identity, linear, pullback_commutation_residual, pullback_lp_check,
    pullback_proper_check, pullback_sup_check, DifferentiableMap, MapSpec, Region, LP_SLACK,
};
use crate::rng::XorShift64Star;

/// Samples per axis of the grid used to seed preimage searches.
pub(crate) const SCAN_SAMPLES: usize = 49;

/// Dilatation of the catalogue map computed without the library SVD:
/// closed forms for the model maps, nalgebra's SVD for linear maps.
pub(crate) fn expected_dilatation(spec: &MapSpec) -> f64 {
    match spec {
        MapSpec::Identity { .. } | MapSpec::Mobius2d { .. } => 1.0,
        MapSpec::Winding2d { k } => *k as f64,
        // σ = (k, 1, 1), J = k
        MapSpec::Winding3d { k } => (*k as f64).powi(2),
        // σ ∝ (a, 1, …, 1)
        MapSpec::RadialStretch { a, dim } => a.powi(*dim as i32 - 1).max(1.0 / a),
        MapSpec::Linear { matrix } => {
            let n = matrix.len();
            let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
            let det = m.determinant();
            if det <= 0.0 {
                return f64::INFINITY;
            }
            let s = m.svd(false, false).singular_values;
            s.max().powi(n as i32) / det
        }
    }
}

/// Grid for per-map checks: `[-1, 1]^n` with `samples` per axis in 2D and a
/// coarser cube in 3D.
fn map_grid(f: &DifferentiableMap, samples: usize) -> Result<GridDomain> {
    let n = f.src_dim();
    if n == 2 {
        square(-1.0, 1.0, samples)
    } else {
        GridDomain::cube(n, -1.0, 1.0, (samples / 2 + 1).clamp(9, 33))
    }
}

fn random_points(seed: u64, label: &str, n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut rng = XorShift64Star::fork(seed, label);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<f64> = (0..n).map(|_| rng.range(-0.9, 0.9)).collect();
        if p[0].hypot(p[1]) > 0.05 {
            out.push(p);
        }
    }
    out
}

fn dilatation(m: SelectedMap, samples: usize) -> Result<Outcome> {
    let grid = map_grid(&m.map, samples)?;
    let d = dilatation_field(&m.map, &grid)?;
    let expected = expected_dilatation(&m.spec);
    let k = d.verdict.k_hat.unwrap_or(f64::INFINITY);
    Ok(Outcome::new((k - expected).abs() / expected)
        .with("k_hat", k)
        .with("expected", expected)
        .with("excluded_nodes", d.verdict.excluded as f64)
        .with("sobolev_proxy", d.verdict.sobolev_proxy)
        .with("orientation_ok", d.verdict.orientation_ok))
}

fn inequalities(m: SelectedMap, samples: usize) -> Result<Outcome> {
    let grid = map_grid(&m.map, samples)?;
    let d = dilatation_field(&m.map, &grid)?;
    Ok(Outcome::new(d.inequalities.max_violation)
        .with("nodes", d.inequalities.nodes as f64)
        .with("verdict_pass", d.verdict.pass as u8 as f64))
}

/// Image square and preimage solver over `region` for a planar map.
fn planar_setup(
    f: &DifferentiableMap,
    region: &Region,
    samples: usize,
) -> Result<(GridDomain, GridDomain, PreimageSolver)> {
    let src = square(-1.0, 1.0, samples)?;
    let half = image_half_width(f, &src, |x| region.contains(x))?;
    let dst = square(-half, half, samples)?;
    let solver = PreimageSolver::new(f, region, &square(-1.0, 1.0, SCAN_SAMPLES)?)?;
    Ok((src, dst, solver))
}

fn change_of_variables(m: SelectedMap, samples: usize) -> Result<Outcome> {
    let region = Region::disk(1.0);
    let (src, dst, solver) = planar_setup(&m.map, &region, samples)?;
    let mult = |y: &[f64]| solver.multiplicity(y);
    let r = change_of_variables_check(&m.map, &|_| 1.0, &src, &region, &dst, &mult, false)?;
    Ok(Outcome::new(r.residual).with("lhs", r.lhs).with("rhs", r.rhs))
}

/// `∫_{B(0,1)} J_f = deg f · π` for maps sending the unit disk onto itself.
fn jacobian_integral(m: SelectedMap, samples: usize, degree: f64) -> Result<Outcome> {
    let region = Region::disk(1.0);
    let src = square(-1.0, 1.0, samples)?;
    let r = change_of_variables_check(&m.map, &|_| 1.0, &src, &region, &src, &|_| 0.0, false)?;
    let exact = degree * PI;
    Ok(Outcome::new((r.lhs - exact).abs() / exact)
        .with("integral", r.lhs)
        .with("exact", exact))
}

/// Position inside the band `[lower(1-s), upper(1+s)]`: ≤ 1 iff both
/// inequalities hold.
fn band(value: f64, lower: f64, upper: f64) -> f64 {
    (lower * (1.0 - LP_SLACK) / value).max(value / (upper * (1.0 + LP_SLACK)))
}

fn lp(m: SelectedMap, samples: usize) -> Result<Outcome> {
    let region = Region::annulus(0.3, 0.9);
    let (src, dst, solver) = planar_setup(&m.map, &region, samples)?;
    let dx1 = SampledForm::constant(&dst, &KCovector::basis(2, &[0])?)?;
    let mult = |y: &[f64]| solver.multiplicity(y);
    let r = pullback_lp_check(&m.map, &dx1, &src, &region, &mult)?;
    Ok(Outcome::new(band(r.ratio, r.lower_const, r.upper_const))
        .with("ratio", r.ratio)
        .with("lower_const", r.lower_const)
        .with("upper_const", r.upper_const)
        .with("k_hat", r.k))
}

fn proper(m: SelectedMap, samples: usize, degree: u32) -> Result<Outcome> {
    let src = square(-1.0, 1.0, samples)?;
    let dst = square(-1.1, 1.1, samples)?;
    let omega = SampledForm::from_fn(&dst, 1, |x, out| {
        out[0] = 1.0 + x[1];
        out[1] = x[0];
    })?;
    let r = pullback_proper_check(
        &m.map,
        &omega,
        &src,
        &Region::disk(1.0),
        &Region::disk(1.0),
        degree,
    )?;
    Ok(Outcome::new(band(r.pulled_norm, r.lower, r.upper))
        .with("pulled_norm", r.pulled_norm)
        .with("norm", r.norm)
        .with("lower", r.lower)
        .with("upper", r.upper))
}

fn sup(m: SelectedMap, samples: usize, image: f64) -> Result<Outcome> {
    let src = square(-1.0, 1.0, samples)?;
    let dst = square(-1.1, 1.1, samples)?;
    let s = SampledForm::scalar(&dst, |x| (x[0] - 0.2).powi(2) + x[1])?;
    let r = pullback_sup_check(&m.map, &s, &src, &Region::disk(0.8), &Region::disk(image))?;
    Ok(Outcome::new(r.relative_difference)
        .with("pulled_sup", r.pulled_sup)
        .with("sup", r.sup))
}

/// `6` bumps on the circle of radius 0.45 with radius 0.15.
pub(crate) fn annulus_tests(src: &GridDomain) -> Result<TestFormFamily> {
    let centers: Vec<Vec<f64>> = (0..6)
        .map(|i| {
            let t = PI * i as f64 / 3.0 + 0.2;
            vec![0.45 * t.cos(), 0.45 * t.sin()]
        })
        .collect();
    TestFormFamily::from_centers(src, 0, &centers, 0.15, 1)
}

/// `ω = (x₁² + x₂) dx₁ + x₁x₂² dx₂` and `dω = (x₂² - 1) dx₁∧dx₂`.
pub(crate) fn polynomial_form(g: &GridDomain) -> Result<(SampledForm, SampledForm)> {
    let w = SampledForm::from_fn(g, 1, |x, out| {
        out[0] = x[0] * x[0] + x[1];
        out[1] = x[0] * x[1] * x[1];
    })?;
    let dw = SampledForm::from_fn(g, 2, |x, out| out[0] = x[1] * x[1] - 1.0)?;
    Ok((w, dw))
}

/// Weak residual of `d f^*ω = f^* dω` on `[-0.7, 0.7]²`.
pub(crate) fn commutation_residual(f: &DifferentiableMap, samples: usize) -> Result<f64> {
    let src = square(-0.7, 0.7, samples)?;
    let half = image_half_width(f, &src, |_| true)?;
    let dst = square(-half, half, samples)?;
    let (w, dw) = polynomial_form(&dst)?;
    Ok(pullback_commutation_residual(f, &w, &dw, &src, &annulus_tests(&src)?)?.max)
}

fn derivative_consistency(m: SelectedMap, seed: u64) -> Result<Outcome> {
    let pts = random_points(
        seed,
        &format!("derivative_consistency {}", m.label),
        m.map.src_dim(),
        200,
    );
    Ok(Outcome::new(m.map.derivative_consistency(&pts)))
}

fn colocal(m: SelectedMap, seed: u64) -> Result<Outcome> {
    let pts = random_points(seed, &format!("colocal {}", m.label), m.map.src_dim(), 50);
    Ok(Outcome::new(colocal_check(&m.map, &pts)))
}

fn stretch(l: f64, angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c]) * DMatrix::from_row_slice(2, 2, &[l, 0.0, 0.0, 1.0 / l])
}

pub(crate) const CHART_CONSTANTS: [f64; 4] = [1.01, 1.1, 1.5, 2.0];

/// Largest `K(ψ∘f∘φ⁻¹) / (K_f (L_φ L_ψ)^{2n})` over linear chart pairs with
/// constants `L` in [`CHART_CONSTANTS`]: `φ = diag(L, 1/L)` and `ψ` a rotated
/// stretch.
pub(crate) fn chart_transfer(f: &DifferentiableMap, k_f: f64, samples: usize) -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    let mut max_k: f64 = 0.0;
    let half = 0.9;
    let reach = 1.05 * image_half_width(f, &square(-half, half, samples)?, |_| true)?;
    for &l in &CHART_CONSTANTS {
        let phi: Arc<dyn Chart> = Arc::new(LinearChart::new(stretch(l, 0.0), vec![-half; 2], vec![half; 2])?);
        let psi: Arc<dyn Chart> = Arc::new(LinearChart::new(
            stretch(l, 0.8),
            vec![-reach; 2],
            vec![reach; 2],
        )?);
        let grid = GridDomain::new(
            vec![-half * l, -half / l],
            vec![half * l, half / l],
            vec![samples, samples],
        )?;
        let v = chart_definition_verdict(f, phi, psi, f64::INFINITY, &grid)?;
        let k = v.k_conjugate.unwrap_or(f64::INFINITY);
        max_k = max_k.max(k);
        worst = worst.max(k / v.transferred_bound(k_f, 2));
    }
    Ok((worst, max_k))
}

fn exp_chart_identity(samples: usize) -> Result<Outcome> {
    let c2 = [0.004f64.sin(), 0.0, 0.004f64.cos()];
    let phi: Arc<dyn Chart> = Arc::new(exp_chart(&Manifold::Sphere, &[0.0, 0.0, 1.0], 0.01)?);
    let psi: Arc<dyn Chart> = Arc::new(exp_chart(&Manifold::Sphere, &c2, 0.02)?);
    let grid = square(-0.01, 0.01, samples)?;
    let v = chart_definition_verdict(&identity(3)?, phi, psi, 1.01, &grid)?;
    let k = if v.pass {
        v.k_conjugate.unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    Ok(Outcome::new(k).with("l_phi", v.l_phi).with("l_psi", v.l_psi))
}

fn chart_rejects() -> Result<Outcome> {
    let f = linear(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]))?;
    let id: Arc<dyn Chart> = Arc::new(LinearChart::identity(vec![-1.0; 2], vec![1.0; 2])?);
    let wide: Arc<dyn Chart> = Arc::new(LinearChart::identity(vec![-3.0; 2], vec![3.0; 2])?);
    let v = chart_definition_verdict(&f, id, wide, 1.0, &square(-1.0, 1.0, 17)?)?;
    Ok(Outcome::new((!v.pass) as u8 as f64).with("k_conjugate", v.k_conjugate.unwrap_or(f64::INFINITY)))
}

fn composition(which: &'static str) -> Result<Outcome> {
    let r = match which {
        "identity" => {
            let f = |p: &[f64]| bump((p[0] * p[0] + p[1] * p[1]) / 0.25);
            composition_constant_check(&LinearChart::identity(vec![-1.0; 2], vec![1.0; 2])?, &f, 2.0, 129)?
        }
        "diag" => {
            let f = |p: &[f64]| bump((p[0] * p[0] + p[1] * p[1]) / 0.25);
            let phi = LinearChart::new(
                DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]),
                vec![-2.0, -1.0],
                vec![2.0, 1.0],
            )?;
            composition_constant_check(&phi, &f, 2.0, 129)?
        }
        _ => {
            let g = |p: &[f64]| bump((p[0] * p[0] + p[1] * p[1]) / 0.04);
            composition_constant_check(
                &exp_chart(&Manifold::Sphere, &[0.0, 0.0, 1.0], 0.3)?,
                &g,
                2.0,
                129,
            )?
        }
    };
    Ok(
        Outcome::new(r.ratio / (r.bound * (1.0 + crate::qr::COMPOSITION_SLACK)))
            .with("ratio", r.ratio)
            .with("bound", r.bound)
            .with("lipschitz", r.lipschitz),
    )
}

fn per_map(m: &SelectedMap, r: usize) -> Vec<Planned> {
    let label = &m.label;
    let spec = json!({"map": m.spec, "samples": r});
    let mut out = Vec::new();
    let mm = m.clone();
    out.push(at_most(
        format!("qr.dilatation.{label}@{r}"),
        "K = ess sup |Df|^n / J_f",
        1e-6,
        spec.clone(),
        move || dilatation(mm, r),
    ));
    let mm = m.clone();
    out.push(at_most(
        format!("qr.inequalities.{label}@{r}"),
        "K⁻¹|Df|^n ≤ J_f ≤ |Df|^n and l(Df)^n ≤ J_f ≤ K^{n-1} l(Df)^n",
        1e-9,
        spec.clone(),
        move || inequalities(mm, r),
    ));
    if m.map.src_dim() != 2 {
        return out;
    }
    let mm = m.clone();
    out.push(at_most(
        format!("qr.change_of_variables.{label}@{r}"),
        "∫_U (g∘f) J_f = ∫ g(y) N(f, y, U) dy",
        scaled_tolerance(1e-2, 256, r, 1),
        json!({"map": m.spec, "samples": r, "region": Region::disk(1.0), "g": 1.0, "scan": SCAN_SAMPLES}),
        move || change_of_variables(mm, r),
    ));
    let mm = m.clone();
    out.push(at_most(
        format!("qr.lp.{label}@{r}"),
        "C^{-n/2k} K^{-(n+1)} ∫ N|ω|^{n/k} ≤ ∫_E |f^*ω|^{n/k} ≤ C^{n/2k} K ∫ N|ω|^{n/k}",
        1.0,
        json!({"map": m.spec, "samples": r, "region": Region::annulus(0.3, 0.9), "omega": "dx1", "slack": LP_SLACK}),
        move || lp(mm, r),
    ));
    let mm = m.clone();
    out.push(at_most(
        format!("qr.commutation.{label}@{r}"),
        "d f^*ω = f^* dω weakly",
        scaled_tolerance(1e-2, 128, r, 2),
        json!({"map": m.spec, "samples": r, "omega": "(x1^2 + x2) dx1 + x1 x2^2 dx2"}),
        move || commutation_residual(&mm.map, r).map(Outcome::new),
    ));
    let k_f = expected_dilatation(&m.spec);
    if k_f.is_finite() {
        let mm = m.clone();
        out.push(at_most(
            format!("qr.chart_definition.{label}@{r}"),
            "ψ∘f∘φ⁻¹ is K(LφLψ)^{2n}-quasiregular for L-bilipschitz charts",
            1.0 + 1e-9,
            json!({"map": m.spec, "samples": r, "chart_constants": CHART_CONSTANTS}),
            move || {
                let (ratio, k) = chart_transfer(&mm.map, k_f, r)?;
                Ok(Outcome::new(ratio).with("max_k_conjugate", k))
            },
        ));
    }
    if let (Some(image), Some(deg)) = (disk_image_radius(&m.spec, 0.8), m.map.tags().known_degree) {
        let deg = deg as u32;
        let mm = m.clone();
        out.push(at_most(
            format!("qr.jacobian_integral.{label}@{r}"),
            "∫_{B(0,1)} J_f = deg f · |B(0,1)|",
            scaled_tolerance(1e-2, 256, r, 1),
            json!({"map": m.spec, "samples": r}),
            move || jacobian_integral(mm, r, deg as f64),
        ));
        let mm = m.clone();
        out.push(at_most(
            format!("qr.proper.{label}@{r}"),
            "deg^{k/n} ‖ω‖ / (C^{1/2} K^{k(n-1)/n}) ≤ ‖f^*ω‖ ≤ C^{1/2} K^{k/n} deg^{k/n} ‖ω‖",
            1.0,
            json!({"map": m.spec, "samples": r, "degree": deg}),
            move || proper(mm, r, deg),
        ));
        let mm = m.clone();
        out.push(at_most(
            format!("qr.sup.{label}@{r}"),
            "sup_E |ω∘f| = sup_{f(E)} |ω| for functions",
            scaled_tolerance(1e-2, 128, r, 1),
            json!({"map": m.spec, "samples": r, "region": Region::disk(0.8)}),
            move || sup(mm, r, image),
        ));
    }
    out
}

pub(super) fn plan(ctx: &Context) -> Vec<Planned> {
    let seed = ctx.seed;
    let mut out = Vec::new();
    for m in &ctx.maps {
        let label = &m.label;
        let mm = m.clone();
        out.push(at_most(
            format!("qr.derivative_consistency.{label}"),
            "analytic Df agrees with finite differences",
            1.0,
            json!({"map": m.spec, "points": 200, "seed": seed}),
            move || derivative_consistency(mm, seed),
        ));
        let mm = m.clone();
        out.push(at_most(
            format!("qr.colocal.{label}"),
            "D(u∘f) = Du(f) Df for smooth functionals u",
            1e-6,
            json!({"map": m.spec, "points": 50, "seed": seed}),
            move || colocal(mm, seed),
        ));
    }
    for &r in &ctx.resolutions {
        for m in &ctx.maps {
            out.extend(per_map(m, r));
        }
    }
    out.extend([
        at_most(
            "qr.chart_definition.exp_charts".into(),
            "the identity of S² read in two normal-coordinate charts is 1.01-quasiregular",
            1.01,
            json!({"radii": [0.01, 0.02], "samples": 33}),
            || exp_chart_identity(33),
        ),
        at_least(
            "qr.chart_definition.rejects".into(),
            "diag(2,1) in identity charts is not 1-quasiregular",
            1.0,
            json!({"matrix": [[2.0, 0.0], [0.0, 1.0]], "k_prime": 1.0}),
            chart_rejects,
        ),
    ]);
    for which in ["identity", "diag", "exp_chart"] {
        out.push(at_most(
            format!("qr.composition.{which}"),
            "‖f∘h‖_{1,p} ≤ L^{1+n/p} ‖f‖_{1,p}",
            1.0,
            json!({"chart": which, "p": 2.0, "samples": 129}),
            move || composition(which),
        ));
    }
    out
}
