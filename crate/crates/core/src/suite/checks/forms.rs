use std::f64::consts::PI;

use serde_json::json;

use super::{at_least, at_most, scaled_tolerance, Context, Outcome, Planned};
use crate::error::Result;
use crate::exterior::{binomial, KCovector};
use crate::forms::{
    bump, convolve_form, exterior_derivative_fd, integrate_top_form, leibniz_residual, lp_norm,
    weak_derivative_residual, wedge_sampled, GridDomain, Mollifier, SampledForm, TestFormFamily,
};
use crate::rng::XorShift64Star;

/// `ω = sin(2x₁+x₂) dx₁ + (x₁²x₂ + cos x₁) dx₂`.
pub(crate) fn smooth_one_form(g: &GridDomain) -> Result<SampledForm> {
    SampledForm::from_fn(g, 1, |x, out| {
        out[0] = (2.0 * x[0] + x[1]).sin();
        out[1] = x[0] * x[0] * x[1] + x[0].cos();
    })
}

/// `dω = (2x₁x₂ - sin x₁ - cos(2x₁+x₂)) dx₁∧dx₂` for [`smooth_one_form`].
pub(crate) fn smooth_one_form_d(g: &GridDomain) -> Result<SampledForm> {
    SampledForm::from_fn(g, 2, |x, out| {
        out[0] = 2.0 * x[0] * x[1] - x[0].sin() - (2.0 * x[0] + x[1]).cos();
    })
}

/// `step(x₁ - ½) dx₁`, taking the right limit at the jump.
pub(crate) fn step_form(g: &GridDomain) -> Result<SampledForm> {
    SampledForm::from_fn(g, 1, |x, out| {
        out[0] = if x[0] >= 0.5 { 1.0 } else { 0.0 };
        out[1] = 0.0;
    })
}

pub(crate) fn mollifier_for(g: &GridDomain) -> Result<Mollifier> {
    Mollifier::new((3.0 * g.max_spacing()).max(0.1))
}

/// `sup |d(ω∗σ) - (dω)∗σ|` for [`smooth_one_form`] on the unit square.
pub(crate) fn convolution_commutator(samples: usize, sigma: &Mollifier) -> Result<f64> {
    let g = GridDomain::unit_square(samples)?;
    let lhs = exterior_derivative_fd(&convolve_form(&smooth_one_form(&g)?, sigma)?)?;
    let rhs = convolve_form(&smooth_one_form_d(&g)?, sigma)?;
    lhs.max_norm_diff(&rhs, None)
}

fn dd_zero(samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let f = SampledForm::scalar(&g, |x| {
        (2.0 * x[0]).sin() * (3.0 * x[1]).cos() + x[0] * x[1] * x[1]
    })?;
    let dd = exterior_derivative_fd(&exterior_derivative_fd(&f)?)?;
    let linear = SampledForm::from_fn(&g, 1, |x, out| {
        out[0] = x[1];
        out[1] = 0.0;
    })?;
    let d = exterior_derivative_fd(&linear)?;
    let exact = d.values().iter().fold(0.0, |m: f64, c| m.max((c + 1.0).abs()));
    Ok(Outcome::new(dd.max_norm(None).max(exact))
        .with("max_dd", dd.max_norm(None))
        .with("linear_coefficient_error", exact))
}

fn stokes(samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let w = SampledForm::from_fn(&g, 1, |x, out| {
        let b = bump(((x[0] - 0.5).powi(2) + (x[1] - 0.45).powi(2)) / 0.35f64.powi(2));
        out[0] = b * x[1].cos();
        out[1] = b * (x[0] + 0.3);
    })?;
    let dw = exterior_derivative_fd(&w)?;
    let i = integrate_top_form(&dw, None)?.value;
    Ok(Outcome::new(i.abs()).with("integral", i))
}

fn quadrature_sin(samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let f = SampledForm::from_fn(&g, 2, |x, out| out[0] = (PI * x[0]).sin() * (PI * x[1]).sin())?;
    let i = integrate_top_form(&f, None)?.value;
    let exact = 4.0 / (PI * PI);
    Ok(Outcome::new((i - exact).abs())
        .with("integral", i)
        .with("exact", exact))
}

fn lp_checks(seed: u64, samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let x1 = SampledForm::from_fn(&g, 1, |x, out| {
        out[0] = x[0];
        out[1] = 0.0;
    })?;
    let l2 = lp_norm(&x1, 2.0, None)?;
    let closed = (l2 * l2 - 1.0 / 3.0).abs();
    let mut rng = XorShift64Star::fork(seed, "lp_homogeneity");
    let (a, b, c) = (rng.normal(), rng.normal(), rng.range(-3.0, 3.0));
    let w = SampledForm::from_fn(&g, 1, |x, out| {
        out[0] = (a * x[0] + x[1]).sin();
        out[1] = b * x[0] * x[1];
    })?;
    let mut homogeneity: f64 = 0.0;
    for p in [1.0, 2.0, 3.5, f64::INFINITY] {
        let base = lp_norm(&w, p, None)?;
        let scaled = lp_norm(&w.scaled(c), p, None)?;
        homogeneity = homogeneity.max((scaled - c.abs() * base).abs() / (c.abs() * base));
    }
    let e1 = SampledForm::constant(&g, &KCovector::basis(2, &[0])?)?;
    let mut unit: f64 = 0.0;
    for p in [1.0, 2.0, 5.0, f64::INFINITY] {
        unit = unit.max((lp_norm(&e1, p, None)? - 1.0).abs());
    }
    Ok(Outcome::new(closed)
        .with("l2_squared", l2 * l2)
        .with("homogeneity_residual", homogeneity)
        .with("unit_covector_residual", unit))
}

fn lp_exact(seed: u64, samples: usize) -> Result<Outcome> {
    let out = lp_checks(seed, samples)?;
    let v = out
        .measured
        .iter()
        .filter(|(k, _)| *k != "l2_squared")
        .fold(0.0, |m: f64, (_, v)| m.max(*v));
    Ok(Outcome { value: v, ..out })
}

/// Grassmann norm against the Euclidean coefficient norm, nodewise.
fn coordinate_norm(seed: u64) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "coordinate_norm");
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let g = GridDomain::cube(n, 0.0, 1.0, 5)?;
        for k in 0..=n {
            let len = binomial(n, k) * g.node_count();
            let f = SampledForm::new(g.clone(), k, rng.normal_vec(len))?;
            for i in 0..g.node_count() {
                let e = f.at(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                worst = worst.max((f.pointwise_norm(i) - e).abs() / e.max(1e-300));
            }
        }
    }
    Ok(Outcome::new(worst))
}

fn convolution_constant(samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let c = KCovector::new(2, 1, vec![2.0, -1.0])?;
    let form = SampledForm::constant(&g, &c)?;
    let out = convolve_form(&form, &mollifier_for(&g)?)?;
    let expected = SampledForm::constant(out.domain(), &c)?;
    Ok(Outcome::new(out.max_norm_diff(&expected, None)?))
}

fn step_smoothing(samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let smoothed = convolve_form(&step_form(&g)?, &mollifier_for(&g)?)?;
    let d = exterior_derivative_fd(&smoothed)?;
    Ok(Outcome::new(d.max_norm(None)))
}

fn step_weak(samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let tau = SampledForm::zeros(&g, 2);
    let r = weak_derivative_residual(&step_form(&g)?, &tau, &TestFormFamily::standard(&g, 0)?)?;
    Ok(Outcome::new(r.max))
}

fn weak_smooth(samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let f = SampledForm::scalar(&g, |x| x[0].sin() * x[1] + (x[0] * x[1]).cos())?;
    let df = SampledForm::from_fn(&g, 1, |x, out| {
        let s = (x[0] * x[1]).sin();
        out[0] = x[0].cos() * x[1] - x[1] * s;
        out[1] = x[0].sin() - x[0] * s;
    })?;
    let r = weak_derivative_residual(&f, &df, &TestFormFamily::standard(&g, 1)?)?;
    Ok(Outcome::new(r.max))
}

/// Largest `residual / ∫|η|` when `τ = dω + dx₁∧dx₂`.
fn wrong_tau(samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let one = SampledForm::from_fn(&g, 2, |_, out| out[0] = 1.0)?;
    let tau = smooth_one_form_d(&g)?.add(&one)?;
    let r = weak_derivative_residual(&smooth_one_form(&g)?, &tau, &TestFormFamily::standard(&g, 0)?)?;
    let ratio = r
        .residuals
        .iter()
        .zip(&r.masses)
        .filter(|(_, &m)| m > 0.0)
        .fold(0.0, |best: f64, (res, m)| best.max(res / m));
    Ok(Outcome::new(ratio).with("max_residual", r.max))
}

fn leibniz(samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let f = SampledForm::scalar(&g, |x| x[0].sin() * x[1])?;
    let df = SampledForm::from_fn(&g, 1, |x, out| {
        out[0] = x[0].cos() * x[1];
        out[1] = x[0].sin();
    })?;
    let rep = leibniz_residual(
        &f,
        &df,
        &smooth_one_form(&g)?,
        &smooth_one_form_d(&g)?,
        &TestFormFamily::standard(&g, 0)?,
    )?;
    Ok(Outcome::new(rep.weak.max)
        .with("max_wedge_ratio", rep.max_wedge_ratio)
        .with("wedge_bound", rep.wedge_bound))
}

/// `|ω ∧ ω′| ≤ C |ω| |ω′|` plus top-grade wedges against the 2×2 cofactor
/// expansion.
fn wedge_checks(seed: u64, samples: usize) -> Result<Outcome> {
    let g = GridDomain::unit_square(samples)?;
    let mut rng = XorShift64Star::fork(seed, "wedge_checks");
    let a = SampledForm::new(g.clone(), 1, rng.normal_vec(2 * g.node_count()))?;
    let b = SampledForm::new(g.clone(), 1, rng.normal_vec(2 * g.node_count()))?;
    let w = wedge_sampled(&a, &b)?;
    let mut cofactor: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for i in 0..g.node_count() {
        let (x, y) = (a.at(i), b.at(i));
        let det = x[0] * y[1] - x[1] * y[0];
        cofactor = cofactor.max((w.at(i)[0] - det).abs());
        let denom = a.pointwise_norm(i) * b.pointwise_norm(i);
        if denom > 0.0 {
            ratio = ratio.max(w.pointwise_norm(i) / (denom * 2f64.sqrt()));
        }
    }
    let dx1 = SampledForm::constant(&g, &KCovector::basis(2, &[0])?)?;
    let dx2 = SampledForm::constant(&g, &KCovector::basis(2, &[1])?)?;
    let e12 = wedge_sampled(&dx1, &dx2)?;
    let basis = e12.values().iter().fold(0.0, |m: f64, v| m.max((v - 1.0).abs()));
    Ok(Outcome::new(cofactor.max(basis).max((ratio - 1.0).max(0.0)))
        .with("cofactor_residual", cofactor)
        .with("max_norm_ratio", ratio))
}

pub(super) fn plan(ctx: &Context) -> Vec<Planned> {
    let seed = ctx.seed;
    let mut out = vec![at_most(
        "forms.coordinate_norm".into(),
        "|ω|² = Σ_I ω_I² in the orthonormal basis ε_I",
        1e-12,
        json!({"max_dim": 4, "seed": seed}),
        move || coordinate_norm(seed),
    )];
    for &r in &ctx.resolutions {
        let grid = json!({"domain": [[0.0, 1.0], [0.0, 1.0]], "samples": r});
        let coarse_h = 1.0 / (r - 1) as f64;
        out.extend([
            at_most(
                format!("forms.dd_zero@{r}"),
                "d(dω) = 0 and d(x₂ dx₁) = -dx₁∧dx₂",
                1e-9,
                json!({"grid": grid, "f": "sin(2x1)cos(3x2) + x1 x2^2"}),
                move || dd_zero(r),
            ),
            at_most(
                format!("forms.stokes@{r}"),
                "∫_U dω = 0 for compactly supported ω",
                1e-3,
                json!({"grid": grid, "support_radius": 0.35}),
                move || stokes(r),
            ),
            at_most(
                format!("forms.quadrature_sin@{r}"),
                "∫ sin(πx₁) sin(πx₂) dx₁∧dx₂ = 4/π² on the unit square",
                scaled_tolerance(1e-4, 256, r, 2),
                json!({"grid": grid}),
                move || quadrature_sin(r),
            ),
            at_most(
                format!("forms.lp_closed_form@{r}"),
                "‖x₁ dx₁‖₂² = 1/3 on the unit square",
                scaled_tolerance(1e-4, 64, r, 2),
                json!({"grid": grid}),
                move || lp_checks(seed, r),
            ),
            at_most(
                format!("forms.lp_exact@{r}"),
                "‖cω‖_p = |c| ‖ω‖_p and ‖ε1‖_p = 1",
                1e-10,
                json!({"grid": grid, "exponents": [1.0, 2.0, 3.5, "inf"], "seed": seed}),
                move || lp_exact(seed, r),
            ),
            at_most(
                format!("forms.convolution_constant@{r}"),
                "c ∗ σ = c for a unit-mass mollifier",
                1e-10,
                json!({"grid": grid, "radius": (3.0 * coarse_h).max(0.1)}),
                move || convolution_constant(r),
            ),
            at_most(
                format!("forms.convolution_commutes@{r}"),
                "d(ω ∗ σ) = (dω) ∗ σ",
                scaled_tolerance(1e-3, 64, r, 2),
                json!({"grid": grid, "radius": (3.0 * coarse_h).max(0.1)}),
                move || {
                    let sigma = mollifier_for(&GridDomain::unit_square(r)?)?;
                    convolution_commutator(r, &sigma).map(Outcome::new)
                },
            ),
            at_least(
                format!("forms.convolution_convergence@{r}"),
                "d(ω ∗ σ) - (dω) ∗ σ → 0 as h → 0",
                1.5,
                json!({"grid": grid, "refined_samples": 2 * r - 1, "radius": (3.0 * coarse_h).max(0.1)}),
                move || {
                    let sigma = mollifier_for(&GridDomain::unit_square(r)?)?;
                    let coarse = convolution_commutator(r, &sigma)?;
                    let fine = convolution_commutator(2 * r - 1, &sigma)?;
                    Ok(Outcome::new(coarse / fine)
                        .with("coarse", coarse)
                        .with("fine", fine))
                },
            ),
            at_most(
                format!("forms.step_smoothing@{r}"),
                "step(x₁ - ½) dx₁ has weak differential 0, so d(ω ∗ σ) = 0",
                1e-6,
                json!({"grid": grid, "radius": (3.0 * coarse_h).max(0.1)}),
                move || step_smoothing(r),
            ),
            at_most(
                format!("forms.step_weak@{r}"),
                "∫ ω∧dη = (-1)^{k+1} ∫ τ∧η with ω = step(x₁ - ½) dx₁, τ = 0",
                1e-3,
                json!({"grid": grid, "tests": "standard"}),
                move || step_weak(r),
            ),
            at_most(
                format!("forms.weak_smooth@{r}"),
                "∫ ω∧dη = (-1)^{k+1} ∫ dω∧η for smooth ω",
                1e-3,
                json!({"grid": grid, "tests": "standard"}),
                move || weak_smooth(r),
            ),
            at_least(
                format!("forms.wrong_tau_detected@{r}"),
                "a perturbed τ = dω + dx₁∧dx₂ violates the weak identity",
                0.1,
                json!({"grid": grid, "tests": "standard"}),
                move || wrong_tau(r),
            ),
            at_most(
                format!("forms.leibniz@{r}"),
                "d(ω∧ω′) = dω∧ω′ + (-1)^k ω∧dω′",
                1e-3,
                json!({"grid": grid, "tests": "standard"}),
                move || leibniz(r),
            ),
            at_most(
                format!("forms.wedge@{r}"),
                "|ω∧ω′| ≤ C |ω| |ω′| and top-grade wedges are determinants",
                1e-10,
                json!({"grid": grid, "seed": seed}),
                move || wedge_checks(seed, r),
            ),
        ]);
    }
    out
}
