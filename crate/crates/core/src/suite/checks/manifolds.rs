use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde_json::json;

use super::{at_least, at_most, Context, Outcome, Planned};
use crate::error::Result;
use crate::manifolds::{
    bilipschitz_constant_estimate, exp_chart, riemannian_integral, transition_check, Chart, ChartAtlas,
    LinearChart, Manifold, StereographicChart, STEREOGRAPHIC_RADIUS,
};

pub(crate) const NORTH_POLE: [f64; 3] = [0.0, 0.0, 1.0];
const BILIPSCHITZ_SAMPLES: usize = 1000;

/// Bilipschitz constant of the normal-coordinate chart of radius `r` at the
/// north pole.
pub(crate) fn exp_chart_constant(r: f64) -> Result<f64> {
    bilipschitz_constant_estimate(
        &exp_chart(&Manifold::Sphere, &NORTH_POLE, r)?,
        BILIPSCHITZ_SAMPLES,
    )
}

fn atlas(name: &str) -> ChartAtlas {
    match name {
        "sphere_stereographic" => ChartAtlas::sphere_stereographic(true),
        "sphere_graphs" => ChartAtlas::sphere_graphs(),
        _ => ChartAtlas::flat_torus(),
    }
}

fn area(name: &'static str, samples: usize) -> Result<Outcome> {
    let a = atlas(name);
    let exact = a.manifold().volume();
    let v = riemannian_integral(&a, |_| 1.0, samples)?;
    Ok(Outcome::new((v - exact).abs() / exact)
        .with("area", v)
        .with("exact", exact))
}

/// `∫_{S²} (1 + x₁²) = 4π + 4π/3` through both sphere atlases.
fn atlas_independence(samples: usize) -> Result<Outcome> {
    let f = |p: &[f64]| 1.0 + p[0] * p[0];
    let exact = 16.0 * PI / 3.0;
    let a = riemannian_integral(&ChartAtlas::sphere_stereographic(true), f, samples)?;
    let b = riemannian_integral(&ChartAtlas::sphere_graphs(), f, samples)?;
    let err = ((a - exact).abs().max((b - exact).abs())) / exact;
    Ok(Outcome::new(err)
        .with("stereographic", a)
        .with("graphs", b)
        .with("exact", exact))
}

fn exp_small() -> Result<Outcome> {
    let l = exp_chart_constant(0.01)?;
    Ok(Outcome::new(l - 1.0).with("lipschitz", l))
}

/// `L(r) = r / sin r` for normal coordinates on the unit sphere.
fn exp_closed_form() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for r in [0.1, 0.5, 1.0, 2.0] {
        let l = exp_chart_constant(r)?;
        worst = worst.max((l - r / f64::sin(r)).abs());
    }
    Ok(Outcome::new(worst))
}

fn exp_monotone() -> Result<Outcome> {
    let radii: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
    let ls = radii
        .iter()
        .map(|&r| exp_chart_constant(r))
        .collect::<Result<Vec<_>>>()?;
    let drops = ls.windows(2).filter(|w| w[1] < w[0] - 1e-12).count();
    Ok(Outcome::new(drops as f64)
        .with("first", ls[0])
        .with("last", ls[ls.len() - 1]))
}

fn chart_constants() -> Result<Outcome> {
    let id = LinearChart::identity(vec![-1.0; 2], vec![1.0; 2])?;
    let d = LinearChart::new(
        DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
        vec![-1.0; 2],
        vec![1.0; 2],
    )?;
    let a = bilipschitz_constant_estimate(&id, BILIPSCHITZ_SAMPLES)?;
    let b = bilipschitz_constant_estimate(&d, BILIPSCHITZ_SAMPLES)?;
    let s = StereographicChart::new(false, false, STEREOGRAPHIC_RADIUS)?;
    let c = bilipschitz_constant_estimate(&s, BILIPSCHITZ_SAMPLES)?;
    // conformal factor 2/(1+|x|²) ranges over [2/(1+R²), 2]
    let r2 = STEREOGRAPHIC_RADIUS * STEREOGRAPHIC_RADIUS;
    let cap = 2f64.max((1.0 + r2) / 2.0);
    let err = (a - 1.0).abs().max((b - 2.0).abs()).max((c - cap).abs() / cap);
    Ok(Outcome::new(err)
        .with("identity", a)
        .with("diag_2_1", b)
        .with("stereographic", c)
        .with("stereographic_exact", cap))
}

fn transitions(name: &'static str) -> Result<Outcome> {
    let rep = transition_check(&atlas(name), 400)?;
    Ok(Outcome::new(rep.min_jacobian)
        .with("max_roundtrip", rep.max_roundtrip)
        .with("bump_discrepancy", rep.bump_discrepancy)
        .with("orientation_consistent", rep.orientation_consistent as u8 as f64)
        .with("pairs", rep.pairs.len() as f64))
}

fn transition_consistency(name: &'static str) -> Result<Outcome> {
    let rep = transition_check(&atlas(name), 400)?;
    Ok(Outcome::new(rep.max_roundtrip.max(rep.bump_discrepancy))
        .with("max_roundtrip", rep.max_roundtrip)
        .with("bump_discrepancy", rep.bump_discrepancy)
        .with("bump_integral", rep.bump_integral))
}

fn orientation_flagged() -> Result<Outcome> {
    let rep = transition_check(&ChartAtlas::sphere_stereographic(false), 200)?;
    Ok(Outcome::new((!rep.orientation_consistent) as u8 as f64).with("min_jacobian", rep.min_jacobian))
}

fn coverage(name: &'static str) -> Result<Outcome> {
    let a = atlas(name);
    let cov = a.coverage(2000);
    let dev = a.partition_deviation(2000);
    let mut checked = 0;
    for i in 0..a.charts().len() {
        let chart: &Arc<dyn Chart> = &a.charts()[i];
        let samples = crate::manifolds::domain_samples(&chart.domain(), chart.dim(), 200);
        checked += a.metric_field(i).check(&samples)?;
    }
    Ok(Outcome::new(cov)
        .with("partition_deviation", dev)
        .with("metric_samples", checked as f64))
}

fn partition(name: &'static str) -> Result<Outcome> {
    Ok(Outcome::new(atlas(name).partition_deviation(2000)))
}

pub(super) fn plan(_ctx: &Context) -> Vec<Planned> {
    let mut out = Vec::new();
    for (name, samples) in [("sphere_stereographic", 256), ("sphere_graphs", 256)] {
        out.push(at_most(
            format!("manifolds.area.{name}@{samples}"),
            "vol(S²) = 4π via a partition of unity",
            1e-3,
            json!({"atlas": name, "samples_per_axis": samples}),
            move || area(name, samples),
        ));
    }
    out.push(at_most(
        "manifolds.area.flat_torus@128".into(),
        "vol(ℝ²/ℤ²) = 1",
        1e-3,
        json!({"atlas": "flat_torus", "samples_per_axis": 128}),
        || area("flat_torus", 128),
    ));
    out.extend([
        at_most(
            "manifolds.atlas_independence@128".into(),
            "∫_M g is independent of the atlas: ∫_{S²} (1 + x₁²) = 16π/3",
            1e-3,
            json!({"samples_per_axis": 128}),
            || atlas_independence(128),
        ),
        at_most(
            "manifolds.exp_chart_small".into(),
            "normal coordinates are (1+ε)-bilipschitz on small balls: L(0.01) ≤ 1.0001",
            1e-4,
            json!({"radius": 0.01, "samples": BILIPSCHITZ_SAMPLES}),
            exp_small,
        ),
        at_most(
            "manifolds.exp_chart_closed_form".into(),
            "L(r) = r / sin r for normal coordinates on the unit sphere",
            1e-4,
            json!({"radii": [0.1, 0.5, 1.0, 2.0], "samples": BILIPSCHITZ_SAMPLES}),
            exp_closed_form,
        ),
        at_most(
            "manifolds.exp_chart_monotone".into(),
            "r ↦ L(r) is nondecreasing",
            0.0,
            json!({"radii": "0.25..3.0 step 0.25", "samples": BILIPSCHITZ_SAMPLES}),
            exp_monotone,
        ),
        at_most(
            "manifolds.chart_constants".into(),
            "bilipschitz constants of identity, diag(2,1) and stereographic charts",
            1e-6,
            json!({"stereographic_radius": STEREOGRAPHIC_RADIUS}),
            chart_constants,
        ),
        at_least(
            "manifolds.orientation_flagged".into(),
            "an unreflected stereographic pair is not oriented",
            1.0,
            json!({"atlas": "sphere_stereographic", "reflect": false}),
            orientation_flagged,
        ),
    ]);
    for name in ["sphere_stereographic", "sphere_graphs", "flat_torus"] {
        out.extend([
            at_least(
                format!("manifolds.transition_jacobian.{name}"),
                "det D(ψ∘φ⁻¹) > 0 on every overlap",
                1e-9,
                json!({"atlas": name, "samples": 400}),
                move || transitions(name),
            ),
            at_most(
                format!("manifolds.transition_consistency.{name}"),
                "ψ∘φ⁻¹ and φ∘ψ⁻¹ are inverse and chart integrals agree on overlaps",
                1e-4,
                json!({"atlas": name, "samples": 400}),
                move || transition_consistency(name),
            ),
            at_least(
                format!("manifolds.coverage.{name}"),
                "the charts cover the manifold",
                1.0,
                json!({"atlas": name, "samples": 2000}),
                move || coverage(name),
            ),
            at_most(
                format!("manifolds.partition_of_unity.{name}"),
                "Σ_i ρ_i = 1",
                1e-8,
                json!({"atlas": name, "samples": 2000}),
                move || partition(name),
            ),
        ]);
    }
    out
}
