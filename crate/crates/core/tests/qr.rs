use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use qrforms::degree::PreimageSolver;
use qrforms::exterior::KCovector;
use qrforms::forms::{bump, GridDomain, SampledForm, TestFormFamily};
use qrforms::linear::svd_analysis;
use qrforms::manifolds::{exp_chart, Chart, LinearChart, Manifold};
use qrforms::qr::*;
use qrforms::Error;

fn square(lo: f64, hi: f64, n: usize) -> GridDomain {
    GridDomain::cube(2, lo, hi, n).unwrap()
}

fn diag21() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])
}

fn sample_points(count: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut rng = qrforms::rng::XorShift64Star::new(7);
    (0..count)
        .map(|_| vec![rng.range(lo, hi), rng.range(lo, hi)])
        .collect()
}

#[test]
fn catalogue_derivatives() {
    let id = identity(2).unwrap();
    assert_eq!(id.jacobian(&[0.3, -0.4]), DMatrix::identity(2, 2));
    let w = winding2d(2).unwrap();
    let s = svd_analysis(&w.deriv(&[1.0, 0.0]).unwrap());
    assert!((s.singvals[0] - 2.0).abs() < 1e-14 && (s.singvals[1] - 1.0).abs() < 1e-14);
    let l = linear(diag21()).unwrap();
    for p in sample_points(10, -1.0, 1.0) {
        assert_eq!(l.jacobian(&p), diag21());
    }
    let pts: Vec<Vec<f64>> = sample_points(100, -1.0, 1.0)
        .into_iter()
        .filter(|p| p[0].hypot(p[1]) > 0.05)
        .collect();
    for f in [
        winding2d(2).unwrap(),
        winding2d(5).unwrap(),
        radial_stretch(0.6, 2).unwrap(),
    ] {
        assert!(f.derivative_consistency(&pts) <= 1.0, "{}", f.name());
    }
    let pts3: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0], p[1], 0.3 * p[0]]).collect();
    assert!(winding3d(3).unwrap().derivative_consistency(&pts3) <= 1.0);
    assert!(radial_stretch(2.5, 3).unwrap().derivative_consistency(&pts3) <= 1.0);
}

#[test]
fn dilatation_examples() {
    let g = square(-1.0, 1.0, 65);
    let d = dilatation_field(&identity(2).unwrap(), &g).unwrap();
    assert_eq!(d.verdict.k_hat, Some(1.0));
    for k in [1, 2, 3, 5] {
        let d = dilatation_field(&winding2d(k).unwrap(), &g).unwrap();
        assert!((d.verdict.k_hat.unwrap() - k as f64).abs() < 1e-8);
        assert!(d.verdict.pass);
        assert!(d.inequalities.holds(1e-12));
    }
    for a in [1.5, 2.0, 3.0] {
        let d = dilatation_field(&radial_stretch(a, 2).unwrap(), &g).unwrap();
        assert!((d.verdict.k_hat.unwrap() - a).abs() < 1e-6, "{a}");
        assert!(d.inequalities.holds(1e-10));
    }
    let m = mobius2d([[1.0, 0.0], [0.5, 0.0], [0.2, 0.0], [1.0, 0.0]]).unwrap();
    let d = dilatation_field(&m, &g).unwrap();
    assert!((d.verdict.k_hat.unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn dilatation_in_three_dimensions() {
    let g = GridDomain::cube(3, -1.0, 1.0, 17).unwrap();
    let d = dilatation_field(&winding3d(2).unwrap(), &g).unwrap();
    // σ = (2, 1, 1), J = 2: K_outer = 8 / 2
    assert!((d.verdict.k_hat.unwrap() - 4.0).abs() < 1e-10);
    assert!(d.inequalities.holds(1e-12));
    let d = dilatation_field(&radial_stretch(2.0, 3).unwrap(), &g).unwrap();
    // σ = (2r, r, r): K_outer = 8r³ / 2r³
    assert!((d.verdict.k_hat.unwrap() - 4.0).abs() < 1e-8);
}

#[test]
fn positivity_fraction_decreases() {
    let f = winding2d(3).unwrap();
    let frac = |n: usize| {
        let g = square(-1.0, 1.0, n);
        let d = dilatation_field(&f, &g).unwrap();
        d.branch_nodes().len() as f64 / g.node_count() as f64
    };
    assert!(frac(65) > frac(129) && frac(129) > frac(257));
}

#[test]
fn chart_conjugate_chain_rule() {
    let f = winding2d(2).unwrap();
    let phi: Arc<dyn Chart> = Arc::new(
        LinearChart::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]),
            vec![-1.0; 2],
            vec![1.0; 2],
        )
        .unwrap(),
    );
    let psi: Arc<dyn Chart> = Arc::new(LinearChart::new(diag21(), vec![-2.0; 2], vec![2.0; 2]).unwrap());
    let c = chart_conjugate(&f, phi.clone(), psi.clone()).unwrap();
    let mut rng = qrforms::rng::XorShift64Star::new(3);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 100 {
        let u = vec![rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)];
        let p = phi.to_point(&u);
        if p.iter().any(|v| v.abs() >= 1.0) || p[0].hypot(p[1]) < 0.05 {
            continue;
        }
        // Dψ ∘ Df ∘ Dφ⁻¹ with the linear chart matrices
        let expected = diag21()
            * f.jacobian(&p)
            * DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0])
                .try_inverse()
                .unwrap();
        worst = worst.max((c.jacobian(&u) - expected).abs().max());
        let fd = c.fd_jacobian(&u);
        worst = worst.max((c.jacobian(&u) - fd).abs().max() * 1e-2);
        checked += 1;
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn chart_definition_examples() {
    // identity on the sphere between two overlapping normal-coordinate charts
    let c = [0.0, 0.0, 1.0];
    let c2 = [0.004f64.sin(), 0.0, 0.004f64.cos()];
    let phi: Arc<dyn Chart> = Arc::new(exp_chart(&Manifold::Sphere, &c, 0.01).unwrap());
    let psi: Arc<dyn Chart> = Arc::new(exp_chart(&Manifold::Sphere, &c2, 0.02).unwrap());
    let g = square(-0.01, 0.01, 33);
    let v = chart_definition_verdict(&identity(3).unwrap(), phi, psi, 1.01, &g).unwrap();
    assert!(v.pass, "{v:?}");
    assert!(v.consistent_with(1.0, 2));

    // winding with identity charts
    let id: Arc<dyn Chart> = Arc::new(LinearChart::identity(vec![-1.0; 2], vec![1.0; 2]).unwrap());
    let g = square(-1.0, 1.0, 65);
    let v = chart_definition_verdict(&winding2d(2).unwrap(), id.clone(), psi_id(), 2.0, &g).unwrap();
    assert!(v.pass);
    assert_eq!(v.l_phi, 1.0);

    // diag(2,1) conjugated by φ = diag(2,1) is the identity
    let f = linear(diag21()).unwrap();
    let phi: Arc<dyn Chart> = Arc::new(LinearChart::new(diag21(), vec![-1.0; 2], vec![1.0; 2]).unwrap());
    let psi: Arc<dyn Chart> = Arc::new(LinearChart::identity(vec![-3.0; 2], vec![3.0; 2]).unwrap());
    let g = square(-2.0, 2.0, 33);
    let v = chart_definition_verdict(&f, phi, psi, 1.0, &g).unwrap();
    assert!(v.pass);
    assert!(v.consistent_with(2.0, 2));
    let alone = chart_definition_verdict(&f, id.clone(), psi_id(), 1.0, &square(-1.0, 1.0, 17)).unwrap();
    assert!(!alone.pass);
    assert!((alone.k_conjugate.unwrap() - 2.0).abs() < 1e-12);
}

fn psi_id() -> Arc<dyn Chart> {
    Arc::new(LinearChart::identity(vec![-3.0; 2], vec![3.0; 2]).unwrap())
}

#[test]
fn chart_conjugate_rejects_escaping_image() {
    let small: Arc<dyn Chart> = Arc::new(LinearChart::identity(vec![-0.1; 2], vec![0.1; 2]).unwrap());
    let big: Arc<dyn Chart> = Arc::new(LinearChart::identity(vec![-1.0; 2], vec![1.0; 2]).unwrap());
    let r = chart_definition_verdict(&identity(2).unwrap(), big, small, 1.0, &square(-1.0, 1.0, 9));
    assert!(matches!(r, Err(Error::OutsideDomain)));
}

#[test]
fn pullback_examples() {
    let dst = square(-1.0, 1.0, 129);
    let src = square(-0.7, 0.7, 129);
    // identity resamples
    let omega = SampledForm::from_fn(&dst, 1, |x, out| {
        out[0] = (x[0] * x[1]).sin();
        out[1] = x[0] * x[0];
    })
    .unwrap();
    let pulled = pullback_form(&identity(2).unwrap(), &omega, &src).unwrap();
    let exact = SampledForm::from_fn(&src, 1, |x, out| {
        out[0] = (x[0] * x[1]).sin();
        out[1] = x[0] * x[0];
    })
    .unwrap();
    let h = dst.max_spacing();
    assert!(pulled.max_norm_diff(&exact, None).unwrap() < h * h);

    // volume form pulls back to J_f
    let vol = SampledForm::constant(&dst, &KCovector::new(2, 2, vec![1.0]).unwrap()).unwrap();
    for k in [2, 3] {
        let f = winding2d(k).unwrap();
        let p = pullback_form(&f, &vol, &src).unwrap();
        for i in 0..src.node_count() {
            let x = src.point(i);
            let j = f.jacobian(&x).determinant();
            assert!((p.at(i)[0] - j).abs() < 1e-12);
            if x[0].hypot(x[1]) > 0.0 {
                assert!((j - k as f64).abs() < 1e-12);
            }
        }
    }

    // f^* dx1 for a linear map is the first row of A
    let a = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.4]);
    let dx1 = SampledForm::constant(&dst, &KCovector::basis(2, &[0]).unwrap()).unwrap();
    let p = pullback_form(&linear(a.clone()).unwrap(), &dx1, &src).unwrap();
    for i in 0..src.node_count() {
        assert!((p.at(i)[0] - a[(0, 0)]).abs() < 1e-15 && (p.at(i)[1] - a[(0, 1)]).abs() < 1e-15);
    }

    // image leaving the box
    let wide = square(-2.0, 2.0, 9);
    assert!(matches!(
        pullback_form(&identity(2).unwrap(), &omega, &wide),
        Err(Error::OutsideDomain)
    ));
}

#[test]
fn pointwise_pullback_sandwich() {
    let dst = square(-1.0, 1.0, 65);
    let src = square(-0.7, 0.7, 65);
    let omega = SampledForm::from_fn(&dst, 1, |x, out| {
        out[0] = 1.0 + x[1];
        out[1] = x[0] * x[1] - 0.5;
    })
    .unwrap();
    for f in [winding2d(3).unwrap(), radial_stretch(1.6, 2).unwrap()] {
        let p = pullback_form(&f, &omega, &src).unwrap();
        for i in 0..src.node_count() {
            let x = src.point(i);
            let s = svd_analysis(&f.deriv(&x).unwrap());
            if s.absdet == 0.0 {
                continue;
            }
            let w = omega.interpolate(&f.eval(&x)).unwrap();
            let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let pn = p.pointwise_norm(i);
            let c = 2f64.sqrt();
            assert!(s.lmin * wn / c <= pn + 1e-8 && pn <= c * s.opnorm * wn + 1e-8);
        }
    }
}

#[test]
fn lp_identity_and_zero_grade() {
    let g = square(-1.0, 1.0, 65);
    let omega = SampledForm::from_fn(&g, 1, |x, out| {
        out[0] = x[1];
        out[1] = 1.0;
    })
    .unwrap();
    let region = Region::Box {
        lower: vec![-0.5; 2],
        upper: vec![0.5; 2],
    };
    let mult = |y: &[f64]| if region.contains(y) { 1.0 } else { 0.0 };
    let r = pullback_lp_check(&identity(2).unwrap(), &omega, &g, &region, &mult).unwrap();
    assert!(r.holds);
    assert_eq!(r.k, 1.0);
    let scalar = SampledForm::scalar(&g, |x| x[0]).unwrap();
    assert!(matches!(
        pullback_lp_check(&identity(2).unwrap(), &scalar, &g, &region, &mult),
        Err(Error::ZeroGradeExponent)
    ));
}

#[test]
fn lp_winding_annulus() {
    let src = square(-1.0, 1.0, 129);
    let dst = square(-1.0, 1.0, 129);
    let f = winding2d(3).unwrap();
    let dx1 = SampledForm::constant(&dst, &KCovector::basis(2, &[0]).unwrap()).unwrap();
    let region = Region::annulus(0.3, 0.9);
    let solver = PreimageSolver::new(&f, &region, &square(-1.0, 1.0, 49)).unwrap();
    let mult = |y: &[f64]| solver.multiplicity(y);
    let r = pullback_lp_check(&f, &dx1, &src, &region, &mult).unwrap();
    assert!(r.holds, "{r:?}");
    assert!((r.k - 3.0).abs() < 1e-8);
    // |∇(r cos 3θ)|² = cos² 3θ + 9 sin² 3θ, so the ratio to 3·|annulus| is 5/3
    assert!((r.ratio - 5.0 / 3.0).abs() < 2e-2, "{}", r.ratio);
}

#[test]
fn proper_and_sup_versions() {
    let src = square(-1.0, 1.0, 129);
    let dst = square(-1.1, 1.1, 129);
    let f = winding2d(2).unwrap();
    let omega = SampledForm::from_fn(&dst, 1, |x, out| {
        out[0] = 1.0 + x[1];
        out[1] = x[0];
    })
    .unwrap();
    let r = pullback_proper_check(&f, &omega, &src, &Region::disk(1.0), &Region::disk(1.0), 2).unwrap();
    assert!(r.holds, "{r:?}");
    let s = SampledForm::scalar(&dst, |x| (x[0] - 0.2).powi(2) + x[1]).unwrap();
    let sup = pullback_sup_check(&f, &s, &src, &Region::disk(0.8), &Region::disk(0.8)).unwrap();
    assert!(sup.relative_difference < 1e-2, "{sup:?}");
}

#[test]
fn change_of_variables_examples() {
    let g1 = |_: &[f64]| 1.0;
    let unit = GridDomain::unit_square(65).unwrap();
    let one = |y: &[f64]| {
        if y.iter().all(|v| (0.0..=1.0).contains(v)) {
            1.0
        } else {
            0.0
        }
    };
    let r = change_of_variables_check(
        &identity(2).unwrap(),
        &g1,
        &unit,
        &Region::All,
        &unit,
        &one,
        false,
    )
    .unwrap();
    assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-12);

    for k in [2, 3] {
        let f = winding2d(k).unwrap();
        let solver = PreimageSolver::new(&f, &Region::disk(1.0), &square(-1.0, 1.0, 49)).unwrap();
        let mult = |y: &[f64]| solver.multiplicity(y);
        let mut errs = Vec::new();
        for n in [64, 128, 256] {
            let g = square(-1.0, 1.0, n);
            let r = change_of_variables_check(&f, &g1, &g, &Region::disk(1.0), &g, &mult, false).unwrap();
            assert!(r.residual < 1e-2, "{r:?}");
            errs.push((r.lhs - k as f64 * PI).abs() / (k as f64 * PI));
        }
        assert!(errs[2] < 1e-2 && errs[2] < errs[0], "{errs:?}");
        // signed version with g = x1
        let gx = |y: &[f64]| y[0];
        let g = square(-1.0, 1.0, 128);
        let r = change_of_variables_check(&f, &gx, &g, &Region::disk(1.0), &g, &mult, true).unwrap();
        assert!(r.residual < 1e-2, "{r:?}");
    }
}

fn annulus_tests(src: &GridDomain) -> TestFormFamily {
    let centers: Vec<Vec<f64>> = (0..6)
        .map(|i| {
            let t = PI * i as f64 / 3.0 + 0.2;
            vec![0.45 * t.cos(), 0.45 * t.sin()]
        })
        .collect();
    TestFormFamily::from_centers(src, 0, &centers, 0.15, 1).unwrap()
}

fn quadratic_form(g: &GridDomain) -> (SampledForm, SampledForm) {
    let w = SampledForm::from_fn(g, 1, |x, out| {
        out[0] = x[0] * x[0] + x[1];
        out[1] = x[0] * x[1] * x[1];
    })
    .unwrap();
    // d(a dx1 + b dx2) = (∂₁b - ∂₂a) dx1∧dx2
    let dw = SampledForm::from_fn(g, 2, |x, out| out[0] = x[1] * x[1] - 1.0).unwrap();
    (w, dw)
}

#[test]
fn commutation_examples() {
    // identity and a linear map
    for f in [
        identity(2).unwrap(),
        linear(DMatrix::from_row_slice(2, 2, &[0.8, 0.3, -0.2, 0.9])).unwrap(),
    ] {
        let dst = square(-1.0, 1.0, 128);
        let src = square(-0.7, 0.7, 128);
        let (w, dw) = quadratic_form(&dst);
        let r = pullback_commutation_residual(&f, &w, &dw, &src, &annulus_tests(&src)).unwrap();
        assert!(r.max <= 1e-3, "{}: {}", f.name(), r.max);
    }
    // winding: residual shrinks at least by half when h halves
    let f = winding2d(2).unwrap();
    let res: Vec<f64> = [128, 256]
        .iter()
        .map(|&n| {
            let dst = square(-1.0, 1.0, n);
            let src = square(-0.7, 0.7, n);
            let (w, dw) = quadratic_form(&dst);
            pullback_commutation_residual(&f, &w, &dw, &src, &annulus_tests(&src))
                .unwrap()
                .max
        })
        .collect();
    assert!(res[0] <= 1e-2, "{res:?}");
    assert!(res[1] <= 0.625 * res[0], "{res:?}");
}

#[test]
fn composition_examples() {
    let f = |p: &[f64]| bump((p[0] * p[0] + p[1] * p[1]) / 0.25);
    let id = LinearChart::identity(vec![-1.0; 2], vec![1.0; 2]).unwrap();
    let r = composition_constant_check(&id, &f, 2.0, 129).unwrap();
    assert!((r.ratio - 1.0).abs() < 1e-12);
    // h = φ⁻¹ = diag(2,1)
    let phi = LinearChart::new(
        DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]),
        vec![-2.0, -1.0],
        vec![2.0, 1.0],
    )
    .unwrap();
    let r = composition_constant_check(&phi, &f, 2.0, 129).unwrap();
    assert!((r.lipschitz - 2.0).abs() < 1e-12);
    assert!(r.holds && r.ratio <= 4.0, "{r:?}");
    // exponential chart with L close to 1
    let c = exp_chart(&Manifold::Sphere, &[0.0, 0.0, 1.0], 0.3).unwrap();
    let g = |p: &[f64]| bump((p[0] * p[0] + p[1] * p[1]) / 0.04);
    let r = composition_constant_check(&c, &g, 2.0, 129).unwrap();
    assert!(r.holds && r.ratio <= 1.05, "{r:?}");
}

#[test]
fn colocal_functionals() {
    let pts: Vec<Vec<f64>> = sample_points(50, -1.0, 1.0)
        .into_iter()
        .filter(|p| p[0].hypot(p[1]) > 0.05)
        .collect();
    for f in [winding2d(2).unwrap(), radial_stretch(1.5, 2).unwrap()] {
        assert!(colocal_check(&f, &pts) < 1e-7);
    }
}

#[test]
fn lusin_image_measure_monotone() {
    // image measure (with multiplicity) of growing cell sets grows and stays
    // below K_hat·max|Df|^0 ... bounded by max J times the set measure
    let f = winding2d(3).unwrap();
    let g = square(-1.0, 1.0, 65);
    let d = dilatation_field(&f, &g).unwrap();
    let mut prev = 0.0;
    for r in [0.2, 0.4, 0.6, 0.8] {
        let w = Region::disk(r).weights(&g, 4);
        let m: f64 = w.iter().sum();
        let image: f64 = w.iter().zip(&d.jacobian).map(|(w, j)| w * j.abs()).sum();
        assert!(image >= prev);
        assert!(image <= d.verdict.k_hat.unwrap() * m * (1.0 + 1e-12));
        prev = image;
    }
}
