use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qrforms::exterior::KCovector;
use qrforms::forms::io::{read_binary, read_csv, write_binary, write_csv};
use qrforms::forms::*;
use qrforms::rng::XorShift64Star;
use qrforms::Error;

fn unit(n: usize) -> GridDomain {
    GridDomain::unit_square(n).unwrap()
}

fn one_form(g: &GridDomain, f: impl Fn(&[f64]) -> [f64; 2] + Sync) -> SampledForm {
    SampledForm::from_fn(g, 1, |x, out| out.copy_from_slice(&f(x))).unwrap()
}

fn top(g: &GridDomain, f: impl Fn(&[f64]) -> f64 + Sync) -> SampledForm {
    SampledForm::from_fn(g, 2, |x, out| out[0] = f(x)).unwrap()
}

/// `ω = sin(2x₁+x₂) dx₁ + (x₁²x₂ + cos x₁) dx₂` with its exterior derivative.
fn smooth(g: &GridDomain) -> (SampledForm, SampledForm) {
    let w = one_form(g, |x| {
        [(2.0 * x[0] + x[1]).sin(), x[0] * x[0] * x[1] + x[0].cos()]
    });
    let dw = top(g, |x| 2.0 * x[0] * x[1] - x[0].sin() - (2.0 * x[0] + x[1]).cos());
    (w, dw)
}

fn step(g: &GridDomain) -> SampledForm {
    one_form(g, |x| [if x[0] >= 0.5 { 1.0 } else { 0.0 }, 0.0])
}

#[test]
fn grid_and_form_validation() {
    assert!(GridDomain::new(vec![1.0], vec![0.0], vec![5]).is_err());
    assert!(GridDomain::new(vec![0.0], vec![1.0], vec![1]).is_err());
    let g = unit(5);
    assert!(SampledForm::new(g.clone(), 1, vec![0.0; 7]).is_err());
    assert!(SampledForm::new(g.clone(), 0, vec![f64::INFINITY; 25]).is_err());
    assert_eq!(g.node_count(), 25);
    assert_abs_diff_eq!(g.spacing(0), 0.25);
}

#[test]
fn exterior_derivative_examples() {
    let g = unit(33);
    let d = exterior_derivative_fd(&one_form(&g, |x| [x[1], 0.0])).unwrap();
    assert_eq!(d.grade(), 2);
    assert!(d.values().iter().all(|&v| (v + 1.0).abs() < 1e-12));
    let d = exterior_derivative_fd(&one_form(&g, |x| [x[0], 0.0])).unwrap();
    assert!(d.max_norm(None) < 1e-12);
}

#[test]
fn dd_vanishes_under_refinement() {
    for n in [65, 129] {
        let g = unit(n);
        let f = SampledForm::scalar(&g, |x| (2.0 * x[0]).sin() * (3.0 * x[1]).cos()).unwrap();
        let dd = exterior_derivative_fd(&exterior_derivative_fd(&f).unwrap()).unwrap();
        assert!(dd.max_norm(None) < 1e-9, "{}", dd.max_norm(None));
    }
    let g = GridDomain::cube(3, 0.0, 1.0, 21).unwrap();
    let w = SampledForm::from_fn(&g, 1, |x, out| {
        out[0] = (x[1] * x[2]).sin();
        out[1] = x[0] * x[2].exp();
        out[2] = (x[0] + 2.0 * x[1]).cos();
    })
    .unwrap();
    let dd = exterior_derivative_fd(&exterior_derivative_fd(&w).unwrap()).unwrap();
    assert_eq!(dd.grade(), 3);
    assert!(dd.max_norm(None) < 1e-9);
}

#[test]
fn exterior_derivative_converges_to_analytic() {
    let err = |n: usize| {
        let g = unit(n);
        let (w, dw) = smooth(&g);
        exterior_derivative_fd(&w)
            .unwrap()
            .max_norm_diff(&dw, None)
            .unwrap()
    };
    let (a, b) = (err(65), err(129));
    assert!(a / b > 1.5, "{a} {b}");
}

#[test]
fn quadrature_examples() {
    let g = unit(17);
    let one = top(&g, |_| 1.0);
    assert_abs_diff_eq!(
        integrate_top_form(&one, None).unwrap().value,
        1.0,
        epsilon = 1e-12
    );

    let g = unit(256);
    let f = top(&g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
    let exact = 4.0 / (PI * PI);
    assert!((integrate_top_form(&f, None).unwrap().value - exact).abs() <= 1e-4);

    // Stokes for a compactly supported 1-form
    let g = unit(128);
    let w = one_form(&g, |x| {
        let b = bump(((x[0] - 0.5).powi(2) + (x[1] - 0.45).powi(2)) / 0.35f64.powi(2));
        [b * x[1].cos(), b * (x[0] + 0.3)]
    });
    let i = integrate_top_form(&exterior_derivative_fd(&w).unwrap(), None).unwrap();
    assert!(i.value.abs() <= 1e-3);

    let mask = vec![false; g.node_count()];
    let empty = integrate_top_form(&top(&g, |_| 1.0), Some(&mask)).unwrap();
    assert!(empty.empty_mask);
    assert_eq!(empty.value, 0.0);
}

#[test]
fn lp_examples() {
    let g = unit(128);
    let e1 = SampledForm::constant(&g, &KCovector::basis(2, &[0]).unwrap()).unwrap();
    for p in [1.0, 2.0, 3.0, f64::INFINITY] {
        assert_abs_diff_eq!(lp_norm(&e1, p, None).unwrap(), 1.0, epsilon = 1e-12);
    }
    let x1 = one_form(&g, |x| [x[0], 0.0]);
    let l2 = lp_norm(&x1, 2.0, None).unwrap();
    assert!((l2 * l2 - 1.0 / 3.0).abs() <= 1e-4);
    assert!(matches!(lp_norm(&x1, 0.5, None), Err(Error::InvalidExponent(_))));
}

#[test]
fn mollifier_kernel() {
    let g = unit(129);
    let m = Mollifier::new(0.1).unwrap();
    let k = m.kernel(&g).unwrap();
    assert_abs_diff_eq!(k.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    let h = g.spacing(0);
    for o in &k.offsets {
        let r = o.iter().map(|&i| (i as f64 * h).powi(2)).sum::<f64>().sqrt();
        assert!(r < 0.1);
    }
    assert!(matches!(
        Mollifier::new(h).unwrap().kernel(&g),
        Err(Error::UnderResolvedMollifier { .. })
    ));
}

#[test]
fn convolution_examples() {
    let g = unit(129);
    let m = Mollifier::new(0.1).unwrap();
    let c = KCovector::new(2, 1, vec![0.5, -3.0]).unwrap();
    let out = convolve_form(&SampledForm::constant(&g, &c).unwrap(), &m).unwrap();
    let expected = SampledForm::constant(out.domain(), &c).unwrap();
    assert!(out.max_norm_diff(&expected, None).unwrap() < 1e-10);

    let smoothed = convolve_form(&step(&g), &m).unwrap();
    assert!(exterior_derivative_fd(&smoothed).unwrap().max_norm(None) <= 1e-6);
}

#[test]
fn convolution_commutes_with_d() {
    let m = Mollifier::new(0.1).unwrap();
    let residual = |n: usize| {
        let g = unit(n);
        let (w, dw) = smooth(&g);
        let lhs = exterior_derivative_fd(&convolve_form(&w, &m).unwrap()).unwrap();
        let rhs = convolve_form(&dw, &m).unwrap();
        lhs.max_norm_diff(&rhs, None).unwrap()
    };
    let (a, b) = (residual(128), residual(255));
    assert!(a < 1e-3 && a / b >= 1.5, "{a} {b}");
}

#[test]
fn test_forms_vanish_near_boundary() {
    let g = unit(65);
    let fam = TestFormFamily::standard(&g, 1).unwrap();
    assert!(!fam.is_empty());
    for t in fam.forms() {
        let (eta, _) = t.sample(&g);
        for i in 0..g.node_count() {
            if g.boundary_distance(i) <= 2 {
                assert_eq!(eta.pointwise_norm(i), 0.0);
            }
        }
    }
}

#[test]
fn weak_derivative_examples() {
    let g = unit(128);
    let f = SampledForm::scalar(&g, |x| x[0].sin() * x[1] + (x[0] * x[1]).cos()).unwrap();
    let df = one_form(&g, |x| {
        let s = (x[0] * x[1]).sin();
        [x[0].cos() * x[1] - x[1] * s, x[0].sin() - x[0] * s]
    });
    let r = weak_derivative_residual(&f, &df, &TestFormFamily::standard(&g, 1).unwrap()).unwrap();
    assert!(r.max <= 1e-3, "{}", r.max);

    let zero = SampledForm::zeros(&g, 2);
    let tests0 = TestFormFamily::standard(&g, 0).unwrap();
    let r = weak_derivative_residual(&step(&g), &zero, &tests0).unwrap();
    assert!(r.max <= 1e-3, "{}", r.max);

    // τ = dω + dx₁∧dx₂: some residual reaches 0.1 of its test-form mass
    let (w, dw) = smooth(&g);
    let wrong = dw.add(&top(&g, |_| 1.0)).unwrap();
    let r = weak_derivative_residual(&w, &wrong, &tests0).unwrap();
    assert!(r
        .residuals
        .iter()
        .zip(&r.masses)
        .any(|(res, m)| *m > 0.0 && *res >= 0.1 * m));
    let r = weak_derivative_residual(&w, &dw, &tests0).unwrap();
    assert!(r.max <= 1e-3);
}

#[test]
fn wedge_examples() {
    let g = unit(17);
    let dx1 = SampledForm::constant(&g, &KCovector::basis(2, &[0]).unwrap()).unwrap();
    let dx2 = SampledForm::constant(&g, &KCovector::basis(2, &[1]).unwrap()).unwrap();
    let w = wedge_sampled(&dx1, &dx2).unwrap();
    assert!(w.values().iter().all(|&v| v == 1.0));

    let mut rng = XorShift64Star::new(9);
    let a = SampledForm::new(g.clone(), 1, rng.normal_vec(2 * g.node_count())).unwrap();
    let b = SampledForm::new(g.clone(), 1, rng.normal_vec(2 * g.node_count())).unwrap();
    let w = wedge_sampled(&a, &b).unwrap();
    for i in 0..g.node_count() {
        let (x, y) = (a.at(i), b.at(i));
        assert!((w.at(i)[0] - (x[0] * y[1] - x[1] * y[0])).abs() <= 1e-10);
    }
}

#[test]
fn leibniz_for_polynomials() {
    let g = unit(128);
    let f = SampledForm::scalar(&g, |x| x[0] * x[0] * x[1]).unwrap();
    let df = one_form(&g, |x| [2.0 * x[0] * x[1], x[0] * x[0]]);
    let w = one_form(&g, |x| [x[1] * x[1], x[0] + x[1]]);
    let dw = top(&g, |x| 1.0 - 2.0 * x[1]);
    let rep = leibniz_residual(&f, &df, &w, &dw, &TestFormFamily::standard(&g, 0).unwrap()).unwrap();
    assert!(rep.weak.max <= 1e-3, "{}", rep.weak.max);
    assert!(rep.max_wedge_ratio <= rep.wedge_bound * (1.0 + 1e-12));
}

#[test]
fn file_layouts_round_trip() {
    let g = GridDomain::new(vec![0.0, -1.0], vec![1.0, 2.0], vec![4, 5]).unwrap();
    let mut rng = XorShift64Star::new(1);
    let f = SampledForm::new(g.clone(), 1, rng.normal_vec(2 * g.node_count())).unwrap();
    let mut bin = Vec::new();
    write_binary(&f, &mut bin).unwrap();
    assert_eq!(&bin[..4], b"QRSF");
    assert_eq!(read_binary(bin.as_slice()).unwrap(), f);
    let mut text = Vec::new();
    write_csv(&f, &mut text).unwrap();
    assert_eq!(read_csv(text.as_slice()).unwrap(), f);
    assert!(read_binary(&b"QRSX"[..]).is_err());
}

proptest! {
    #[test]
    fn d_is_linear(seed in any::<u64>(), c in -4.0..4.0f64) {
        let g = unit(9);
        let mut rng = XorShift64Star::new(seed);
        let a = SampledForm::new(g.clone(), 1, rng.normal_vec(2 * g.node_count())).unwrap();
        let b = SampledForm::new(g.clone(), 1, rng.normal_vec(2 * g.node_count())).unwrap();
        let lhs = exterior_derivative_fd(&a.scaled(c).add(&b).unwrap()).unwrap();
        let rhs = exterior_derivative_fd(&a).unwrap().scaled(c).add(&exterior_derivative_fd(&b).unwrap()).unwrap();
        prop_assert!(lhs.max_norm_diff(&rhs, None).unwrap() < 1e-9);
    }

    #[test]
    fn lp_norm_is_homogeneous(seed in any::<u64>(), c in -5.0..5.0f64, p in 1.0..6.0f64) {
        let g = unit(9);
        let mut rng = XorShift64Star::new(seed);
        let a = SampledForm::new(g.clone(), 1, rng.normal_vec(2 * g.node_count())).unwrap();
        let base = lp_norm(&a, p, None).unwrap();
        let scaled = lp_norm(&a.scaled(c), p, None).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (1.0 + base * c.abs()));
    }
}
