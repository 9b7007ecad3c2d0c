use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;
use qrforms::exterior::{binomial, KCovector, KVector, Metric};
use qrforms::linear::*;
use qrforms::rng::XorShift64Star;

fn diag(d: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d))
}

fn rotation(t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut r = DMatrix::identity(n, n);
                r[(p, p)] = c;
                r[(q, q)] = c;
                r[(p, q)] = s;
                r[(q, p)] = -s;
                a = r.transpose() * &a * &r;
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    e.sort_by(|x, y| y.total_cmp(x));
    e
}

#[test]
fn svd_examples() {
    let s = svd_analysis(&FiberLinearMap::euclidean(diag(&[3.0, 1.0])).unwrap());
    assert_eq!(s.singvals, vec![3.0, 1.0]);
    assert_eq!((s.opnorm, s.lmin), (3.0, 1.0));
    assert_abs_diff_eq!(s.signed_jac, 3.0, epsilon = 1e-15);
    let s = svd_analysis(&FiberLinearMap::euclidean(rotation(0.4)).unwrap());
    assert_abs_diff_eq!(s.singvals[0], 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(s.singvals[1], 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(s.signed_jac, 1.0, epsilon = 1e-14);
}

#[test]
fn svd_matches_jacobi_oracle() {
    let mut rng = XorShift64Star::new(7);
    for _ in 0..50 {
        let m = DMatrix::from_fn(3, 3, |_, _| rng.normal());
        let s = svd_analysis(&FiberLinearMap::euclidean(m.clone()).unwrap());
        let oracle: Vec<f64> = jacobi_eigenvalues(m.transpose() * &m)
            .into_iter()
            .map(|e| e.max(0.0).sqrt())
            .collect();
        for (a, b) in s.singvals.iter().zip(&oracle) {
            assert!(
                (a - b).abs() <= 1e-9 * oracle[0],
                "{:?} vs {oracle:?}",
                s.singvals
            );
        }
        assert_abs_diff_eq!(
            s.absdet,
            m.determinant().abs(),
            epsilon = 1e-10 * oracle[0].powi(3)
        );
    }
}

#[test]
fn metric_adjusted_singular_values() {
    // g_src = diag(4,1) halves the first direction, g_dst = diag(1,9) triples the second
    let l = FiberLinearMap::new(
        DMatrix::identity(2, 2),
        Metric::diagonal(&[4.0, 1.0]).unwrap(),
        Metric::diagonal(&[1.0, 9.0]).unwrap(),
    )
    .unwrap();
    let s = svd_analysis(&l);
    assert_abs_diff_eq!(s.singvals[0], 3.0, epsilon = 1e-14);
    assert_abs_diff_eq!(s.singvals[1], 0.5, epsilon = 1e-14);
}

#[test]
fn jacobian_inequality_examples() {
    let s = svd_analysis(&FiberLinearMap::euclidean(diag(&[2.0, 1.0, 1.0])).unwrap());
    let r = jacobian_inequalities(&s);
    assert!(r.holds(0.0));
    assert_eq!((s.lmin.powi(3), s.absdet, s.opnorm.powi(3)), (1.0, 2.0, 8.0));
    let s = svd_analysis(&FiberLinearMap::euclidean(rotation(1.1)).unwrap());
    assert!(jacobian_inequalities(&s).max_violation() <= 1e-15);
    assert_abs_diff_eq!(s.absdet, 1.0, epsilon = 1e-14);
}

#[test]
fn jacobian_inequality_sweep() {
    let mut rng = XorShift64Star::new(1);
    for _ in 0..1000 {
        let n = 1 + rng.below(5);
        let m = DMatrix::from_fn(n, n, |_, _| rng.normal());
        let s = svd_analysis(&FiberLinearMap::euclidean(m).unwrap());
        // direct σ products
        let prod: f64 = s.singvals.iter().product();
        assert!(s.lmin.powi(n as i32) <= prod * (1.0 + 1e-12));
        assert!(prod <= s.opnorm.powi(n as i32) * (1.0 + 1e-12));
        assert!(jacobian_inequalities(&s).max_violation() <= 1e-12);
    }
}

#[test]
fn dilatation_examples() {
    let d = dilatation(&svd_analysis(
        &FiberLinearMap::euclidean(diag(&[2.0, 1.0])).unwrap(),
    ));
    assert_abs_diff_eq!(d.outer, 4.0 / 2.0, epsilon = 1e-15);
    let d = dilatation(&svd_analysis(
        &FiberLinearMap::euclidean(diag(&[0.7; 3])).unwrap(),
    ));
    assert_abs_diff_eq!(d.outer, 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(d.inner.unwrap(), 1.0, epsilon = 1e-14);
    let d = dilatation(&svd_analysis(
        &FiberLinearMap::euclidean(diag(&[1.0, 0.0])).unwrap(),
    ));
    assert!(d.outer.is_infinite());
}

#[test]
fn inner_outer_sweep() {
    let mut rng = XorShift64Star::new(3);
    let mut done = 0;
    while done < 1000 {
        let n = 1 + rng.below(5);
        let m = DMatrix::from_fn(n, n, |_, _| rng.normal());
        if m.determinant() <= 0.0 {
            continue;
        }
        done += 1;
        let d = dilatation(&svd_analysis(&FiberLinearMap::euclidean(m).unwrap()));
        let inner = d.inner.unwrap();
        assert!(inner <= d.outer.powi(n as i32 - 1) * (1.0 + 1e-10));
        assert!(d.outer <= inner.powi(n as i32 - 1) * (1.0 + 1e-10));
    }
}

#[test]
fn pullback_examples() {
    let mut rng = XorShift64Star::new(4);
    let alpha = KCovector::new(3, 2, rng.normal_vec(3)).unwrap();
    let id = FiberLinearMap::euclidean(DMatrix::identity(3, 3)).unwrap();
    assert_eq!(pullback_linear(&alpha, &id).unwrap(), alpha);
    let (a, b) = (1.7, -0.4);
    let top = KCovector::basis(2, &[0, 1]).unwrap();
    let p = pullback_linear(&top, &FiberLinearMap::euclidean(diag(&[a, b])).unwrap()).unwrap();
    assert_abs_diff_eq!(p.coeffs()[0], a * b, epsilon = 1e-15);

    let r = rotation(0.7);
    let l = FiberLinearMap::euclidean(r.clone()).unwrap();
    let e1 = KCovector::basis(2, &[0]).unwrap();
    let p = pullback_linear(&e1, &l).unwrap();
    for j in 0..2 {
        let ej = KVector::basis(2, &[j]).unwrap();
        let lej = KVector::from_coords(&[r[(0, j)], r[(1, j)]]).unwrap();
        let direct = e1.eval(&lej).unwrap();
        assert!((p.eval(&ej).unwrap() - direct).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn pullback_evaluates_on_pushed_vectors(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = XorShift64Star::new(seed);
        let k = 1 + rng.below(n);
        let m = DMatrix::from_fn(n, n, |_, _| rng.normal());
        let l = FiberLinearMap::euclidean(m.clone()).unwrap();
        let alpha = KCovector::new(n, k, rng.normal_vec(binomial(n, k))).unwrap();
        let vs: Vec<Vec<f64>> = (0..k).map(|_| rng.normal_vec(n)).collect();
        let pushed: Vec<KVector> = vs
            .iter()
            .map(|v| {
                let lv = &m * nalgebra::DVector::from_column_slice(v);
                KVector::from_coords(lv.as_slice()).unwrap()
            })
            .collect();
        let plain: Vec<KVector> = vs.iter().map(|v| KVector::from_coords(v).unwrap()).collect();
        let lhs = pullback_linear(&alpha, &l).unwrap().eval(&KVector::wedge_all(n, &plain).unwrap()).unwrap();
        let rhs = alpha.eval(&KVector::wedge_all(n, &pushed).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn compose_multiplies_jacobians(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = XorShift64Star::new(seed);
        let a = FiberLinearMap::euclidean(DMatrix::from_fn(n, n, |_, _| rng.normal())).unwrap();
        let b = FiberLinearMap::euclidean(DMatrix::from_fn(n, n, |_, _| rng.normal())).unwrap();
        let ab = svd_analysis(&a.compose(&b).unwrap()).signed_jac;
        let prod = svd_analysis(&a).signed_jac * svd_analysis(&b).signed_jac;
        prop_assert!((ab - prod).abs() <= 1e-10 * (1.0 + prod.abs()));
    }
}
