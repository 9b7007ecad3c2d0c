use nalgebra::DMatrix;
use serde_json::json;

use super::algebra::random_metric;
use super::{at_most, Context, Outcome, Planned};
use crate::error::Result;
use crate::exterior::{binomial, KCovector, Metric};
use crate::linear::{dilatation, jacobian_inequalities, pullback_linear, svd_analysis, FiberLinearMap};
use crate::rng::XorShift64Star;

fn random_matrix(rng: &mut XorShift64Star, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.normal())
}

fn random_map(rng: &mut XorShift64Star, n: usize, t: usize) -> Result<FiberLinearMap> {
    let m = random_matrix(rng, n);
    let src = random_metric(rng, n, t);
    let dst = random_metric(rng, n, t / 2);
    FiberLinearMap::new(m, src, dst)
}

/// Flips the first row when the determinant is negative.
fn positive(mut m: DMatrix<f64>) -> DMatrix<f64> {
    if m.determinant() < 0.0 {
        m.row_mut(0).neg_mut();
    }
    m
}

fn inequalities(seed: u64, trials: usize) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "jacobian_inequalities");
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let n = 1 + rng.below(5);
        let s = svd_analysis(&random_map(&mut rng, n, t)?);
        let v = jacobian_inequalities(&s).max_violation();
        worst = worst.max(v);
        violations += (v > 1e-12) as usize;
    }
    Ok(Outcome::new(violations as f64).with("max_violation", worst))
}

/// Singular values against `sqrt(eig(L⁻¹ Mᵀ G_dst M L⁻ᵀ))` with `G_src = LLᵀ`.
fn svd_oracle(seed: u64, trials: usize) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "svd_oracle");
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let map = random_map(&mut rng, 3, t)?;
        let s = svd_analysis(&map);
        let l = map
            .src_metric
            .gram()
            .clone()
            .cholesky()
            .expect("positive definite")
            .l();
        let linv = l.try_inverse().expect("invertible");
        let sym = &linv * map.matrix.transpose() * map.dst_metric.gram() * &map.matrix * linv.transpose();
        let sym = (&sym + sym.transpose()) * 0.5;
        let mut oracle: Vec<f64> = sym
            .symmetric_eigenvalues()
            .iter()
            .map(|e| e.max(0.0).sqrt())
            .collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in s.singvals.iter().zip(&oracle) {
            worst = worst.max((a - b).abs() / oracle[0]);
        }
    }
    Ok(Outcome::new(worst))
}

fn inner_outer(seed: u64, trials: usize) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "inner_outer");
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = 1 + rng.below(5);
        let m = positive(random_matrix(&mut rng, n));
        let s = svd_analysis(&FiberLinearMap::euclidean(m)?);
        let d = dilatation(&s);
        let inner = d.inner.unwrap_or(f64::INFINITY);
        worst = worst.max(inner / d.outer.powi(n as i32 - 1) - 1.0);
    }
    Ok(Outcome::new(worst.max(0.0)))
}

fn absdet_product(seed: u64, trials: usize) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "absdet_product");
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let n = 1 + rng.below(5);
        let a = random_metric(&mut rng, n, t);
        let b = random_metric(&mut rng, n, t + 1);
        let c = random_metric(&mut rng, n, t);
        let inner = FiberLinearMap::new(random_matrix(&mut rng, n), a, b.clone())?;
        let outer = FiberLinearMap::new(random_matrix(&mut rng, n), b, c)?;
        let both = svd_analysis(&outer.compose(&inner)?).absdet;
        let prod = svd_analysis(&outer).absdet * svd_analysis(&inner).absdet;
        worst = worst.max((both - prod).abs() / prod.max(f64::MIN_POSITIVE));
    }
    Ok(Outcome::new(worst))
}

fn contravariance(seed: u64, trials: usize) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "contravariance");
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = 1 + rng.below(5);
        let k = rng.below(n + 1);
        let l = FiberLinearMap::euclidean(random_matrix(&mut rng, n))?;
        let m = FiberLinearMap::euclidean(random_matrix(&mut rng, n))?;
        let alpha = KCovector::new(n, k, rng.normal_vec(binomial(n, k)))?;
        let direct = pullback_linear(&alpha, &l.compose(&m)?)?;
        let staged = pullback_linear(&pullback_linear(&alpha, &l)?, &m)?;
        let scale = direct.coeffs().iter().fold(1.0, |s: f64, v| s.max(v.abs()));
        worst = worst.max(direct.max_abs_diff(&staged) / scale);
    }
    Ok(Outcome::new(worst))
}

/// Largest violation of
/// `C^{-1/2} l^k |α| ≤ |L^*α| ≤ C^{1/2} |L|^k |α|` and of the bilipschitz
/// version with `Λ = max(|L|, 1/l)`.
fn pullback_sandwich(seed: u64, trials: usize) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "pullback_sandwich");
    let (mut sandwich, mut bilip) = (0.0f64, 0.0f64);
    for t in 0..trials {
        let n = 1 + rng.below(5);
        let k = rng.below(n + 1);
        let src = random_metric(&mut rng, n, t);
        let dst = random_metric(&mut rng, n, t / 2);
        let l = FiberLinearMap::new(positive(random_matrix(&mut rng, n)), src.clone(), dst.clone())?;
        let s = svd_analysis(&l);
        let alpha = KCovector::new(n, k, rng.normal_vec(binomial(n, k)))?;
        let a = dst.covector_norm(&alpha)?;
        let p = src.covector_norm(&pullback_linear(&alpha, &l)?)?;
        let c = (binomial(n, k) as f64).sqrt();
        let ki = k as i32;
        let lower = s.lmin.powi(ki) * a / c;
        let upper = c * s.opnorm.powi(ki) * a;
        sandwich = sandwich.max((lower - p) / upper).max((p - upper) / upper);
        let lam = s.opnorm.max(1.0 / s.lmin);
        let (lo, hi) = (a / (c * lam.powi(ki)), c * lam.powi(ki) * a);
        bilip = bilip.max((lo - p) / hi).max((p - hi) / hi);
    }
    Ok(Outcome::new(sandwich.max(bilip).max(0.0))
        .with("sandwich_violation", sandwich.max(0.0))
        .with("bilipschitz_violation", bilip.max(0.0)))
}

/// `(L^*ε1)(e_j) = ε1(L e_j)` for a rotation, plus the diagonal and identity
/// examples.
fn pullback_examples() -> Result<Outcome> {
    let theta: f64 = 0.7;
    let rot = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
    let l = FiberLinearMap::euclidean(rot.clone())?;
    let e1 = KCovector::basis(2, &[0])?;
    let p = pullback_linear(&e1, &l)?;
    let mut worst = (p.coeffs()[0] - rot[(0, 0)])
        .abs()
        .max((p.coeffs()[1] - rot[(0, 1)]).abs());
    let d = FiberLinearMap::euclidean(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.5]))?;
    let top = pullback_linear(&KCovector::basis(2, &[0, 1])?, &d)?;
    worst = worst.max((top.coeffs()[0] - 1.5).abs());
    let id = FiberLinearMap::new(DMatrix::identity(2, 2), Metric::identity(2), Metric::identity(2))?;
    worst = worst.max(pullback_linear(&e1, &id)?.max_abs_diff(&e1));
    Ok(Outcome::new(worst))
}

pub(super) fn plan(ctx: &Context) -> Vec<Planned> {
    let seed = ctx.seed;
    vec![
        at_most(
            "linear.jacobian_inequalities".into(),
            "l(L)^n ≤ |det L| ≤ |L|^n",
            0.0,
            json!({"trials": 1000, "max_dim": 5, "violation_threshold": 1e-12, "seed": seed}),
            move || inequalities(seed, 1000),
        ),
        at_most(
            "linear.svd_oracle".into(),
            "singular values are the square roots of the eigenvalues of L*L",
            1e-9,
            json!({"trials": 200, "dim": 3, "seed": seed}),
            move || svd_oracle(seed, 200),
        ),
        at_most(
            "linear.inner_outer".into(),
            "K_inner ≤ K_outer^{n-1}",
            1e-10,
            json!({"trials": 1000, "max_dim": 5, "seed": seed}),
            move || inner_outer(seed, 1000),
        ),
        at_most(
            "linear.absdet_product".into(),
            "|det(LM)| = |det L| |det M|",
            1e-10,
            json!({"trials": 500, "max_dim": 5, "seed": seed}),
            move || absdet_product(seed, 500),
        ),
        at_most(
            "linear.contravariance".into(),
            "(LM)^* = M^* L^*",
            1e-10,
            json!({"trials": 500, "max_dim": 5, "seed": seed}),
            move || contravariance(seed, 500),
        ),
        at_most(
            "linear.pullback_sandwich".into(),
            "C(n,k)^{-1/2} l(L)^k |α| ≤ |L^*α| ≤ C(n,k)^{1/2} |L|^k |α|",
            1e-9,
            json!({"trials": 500, "max_dim": 5, "seed": seed}),
            move || pullback_sandwich(seed, 500),
        ),
        at_most(
            "linear.pullback_evaluation".into(),
            "(L^*α)(v1∧…∧vk) = α(Lv1∧…∧Lvk)",
            1e-12,
            json!({"theta": 0.7, "diag": [3.0, 0.5]}),
            pullback_examples,
        ),
    ]
}
