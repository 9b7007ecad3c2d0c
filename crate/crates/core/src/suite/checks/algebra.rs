use nalgebra::{DMatrix, DVector};
use serde_json::json;

use super::{at_least, at_most, Context, Outcome, Planned};
use crate::error::Result;
use crate::exterior::{
    binomial, comass_norm, grassmann_inner, metric_flat, metric_sharp, simple_orthogonalize, ComassBudget,
    KCovector, KVector, Metric,
};
use crate::rng::XorShift64Star;

/// Identity for even `t`, otherwise `I + BBᵀ/n` with Gaussian `B`.
pub(crate) fn random_metric(rng: &mut XorShift64Star, n: usize, t: usize) -> Metric {
    if t % 2 == 0 {
        return Metric::identity(n);
    }
    let b = DMatrix::from_fn(n, n, |_, _| rng.normal());
    Metric::new(DMatrix::identity(n, n) + &b * b.transpose() / n as f64).expect("positive definite")
}

fn random_vectors(rng: &mut XorShift64Star, n: usize, k: usize) -> Vec<KVector> {
    (0..k)
        .map(|_| KVector::from_coords(&rng.normal_vec(n)).expect("finite"))
        .collect()
}

fn gram_inner(g: &Metric, v: &[f64], w: &[f64]) -> f64 {
    let (v, w) = (DVector::from_column_slice(v), DVector::from_column_slice(w));
    v.dot(&(g.gram() * w))
}

/// `max |⟨∧v, ∧w⟩ - det[⟨v_i, w_j⟩]| / Π|v_i||w_i|` over random simple pairs.
pub fn grassmann_determinant_sweep(seed: u64, trials: usize) -> Result<f64> {
    let mut rng = XorShift64Star::fork(seed, "grassmann_determinant");
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let n = 1 + rng.below(5);
        let k = 1 + rng.below(n.min(3));
        let g = random_metric(&mut rng, n, t);
        let v = random_vectors(&mut rng, n, k);
        let w = random_vectors(&mut rng, n, k);
        let a = KVector::wedge_all(n, &v)?;
        let b = KVector::wedge_all(n, &w)?;
        let inner = grassmann_inner(&a, &b, &g)?;
        let gram = DMatrix::from_fn(k, k, |i, j| gram_inner(&g, v[i].coeffs(), w[j].coeffs()));
        let scale: f64 = v
            .iter()
            .chain(&w)
            .map(|x| gram_inner(&g, x.coeffs(), x.coeffs()).sqrt())
            .product();
        worst = worst.max((inner - gram.determinant()).abs() / scale);
    }
    Ok(worst)
}

/// Largest sandwich violation `ℓ ≤ |α| ≤ C(n,k)^{1/2} ℓ` (relative to `|α|`)
/// over `per_pair` random covectors for every `1 ≤ k ≤ n ≤ 5`, together with
/// the smallest ratio `ℓ/|α|` seen on uncertified grades.
pub fn comass_sandwich_sweep(seed: u64, per_pair: usize, budget: ComassBudget) -> Result<(f64, f64)> {
    let mut rng = XorShift64Star::fork(seed, "comass_sandwich");
    let mut worst: f64 = 0.0;
    let mut min_ratio: f64 = 1.0;
    for n in 1..=5 {
        for k in 1..=n {
            let c = (binomial(n, k) as f64).sqrt();
            for t in 0..per_pair {
                let g = random_metric(&mut rng, n, t);
                let alpha = KCovector::new(n, k, rng.normal_vec(binomial(n, k)))?;
                let b = ComassBudget {
                    seed: rng.next_u64(),
                    ..budget
                };
                let est = comass_norm(&alpha, &g, &b)?;
                let norm = g.covector_norm(&alpha)?;
                let mut v = ((est.lower - norm).max(0.0)).max((norm - c * est.lower).max(0.0)) / norm;
                if est.certified {
                    v = v.max((est.lower - norm).abs() / norm);
                } else {
                    min_ratio = min_ratio.min(est.lower / norm);
                }
                worst = worst.max(v);
            }
        }
    }
    Ok((worst, min_ratio))
}

/// Comass lower bound of `ε{1,2} + ε{3,4}` in dimension 4.
pub fn comass_split_pair(budget: &ComassBudget) -> Result<(f64, f64)> {
    let mut alpha = KCovector::basis(4, &[0, 1])?;
    alpha = alpha.try_add(&KCovector::basis(4, &[2, 3])?)?;
    let est = comass_norm(&alpha, &Metric::identity(4), budget)?;
    Ok((est.lower, est.norm))
}

fn flat_sharp(seed: u64, trials: usize) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "flat_sharp");
    let mut inverse: f64 = 0.0;
    let mut duality: f64 = 0.0;
    for t in 0..trials {
        let n = 1 + rng.below(5);
        let k = rng.below(n + 1);
        let g = random_metric(&mut rng, n, t + 1);
        let v = KVector::new(n, k, rng.normal_vec(binomial(n, k)))?;
        let w = KVector::new(n, k, rng.normal_vec(binomial(n, k)))?;
        let back = metric_sharp(&metric_flat(&v, &g)?, &g)?;
        let scale = v.coeffs().iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        inverse = inverse.max(back.max_abs_diff(&v) / scale);
        let lhs = g.covector_inner(&metric_flat(&v, &g)?, &metric_flat(&w, &g)?)?;
        let rhs = g.inner(&v, &w)?;
        duality = duality.max((lhs - rhs).abs() / (g.norm(&v)? * g.norm(&w)?));
    }
    Ok(Outcome::new(inverse.max(duality))
        .with("max_inverse_residual", inverse)
        .with("max_duality_residual", duality))
}

fn orthogonalize(seed: u64, trials: usize) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "orthogonalize");
    let (mut wedge, mut ortho, mut product) = (0.0f64, 0.0f64, 0.0f64);
    for t in 0..trials {
        let n = 1 + rng.below(6);
        let k = 1 + rng.below(n);
        let g = random_metric(&mut rng, n, t);
        let v = random_vectors(&mut rng, n, k);
        let out = simple_orthogonalize(&v, &g)?;
        let before = KVector::wedge_all(n, &v)?;
        let after = KVector::wedge_all(n, &out.factors)?;
        let scale: f64 = v.iter().map(|x| g.norm(x).unwrap_or(1.0)).product();
        wedge = wedge.max(after.max_abs_diff(&before) / scale);
        for i in 0..k {
            for j in 0..i {
                let a = &out.factors[i];
                let b = &out.factors[j];
                ortho = ortho.max(g.inner(a, b)?.abs() / (g.norm(a)? * g.norm(b)?));
            }
        }
        let prod: f64 = out.factors.iter().map(|x| g.norm(x).unwrap_or(0.0)).product();
        product = product.max((g.norm(&after)? - prod).abs() / scale);
    }
    Ok(Outcome::new(wedge.max(ortho).max(product))
        .with("max_wedge_residual", wedge)
        .with("max_orthogonality", ortho)
        .with("max_norm_product_residual", product))
}

fn degenerate_frame() -> Result<Outcome> {
    let g = Metric::identity(2);
    let e1 = KVector::basis(2, &[0])?;
    let out = simple_orthogonalize(&[e1.clone(), e1.scaled(2.0)], &g)?;
    let wedge = KVector::wedge_all(2, &out.factors)?;
    let zero = wedge.coeffs().iter().all(|&c| c == 0.0);
    Ok(Outcome::new((out.degenerate && zero) as u8 as f64))
}

fn hadamard(seed: u64, trials: usize) -> Result<Outcome> {
    let mut rng = XorShift64Star::fork(seed, "hadamard");
    let mut worst: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for t in 0..trials {
        let n = 1 + rng.below(6);
        let k = 1 + rng.below(n);
        let g = random_metric(&mut rng, n, t);
        let v = random_vectors(&mut rng, n, k);
        let prod: f64 = v.iter().map(|x| g.norm(x).unwrap_or(0.0)).product();
        let ratio = g.norm(&KVector::wedge_all(n, &v)?)? / prod;
        max_ratio = max_ratio.max(ratio);
        worst = worst.max(ratio - 1.0);
    }
    Ok(Outcome::new(worst.max(0.0)).with("max_ratio", max_ratio))
}

fn wedge_examples() -> Result<Outcome> {
    let e1 = KVector::basis(2, &[0])?;
    let e2 = KVector::basis(2, &[1])?;
    let a = e1.wedge(&e2)?.coeffs()[0] - 1.0;
    let b = e1.wedge(&e1)?.coeffs()[0];
    let c = e1.try_add(&e2)?.wedge(&e1.try_add(&e2.scaled(-1.0))?)?.coeffs()[0] + 2.0;
    Ok(Outcome::new(a.abs().max(b.abs()).max(c.abs())))
}

pub(super) fn plan(ctx: &Context) -> Vec<Planned> {
    let seed = ctx.seed;
    let sweep = ComassBudget {
        multistarts: 8,
        random_samples: 2_000,
        max_sweeps: 500,
        ..ComassBudget::default()
    };
    vec![
        at_most(
            "algebra.wedge_basis".into(),
            "e1∧e2 = e12, e1∧e1 = 0, (e1+e2)∧(e1-e2) = -2 e12",
            0.0,
            json!({}),
            wedge_examples,
        ),
        at_most(
            "algebra.grassmann_determinant".into(),
            "⟨v1∧…∧vk, w1∧…∧wk⟩ = det[⟨vi, wj⟩]",
            1e-10,
            json!({"trials": 1000, "max_dim": 5, "max_grade": 3, "seed": seed}),
            move || grassmann_determinant_sweep(seed, 1000).map(Outcome::new),
        ),
        at_most(
            "algebra.comass_sandwich".into(),
            "ℓ ≤ |α|_mass ≤ |α| ≤ C(n,k)^{1/2} |α|_mass",
            1e-9,
            json!({"per_pair": 20, "max_dim": 5, "multistarts": sweep.multistarts,
                   "random_samples": sweep.random_samples, "seed": seed}),
            move || {
                let (v, r) = comass_sandwich_sweep(seed, 20, sweep)?;
                Ok(Outcome::new(v).with("min_uncertified_ratio", r))
            },
        ),
        at_most(
            "algebra.comass_split".into(),
            "comass of ε12 + ε34 is 1 while its Grassmann norm is √2",
            1e-6,
            json!({"dim": 4, "budget": "default"}),
            || {
                let (lower, norm) = comass_split_pair(&ComassBudget::default())?;
                Ok(Outcome::new((lower - 1.0).abs())
                    .with("lower", lower)
                    .with("norm", norm))
            },
        ),
        at_most(
            "algebra.flat_sharp".into(),
            "sharp ∘ flat = id and ⟨flat v, flat w⟩ = ⟨v, w⟩",
            1e-10,
            json!({"trials": 100, "seed": seed}),
            move || flat_sharp(seed, 100),
        ),
        at_most(
            "algebra.orthogonalize".into(),
            "Gram-Schmidt keeps v1∧…∧vk and |v1∧…∧vk| = Π|vi'| for orthogonal factors",
            1e-10,
            json!({"trials": 1000, "max_dim": 6, "seed": seed}),
            move || orthogonalize(seed, 1000),
        ),
        at_least(
            "algebra.orthogonalize_degenerate".into(),
            "dependent factors give the zero wedge",
            1.0,
            json!({"factors": [[1.0, 0.0], [2.0, 0.0]]}),
            degenerate_frame,
        ),
        at_most(
            "algebra.hadamard".into(),
            "|v1∧…∧vk| ≤ Π|vi|",
            1e-12,
            json!({"trials": 1000, "max_dim": 6, "seed": seed}),
            move || hadamard(seed, 1000),
        ),
    ]
}
