//! Comass norm `|α|_mass = sup { α(v_1 ∧ ... ∧ v_k) : |v_1 ∧ ... ∧ v_k| = 1 }`.
//!
//! For grades 0, 1, n-1 and n every k-vector is simple and the comass equals
//! the Grassmann norm. In between the supremum is taken over the Stiefel
//! manifold of orthonormal k-frames, which is non-convex; we only claim the
//! best value found as a lower bound.

use nalgebra::DVector;
use rayon::prelude::*;

use super::element::KCovector;
use super::metric::Metric;
use super::multi_index::{members, subsets};
use crate::error::Result;
use crate::linalg::{compound, det_in_place};
use crate::rng::XorShift64Star;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComassBudget {
    /// Independent starts of the frame ascent.
    pub multistarts: usize,
    /// Random simple unit k-vectors evaluated in addition to the ascent.
    pub random_samples: usize,
    /// Cap on full sweeps over the frame columns per start.
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for ComassBudget {
    fn default() -> Self {
        Self {
            multistarts: 64,
            random_samples: 20_000,
            max_sweeps: 2_000,
            seed: 0x00C0_4A55,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComassEstimate {
    /// Exact value when `certified`, otherwise the best lower bound found.
    pub lower: f64,
    pub certified: bool,
    /// Grassmann norm `|α|`, an upper bound for the comass.
    pub norm: f64,
}

pub fn comass_norm(alpha: &KCovector, g: &Metric, budget: &ComassBudget) -> Result<ComassEstimate> {
    let n = alpha.dim();
    let k = alpha.grade();
    let norm = g.covector_norm(alpha)?;
    if k <= 1 || k + 1 >= n {
        return Ok(ComassEstimate {
            lower: norm,
            certified: true,
            norm,
        });
    }

    // Express α in a g-orthonormal basis (columns of G^{-1/2}); the problem
    // becomes Euclidean.
    let (_, inv_root) = g.sqrt_pair();
    let whitened = compound(&inv_root, k).transpose() * DVector::from_column_slice(alpha.coeffs());
    let problem = Problem {
        n,
        k,
        masks: subsets(n, k),
        coeffs: whitened.iter().copied().collect(),
    };

    let ascent_best = (0..budget.multistarts)
        .into_par_iter()
        .map(|s| {
            let mut rng = XorShift64Star::fork(budget.seed, &format!("comass-start-{s}"));
            let frame = rng.normal_vec(n * k);
            problem.ascend(frame, budget.max_sweeps)
        })
        .reduce(|| 0.0, f64::max);

    const CHUNKS: usize = 16;
    let per_chunk = budget.random_samples.div_ceil(CHUNKS);
    let sample_best = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = XorShift64Star::fork(budget.seed, &format!("comass-sample-{c}"));
            let count = per_chunk.min(budget.random_samples.saturating_sub(c * per_chunk));
            let mut best = 0.0f64;
            for _ in 0..count {
                let frame = rng.normal_vec(n * k);
                best = best.max(problem.normalized_value(&frame).abs());
            }
            best
        })
        .reduce(|| 0.0, f64::max);

    Ok(ComassEstimate {
        lower: ascent_best.max(sample_best),
        certified: false,
        norm,
    })
}

/// `α(V) = Σ_I α_I det V[I, :]` for an n×k frame stored column-major.
struct Problem {
    n: usize,
    k: usize,
    masks: Vec<u32>,
    coeffs: Vec<f64>,
}

impl Problem {
    fn value(&self, frame: &[f64]) -> f64 {
        let k = self.k;
        let mut buf = [0.0f64; 64];
        let mut acc = 0.0;
        for (&mask, &a) in self.masks.iter().zip(&self.coeffs) {
            if a == 0.0 {
                continue;
            }
            for (i, r) in members(mask).enumerate() {
                for c in 0..k {
                    buf[i * k + c] = frame[c * self.n + r];
                }
            }
            acc += a * det_in_place(&mut buf[..k * k], k);
        }
        acc
    }

    /// Value on the simple k-vector spanned by the frame, scaled to unit norm.
    fn normalized_value(&self, frame: &[f64]) -> f64 {
        let (n, k) = (self.n, self.k);
        let mut gram = [0.0f64; 64];
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] = (0..n).map(|r| frame[i * n + r] * frame[j * n + r]).sum();
            }
        }
        let vol = det_in_place(&mut gram[..k * k], k).max(0.0).sqrt();
        if vol == 0.0 {
            0.0
        } else {
            self.value(frame) / vol
        }
    }

    /// α is linear in each column, so the gradient with respect to column `c`
    /// is read off by substituting the coordinate vectors.
    fn column_gradient(&self, frame: &mut [f64], c: usize) -> Vec<f64> {
        let n = self.n;
        let saved: Vec<f64> = frame[c * n..(c + 1) * n].to_vec();
        let mut grad = vec![0.0; n];
        for (r, gr) in grad.iter_mut().enumerate() {
            frame[c * n..(c + 1) * n].fill(0.0);
            frame[c * n + r] = 1.0;
            *gr = self.value(frame);
        }
        frame[c * n..(c + 1) * n].copy_from_slice(&saved);
        grad
    }

    /// Block-coordinate ascent over orthonormal frames: each column is
    /// replaced by the exact maximizer of the (linear) objective on the unit
    /// sphere of the orthogonal complement of the other columns.
    fn ascend(&self, mut frame: Vec<f64>, max_sweeps: usize) -> f64 {
        let (n, k) = (self.n, self.k);
        orthonormalize_columns(&mut frame, n, k);
        let mut prev = f64::NEG_INFINITY;
        let mut current = self.value(&frame);
        for _ in 0..max_sweeps {
            for c in 0..k {
                let mut g = self.column_gradient(&mut frame, c);
                for j in (0..k).filter(|&j| j != c) {
                    let col = &frame[j * n..(j + 1) * n];
                    let dot: f64 = g.iter().zip(col).map(|(a, b)| a * b).sum();
                    for (gi, ci) in g.iter_mut().zip(col) {
                        *gi -= dot * ci;
                    }
                }
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for (dst, gi) in frame[c * n..(c + 1) * n].iter_mut().zip(&g) {
                        *dst = gi / norm;
                    }
                }
            }
            // Columns drift from orthonormality only by rounding.
            orthonormalize_columns(&mut frame, n, k);
            prev = prev.max(current);
            current = self.value(&frame).abs();
            if current - prev <= 1e-15 * current.abs().max(1e-300) {
                break;
            }
        }
        current.max(prev)
    }
}

fn orthonormalize_columns(frame: &mut [f64], n: usize, k: usize) {
    for c in 0..k {
        for j in 0..c {
            let dot: f64 = (0..n).map(|r| frame[c * n + r] * frame[j * n + r]).sum();
            for r in 0..n {
                frame[c * n + r] -= dot * frame[j * n + r];
            }
        }
        let norm = (0..n).map(|r| frame[c * n + r].powi(2)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for r in 0..n {
                frame[c * n + r] /= norm;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::binomial;

    #[test]
    fn grade_one_is_certified() {
        let a = KCovector::new(3, 1, vec![3.0, 0.0, 0.0]).unwrap();
        let c = comass_norm(&a, &Metric::identity(3), &ComassBudget::default()).unwrap();
        assert!(c.certified);
        assert!((c.lower - 3.0).abs() < 1e-15);
    }

    #[test]
    fn top_grade_is_certified() {
        let a = KCovector::new(4, 4, vec![-2.5]).unwrap();
        let c = comass_norm(&a, &Metric::identity(4), &ComassBudget::default()).unwrap();
        assert!(c.certified);
        assert!((c.lower - 2.5).abs() < 1e-15);
    }

    #[test]
    fn symplectic_form_has_unit_comass() {
        // ε{1,2} + ε{3,4}
        let mut coeffs = vec![0.0; binomial(4, 2)];
        coeffs[0] = 1.0;
        coeffs[5] = 1.0;
        let a = KCovector::new(4, 2, coeffs).unwrap();
        let c = comass_norm(&a, &Metric::identity(4), &ComassBudget::default()).unwrap();
        assert!(!c.certified);
        assert!((c.lower - 1.0).abs() < 1e-6, "lower = {}", c.lower);
        assert!((c.norm - 2f64.sqrt()).abs() < 1e-14);
        assert!(c.norm <= 6f64.sqrt() * c.lower + 1e-12);
    }

    #[test]
    fn simple_covector_attains_its_norm() {
        // ε{1,2} is simple: comass equals the norm.
        let a = KCovector::basis(5, &[0, 1]).unwrap();
        let c = comass_norm(&a, &Metric::identity(5), &ComassBudget::default()).unwrap();
        assert!((c.lower - 1.0).abs() < 1e-9);
    }
}
