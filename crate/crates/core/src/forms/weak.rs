//! Weak exterior derivative checks against compactly supported test forms.
//!
//! A form `τ` of grade k+1 is the weak differential of `ω` when
//! `∫ ω ∧ dη = (-1)^{k+1} ∫ τ ∧ η` for every smooth `η` of grade n-k-1 with
//! compact support. The quantifier over all `η` is replaced by a finite
//! family of bump-times-monomial forms.

use super::grid::GridDomain;
use super::mollifier::{bump, bump_ds};
use super::sampled::{wedge_sampled, SampledForm};
use crate::error::{Error, Result};
use crate::exterior::binomial;
use crate::exterior::multi_index::{subsets, wedge_sign, Basis};

/// `η = ψ(x) · Π_a ((x_a - c_a)/ρ)^{e_a} · ε_J` with `ψ` the radial bump of
/// radius `ρ` centred at `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestForm {
    pub center: Vec<f64>,
    pub radius: f64,
    pub exponents: Vec<u32>,
    /// Basis multi-index `J` as a bit mask.
    pub mask: u32,
}

impl TestForm {
    pub fn grade(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Scalar profile and its gradient at `x`.
    pub fn profile(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = x.len();
        let r2 = self.radius * self.radius;
        let s: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c).powi(2))
            .sum::<f64>()
            / r2;
        if s >= 1.0 {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return 0.0;
        }
        let psi = bump(s);
        let dpsi = bump_ds(s);
        let t: Vec<f64> = (0..n).map(|a| (x[a] - self.center[a]) / self.radius).collect();
        let poly: f64 = (0..n).map(|a| t[a].powi(self.exponents[a] as i32)).product();
        for a in 0..n {
            let e = self.exponents[a];
            let dpoly = if e == 0 {
                0.0
            } else {
                let mut p = e as f64 * t[a].powi(e as i32 - 1) / self.radius;
                for b in (0..n).filter(|&b| b != a) {
                    p *= t[b].powi(self.exponents[b] as i32);
                }
                p
            };
            grad[a] = dpsi * 2.0 * (x[a] - self.center[a]) / r2 * poly + psi * dpoly;
        }
        psi * poly
    }

    /// `(η, dη)` sampled on a grid.
    pub fn sample(&self, g: &GridDomain) -> (SampledForm, SampledForm) {
        let n = g.dim();
        let m = self.grade();
        let src = Basis::new(n, m);
        let dst = Basis::new(n, m + 1);
        let slot = src.rank(self.mask);
        let mut eta = vec![0.0; g.node_count() * src.len()];
        let mut deta = vec![0.0; g.node_count() * dst.len().max(1)];
        let mut grad = vec![0.0; n];
        for node in 0..g.node_count() {
            let x = g.point(node);
            let v = self.profile(&x, &mut grad);
            eta[node * src.len() + slot] = v;
            if m < n {
                for a in (0..n).filter(|a| self.mask & (1 << a) == 0) {
                    let s = wedge_sign(1 << a, self.mask).expect("disjoint");
                    deta[node * dst.len() + dst.rank(self.mask | (1 << a))] += s * grad[a];
                }
            }
        }
        let d = if m < n {
            SampledForm::from_parts(g.clone(), m + 1, deta)
        } else {
            SampledForm::zeros(g, m)
        };
        (SampledForm::from_parts(g.clone(), m, eta), d)
    }

    fn fits(&self, g: &GridDomain) -> bool {
        (0..g.dim()).all(|a| {
            let margin = 2.0 * g.spacing(a);
            self.center[a] - self.radius >= g.lower()[a] + margin
                && self.center[a] + self.radius <= g.upper()[a] - margin
        })
    }

    /// Index range of grid nodes that can lie in the support.
    fn node_box(&self, g: &GridDomain) -> Vec<(usize, usize)> {
        (0..g.dim())
            .map(|a| {
                let h = g.spacing(a);
                let lo = ((self.center[a] - self.radius - g.lower()[a]) / h)
                    .floor()
                    .max(0.0) as usize;
                let hi = (((self.center[a] + self.radius - g.lower()[a]) / h).ceil() as usize)
                    .min(g.samples()[a] - 1);
                (lo, hi)
            })
            .collect()
    }
}

/// Finite family of test forms of one grade, all supported at least two
/// grid spacings away from the boundary of the grid they were built for.
#[derive(Debug, Clone)]
pub struct TestFormFamily {
    domain: GridDomain,
    grade: usize,
    forms: Vec<TestForm>,
}

impl TestFormFamily {
    pub fn new(domain: &GridDomain, grade: usize, forms: Vec<TestForm>) -> Result<Self> {
        if forms.is_empty() {
            return Err(Error::EmptyTestFamily);
        }
        for f in &forms {
            if f.grade() != grade || f.center.len() != domain.dim() {
                return Err(Error::GradeMismatch {
                    expected: grade,
                    found: f.grade(),
                });
            }
            if !f.fits(domain) {
                return Err(Error::InvalidGrid(
                    "test form support reaches within 2h of the boundary".into(),
                ));
            }
        }
        Ok(Self {
            domain: domain.clone(),
            grade,
            forms,
        })
    }

    /// Bumps of the given radius at each centre, multiplied by the monomials
    /// of total degree ≤ `max_degree`, on every basis element of the grade.
    pub fn from_centers(
        domain: &GridDomain,
        grade: usize,
        centers: &[Vec<f64>],
        radius: f64,
        max_degree: u32,
    ) -> Result<Self> {
        let n = domain.dim();
        let exps = exponent_vectors(n, max_degree);
        let mut forms = Vec::new();
        for c in centers {
            for e in &exps {
                for &mask in &subsets(n, grade) {
                    forms.push(TestForm {
                        center: c.clone(),
                        radius,
                        exponents: e.clone(),
                        mask,
                    });
                }
            }
        }
        Self::new(domain, grade, forms)
    }

    /// Centres on the lattice `{0.3, 0.5, 0.7}^n` (relative to the box) with
    /// radius a quarter of the shortest side, shrunk if needed to keep the
    /// support 2h away from the faces; monomials of degree ≤ 1.
    pub fn standard(domain: &GridDomain, grade: usize) -> Result<Self> {
        let n = domain.dim();
        let side = (0..n)
            .map(|a| domain.upper()[a] - domain.lower()[a])
            .fold(f64::INFINITY, f64::min);
        let radius = (0.25 * side).min(0.3 * side - 2.0 * domain.max_spacing() * (1.0 + 1e-9));
        if radius <= 0.0 {
            return Err(Error::InvalidGrid("grid too coarse for test forms".into()));
        }
        let fractions = [0.3, 0.5, 0.7];
        let mut centers = vec![vec![]];
        for a in 0..n {
            let lo = domain.lower()[a];
            let w = domain.upper()[a] - lo;
            centers = centers
                .into_iter()
                .flat_map(|c: Vec<f64>| {
                    fractions.iter().map(move |f| {
                        let mut c = c.clone();
                        c.push(lo + f * w);
                        c
                    })
                })
                .collect();
        }
        Self::from_centers(domain, grade, &centers, radius, 1)
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn forms(&self) -> &[TestForm] {
        &self.forms
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}

fn exponent_vectors(n: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|e: Vec<u32>| {
                let used: u32 = e.iter().sum();
                (0..=max_degree - used).map(move |d| {
                    let mut e = e.clone();
                    e.push(d);
                    e
                })
            })
            .collect();
    }
    out
}

/// Per-test weak residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidual {
    pub max: f64,
    pub residuals: Vec<f64>,
    /// `∫ |η|` for each test form, the natural scale of its residual.
    pub masses: Vec<f64>,
}

/// Top coefficient of `α ∧ β` for complementary grades as a list of
/// `(rank in α, rank in β, sign)`.
fn complementary_pairs(n: usize, ka: usize) -> Vec<(usize, usize, f64)> {
    let a = Basis::new(n, ka);
    let b = Basis::new(n, n - ka);
    let full = (1u32 << n) - 1;
    a.masks
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let c = full & !m;
            (i, b.rank(c), wedge_sign(m, c).expect("disjoint"))
        })
        .collect()
}

/// `max_η |∫ ω ∧ dη - (-1)^{k+1} ∫ τ ∧ η|`.
pub fn weak_derivative_residual(
    omega: &SampledForm,
    tau: &SampledForm,
    tests: &TestFormFamily,
) -> Result<WeakResidual> {
    let g = omega.domain();
    let n = g.dim();
    let k = omega.grade();
    if tests.is_empty() {
        return Err(Error::EmptyTestFamily);
    }
    if !g.same_shape(tau.domain()) || !g.same_shape(&tests.domain) {
        return Err(Error::GridMismatch);
    }
    if k >= n || tau.grade() != k + 1 {
        return Err(Error::GradeMismatch {
            expected: k + 1,
            found: tau.grade(),
        });
    }
    if tests.grade != n - k - 1 {
        return Err(Error::GradeMismatch {
            expected: n - k - 1,
            found: tests.grade,
        });
    }
    let m = tests.grade;
    let eta_basis = Basis::new(n, m);
    let deta_basis = Basis::new(n, m + 1);
    let omega_deta = complementary_pairs(n, k);
    let tau_eta = complementary_pairs(n, k + 1);
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };

    let mut residuals = Vec::with_capacity(tests.len());
    let mut masses = Vec::with_capacity(tests.len());
    let mut grad = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut deta = vec![0.0; deta_basis.len()];
    for form in &tests.forms {
        let slot = eta_basis.rank(form.mask);
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        let mut mass = 0.0;
        let ranges = form.node_box(g);
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'nodes: loop {
            let node = g.node(&idx);
            g.point_into(node, &mut x);
            let v = form.profile(&x, &mut grad);
            if v != 0.0 || grad.iter().any(|&d| d != 0.0) {
                let w = g.trapezoid_weight(node);
                deta.iter_mut().for_each(|d| *d = 0.0);
                for a in (0..n).filter(|a| form.mask & (1 << a) == 0) {
                    let s = wedge_sign(1 << a, form.mask).expect("disjoint");
                    deta[deta_basis.rank(form.mask | (1 << a))] += s * grad[a];
                }
                let om = omega.at(node);
                let ta = tau.at(node);
                let l: f64 = omega_deta.iter().map(|&(i, j, s)| s * om[i] * deta[j]).sum();
                // η has a single nonzero coefficient
                let r: f64 = tau_eta
                    .iter()
                    .filter(|&&(_, j, _)| j == slot)
                    .map(|&(i, _, s)| s * ta[i] * v)
                    .sum();
                lhs += w * l;
                rhs += w * r;
                mass += w * v.abs();
            }
            // advance the multi-index over the bounding box
            let mut a = n;
            loop {
                if a == 0 {
                    break 'nodes;
                }
                a -= 1;
                if idx[a] < ranges[a].1 {
                    idx[a] += 1;
                    break;
                }
                idx[a] = ranges[a].0;
            }
        }
        residuals.push((lhs - sign * rhs).abs());
        masses.push(mass);
    }
    let max = residuals.iter().copied().fold(0.0, f64::max);
    Ok(WeakResidual {
        max,
        residuals,
        masses,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeibnizReport {
    /// Weak residual of `(ω ∧ ω′, dω ∧ ω′ + (-1)^k ω ∧ dω′)`.
    pub weak: WeakResidual,
    /// `max |ω ∧ ω′| / (|ω| |ω′|)` over nodes where the denominator is nonzero.
    pub max_wedge_ratio: f64,
    /// `C(k + k′, k)^{1/2}`, the constant in `|ω ∧ ω′| ≤ C |ω| |ω′|`.
    pub wedge_bound: f64,
}

/// Product rule `d(ω ∧ ω′) = dω ∧ ω′ + (-1)^k ω ∧ dω′` tested weakly.
pub fn leibniz_residual(
    omega: &SampledForm,
    d_omega: &SampledForm,
    other: &SampledForm,
    d_other: &SampledForm,
    tests: &TestFormFamily,
) -> Result<LeibnizReport> {
    let k = omega.grade();
    let product = wedge_sampled(omega, other)?;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = wedge_sampled(d_omega, other)?.add(&wedge_sampled(omega, d_other)?.scaled(sign))?;
    let weak = weak_derivative_residual(&product, &rhs, tests)?;
    let mut ratio: f64 = 0.0;
    for node in 0..omega.domain().node_count() {
        let denom = omega.pointwise_norm(node) * other.pointwise_norm(node);
        if denom > 0.0 {
            ratio = ratio.max(product.pointwise_norm(node) / denom);
        }
    }
    Ok(LeibnizReport {
        weak,
        max_wedge_ratio: ratio,
        wedge_bound: (binomial(k + other.grade(), k) as f64).sqrt(),
    })
}
