use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular grid over an axis-aligned box `Π [lower_i, upper_i]`, nodes
/// including both endpoints. Nodes are numbered row-major: axis 0 varies
/// slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    samples: Vec<usize>,
}

/// Per-node boolean selection over a grid.
pub type NodeMask = Vec<bool>;

impl GridDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, samples: Vec<usize>) -> Result<Self> {
        let n = lower.len();
        if n == 0 || upper.len() != n || samples.len() != n {
            return Err(Error::InvalidGrid("axis data lengths differ or are empty".into()));
        }
        for i in 0..n {
            if !(lower[i].is_finite() && upper[i].is_finite()) || upper[i] <= lower[i] {
                return Err(Error::InvalidGrid(format!("axis {i}: need lower < upper")));
            }
            if samples[i] < 3 {
                return Err(Error::InvalidGrid(format!("axis {i}: need at least 3 samples")));
            }
        }
        Ok(Self {
            lower,
            upper,
            samples,
        })
    }

    /// `[lo, hi]^n` with `samples` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, samples: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![samples; dim])
    }

    pub fn unit_square(samples: usize) -> Result<Self> {
        Self::cube(2, 0.0, 1.0, samples)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.samples[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.upper[a] - self.lower[a]).product()
    }

    pub fn node_count(&self) -> usize {
        self.samples.iter().product()
    }

    /// Distance between consecutive nodes along `axis` in the flat numbering.
    pub fn stride(&self, axis: usize) -> usize {
        self.samples[axis + 1..].iter().product()
    }

    pub fn node_index(&self, node: usize, axis: usize) -> usize {
        (node / self.stride(axis)) % self.samples[axis]
    }

    pub fn node(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.samples).fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.samples[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn point(&self, node: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.point_into(node, &mut p);
        p
    }

    pub fn point_into(&self, node: usize, out: &mut [f64]) {
        let mut rem = node;
        for axis in (0..self.dim()).rev() {
            let s = self.samples[axis];
            out[axis] = self.coord(axis, rem % s);
            rem /= s;
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.node_count()).map(|i| self.point(i))
    }

    /// Composite trapezoid weight of one node.
    pub fn trapezoid_weight(&self, node: usize) -> f64 {
        let mut w = 1.0;
        let mut rem = node;
        for axis in (0..self.dim()).rev() {
            let s = self.samples[axis];
            let i = rem % s;
            rem /= s;
            let h = self.spacing(axis);
            w *= if i == 0 || i + 1 == s { 0.5 * h } else { h };
        }
        w
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.trapezoid_weight(i)).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(a, &x)| x >= self.lower[a] && x <= self.upper[a])
    }

    /// Number of nodes between `node` and the closest grid face.
    pub fn boundary_distance(&self, node: usize) -> usize {
        (0..self.dim())
            .map(|a| {
                let i = self.node_index(node, a);
                i.min(self.samples[a] - 1 - i)
            })
            .min()
            .unwrap_or(0)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_distance(node) == 0
    }

    pub fn mask<F: Fn(&[f64]) -> bool>(&self, pred: F) -> NodeMask {
        let mut p = vec![0.0; self.dim()];
        (0..self.node_count())
            .map(|i| {
                self.point_into(i, &mut p);
                pred(&p)
            })
            .collect()
    }

    pub fn nearest_node(&self, p: &[f64]) -> usize {
        let idx: Vec<usize> = (0..self.dim())
            .map(|a| {
                let t = ((p[a] - self.lower[a]) / self.spacing(a)).round();
                t.clamp(0.0, (self.samples[a] - 1) as f64) as usize
            })
            .collect();
        self.node(&idx)
    }

    /// Axis-neighbours (2n-connectivity).
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).flat_map(move |a| {
            let i = self.node_index(node, a);
            let st = self.stride(a);
            let down = (i > 0).then(|| node - st);
            let up = (i + 1 < self.samples[a]).then(|| node + st);
            down.into_iter().chain(up)
        })
    }

    /// Sub-grid obtained by dropping `margin` nodes on every face.
    pub fn shrink(&self, margin: usize) -> Result<GridDomain> {
        let n = self.dim();
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut samples = Vec::with_capacity(n);
        for a in 0..n {
            if self.samples[a] < 2 * margin + 3 {
                return Err(Error::InvalidGrid(format!(
                    "cannot drop {margin} nodes per face on axis {a}"
                )));
            }
            lower.push(self.coord(a, margin));
            upper.push(self.coord(a, self.samples[a] - 1 - margin));
            samples.push(self.samples[a] - 2 * margin);
        }
        GridDomain::new(lower, upper, samples)
    }

    /// Same box, `factor` times as many cells per axis.
    pub fn refined(&self, factor: usize) -> GridDomain {
        GridDomain {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            samples: self.samples.iter().map(|&s| (s - 1) * factor + 1).collect(),
        }
    }

    pub fn same_shape(&self, other: &GridDomain) -> bool {
        self == other
    }
}
