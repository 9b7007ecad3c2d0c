use serde::{Deserialize, Serialize};

use crate::forms::GridDomain;

/// Integration region inside a grid box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    All,
    Disk {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl Region {
    pub fn disk(radius: f64) -> Self {
        Region::Disk {
            center: vec![0.0, 0.0],
            radius,
        }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Region::Annulus {
            center: vec![0.0, 0.0],
            inner,
            outer,
        }
    }

    /// Signed distance, negative inside (exact for disks and annuli, a lower
    /// bound in absolute value for boxes).
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let dist = |c: &[f64]| -> f64 {
            x.iter()
                .zip(c.iter().chain(std::iter::repeat(&0.0)))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        match self {
            Region::All => f64::NEG_INFINITY,
            Region::Disk { center, radius } => dist(center) - radius,
            Region::Annulus { center, inner, outer } => {
                let r = dist(center);
                (inner - r).max(r - outer)
            }
            Region::Box { lower, upper } => x
                .iter()
                .enumerate()
                .map(|(a, &v)| (lower[a] - v).max(v - upper[a]))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) < 0.0
    }

    pub fn mask(&self, g: &GridDomain) -> Vec<bool> {
        g.mask(|x| self.contains(x))
    }

    /// Trapezoid weights multiplied by the fraction of each node's dual cell
    /// inside the region, estimated with `sub` midpoint subsamples per axis
    /// on cells that meet the boundary.
    pub fn weights(&self, g: &GridDomain, sub: usize) -> Vec<f64> {
        let n = g.dim();
        let h: Vec<f64> = (0..n).map(|a| g.spacing(a)).collect();
        let half_diag = 0.5 * h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sub = sub.max(1);
        let total = sub.pow(n as u32);
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        (0..g.node_count())
            .map(|node| {
                g.point_into(node, &mut x);
                let sd = self.signed_distance(&x);
                let w = g.trapezoid_weight(node);
                if sd <= -half_diag {
                    return w;
                }
                if sd >= half_diag {
                    return 0.0;
                }
                // dual cell clipped to the grid box
                let mut lo = vec![0.0; n];
                let mut width = vec![0.0; n];
                for a in 0..n {
                    let l = (x[a] - 0.5 * h[a]).max(g.lower()[a]);
                    let u = (x[a] + 0.5 * h[a]).min(g.upper()[a]);
                    lo[a] = l;
                    width[a] = u - l;
                }
                let mut inside = 0usize;
                for s in 0..total {
                    let mut rem = s;
                    for a in 0..n {
                        let i = rem % sub;
                        rem /= sub;
                        y[a] = lo[a] + (i as f64 + 0.5) / sub as f64 * width[a];
                    }
                    if self.contains(&y) {
                        inside += 1;
                    }
                }
                w * inside as f64 / total as f64
            })
            .collect()
    }
}
