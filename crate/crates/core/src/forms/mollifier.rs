use rayon::prelude::*;

use super::grid::GridDomain;
use super::sampled::SampledForm;
use crate::error::{Error, Result};

/// Unnormalized bump `exp(-1 / (1 - s))` as a function of `s = |x/r|^2`,
/// zero for `s ≥ 1`.
pub fn bump(s: f64) -> f64 {
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

/// Derivative of [`bump`] with respect to `s`.
pub fn bump_ds(s: f64) -> f64 {
    if s < 1.0 {
        let q = 1.0 - s;
        -bump(s) / (q * q)
    } else {
        0.0
    }
}

/// Radial bump mollifier of radius `r`, renormalized to unit mass under the
/// quadrature of whichever grid it is applied on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    radius: f64,
}

/// Mollifier weights on grid offsets; `Σ weights = 1`.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    pub offsets: Vec<Vec<isize>>,
    pub weights: Vec<f64>,
    /// Nodes per face lost to the stencil.
    pub margin: usize,
}

impl Mollifier {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidRadius(radius));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kernel(&self, g: &GridDomain) -> Result<DiscreteKernel> {
        let h = g.max_spacing();
        if self.radius < 2.0 * h {
            return Err(Error::UnderResolvedMollifier {
                radius: self.radius,
                min: 2.0 * h,
            });
        }
        let n = g.dim();
        let reach: Vec<isize> = (0..n)
            .map(|a| (self.radius / g.spacing(a)).floor() as isize)
            .collect();
        let margin = *reach.iter().max().expect("dim ≥ 1") as usize;
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut o = reach.iter().map(|r| -r).collect::<Vec<_>>();
        loop {
            let s: f64 = o
                .iter()
                .enumerate()
                .map(|(a, &i)| (i as f64 * g.spacing(a) / self.radius).powi(2))
                .sum();
            let w = bump(s);
            if w > 0.0 {
                offsets.push(o.clone());
                weights.push(w);
            }
            // odometer increment
            let mut a = n;
            loop {
                if a == 0 {
                    let total: f64 = weights.iter().sum();
                    for w in &mut weights {
                        *w /= total;
                    }
                    return Ok(DiscreteKernel {
                        offsets,
                        weights,
                        margin,
                    });
                }
                a -= 1;
                if o[a] < reach[a] {
                    o[a] += 1;
                    break;
                }
                o[a] = -reach[a];
            }
        }
    }
}

/// `ω ∗ σ = Σ_I (ω_I ∗ σ) ε_I`, evaluated on the sub-grid of nodes whose
/// whole stencil lies inside the input grid.
pub fn convolve_form(form: &SampledForm, mollifier: &Mollifier) -> Result<SampledForm> {
    let g = form.domain();
    let kernel = mollifier.kernel(g)?;
    let out_grid = g.shrink(kernel.margin)?;
    let n = g.dim();
    let s = form.stride();
    let m = kernel.margin;
    // flat offsets relative to an interior node
    let flat: Vec<isize> = kernel
        .offsets
        .iter()
        .map(|o| (0..n).map(|a| o[a] * g.stride(a) as isize).sum())
        .collect();
    let mut values = vec![0.0; out_grid.node_count() * s];
    values
        .par_chunks_mut(s.max(1))
        .enumerate()
        .for_each(|(out_node, out)| {
            let idx: Vec<usize> = (0..n).map(|a| out_grid.node_index(out_node, a) + m).collect();
            let centre = g.node(&idx) as isize;
            for (&f, &w) in flat.iter().zip(&kernel.weights) {
                // x - y with y = offset: sample at centre - offset
                let src = (centre - f) as usize;
                for (o, v) in out.iter_mut().zip(form.at(src)) {
                    *o += w * v;
                }
            }
        });
    SampledForm::new(out_grid, form.grade(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::KCovector;

    #[test]
    fn kernel_has_unit_mass_and_compact_support() {
        let g = GridDomain::unit_square(65).unwrap();
        let k = Mollifier::new(0.1).unwrap().kernel(&g).unwrap();
        assert!((k.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let h = g.spacing(0);
        for o in &k.offsets {
            let r = ((o[0] as f64 * h).powi(2) + (o[1] as f64 * h).powi(2)).sqrt();
            assert!(r < 0.1);
        }
    }

    #[test]
    fn under_resolved_radius_rejected() {
        let g = GridDomain::unit_square(11).unwrap();
        assert!(matches!(
            Mollifier::new(0.15).unwrap().kernel(&g),
            Err(Error::UnderResolvedMollifier { .. })
        ));
    }

    #[test]
    fn constant_form_is_fixed() {
        let g = GridDomain::unit_square(41).unwrap();
        let c = KCovector::new(2, 1, vec![0.7, -1.3]).unwrap();
        let w = SampledForm::constant(&g, &c).unwrap();
        let out = convolve_form(&w, &Mollifier::new(0.1).unwrap()).unwrap();
        let expected = SampledForm::constant(out.domain(), &c).unwrap();
        assert!(out.max_norm_diff(&expected, None).unwrap() < 1e-10);
    }
}
