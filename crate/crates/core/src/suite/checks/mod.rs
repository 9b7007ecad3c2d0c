//! Check catalogue. Each suite turns the run [`Context`] into a list of
//! [`Planned`] checks; the runner executes them and applies tolerances.

mod algebra;
mod degree;
mod forms;
mod linear;
mod manifolds;
mod qr;

use serde_json::Value;

use super::{Comparison, SuiteConfig, SuiteName};
use crate::error::{Error, Result};
use crate::forms::GridDomain;
use crate::qr::{DifferentiableMap, MapSpec};

pub(crate) struct Outcome {
    pub value: f64,
    pub measured: Vec<(&'static str, f64)>,
}

impl Outcome {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            measured: Vec::new(),
        }
    }

    pub fn with(mut self, key: &'static str, v: f64) -> Self {
        self.measured.push((key, v));
        self
    }
}

type Run = Box<dyn FnOnce() -> Result<Outcome> + Send>;

pub(crate) struct Planned {
    pub id: String,
    pub anchor: &'static str,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub inputs: Value,
    pub run: Run,
}

pub(crate) fn at_most<F>(id: String, anchor: &'static str, tolerance: f64, inputs: Value, run: F) -> Planned
where
    F: FnOnce() -> Result<Outcome> + Send + 'static,
{
    Planned {
        id,
        anchor,
        comparison: Comparison::AtMost,
        tolerance,
        inputs,
        run: Box::new(run),
    }
}

pub(crate) fn at_least<F>(id: String, anchor: &'static str, tolerance: f64, inputs: Value, run: F) -> Planned
where
    F: FnOnce() -> Result<Outcome> + Send + 'static,
{
    Planned {
        comparison: Comparison::AtLeast,
        ..at_most(id, anchor, tolerance, inputs, run)
    }
}

/// A catalogue map together with the [`MapSpec`] it was built from.
#[derive(Clone)]
pub(crate) struct SelectedMap {
    pub spec: MapSpec,
    pub map: DifferentiableMap,
    pub label: String,
}

pub(crate) struct Context {
    pub seed: u64,
    pub resolutions: Vec<usize>,
    pub maps: Vec<SelectedMap>,
}

impl Context {
    pub fn new(config: &SuiteConfig) -> Result<Self> {
        let maps = config
            .maps
            .iter()
            .map(|spec| {
                Ok(SelectedMap {
                    map: spec.build()?,
                    label: spec.label().replace(' ', ""),
                    spec: spec.clone(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            seed: config.seed,
            resolutions: config.resolutions.clone(),
            maps,
        })
    }
}

pub(crate) fn plan(suite: SuiteName, ctx: &Context) -> Vec<Planned> {
    match suite {
        SuiteName::Algebra => algebra::plan(ctx),
        SuiteName::Linear => linear::plan(ctx),
        SuiteName::Forms => forms::plan(ctx),
        SuiteName::Manifolds => manifolds::plan(ctx),
        SuiteName::Qr => qr::plan(ctx),
        SuiteName::Degree => degree::plan(ctx),
        SuiteName::All => SuiteName::CONCRETE.iter().flat_map(|&s| plan(s, ctx)).collect(),
    }
}

/// Tolerance for an `O(h^order)` quantity stated at `anchor` samples per
/// axis, relaxed for coarser grids.
pub(crate) fn scaled_tolerance(base: f64, anchor: usize, samples: usize, order: i32) -> f64 {
    if samples >= anchor {
        base
    } else {
        base * ((anchor - 1) as f64 / (samples - 1) as f64).powi(order)
    }
}

pub(crate) fn square(lo: f64, hi: f64, samples: usize) -> Result<GridDomain> {
    GridDomain::cube(2, lo, hi, samples)
}

/// Half-width of a square containing `f` of the nodes of `grid` accepted by
/// `keep`, padded by 10% and at least 1.
pub(crate) fn image_half_width(
    f: &DifferentiableMap,
    grid: &GridDomain,
    keep: impl Fn(&[f64]) -> bool,
) -> Result<f64> {
    let mut r: f64 = 0.0;
    for i in 0..grid.node_count() {
        let x = grid.point(i);
        if keep(&x) {
            let y = f.try_eval(&x)?;
            r = r.max(y.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
        }
    }
    if !r.is_finite() {
        return Err(Error::NonFinite("image bound"));
    }
    Ok((1.1 * r).max(1.0))
}

/// Radius of `f(B(0, rho))` for maps that send centred disks onto centred
/// disks; `None` otherwise.
pub(crate) fn disk_image_radius(spec: &MapSpec, rho: f64) -> Option<f64> {
    match spec {
        MapSpec::Identity { dim: 2 } | MapSpec::Winding2d { .. } => Some(rho),
        MapSpec::RadialStretch { a, dim: 2 } => Some(rho.powf(*a)),
        _ => None,
    }
}
