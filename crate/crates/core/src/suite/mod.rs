//! Configuration-driven verification runner.
//!
//! A run is described by a [`SuiteConfig`] read from JSON. [`run_suite`]
//! executes the selected suites and returns a [`VerificationReport`] holding
//! one [`CheckRecord`] per check: the measured values, the threshold the
//! check was judged against, its verdict and a SHA-256 digest of its inputs.
//! Reports serialize to JSON or CSV with [`emit_report`]; for a fixed
//! configuration and seed the emitted bytes are identical between runs.
//!
//! Randomised sweeps draw from [`crate::rng::XorShift64Star`], forked per
//! check from the configured seed and the check id.
//!
//! # Configuration schema
//!
//! ```json
//! {
//!   "suites": ["all"],
//!   "maps": [{"name": "winding2d", "k": 2}, {"name": "radial_stretch", "a": 2.0}],
//!   "resolutions": [64],
//!   "tolerances": {"forms.quadrature_sin": 1e-4, "*": 1.0},
//!   "output": "reports",
//!   "format": "json",
//!   "seed": 1
//! }
//! ```
//!
//! Every field is optional. Tolerance keys match a check id exactly or as a
//! prefix (the longest matching key wins); `"*"` matches every check.

mod checks;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qr::MapSpec;

/// Named groups of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Algebra,
    Linear,
    Forms,
    Manifolds,
    Qr,
    Degree,
    All,
}

impl SuiteName {
    pub const CONCRETE: [SuiteName; 6] = [
        SuiteName::Algebra,
        SuiteName::Linear,
        SuiteName::Forms,
        SuiteName::Manifolds,
        SuiteName::Qr,
        SuiteName::Degree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Algebra => "algebra",
            SuiteName::Linear => "linear",
            SuiteName::Forms => "forms",
            SuiteName::Manifolds => "manifolds",
            SuiteName::Qr => "qr",
            SuiteName::Degree => "degree",
            SuiteName::All => "all",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::CONCRETE
            .iter()
            .chain([SuiteName::All].iter())
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown suite `{s}`; expected one of algebra, linear, forms, manifolds, qr, degree, all"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::Parse(format!(
                "unknown format `{s}`; expected json or csv"
            ))),
        }
    }
}

pub const DEFAULT_SEED: u64 = 1;
pub const MIN_RESOLUTION: usize = 64;
pub const MAX_RESOLUTION: usize = 1024;

fn default_suites() -> Vec<SuiteName> {
    vec![SuiteName::All]
}

fn default_maps() -> Vec<MapSpec> {
    vec![
        MapSpec::Winding2d { k: 2 },
        MapSpec::Winding2d { k: 3 },
        MapSpec::RadialStretch { a: 2.0, dim: 2 },
        MapSpec::Linear {
            matrix: vec![vec![2.0, 0.0], vec![0.0, 1.0]],
        },
        MapSpec::Mobius2d {
            a: [1.0, 0.0],
            b: [0.5, 0.0],
            c: [0.2, 0.0],
            d: [1.0, 0.0],
        },
        MapSpec::Winding3d { k: 2 },
    ]
}

fn default_resolutions() -> Vec<usize> {
    vec![64]
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_suites")]
    pub suites: Vec<SuiteName>,
    #[serde(default = "default_maps")]
    pub maps: Vec<MapSpec>,
    /// Samples per axis of the 2D grids; one set of grid checks per entry.
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Directory receiving the report file.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suites: default_suites(),
            maps: default_maps(),
            resolutions: default_resolutions(),
            tolerances: BTreeMap::new(),
            output: None,
            format: ReportFormat::default(),
            seed: DEFAULT_SEED,
        }
    }
}

impl SuiteConfig {
    /// Parses and validates a JSON configuration.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SuiteConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.suites.is_empty() {
            return Err(Error::Parse(
                "field `suites`: at least one suite is required".into(),
            ));
        }
        if self.resolutions.is_empty() {
            return Err(Error::Parse(
                "field `resolutions`: at least one resolution is required".into(),
            ));
        }
        for (i, &r) in self.resolutions.iter().enumerate() {
            if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&r) {
                return Err(Error::Parse(format!(
                    "field `resolutions[{i}]`: {r} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"
                )));
            }
        }
        for (key, &t) in &self.tolerances {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::Parse(format!(
                    "field `tolerances.{key}`: {t} is not a finite nonnegative number"
                )));
            }
        }
        let mut labels = BTreeSet::new();
        for (i, m) in self.maps.iter().enumerate() {
            m.build()
                .map_err(|e| Error::Parse(format!("field `maps[{i}]`: {e}")))?;
            if !labels.insert(m.label()) {
                return Err(Error::Parse(format!(
                    "field `maps[{i}]`: duplicate map {}",
                    m.label()
                )));
            }
        }
        Ok(())
    }

    /// Selected suites in canonical order, with `all` expanded.
    pub fn expanded_suites(&self) -> Vec<SuiteName> {
        if self.suites.contains(&SuiteName::All) {
            return SuiteName::CONCRETE.to_vec();
        }
        SuiteName::CONCRETE
            .iter()
            .copied()
            .filter(|s| self.suites.contains(s))
            .collect()
    }

    /// Threshold for `id`: an exact key, else the longest key that is a
    /// prefix of `id`, else `"*"`, else `default`.
    pub fn tolerance_for(&self, id: &str, default: f64) -> f64 {
        if let Some(&t) = self.tolerances.get(id) {
            return t;
        }
        self.tolerances
            .iter()
            .filter(|(k, _)| k.as_str() != "*" && id.starts_with(k.as_str()))
            .max_by_key(|(k, _)| k.len())
            .map(|(_, &t)| t)
            .or_else(|| self.tolerances.get("*").copied())
            .unwrap_or(default)
    }
}

/// A real number that survives JSON: non-finite values are written as the
/// strings `"inf"`, `"-inf"` and `"nan"`. Equality is bitwise, with all NaNs
/// equal.
#[derive(Debug, Clone, Copy)]
pub struct Measured(pub f64);

impl PartialEq for Measured {
    fn eq(&self, other: &Self) -> bool {
        (self.0.is_nan() && other.0.is_nan()) || self.0.to_bits() == other.0.to_bits()
    }
}

impl fmt::Display for Measured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        if v.is_nan() {
            f.write_str("nan")
        } else if v == f64::INFINITY {
            f.write_str("inf")
        } else if v == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else {
            write!(f, "{v:e}")
        }
    }
}

impl Serialize for Measured {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Measured {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Measured(v)),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(Measured(f64::INFINITY)),
                "-inf" => Ok(Measured(f64::NEG_INFINITY)),
                "nan" => Ok(Measured(f64::NAN)),
                _ => Err(serde::de::Error::custom(format!("invalid number `{s}`"))),
            },
        }
    }
}

/// How `value` is compared with `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass iff `value ≤ tolerance` (residuals, errors, violations).
    AtMost,
    /// Pass iff `value ≥ tolerance` (convergence ratios, detection margins).
    AtLeast,
}

impl Comparison {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::AtMost => "at_most",
            Comparison::AtLeast => "at_least",
        }
    }

    pub fn accepts(self, value: f64, tolerance: f64) -> bool {
        value.is_finite()
            && match self {
                Comparison::AtMost => value <= tolerance,
                Comparison::AtLeast => value >= tolerance,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub suite: SuiteName,
    /// The mathematical statement the check exercises.
    pub anchor: String,
    /// SHA-256 of the canonical JSON of the check inputs.
    pub inputs_digest: String,
    pub measured: BTreeMap<String, Measured>,
    pub value: Measured,
    pub comparison: Comparison,
    pub tolerance: Measured,
    pub verdict: Verdict,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    /// Seconds spent in [`run_suite`]; kept out of the emitted bytes.
    #[serde(skip)]
    pub wall_time: Option<f64>,
}

impl PartialEq for Summary {
    fn eq(&self, other: &Self) -> bool {
        self.pass == other.pass && self.fail == other.fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tool: String,
    pub seed: u64,
    pub resolutions: Vec<usize>,
    pub suites: Vec<SuiteName>,
    pub maps: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn empty(seed: u64) -> Self {
        Self {
            tool: tool_name(),
            seed,
            resolutions: Vec::new(),
            suites: Vec::new(),
            maps: Vec::new(),
            checks: Vec::new(),
            summary: Summary {
                pass: 0,
                fail: 0,
                wall_time: None,
            },
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail)
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn tool_name() -> String {
    format!("qrforms {}", env!("CARGO_PKG_VERSION"))
}

pub(crate) fn digest(inputs: &serde_json::Value) -> String {
    let canonical = serde_json::to_vec(inputs).expect("json value serializes");
    hex::encode(Sha256::digest(&canonical))
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_string()
    }
}

fn finish(planned: checks::Planned, suite: SuiteName, config: &SuiteConfig) -> CheckRecord {
    let checks::Planned {
        id,
        anchor,
        comparison,
        tolerance,
        inputs,
        run,
    } = planned;
    let tolerance = config.tolerance_for(&id, tolerance);
    let inputs_digest = digest(&inputs);
    let outcome = catch_unwind(AssertUnwindSafe(run));
    let (value, measured, error) = match outcome {
        Ok(Ok(o)) => (o.value, o.measured, None),
        Ok(Err(e)) => (f64::NAN, Vec::new(), Some(e.to_string())),
        Err(p) => (f64::NAN, Vec::new(), Some(panic_message(p.as_ref()))),
    };
    let verdict = if error.is_none() && comparison.accepts(value, tolerance) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    CheckRecord {
        id,
        suite,
        anchor: anchor.to_string(),
        inputs_digest,
        measured: measured
            .into_iter()
            .map(|(k, v)| (k.to_string(), Measured(v)))
            .collect(),
        value: Measured(value),
        comparison,
        tolerance: Measured(tolerance),
        verdict,
        error,
    }
}

fn crashed(suite: SuiteName, message: String) -> CheckRecord {
    let id = format!("{suite}.plan");
    CheckRecord {
        inputs_digest: digest(&serde_json::json!({ "suite": suite.as_str() })),
        id,
        suite,
        anchor: "suite setup".to_string(),
        measured: BTreeMap::new(),
        value: Measured(f64::NAN),
        comparison: Comparison::AtMost,
        tolerance: Measured(0.0),
        verdict: Verdict::Fail,
        error: Some(message),
    }
}

fn run_one(suite: SuiteName, ctx: &checks::Context, config: &SuiteConfig) -> Vec<CheckRecord> {
    match catch_unwind(AssertUnwindSafe(|| checks::plan(suite, ctx))) {
        Ok(planned) => planned.into_iter().map(|p| finish(p, suite, config)).collect(),
        Err(p) => vec![crashed(suite, panic_message(p.as_ref()))],
    }
}

/// Executes the selected suites. Suites run concurrently; records are
/// assembled in canonical suite order, so the report does not depend on
/// scheduling.
pub fn run_suite(config: &SuiteConfig) -> Result<VerificationReport> {
    config.validate()?;
    let start = Instant::now();
    let suites = config.expanded_suites();
    let ctx = checks::Context::new(config)?;
    let per_suite: Vec<Vec<CheckRecord>> = suites.par_iter().map(|&s| run_one(s, &ctx, config)).collect();
    let mut checks: Vec<CheckRecord> = per_suite.into_iter().flatten().collect();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for c in &mut checks {
        let n = seen.entry(c.id.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            c.id = format!("{}#{}", c.id, n);
        }
    }
    let pass = checks.iter().filter(|c| c.verdict == Verdict::Pass).count();
    Ok(VerificationReport {
        tool: tool_name(),
        seed: config.seed,
        resolutions: config.resolutions.clone(),
        suites,
        maps: config.maps.iter().map(MapSpec::label).collect(),
        summary: Summary {
            pass,
            fail: checks.len() - pass,
            wall_time: Some(start.elapsed().as_secs_f64()),
        },
        checks,
    })
}

pub fn report_to_json(report: &VerificationReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn report_from_json(text: &str) -> Result<VerificationReport> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    id: &'a str,
    suite: &'a str,
    anchor: &'a str,
    inputs_digest: &'a str,
    value: String,
    comparison: &'a str,
    tolerance: String,
    verdict: &'a str,
    error: &'a str,
    measured: String,
}

/// One row per check; `measured` is flattened to `key=value` pairs joined
/// by `;`.
pub fn report_to_csv(report: &VerificationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &report.checks {
        let measured = c
            .measured
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        w.serialize(CsvRow {
            id: &c.id,
            suite: c.suite.as_str(),
            anchor: &c.anchor,
            inputs_digest: &c.inputs_digest,
            value: c.value.to_string(),
            comparison: c.comparison.as_str(),
            tolerance: c.tolerance.to_string(),
            verdict: c.verdict.as_str(),
            error: c.error.as_deref().unwrap_or(""),
            measured,
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    if report.checks.is_empty() {
        w.write_record([
            "id",
            "suite",
            "anchor",
            "inputs_digest",
            "value",
            "comparison",
            "tolerance",
            "verdict",
            "error",
            "measured",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn render_report(report: &VerificationReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => report_to_json(report),
        ReportFormat::Csv => report_to_csv(report),
    }
}

/// Writes `report.<ext>` into `dir`, creating the directory if needed, and
/// returns the file path.
pub fn emit_report(report: &VerificationReport, format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    let text = render_report(report, format)?;
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("report.{}", format.extension()));
    fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
