//! File layouts for [`SampledForm`].
//!
//! Binary (little endian):
//!
//! ```text
//! b"QRSF"  u32 version=1  u32 n  u32 k
//! n × { f64 lower, f64 upper, u64 samples }
//! f64 × (node_count · C(n,k))   nodes row-major (axis 0 slowest),
//!                               coefficients in lexicographic multi-index order
//! ```
//!
//! CSV (flexible record lengths):
//!
//! ```text
//! qrforms-form,<n>,<k>
//! axis,<i>,<lower>,<upper>,<samples>      (one line per axis)
//! <c_0>,...,<c_{C(n,k)-1}>                (one line per node, same order)
//! ```

use std::io::{Read, Write};

use super::grid::GridDomain;
use super::sampled::SampledForm;
use crate::error::{Error, Result};
use crate::exterior::binomial;

const MAGIC: &[u8; 4] = b"QRSF";
const VERSION: u32 = 1;

pub fn write_binary<W: Write>(form: &SampledForm, mut w: W) -> Result<()> {
    let g = form.domain();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(form.grade() as u32).to_le_bytes())?;
    for a in 0..g.dim() {
        w.write_all(&g.lower()[a].to_le_bytes())?;
        w.write_all(&g.upper()[a].to_le_bytes())?;
        w.write_all(&(g.samples()[a] as u64).to_le_bytes())?;
    }
    for v in form.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_binary<R: Read>(mut r: R) -> Result<SampledForm> {
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Parse("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let k = u32::from_le_bytes(read_array(&mut r)?) as usize;
    if n == 0 || n > crate::exterior::multi_index::MAX_DIM || k > n {
        return Err(Error::Parse(format!("invalid header n={n}, k={k}")));
    }
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        lower.push(f64::from_le_bytes(read_array(&mut r)?));
        upper.push(f64::from_le_bytes(read_array(&mut r)?));
        samples.push(u64::from_le_bytes(read_array(&mut r)?) as usize);
    }
    let g = GridDomain::new(lower, upper, samples)?;
    let len = g.node_count() * binomial(n, k);
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        values.push(f64::from_le_bytes(read_array(&mut r)?));
    }
    SampledForm::new(g, k, values)
}

pub fn write_csv<W: Write>(form: &SampledForm, w: W) -> Result<()> {
    let g = form.domain();
    let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    wr.write_record([
        "qrforms-form".to_string(),
        g.dim().to_string(),
        form.grade().to_string(),
    ])
    .map_err(csv_err)?;
    for a in 0..g.dim() {
        wr.write_record([
            "axis".to_string(),
            a.to_string(),
            g.lower()[a].to_string(),
            g.upper()[a].to_string(),
            g.samples()[a].to_string(),
        ])
        .map_err(csv_err)?;
    }
    for node in 0..g.node_count() {
        wr.write_record(form.at(node).iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<SampledForm> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r);
    let mut records = rd.records();
    let mut next = |what: &str| -> Result<csv::StringRecord> {
        records
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))?
            .map_err(|e| Error::Parse(e.to_string()))
    };
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad number `{s}`")))
    };
    let int = |s: &str| -> Result<usize> {
        s.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad integer `{s}`")))
    };

    let head = next("header")?;
    if head.len() != 3 || &head[0] != "qrforms-form" {
        return Err(Error::Parse("bad header".into()));
    }
    let n = int(&head[1])?;
    let k = int(&head[2])?;
    if n == 0 || n > crate::exterior::multi_index::MAX_DIM || k > n {
        return Err(Error::Parse(format!("invalid header n={n}, k={k}")));
    }
    let (mut lower, mut upper, mut samples) = (vec![], vec![], vec![]);
    for a in 0..n {
        let rec = next("axis line")?;
        if rec.len() != 5 || &rec[0] != "axis" || int(&rec[1])? != a {
            return Err(Error::Parse(format!("bad axis line {a}")));
        }
        lower.push(num(&rec[2])?);
        upper.push(num(&rec[3])?);
        samples.push(int(&rec[4])?);
    }
    let g = GridDomain::new(lower, upper, samples)?;
    let stride = binomial(n, k);
    let mut values = Vec::with_capacity(g.node_count() * stride);
    for node in 0..g.node_count() {
        let rec = next("node line")?;
        if rec.len() != stride {
            return Err(Error::Parse(format!("node {node}: expected {stride} values")));
        }
        for f in rec.iter() {
            values.push(num(f)?);
        }
    }
    SampledForm::new(g, k, values)
}
