//! CSV emission and the Stokes-trace reader.
//!
//! Every file starts with `# spinphoton <version> config_hash=<hash> seed=<seed>`, then a
//! header row. Numbers use the shortest representation that round-trips, so reruns with the
//! same configuration are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::traces::StokesTrace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self { version: env!("CARGO_PKG_VERSION"), config_hash, seed }
    }

    pub fn comment_line(&self) -> String {
        format!("# spinphoton {} config_hash={} seed={}", self.version, self.config_hash, self.seed)
    }
}

pub fn render_csv(prov: &Provenance, columns: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Numerical(format!("csv encoding: {e}"));
    w.write_record(columns).map_err(io)?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Dimension(format!("row has {} fields, header has {}", row.len(), columns.len())));
        }
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?)
        .expect("csv output is utf-8");
    Ok(format!("{}\n{body}", prov.comment_line()))
}

pub fn write_csv(dir: &Path, name: &str, prov: &Provenance, columns: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, render_csv(prov, columns, rows)?)?;
    Ok(path)
}

pub const STOKES_COLUMNS: [&str; 4] = ["tau_ns", "s_HV", "s_DA", "s_RL"];

/// Reads a trace in the `stokes` schema. Lines starting with `#` are skipped; column order is free.
pub fn read_stokes_csv(path: &Path) -> Result<StokesTrace> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse_stokes_csv(&text).map_err(|e| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_stokes_csv(text: &str) -> Result<StokesTrace> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Input(format!("header: {e}")))?.clone();
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(STOKES_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Input(format!("missing column `{name}` (found: {})", headers.iter().collect::<Vec<_>>().join(", "))))?;
    }
    let mut cols: [Vec<f64>; 4] = Default::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Input(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (k, &i) in idx.iter().enumerate() {
            let field = rec.get(i).ok_or_else(|| Error::Input(format!("line {line}: missing field {}", STOKES_COLUMNS[k])))?;
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Input(format!("line {line}: `{field}` in column {} is not a number", STOKES_COLUMNS[k])))?;
            cols[k].push(v);
        }
    }
    if cols[0].is_empty() {
        return Err(Error::Input("no data rows".into()));
    }
    let [t, hv, da, rl] = cols;
    let tau = t.into_iter().map(|v| v * 1e-9).collect();
    StokesTrace::new(tau, hv, da, rl).map_err(|e| Error::Input(e.to_string()))
}
