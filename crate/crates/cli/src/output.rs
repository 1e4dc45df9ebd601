//! Report and CSV emission. Everything written here is a pure function of
//! the scenario, so repeated runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use lorwave::energy::EnergyTrace;
use lorwave::GridFunction;

use crate::error::Result;

/// Collects artifacts for one run and writes them into a single directory.
pub struct Writer {
    dir: PathBuf,
    written: Vec<String>,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text)?;
        Ok(())
    }

    /// `energy_trace.csv`: one row per sample, with the order `k` first.
    pub fn energy_traces(&mut self, traces: &[EnergyTrace]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path("energy_trace.csv"))?;
        w.write_record(["k", "s", "E_k", "src_norm_sq"])?;
        for trace in traces {
            for s in &trace.samples {
                w.write_record([fmt(trace.k), fmt(s.s), fmt(s.energy), fmt(s.source_norm_sq)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One snapshot CSV: `x`, then re/im of each component of `u` and, when
    /// given, of `v = ∂_t u`.
    pub fn snapshot(&mut self, index: usize, nodes: &[f64], u: &GridFunction, v: Option<&GridFunction>) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path(&format!("snapshot_{index:03}.csv")))?;
        let mut header = vec!["x".to_string()];
        let fields: Vec<(&str, &GridFunction)> = std::iter::once(("u", u)).chain(v.map(|v| ("v", v))).collect();
        for (name, g) in &fields {
            for c in 0..g.rank() {
                header.push(format!("{name}{c}_re"));
                header.push(format!("{name}{c}_im"));
            }
        }
        w.write_record(&header)?;
        for (j, &x) in nodes.iter().enumerate() {
            let mut row = vec![fmt(x)];
            for (_, g) in &fields {
                for c in 0..g.rank() {
                    let z = g.get(j, c);
                    row.push(fmt(z.re));
                    row.push(fmt(z.im));
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn rows(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.into_iter().map(fmt))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest representation that round-trips.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}
