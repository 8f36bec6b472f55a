//! Where an experiment writes its files. A sink without a directory
//! discards everything, which is what tests use.

use std::fs;
use std::path::{Path, PathBuf};

use pinn_core::field::SolutionField;

use crate::report::ExperimentReport;
use crate::ExperimentError;

#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    dir: Option<PathBuf>,
    pub plots: bool,
}

impl Artifacts {
    pub fn to_dir(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), plots: true }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn without_plots(mut self) -> Self {
        self.plots = false;
        self
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, name: &str) -> Result<Option<PathBuf>, ExperimentError> {
        let Some(d) = &self.dir else { return Ok(None) };
        let p = d.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| ExperimentError::io(parent, e))?;
        }
        Ok(Some(p))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), ExperimentError> {
        if let Some(p) = self.path(name)? {
            fs::write(&p, body).map_err(|e| ExperimentError::io(&p, e))?;
        }
        Ok(())
    }

    pub fn svg(&self, name: &str, make: impl FnOnce() -> String) -> Result<(), ExperimentError> {
        if self.plots && self.dir.is_some() {
            self.text(&format!("plots/{name}.svg"), &make())?;
        }
        Ok(())
    }

    /// CSV with a header row; values use Rust's shortest round-trip format.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), ExperimentError> {
        let Some(p) = self.path(name)? else { return Ok(()) };
        let mut w = csv::Writer::from_path(&p).map_err(|e| ExperimentError::Io(p.display().to_string(), e.to_string()))?;
        let wrap = |e: csv::Error| ExperimentError::Io(p.display().to_string(), e.to_string());
        w.write_record(header).map_err(wrap)?;
        for r in rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(wrap)?;
        }
        w.flush().map_err(|e| ExperimentError::io(&p, e))?;
        Ok(())
    }

    pub fn field(&self, name: &str, field: &SolutionField<f64>) -> Result<(), ExperimentError> {
        if let Some(p) = self.path(name)? {
            let f = fs::File::create(&p).map_err(|e| ExperimentError::io(&p, e))?;
            field
                .write_binary(std::io::BufWriter::new(f))
                .map_err(|e| ExperimentError::Io(p.display().to_string(), e.to_string()))?;
        }
        Ok(())
    }

    /// `report.json`, `metrics.csv` and one CSV per series.
    pub fn report(&self, report: &ExperimentReport) -> Result<(), ExperimentError> {
        if self.dir.is_none() {
            return Ok(());
        }
        self.text("report.json", &report.to_json())?;
        let mut m = String::from("name,value\n");
        for (k, v) in &report.metrics {
            m.push_str(&format!("{k},{v}\n"));
        }
        self.text("metrics.csv", &m)?;
        for (k, v) in &report.series {
            let mut s = String::from("index,value\n");
            for (i, x) in v.iter().enumerate() {
                s.push_str(&format!("{i},{x}\n"));
            }
            self.text(&format!("series/{k}.csv"), &s)?;
        }
        let mut verdicts = String::new();
        for v in &report.verdicts {
            verdicts.push_str(&format!("{v}\n"));
        }
        self.text("verdicts.txt", &verdicts)
    }
}
