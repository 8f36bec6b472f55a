//! On-disk cache of reference fields, keyed by the SHA-256 of their
//! parameters.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use pinn_core::field::{FieldError, SolutionField};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::config_hash;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache i/o at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("cache entry {0} is corrupt: {1}")]
    Corrupt(String, String),
    #[error("computing the reference failed: {0}")]
    Compute(String),
}

/// A reference field with scalar diagnostics computed alongside it.
#[derive(Clone, Debug)]
pub struct CachedField {
    pub key: String,
    pub field: SolutionField<f64>,
    pub summary: BTreeMap<String, f64>,
    /// Whether the entry was read from disk.
    pub hit: bool,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    params: serde_json::Value,
    summary: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct ReferenceCache {
    dir: Option<PathBuf>,
}

impl ReferenceCache {
    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()) }
    }

    /// Computes every request afresh and stores nothing.
    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn key(params: &impl Serialize) -> String {
        config_hash(params)
    }

    /// Returns the cached field for `params`, computing and storing it on a
    /// miss. Writes go through a temporary file so a crash never leaves a
    /// truncated entry behind.
    pub fn get_or_compute<P, F>(&self, params: &P, compute: F) -> Result<CachedField, CacheError>
    where
        P: Serialize,
        F: FnOnce() -> Result<(SolutionField<f64>, BTreeMap<String, f64>), String>,
    {
        let key = Self::key(params);
        let Some(dir) = &self.dir else {
            let (field, summary) = compute().map_err(CacheError::Compute)?;
            return Ok(CachedField { key, field, summary, hit: false });
        };
        let bin = dir.join(format!("{key}.bin"));
        let side = dir.join(format!("{key}.json"));
        if bin.exists() && side.exists() {
            let io = |e| CacheError::Io { path: bin.clone(), source: e };
            let field = SolutionField::read_binary(BufReader::new(fs::File::open(&bin).map_err(io)?))?;
            let text = fs::read_to_string(&side).map_err(|e| CacheError::Io { path: side.clone(), source: e })?;
            let sc: Sidecar = serde_json::from_str(&text).map_err(|e| CacheError::Corrupt(key.clone(), e.to_string()))?;
            return Ok(CachedField { key, field, summary: sc.summary, hit: true });
        }
        let (field, summary) = compute().map_err(CacheError::Compute)?;
        fs::create_dir_all(dir).map_err(|e| CacheError::Io { path: dir.clone(), source: e })?;
        let tmp = dir.join(format!("{key}.bin.tmp"));
        {
            let f = fs::File::create(&tmp).map_err(|e| CacheError::Io { path: tmp.clone(), source: e })?;
            field.write_binary(BufWriter::new(f))?;
        }
        let sc = Sidecar { params: serde_json::to_value(params).expect("params serialize"), summary: summary.clone() };
        fs::write(&side, serde_json::to_string_pretty(&sc).expect("sidecar serializes"))
            .map_err(|e| CacheError::Io { path: side.clone(), source: e })?;
        fs::rename(&tmp, &bin).map_err(|e| CacheError::Io { path: bin.clone(), source: e })?;
        Ok(CachedField { key, field, summary, hit: false })
    }
}
