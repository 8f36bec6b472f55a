//! Experiment reports: named metrics, plot series and pass/fail verdicts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// How `measured` is compared with `predicted`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured < predicted`.
    Below,
    /// `measured > predicted`.
    Above,
    /// `measured ≤ predicted`.
    AtMost,
    /// `measured ≥ predicted`.
    AtLeast,
    /// `|measured − predicted| ≤ tolerance`.
    AbsWithin,
    /// `|measured − predicted| ≤ tolerance·|predicted|`.
    RelWithin,
    /// `predicted/tolerance ≤ measured ≤ predicted·tolerance`.
    FactorWithin,
}

impl Comparison {
    pub fn holds(self, predicted: f64, measured: f64, tolerance: f64) -> bool {
        match self {
            Comparison::Below => measured < predicted,
            Comparison::Above => measured > predicted,
            Comparison::AtMost => measured <= predicted,
            Comparison::AtLeast => measured >= predicted,
            Comparison::AbsWithin => (measured - predicted).abs() <= tolerance,
            Comparison::RelWithin => (measured - predicted).abs() <= tolerance * predicted.abs(),
            Comparison::FactorWithin => measured >= predicted / tolerance && measured <= predicted * tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub description: String,
    pub comparison: Comparison,
    pub predicted: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    /// Evaluates the comparison. A non-finite measurement fails and is
    /// stored as `f64::MAX` so that the report stays serializable.
    pub fn check(
        claim: impl Into<String>,
        description: impl Into<String>,
        comparison: Comparison,
        predicted: f64,
        measured: f64,
        tolerance: f64,
    ) -> Self {
        let (measured, outcome, note) = if measured.is_finite() {
            let ok = comparison.holds(predicted, measured, tolerance);
            (measured, if ok { Outcome::Pass } else { Outcome::Fail }, None)
        } else {
            (f64::MAX, Outcome::Fail, Some(format!("measured value was {measured}")))
        };
        Self { claim: claim.into(), description: description.into(), comparison, predicted, measured, tolerance, outcome, note }
    }

    /// A pass/fail condition with no natural numeric scale; recorded as
    /// `measured = 1` for true and `0` for false against `predicted = 1`.
    pub fn holds(claim: impl Into<String>, description: impl Into<String>, ok: bool) -> Self {
        Self::check(claim, description, Comparison::AbsWithin, 1.0, if ok { 1.0 } else { 0.0 }, 0.0)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn inconclusive(mut self, why: impl Into<String>) -> Self {
        self.outcome = Outcome::Inconclusive;
        self.note = Some(why.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {} (measured {:.6e}, predicted {:.6e}, {:?} tol {:.3e})",
            self.outcome, self.claim, self.description, self.measured, self.predicted, self.comparison, self.tolerance
        )?;
        if let Some(n) = &self.note {
            write!(f, " - {n}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub cache_keys: Vec<String>,
    pub crate_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub metrics: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub verdicts: Vec<Verdict>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, config: &impl Serialize, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            metrics: BTreeMap::new(),
            series: BTreeMap::new(),
            verdicts: Vec::new(),
            provenance: Provenance {
                config_hash: config_hash(config),
                seed,
                cache_keys: Vec::new(),
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    /// Non-finite metrics are dropped (JSON cannot hold them) and noted
    /// under `<name>.nonfinite = 1`.
    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        if value.is_finite() {
            self.metrics.insert(name, value);
        } else {
            self.metrics.insert(format!("{name}.nonfinite"), 1.0);
        }
    }

    pub fn series(&mut self, name: impl Into<String>, values: Vec<f64>) {
        let values = values.into_iter().map(|v| if v.is_finite() { v } else { f64::MAX }).collect();
        self.series.insert(name.into(), values);
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(Verdict::passed)
    }

    /// Fail beats inconclusive beats pass; an empty verdict list is
    /// inconclusive.
    pub fn outcome(&self) -> Outcome {
        if self.verdicts.is_empty() {
            Outcome::Inconclusive
        } else if self.verdicts.iter().any(|v| v.outcome == Outcome::Fail) {
            Outcome::Fail
        } else if self.verdicts.iter().any(|v| v.outcome == Outcome::Inconclusive) {
            Outcome::Inconclusive
        } else {
            Outcome::Pass
        }
    }

    pub fn claim(&self, claim: &str) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| v.claim == claim).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json(&s).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn summary(&self) -> String {
        let mut s = format!("experiment {}: {}\n", self.experiment, self.outcome());
        for v in &self.verdicts {
            s.push_str(&format!("  {v}\n"));
        }
        s
    }
}

/// Hex SHA-256 of the JSON form of `value`.
pub fn config_hash(value: &impl Serialize) -> String {
    let json = serde_json::to_vec(value).expect("config is serializable");
    hex::encode(Sha256::digest(&json))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Comparison::Below.holds(1.0, 0.5, 0.0));
        assert!(!Comparison::Below.holds(1.0, 1.0, 0.0));
        assert!(Comparison::AtMost.holds(1.0, 1.0, 0.0));
        assert!(Comparison::RelWithin.holds(2.0, 2.1, 0.06));
        assert!(Comparison::FactorWithin.holds(1.0, 0.51, 2.0));
        assert!(!Comparison::FactorWithin.holds(1.0, 2.01, 2.0));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut r = ExperimentReport::new("X", &("cfg", 1), 7);
        r.metric("third", 1.0 / 3.0);
        r.metric("bad", f64::NAN);
        r.series("s", vec![0.1, 1e-300, f64::INFINITY]);
        r.verdict(Verdict::check("c1", "d", Comparison::Below, 1.0, 0.1 + 0.2, 0.0));
        r.verdict(Verdict::check("c2", "d", Comparison::Below, 1.0, f64::NAN, 0.0));
        let back = ExperimentReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.metrics["third"].to_bits(), (1.0f64 / 3.0).to_bits());
        assert!(back.metrics.contains_key("bad.nonfinite"));
        assert_eq!(r.outcome(), Outcome::Fail);
        assert!(r.verdicts.iter().all(|v| v.measured.is_finite()));
    }

    #[test]
    fn hash_depends_on_config() {
        assert_eq!(config_hash(&[1, 2]), config_hash(&[1, 2]));
        assert_ne!(config_hash(&[1, 2]), config_hash(&[2, 1]));
        assert_eq!(config_hash(&0).len(), 64);
    }
}
