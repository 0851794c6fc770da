//! Ratio tables, predicate checks and their CSV files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::format::{csv, sig12};
use crate::lab::config::ExperimentConfig;

pub const RATIO_HEADER: [&str; 4] = ["case", "numerator", "denominator", "ratio"];

#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub case: String,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    /// `max / min`
    pub spread: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RatioTable {
    pub name: String,
    pub rows: Vec<RatioRow>,
    /// `(case, reason)` for cases left out of the table.
    pub skipped: Vec<(String, String)>,
}

impl RatioTable {
    pub fn new(name: impl Into<String>) -> Self {
        RatioTable { name: name.into(), ..Default::default() }
    }

    pub fn push(&mut self, case: impl Into<String>, numerator: f64, denominator: f64) {
        self.rows.push(RatioRow { case: case.into(), numerator, denominator, ratio: numerator / denominator });
    }

    pub fn skip(&mut self, case: impl Into<String>, reason: impl Into<String>) {
        self.skipped.push((case.into(), reason.into()));
    }

    pub fn summary(&self) -> Option<Summary> {
        if self.rows.is_empty() {
            return None;
        }
        let min = self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let max = self.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        Some(Summary { min, max, spread: max / min })
    }

    pub fn to_csv(&self) -> String {
        csv(
            &RATIO_HEADER,
            self.rows
                .iter()
                .map(|r| vec![r.case.clone(), sig12(r.numerator), sig12(r.denominator), sig12(r.ratio)])
                .collect::<Vec<_>>(),
        )
    }
}

/// One acceptance inequality `value ≤ threshold` (or `≥` when `at_least`).
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub at_least: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, at_least: false }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, at_least: true }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.threshold
        } else {
            self.value <= self.threshold
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutcome {
    pub tables: Vec<RatioTable>,
    pub checks: Vec<Check>,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn table(&self, name: &str) -> Option<&RatioTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn checks_csv(&self) -> String {
        csv(
            &["check", "value", "relation", "threshold", "pass"],
            self.checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        sig12(c.value),
                        if c.at_least { ">=" } else { "<=" }.to_string(),
                        sig12(c.threshold),
                        c.passed().to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )
    }

    pub fn summary_csv(&self) -> String {
        let mut rows = Vec::new();
        for t in &self.tables {
            if let Some(s) = t.summary() {
                rows.push(vec![t.name.clone(), t.rows.len().to_string(), sig12(s.min), sig12(s.max), sig12(s.spread)]);
            }
        }
        csv(&["table", "rows", "min", "max", "spread"], rows)
    }

    pub fn skipped_csv(&self) -> String {
        let rows = self
            .tables
            .iter()
            .flat_map(|t| t.skipped.iter().map(move |(c, r)| vec![t.name.clone(), c.clone(), r.clone()]));
        csv(&["table", "case", "reason"], rows.collect::<Vec<_>>())
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    experiment: String,
    config_sha256: String,
    version: &'a str,
    seed: u64,
    passed: bool,
}

pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let digest = Sha256::digest(cfg.to_toml()?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Writes `<E>_<table>.csv` per table plus `<E>_summary.csv`, `<E>_checks.csv`,
/// `<E>_skipped.csv` and the sidecar `<E>.meta.toml` into `dir`. Returns the
/// paths written.
pub fn emit_report(outcome: &ExperimentOutcome, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let stem = cfg.experiment.to_string();
    let mut files: Vec<(PathBuf, String)> = outcome
        .tables
        .iter()
        .map(|t| (dir.join(format!("{stem}_{}.csv", t.name)), t.to_csv()))
        .collect();
    files.push((dir.join(format!("{stem}_summary.csv")), outcome.summary_csv()));
    files.push((dir.join(format!("{stem}_checks.csv")), outcome.checks_csv()));
    files.push((dir.join(format!("{stem}_skipped.csv")), outcome.skipped_csv()));
    let meta = Sidecar {
        experiment: stem.clone(),
        config_sha256: config_hash(cfg)?,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        passed: outcome.passed(),
    };
    files.push((dir.join(format!("{stem}.meta.toml")), toml::to_string(&meta)?));
    files.push((dir.join(format!("{stem}.config.toml")), cfg.to_toml()?));
    for (path, text) in &files {
        fs::write(path, text)?;
    }
    Ok(files.into_iter().map(|f| f.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_digits() {
        let mut t = RatioTable::new("main");
        t.push("a", 1.0, 3.0);
        let text = t.to_csv();
        assert!(text.starts_with("case,numerator,denominator,ratio\n"));
        assert!(text.contains("a,1.00000000000e0,3.00000000000e0,3.33333333333e-1\n"));
    }

    #[test]
    fn spread_and_checks() {
        let mut t = RatioTable::new("main");
        t.push("a", 1.0, 1.0);
        t.push("b", 4.0, 1.0);
        assert_eq!(t.summary().unwrap().spread, 4.0);
        assert!(Check::at_most("x", 4.0, 4.0).passed());
        assert!(!Check::at_most("x", f64::NAN, 4.0).passed());
        assert!(Check::at_least("y", 5.0, 4.0).passed());
    }
}
