//! Experiment drivers and their reports.
//!
//! A [`Report`] is a pure function of its configuration and seed; CSV and
//! JSON renderings are byte-stable across runs and thread counts.

mod constants;
mod experiments;
mod pair;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::stats::Summary;
use crate::{Error, Result};

pub use constants::{reproduce_constants, ConstantRow, ConstantsTable};
pub use experiments::{
    conjecture_experiment, discretization_report, end_to_end_ratio, mc_correlation_gap,
    mc_sign_change, E2eConfig, SURROGATE_C,
};
pub use pair::{CorrelatedPair, AUDIT_S};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub s: usize,
    pub trials: u64,
    pub seed: u64,
    pub alpha: f64,
    pub thetas: Vec<f64>,
    pub ell: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            s: 2000,
            trials: 100_000,
            seed: 0,
            alpha: 1.0,
            thetas: vec![pi / 12.0, pi / 6.0, pi / 4.0],
            ell: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.s < 2 || self.s % 2 != 0 {
            return Err(Error::InvalidDomain(self.s));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("threshold {} must be positive", self.alpha)));
        }
        if self.ell == 0 {
            return Err(Error::InvalidArgument("lift factor must be positive".into()));
        }
        for &t in &self.thetas {
            if !(0.0..=std::f64::consts::PI).contains(&t) {
                return Err(Error::InvalidArgument(format!("angle {t} outside [0, pi]")));
            }
        }
        Ok(())
    }
}

/// One estimated quantity with an optional comparison value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub name: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    pub reference: Option<f64>,
}

impl Cell {
    pub fn exact(name: impl Into<String>, value: f64, reference: Option<f64>) -> Self {
        Self {
            name: name.into(),
            mean: value,
            stderr: 0.0,
            count: 0,
            reference,
        }
    }

    pub fn estimate(name: impl Into<String>, summary: Summary, reference: Option<f64>) -> Self {
        Self {
            name: name.into(),
            mean: summary.mean,
            stderr: summary.stderr,
            count: summary.count,
            reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    pub rng: String,
}

impl Provenance {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: "chacha8".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub cells: Vec<Cell>,
    pub checks: Vec<Check>,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(name: impl Into<String>, seed: u64) -> Self {
        Self {
            name: name.into(),
            parameters: BTreeMap::new(),
            cells: Vec::new(),
            checks: Vec::new(),
            provenance: Provenance::new(seed),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), v);
        self
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> &mut Self {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
        self
    }

    pub fn cell(&self, name: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `name,mean,stderr,count,reference`; an empty reference means none.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for cell in &self.cells {
            w.serialize(cell).map_err(crate::rounding::csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn cells_from_csv(text: &str) -> Result<Vec<Cell>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        r.deserialize()
            .map(|row| row.map_err(crate::rounding::csv_err))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(format!("json: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}
