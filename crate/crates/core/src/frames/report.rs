use std::io::Write;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{FrameError, Result};

/// Significant digits kept in every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits; `-0.0` becomes `0.0`.
pub fn round_significant(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    if !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses")
}

fn sig<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_significant(*v))
}

fn sig_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_some(&round_significant(*v)),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub name: String,
    pub n: usize,
    #[serde(serialize_with = "sig")]
    pub value: f64,
    #[serde(serialize_with = "sig_opt")]
    pub tolerance: Option<f64>,
    /// `None` for informational rows.
    pub pass: Option<bool>,
}

impl ProbeResult {
    pub fn info(name: impl Into<String>, n: usize, value: f64) -> Self {
        Self {
            name: name.into(),
            n,
            value,
            tolerance: None,
            pass: None,
        }
    }

    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, n: usize, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            n,
            value,
            tolerance: Some(tolerance),
            pass: Some(value <= tolerance),
        }
    }

    /// Passes when `value ≥ floor`.
    pub fn at_least(name: impl Into<String>, n: usize, value: f64, floor: f64) -> Self {
        Self {
            name: name.into(),
            n,
            value,
            tolerance: Some(floor),
            pass: Some(value >= floor),
        }
    }

    pub fn checked(name: impl Into<String>, n: usize, value: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            n,
            value,
            tolerance: None,
            pass: Some(pass),
        }
    }
}

/// Outcome of one suite or probe on one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub suite: String,
    pub label: String,
    /// Largest truncation used.
    pub truncation: usize,
    #[serde(serialize_with = "sig_opt")]
    pub estimated_constant: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub verdict: Option<String>,
    pub flags: Vec<String>,
    pub probes: Vec<ProbeResult>,
}

impl FrameReport {
    pub fn new(
        suite: impl Into<String>,
        label: impl Into<String>,
        samples: usize,
        seed: u64,
    ) -> Self {
        Self {
            suite: suite.into(),
            label: label.into(),
            truncation: 0,
            estimated_constant: None,
            samples,
            seed,
            verdict: None,
            flags: Vec::new(),
            probes: Vec::new(),
        }
    }

    pub fn push(&mut self, probe: ProbeResult) {
        self.truncation = self.truncation.max(probe.n);
        self.probes.push(probe);
    }

    /// No probe failed and no verdict is inconclusive.
    pub fn passed(&self) -> bool {
        self.probes.iter().all(|p| p.pass != Some(false))
            && self.verdict.as_deref() != Some(super::Verdict::Inconclusive.as_str())
    }

    pub fn probe(&self, name: &str, n: usize) -> Option<&ProbeResult> {
        self.probes.iter().find(|p| p.name == name && p.n == n)
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        let bad = self
            .probes
            .iter()
            .map(|p| p.value)
            .chain(self.estimated_constant)
            .any(|v| !v.is_finite());
        if bad {
            Err(FrameError::NonFinite("frame report"))
        } else {
            Ok(())
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat CSV, one row per probe.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        self.write_csv_rows(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub(crate) fn write_csv_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for p in &self.probes {
            w.write_record([
                self.suite.as_str(),
                self.label.as_str(),
                &p.n.to_string(),
                p.name.as_str(),
                &round_significant(p.value).to_string(),
                match p.pass {
                    Some(true) => "true",
                    Some(false) => "false",
                    None => "",
                },
            ])?;
        }
        Ok(())
    }
}

pub(crate) const CSV_HEADER: [&str; 6] = ["suite", "frame", "N", "metric", "value", "pass"];
