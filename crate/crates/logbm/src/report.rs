//! Check reports: named inequality verdicts with margins, certificates and
//! approximation provenance. Reports serialize as single JSON lines and are
//! byte-identical for identical inputs and seeds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Fnv;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Trichotomy with explicit slack accounting: a violation is only called
    /// when the margin is below tolerance plus all approximation slack; the
    /// band in between is inconclusive.
    pub fn from_margin(margin: f64, tol: f64, slack: f64) -> Verdict {
        if margin < -(tol + slack) {
            Verdict::Violated
        } else if margin < -tol {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        }
    }
}

/// One row of a swept check (parameter on the x axis).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub param: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// Stable digest of bodies, specs, grids and seeds.
    pub inputs: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub slack: f64,
    pub certificates: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDesc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<SeriesPoint>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridDesc {
    pub kind: String,
    pub m: usize,
    pub merged_facets: bool,
}

impl CheckReport {
    pub fn new(name: &str, inputs: String) -> CheckReport {
        CheckReport {
            name: name.to_string(),
            inputs,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            verdict: Verdict::Inconclusive,
            tolerance: 0.0,
            slack: 0.0,
            certificates: Vec::new(),
            grid: None,
            samples: None,
            seed: None,
            params: BTreeMap::new(),
            series: None,
        }
    }

    pub fn with_values(mut self, lhs: f64, rhs: f64, tol: f64, slack: f64) -> CheckReport {
        self.lhs = lhs;
        self.rhs = rhs;
        self.margin = lhs - rhs;
        self.tolerance = tol;
        self.slack = slack;
        self.verdict = Verdict::from_margin(self.margin, tol, slack);
        self
    }

    pub fn param(mut self, key: &str, value: f64) -> CheckReport {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn certificate(mut self, text: impl Into<String>) -> CheckReport {
        self.certificates.push(text.into());
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serialization is infallible")
    }

    pub fn from_json_line(line: &str) -> Result<CheckReport> {
        serde_json::from_str(line).map_err(|e| Error::InvalidInput(format!("report parse: {e}")))
    }

    pub fn csv_header() -> &'static str {
        "name,margin,verdict,slack"
    }

    pub fn csv_row(&self) -> String {
        let v = match self.verdict {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        };
        format!("{},{},{},{}", self.name, self.margin, v, self.slack)
    }
}

/// Digest accumulator for report inputs.
pub struct InputDigest(Fnv);

impl InputDigest {
    pub fn new(name: &str) -> InputDigest {
        let mut f = Fnv::new();
        f.write(name.as_bytes());
        InputDigest(f)
    }
    pub fn body(mut self, b: &crate::body::HPolytope) -> Self {
        self.0.write(&b.digest().to_le_bytes());
        self
    }
    pub fn dirs(mut self, d: &crate::body::DirectionSet) -> Self {
        self.0.write(&d.digest().to_le_bytes());
        self
    }
    pub fn f64(mut self, x: f64) -> Self {
        self.0.write_f64(x);
        self
    }
    pub fn u64(mut self, x: u64) -> Self {
        self.0.write(&x.to_le_bytes());
        self
    }
    pub fn finish(self) -> String {
        format!("{:016x}", self.0.finish())
    }
}

const SWEEP_KEYS: [&str; 4] = ["lambda", "p", "s", "grid_m"];

/// Tidy CSV (parameter, lhs, rhs, margin, slack) from reports sharing one
/// swept parameter, or from a single report carrying an internal series.
pub fn emit_plot_data(reports: &[CheckReport]) -> Result<String> {
    let mut out = String::from("parameter,lhs,rhs,margin,slack\n");
    if reports.is_empty() {
        return Err(Error::MixedSweep);
    }
    if reports.len() == 1 {
        if let Some(series) = &reports[0].series {
            for p in series {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.param, p.lhs, p.rhs, p.margin, p.slack
                ));
            }
            return Ok(out);
        }
    }
    // Find the unique candidate key that is present everywhere and varies.
    let mut swept: Option<&str> = None;
    for key in SWEEP_KEYS {
        if !reports.iter().all(|r| r.params.contains_key(key)) {
            continue;
        }
        let first = reports[0].params[key];
        let varies = reports.iter().any(|r| (r.params[key] - first).abs() > 0.0);
        if varies {
            if swept.is_some() {
                return Err(Error::MixedSweep);
            }
            swept = Some(key);
        }
    }
    let Some(key) = swept else {
        return Err(Error::MixedSweep);
    };
    if !reports.iter().all(|r| r.name == reports[0].name) {
        return Err(Error::MixedSweep);
    }
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.params[key], r.lhs, r.rhs, r.margin, r.slack
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_trichotomy() {
        assert_eq!(Verdict::from_margin(0.0, 1e-9, 0.0), Verdict::Holds);
        assert_eq!(Verdict::from_margin(-2e-9, 1e-9, 0.0), Verdict::Violated);
        assert_eq!(Verdict::from_margin(-2e-9, 1e-9, 1e-2), Verdict::Inconclusive);
        assert_eq!(Verdict::from_margin(-1.0, 1e-9, 1e-2), Verdict::Violated);
    }

    #[test]
    fn plot_data_from_lambda_sweep() {
        let reports: Vec<CheckReport> = (0..21)
            .map(|i| {
                CheckReport::new("log-bm", "x".into())
                    .with_values(1.0, 0.5, 1e-9, 0.0)
                    .param("lambda", i as f64 / 20.0)
            })
            .collect();
        let csv = emit_plot_data(&reports).unwrap();
        assert_eq!(csv.lines().count(), 22); // header + 21 rows
    }

    #[test]
    fn plot_data_rejects_mixed_sweeps() {
        let a = CheckReport::new("log-bm", "x".into())
            .with_values(1.0, 0.5, 1e-9, 0.0)
            .param("lambda", 0.1)
            .param("p", 0.5);
        let b = CheckReport::new("log-bm", "x".into())
            .with_values(1.0, 0.5, 1e-9, 0.0)
            .param("lambda", 0.2)
            .param("p", 0.7);
        assert!(matches!(
            emit_plot_data(&[a, b]),
            Err(Error::MixedSweep)
        ));
    }

    #[test]
    fn report_round_trips_as_json_line() {
        let r = CheckReport::new("demo", "feed".into()).with_values(2.0, 1.0, 1e-9, 0.0);
        let line = r.to_json_line();
        let back = CheckReport::from_json_line(&line).unwrap();
        assert_eq!(back.to_json_line(), line);
    }
}
