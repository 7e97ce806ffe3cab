//! Report records and deterministic rendering.
//!
//! One row per metric, with columns
//! `(experiment, metric, value, ci_lo, ci_hi, target, tolerance, pass)`.
//! CSV reports carry the resolved configuration and crate version as `#`
//! comment lines; JSON mirrors the same content as an object. Floats are
//! printed with 17 significant digits so every value round-trips exactly.
//! Report bodies contain no timestamps: identical configuration and seed
//! must yield byte-identical bodies.

use serde::Serialize;

/// One measured (or computed) quantity with its acceptance bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub experiment: String,
    pub metric: String,
    pub value: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl MetricRow {
    pub fn new(experiment: &str, metric: &str, value: f64, pass: bool) -> Self {
        MetricRow {
            experiment: experiment.to_string(),
            metric: metric.to_string(),
            value,
            ci_lo: None,
            ci_hi: None,
            target: None,
            tolerance: None,
            pass,
        }
    }

    pub fn with_ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci_lo = Some(lo);
        self.ci_hi = Some(hi);
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }
}

/// A finished experiment: resolved configuration plus metric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Resolved `(key, value)` pairs, defaults materialized, in a fixed order.
    pub config: Vec<(String, String)>,
    pub version: String,
    pub rows: Vec<MetricRow>,
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# version = {}\n", self.version));
        for (k, v) in &self.config {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str("experiment,metric,value,ci_lo,ci_hi,target,tolerance,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.experiment,
                r.metric,
                fmt_float(r.value),
                fmt_opt(r.ci_lo),
                fmt_opt(r.ci_hi),
                fmt_opt(r.target),
                fmt_opt(r.tolerance),
                r.pass
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct JsonReport<'a> {
            version: &'a str,
            config: std::collections::BTreeMap<&'a str, &'a str>,
            all_pass: bool,
            metrics: &'a [MetricRow],
        }
        let config = self
            .config
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        let doc = JsonReport {
            version: &self.version,
            config,
            all_pass: self.all_pass(),
            metrics: &self.rows,
        };
        let mut body = serde_json::to_string_pretty(&doc).expect("report serializes");
        body.push('\n');
        body
    }
}
