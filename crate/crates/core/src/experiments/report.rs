use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentKind};
use crate::bergman::cache::content_hash;
use crate::error::Result;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One statistic at one n, with its Monte Carlo standard error and stream ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: u32,
    pub statistic: String,
    pub value: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
    pub stream: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub value: f64,
    pub stderr: Option<f64>,
    pub ci95: Option<[f64; 2]>,
}

impl FittedConstant {
    pub fn plain(value: f64) -> Self {
        FittedConstant { value, stderr: None, ci95: None }
    }

    pub fn with_stderr(value: f64, stderr: f64) -> Self {
        FittedConstant { value, stderr: Some(stderr), ci95: Some([value - 1.96 * stderr, value + 1.96 * stderr]) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisInfo {
    pub n: u32,
    pub degree: usize,
    pub dim: usize,
    pub truncation_reached: Option<bool>,
    pub orthonormality_residual: f64,
    pub request_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub workers: usize,
    pub config: serde_json::Value,
    pub bases: Vec<BasisInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub passed: bool,
    pub predicate: String,
    pub rows: Vec<ReportRow>,
    pub fitted: BTreeMap<String, FittedConstant>,
    pub checks: BTreeMap<String, bool>,
    pub notes: Vec<String>,
    pub artifacts: BTreeMap<String, serde_json::Value>,
    pub provenance: Provenance,
    /// Wall-clock creation time; the only field that differs between identical runs.
    pub timestamp: String,
}

pub fn config_hash(kind: ExperimentKind, cfg: &ExperimentConfig) -> String {
    let payload = serde_json::json!({ "experiment": kind.name(), "config": cfg });
    content_hash(payload.to_string().as_bytes())
}

impl ExperimentReport {
    pub(crate) fn new(kind: ExperimentKind, cfg: &ExperimentConfig, predicate: &str) -> Self {
        ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: kind.name().to_string(),
            passed: false,
            predicate: predicate.to_string(),
            rows: Vec::new(),
            fitted: BTreeMap::new(),
            checks: BTreeMap::new(),
            notes: Vec::new(),
            artifacts: BTreeMap::new(),
            provenance: Provenance {
                config_hash: config_hash(kind, cfg),
                seed: cfg.seed,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                workers: rayon::current_num_threads(),
                config: serde_json::to_value(cfg).expect("config serializes"),
                bases: Vec::new(),
            },
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub(crate) fn row(&mut self, n: u32, statistic: &str, value: f64, stderr: f64, trials: usize, stream: u32) {
        let seed = self.provenance.seed;
        self.rows.push(ReportRow { n, statistic: statistic.to_string(), value, stderr, trials, seed, stream });
    }

    pub(crate) fn check(&mut self, name: &str, ok: bool) -> bool {
        self.checks.insert(name.to_string(), ok);
        ok
    }

    /// Rows whose statistic equals `name`, in n order.
    pub fn series(&self, name: &str) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.statistic == name).collect()
    }

    pub fn value(&self, name: &str, n: u32) -> Option<f64> {
        self.rows.iter().find(|r| r.statistic == name && r.n == n).map(|r| r.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per n; each statistic contributes a value and a stderr column, empty
    /// where the statistic is not reported at that n.
    pub fn to_csv(&self) -> String {
        let mut stats: Vec<&str> = Vec::new();
        let mut ns: Vec<u32> = Vec::new();
        for r in &self.rows {
            if !stats.contains(&r.statistic.as_str()) {
                stats.push(&r.statistic);
            }
            if !ns.contains(&r.n) {
                ns.push(r.n);
            }
        }
        let mut out = String::from("experiment,n,seed,stream,trials");
        for s in &stats {
            let _ = write!(out, ",{s},{s}_stderr");
        }
        out.push('\n');
        for n in ns {
            let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.n == n).collect();
            let trials = rows.iter().map(|r| r.trials).max().unwrap_or(0);
            let _ = write!(out, "{},{},{},{},{}", self.experiment, n, self.provenance.seed, rows[0].stream, trials);
            for s in &stats {
                match rows.iter().find(|r| r.statistic == *s) {
                    Some(r) => {
                        let _ = write!(out, ",{},{}", r.value, r.stderr);
                    }
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// One whitespace-separated `n value stderr` table per statistic.
    pub fn plot_data(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = BTreeMap::new();
        for r in &self.rows {
            let text = out.entry(r.statistic.clone()).or_default();
            let _ = writeln!(text, "{} {} {}", r.n, r.value, r.stderr);
        }
        out
    }
}

/// Writes report.json, report.csv and plot/<statistic>.dat under `dir`.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join("plot"))?;
    let mut written = Vec::new();
    let json = dir.join("report.json");
    fs::write(&json, report.to_json())?;
    written.push(json);
    let csv = dir.join("report.csv");
    fs::write(&csv, report.to_csv())?;
    written.push(csv);
    for (name, text) in report.plot_data() {
        let file: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
        let path = dir.join("plot").join(format!("{file}.dat"));
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
