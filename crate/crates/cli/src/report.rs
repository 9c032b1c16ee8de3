//! Run reports and the on-disk run directory layout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use decaylab_core::decay::{HypothesisCheck, Verdict};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::runner::{aggregate, exit_code, Artifact, CheckResult, Outcome};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Deterministic part of a report: same config and seed give the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSection {
    pub scenario: String,
    pub seed: u64,
    pub config_hash: String,
    pub hypotheses: Vec<HypothesisCheck>,
    pub checks: Vec<CheckResult>,
    pub aggregate: Verdict,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
    pub kernels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub verdicts: VerdictSection,
    pub details: BTreeMap<String, Value>,
    pub environment: Environment,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(cfg: &ExperimentConfig, outcome: &Outcome) -> Self {
        let hash = cfg.hash();
        let agg = aggregate(outcome.checks.iter().map(|c| c.verdict));
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config_hash: hash.clone(),
            config: cfg.clone(),
            verdicts: VerdictSection {
                scenario: cfg.scenario.clone(),
                seed: cfg.seed,
                config_hash: hash,
                hypotheses: outcome.hypotheses.clone(),
                checks: outcome.checks.clone(),
                aggregate: agg,
                exit_code: exit_code(agg),
            },
            details: outcome.details.clone(),
            environment: Environment {
                version: env!("CARGO_PKG_VERSION").to_string(),
                os: std::env::consts::OS.to_string(),
                arch: std::env::consts::ARCH.to_string(),
                threads: rayon::current_num_threads(),
                kernels: outcome.kernels.clone(),
            },
            timings: outcome.timings.clone(),
        }
    }

    pub fn verdict_json(&self) -> String {
        serde_json::to_string_pretty(&self.verdicts).expect("verdicts serialize")
    }
}

/// Creates `<root>/<hash16>-<unix seconds>[-k]`, never reusing a directory.
pub fn run_dir(root: &Path, hash: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let base = format!("{}-{stamp}", &hash[..16]);
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    unreachable!()
}

pub fn write_run(root: &Path, report: &RunReport, artifacts: &[Artifact]) -> anyhow::Result<PathBuf> {
    let dir = run_dir(root, &report.config_hash)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    std::fs::write(dir.join("verdicts.json"), report.verdict_json())?;
    if !artifacts.is_empty() {
        let traces = dir.join("traces");
        std::fs::create_dir(&traces)?;
        for a in artifacts {
            std::fs::write(traces.join(&a.name), &a.contents)?;
        }
    }
    Ok(dir)
}

const HEADLINE: [&str; 5] = ["fitted_exponent", "predicted", "constant", "sup_constant", "c_hat"];

pub fn summary(report: &RunReport) -> String {
    let mut out = format!("{} [{}]\n", report.verdicts.scenario, &report.config_hash[..16]);
    for c in &report.verdicts.checks {
        let mut ordered: Vec<(&String, &f64)> = HEADLINE
            .iter()
            .filter_map(|h| c.constants.get_key_value(*h))
            .collect();
        ordered.extend(c.constants.iter().filter(|(k, _)| !HEADLINE.contains(&k.as_str())));
        let keys: Vec<String> = ordered.iter().take(4).map(|(k, v)| format!("{k}={v:.6e}")).collect();
        out.push_str(&format!("  {:<9} {:<12} {}\n", c.id, format!("{:?}", c.verdict), keys.join(" ")));
    }
    out.push_str(&format!("  aggregate {:?}\n", report.verdicts.aggregate));
    out
}
