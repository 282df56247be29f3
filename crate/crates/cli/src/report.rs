//! The JSON report written by every subcommand.

use riskset_core::audit::{AuditRecord, Verdict};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub closed_form: f64,
    pub optimization: f64,
    pub inclusion: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { closed_form: 1e-9, optimization: 1e-6, inclusion: 1e-8 }
    }
}

/// Validated run configuration, echoed into the report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub spec: Vec<String>,
    pub scenarios: Option<String>,
    pub tree: Option<String>,
    pub audits: Vec<String>,
    pub trials: usize,
    pub seed: u64,
    pub grid: usize,
    pub weights: Option<Vec<f64>>,
    pub tolerances: Tolerances,
    pub out: Option<String>,
    pub csv: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        let t = &self.tolerances;
        if !(t.closed_form > 0.0 && t.optimization > 0.0 && t.inclusion > 0.0) {
            return Err("tolerances must be > 0".into());
        }
        if self.trials == 0 {
            return Err("--trials must be >= 1".into());
        }
        if self.grid < 3 {
            return Err("--grid must be >= 3".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub records: usize,
    pub pass: usize,
    pub fail: usize,
    pub info: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub schema: u32,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub summary: Summary,
    pub records: Vec<AuditRecord>,
    pub results: Vec<Value>,
}

impl AuditReport {
    pub fn new(command: &str, config: RunConfig, records: Vec<AuditRecord>, results: Vec<Value>) -> Self {
        let mut summary = Summary { records: records.len(), ..Summary::default() };
        for r in &records {
            match r.verdict {
                Verdict::Pass => summary.pass += 1,
                Verdict::Fail => summary.fail += 1,
                Verdict::Info => summary.info += 1,
            }
        }
        Self { schema: SCHEMA, command: command.to_string(), seed: config.seed, config, summary, records, results }
    }

    pub fn exit_code(&self) -> i32 {
        if self.summary.fail > 0 { 1 } else { 0 }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
