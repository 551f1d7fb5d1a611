use std::path::Path;

use omd_core::mechanism::{ViolationKind, VerificationReport};
use omd_core::rational::format;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Record of one command run, written to stdout as JSON.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Value>,
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

#[derive(Debug, Default, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

fn kind_name(kind: ViolationKind) -> &'static str {
    match kind {
        ViolationKind::Bic => "bic",
        ViolationKind::Ir => "ir",
        ViolationKind::Prob => "prob",
        ViolationKind::Price => "price",
    }
}

/// JSON summary of a verification pass; lists at most `limit` violations.
pub fn verification_json(report: &VerificationReport, limit: usize) -> Value {
    let violations: Vec<Value> = report
        .violations
        .iter()
        .take(limit)
        .map(|v| {
            json!({
                "kind": kind_name(v.kind),
                "type": v.truth.one_based(),
                "misreport": v.other.map(|t| t.one_based()),
                "item": v.item.map(|i| i + 1),
                "slack": format(&v.slack),
            })
        })
        .collect();
    json!({
        "bic_checked": report.bic_checked,
        "ir_checked": report.ir_checked,
        "prob_checked": report.prob_checked,
        "violation_count": report.violations.len(),
        "violations": violations,
        "clean": report.is_clean(),
    })
}
