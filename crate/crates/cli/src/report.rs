//! Machine-readable reports. Re-running an identical config reproduces
//! every byte except `wall_ms`.

use hypergauss_core::{Comparison, ConditionReport, FlowCertificate, Method, Verdict};
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct Report {
    pub digest: String,
    pub version: String,
    pub command: String,
    pub records: Vec<Record>,
    pub wall_ms: u64,
    pub verdict: String,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Condition {
        label: String,
        #[serde(flatten)]
        report: ConditionReport,
    },
    Comparison {
        #[serde(flatten)]
        comparison: Comparison,
    },
    Flow {
        label: String,
        #[serde(flatten)]
        certificate: FlowCertificate,
    },
    Constant {
        label: String,
        name: String,
        value: f64,
    },
}

impl Record {
    /// Prefixes suite entry labels onto the record's own label.
    pub fn prefix_label(&mut self, entry: &str) {
        match self {
            Record::Condition { label, .. }
            | Record::Flow { label, .. }
            | Record::Constant { label, .. } => *label = format!("{entry}/{label}"),
            Record::Comparison { comparison } => {
                comparison.label = format!("{entry}/{}", comparison.label);
            }
        }
    }
}

/// `--tolerance` relaxes or tightens the holds threshold for deterministic
/// methods; sampling verdicts keep their stderr rule.
fn record_verdict(record: &Record, tol: Option<f64>) -> Verdict {
    match record {
        Record::Condition { report, .. } => {
            let holds = match tol {
                Some(t) => report.margin >= -t * (1.0 + report.scale),
                None => report.holds,
            };
            if holds {
                Verdict::Holds
            } else {
                Verdict::Violated
            }
        }
        Record::Comparison { comparison } => {
            if comparison.tainted {
                return Verdict::Inconclusive;
            }
            match (tol, comparison.method) {
                (Some(t), Method::Exact | Method::Quadrature) => {
                    let scale = comparison.lhs.abs().max(comparison.rhs.abs()).max(1.0);
                    if comparison.margin >= -t * scale {
                        Verdict::Holds
                    } else {
                        Verdict::Violated
                    }
                }
                _ => comparison.verdict,
            }
        }
        Record::Flow { certificate, .. } => {
            // An endpoint mismatch is a failed cross-check, not a observed
            // counterexample; only a Violated trend reads as a violation.
            if certificate.tainted || certificate.monotone == Verdict::Inconclusive {
                Verdict::Inconclusive
            } else if certificate.monotone == Verdict::Violated {
                Verdict::Violated
            } else if certificate.endpoints_ok {
                Verdict::Holds
            } else {
                Verdict::Inconclusive
            }
        }
        Record::Constant { .. } => Verdict::Holds,
    }
}

/// Exit codes: 0 all hold, 1 any violated, 2 any inconclusive.
pub fn summarize(records: &[Record], tol: Option<f64>) -> (String, i32) {
    let mut any_violated = false;
    let mut any_inconclusive = false;
    for record in records {
        match record_verdict(record, tol) {
            Verdict::Violated => any_violated = true,
            Verdict::Inconclusive => any_inconclusive = true,
            Verdict::Holds => {}
        }
    }
    if any_violated {
        ("violated".to_string(), 1)
    } else if any_inconclusive {
        ("inconclusive".to_string(), 2)
    } else {
        ("holds".to_string(), 0)
    }
}
