//! Summary report with provenance and acceptance flags.

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;

/// Numbers of the acceptance criteria the flags refer to.
const CRITERIA: [(&str, u8); 6] = [
    ("oracle_equivalence", 1),
    ("four_term_identity", 3),
    ("decay_rates", 5),
    ("asymptotic_convergence_order", 6),
    ("gaussian_concentration", 8),
    ("performance", 11),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flag {
    pub criterion: &'static str,
    pub criterion_number: u8,
    pub passed: bool,
    pub detail: String,
}

impl Flag {
    /// Panics on a name outside the acceptance list, which is a programming error.
    pub fn new(criterion: &'static str, passed: bool, detail: String) -> Self {
        let number = CRITERIA
            .iter()
            .find(|(name, _)| *name == criterion)
            .map(|(_, n)| *n)
            .unwrap_or_else(|| panic!("unknown acceptance criterion {criterion}"));
        Self {
            criterion,
            criterion_number: number,
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub code_version: &'static str,
    pub timestamp_unix: u64,
    pub workers: usize,
    pub seedless: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: &'static str,
    pub cases: usize,
    pub failed_cases: usize,
    pub summary: Value,
    pub flags: Vec<Flag>,
    pub passed: bool,
    pub provenance: Provenance,
}
