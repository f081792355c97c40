//! Inspection-driven test focusing.
//!
//! Defect data from code inspections is quality-gated ([`gate`]), turned into
//! per-unit defect profiles ([`profiles`]), fed through selection rules that
//! operationalize assumptions about where test defects will show up
//! ([`rules`]), and the resulting prioritizations are scored against full test
//! outcomes in post-analysis ([`evaluation`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the validity
//! ledger on disk and the command line live in the `infocus` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod evaluation;
pub mod gate;
pub mod model;
pub mod profiles;
pub mod rules;

mod num;

pub use evaluation::{
    benchmark, efficiency_improvement_closed_form, judge, score, EvaluationError, EvaluationReport,
    RankingRow, RankingTable, SuccessCriterion,
};
pub use gate::{run_gate, GateCheck, GateCheckId, GateConfig, GateReport};
pub use model::{
    validate_project, CodeUnit, ContextProfile, DefectRecord, Phase, ProjectData, Severity,
    TestEffortRecord, ValidationReport, Violation, ViolationCode,
};
pub use profiles::{CombineSpec, DefectProfile, ProfileError, ProfileSet};
pub use rules::{
    evaluate_rule, generate_rule_grid, get_validity, parse_rule, record_outcome, render_rule,
    Assumption, Cmp, Expr, GridSpec, LedgerEntry, Prioritization, RankedUnit, RuleError,
    SelectionRule, ValidityLedger,
};
