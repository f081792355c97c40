//! Post-analysis: testing covered every unit, so the benefit a prioritization
//! would have brought can be computed after the fact.
//!
//! Effectiveness is the share of test defects inside the selected units,
//! effort reduction the share of test effort spent outside them, and
//! efficiency is defects per hour of test effort.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::ProjectData;
use crate::profiles::ProfileSet;
use crate::rules::{evaluate_rule, Prioritization, RuleError, SelectionRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("project has no test defects and test effort")]
    MissingTestData,
    #[error("no test effort recorded for unit {0}")]
    MissingEffortRecord(String),
    #[error("total test effort is zero")]
    ZeroTotalEffort,
    #[error("effort reduction {0} leaves no effort to spend")]
    DegenerateReduction(f64),
    #[error("rule {rule_name}: {source}")]
    Rule {
        rule_name: String,
        #[source]
        source: RuleError,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationReport {
    pub rule_source: String,
    pub total_test_defects: u64,
    pub found_in_selected: u64,
    /// 1.0 when there were no test defects at all.
    pub effectiveness_ratio: f64,
    pub total_effort_minutes: f64,
    pub selected_effort_minutes: f64,
    pub effort_reduction: f64,
    /// Defects per hour.
    pub efficiency_full: f64,
    /// Defects per hour; `None` when nothing was selected.
    pub efficiency_focused: Option<f64>,
    /// Relative change of focused over full efficiency, -1.0 for an empty
    /// selection.
    pub efficiency_improvement: f64,
}

/// Per-unit test effort, in the project's unit order.
fn unit_efforts(p: &ProjectData) -> Result<Vec<(&str, f64)>, EvaluationError> {
    let (Some(_), Some(effort)) = (&p.test_defects, &p.test_effort) else {
        return Err(EvaluationError::MissingTestData);
    };
    let by_unit: BTreeMap<&str, f64> = effort
        .iter()
        .map(|e| (e.unit_id.as_str(), e.effort_minutes))
        .collect();
    let mut out = Vec::with_capacity(p.units.len());
    for u in &p.units {
        let e = by_unit
            .get(u.id.as_str())
            .ok_or_else(|| EvaluationError::MissingEffortRecord(u.id.clone()))?;
        out.push((u.id.as_str(), *e));
    }
    let total: f64 = out.iter().map(|(_, e)| e).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(EvaluationError::ZeroTotalEffort);
    }
    Ok(out)
}

/// Scores a prioritization against the project's full test outcome.
pub fn score(pri: &Prioritization, p: &ProjectData) -> Result<EvaluationReport, EvaluationError> {
    let efforts = unit_efforts(p)?;
    let test_defects = p.test_defects.as_deref().unwrap_or_default();

    let total_effort: f64 = efforts.iter().map(|(_, e)| e).sum();
    let selected_effort: f64 = efforts
        .iter()
        .filter(|(id, _)| pri.is_selected(id))
        .map(|(_, e)| e)
        .sum();
    let total = test_defects.len() as u64;
    let found = test_defects
        .iter()
        .filter(|d| pri.is_selected(&d.unit_id))
        .count() as u64;

    let effectiveness = if total > 0 {
        found as f64 / total as f64
    } else {
        1.0
    };
    let effort_reduction = (1.0 - selected_effort / total_effort).clamp(0.0, 1.0);
    let efficiency_full = total as f64 / (total_effort / 60.0);
    let efficiency_focused =
        (selected_effort > 0.0).then(|| found as f64 / (selected_effort / 60.0));
    let efficiency_improvement = match efficiency_focused {
        None => -1.0,
        Some(focused) if efficiency_full > 0.0 => (focused - efficiency_full) / efficiency_full,
        // no test defects anywhere: effectiveness is 1 by convention
        Some(_) => effectiveness / (1.0 - effort_reduction) - 1.0,
    };

    Ok(EvaluationReport {
        rule_source: pri.rule_source.clone(),
        total_test_defects: total,
        found_in_selected: found,
        effectiveness_ratio: effectiveness,
        total_effort_minutes: total_effort,
        selected_effort_minutes: selected_effort,
        effort_reduction,
        efficiency_full,
        efficiency_focused,
        efficiency_improvement,
    })
}

/// `effectiveness / (1 - effort_reduction) - 1`.
pub fn efficiency_improvement_closed_form(
    effort_reduction: f64,
    effectiveness_ratio: f64,
) -> Result<f64, EvaluationError> {
    if effort_reduction.is_nan() || effort_reduction >= 1.0 {
        return Err(EvaluationError::DegenerateReduction(effort_reduction));
    }
    Ok(effectiveness_ratio / (1.0 - effort_reduction) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SuccessCriterion {
    pub min_effectiveness_ratio: f64,
    pub min_effort_reduction: f64,
}

impl Default for SuccessCriterion {
    fn default() -> Self {
        Self {
            min_effectiveness_ratio: 0.95,
            min_effort_reduction: 0.05,
        }
    }
}

impl SuccessCriterion {
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.min_effectiveness_ratio)
            && (0.0..=1.0).contains(&self.min_effort_reduction)
    }
}

/// Did the focused run keep enough defects while saving enough effort?
pub fn judge(report: &EvaluationReport, crit: &SuccessCriterion) -> bool {
    report.effectiveness_ratio >= crit.min_effectiveness_ratio
        && report.effort_reduction >= crit.min_effort_reduction
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankingRow {
    pub rule_name: String,
    pub effectiveness_ratio: f64,
    pub effort_reduction: f64,
    pub efficiency_improvement: f64,
}

/// Rules ordered by efficiency improvement, then effort reduction (both
/// descending), then name.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankingTable {
    pub rows: Vec<RankingRow>,
}

impl RankingTable {
    pub fn from_rows(mut rows: Vec<RankingRow>) -> Self {
        rows.sort_by(|a, b| {
            b.efficiency_improvement
                .total_cmp(&a.efficiency_improvement)
                .then_with(|| b.effort_reduction.total_cmp(&a.effort_reduction))
                .then_with(|| a.rule_name.cmp(&b.rule_name))
        });
        Self { rows }
    }

    pub fn position(&self, rule_name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.rule_name == rule_name)
    }
}

/// Evaluates and scores every rule, then ranks them.
pub fn benchmark(
    rules: &[(String, SelectionRule)],
    p: &ProjectData,
    profiles: &ProfileSet,
    validity: impl Fn(&str, &SelectionRule) -> u32,
) -> Result<RankingTable, EvaluationError> {
    if rules.is_empty() {
        return Ok(RankingTable::default());
    }
    unit_efforts(p)?;
    let mut rows = Vec::with_capacity(rules.len());
    for (name, rule) in rules {
        let pri =
            evaluate_rule(rule, profiles, &p.units, validity(name, rule)).map_err(|source| {
                EvaluationError::Rule {
                    rule_name: name.clone(),
                    source,
                }
            })?;
        let report = score(&pri, p)?;
        rows.push(RankingRow {
            rule_name: name.clone(),
            effectiveness_ratio: report.effectiveness_ratio,
            effort_reduction: report.effort_reduction,
            efficiency_improvement: report.efficiency_improvement,
        });
    }
    Ok(RankingTable::from_rows(rows))
}
