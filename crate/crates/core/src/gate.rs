//! Plausibility checks on inspection data before it is allowed to drive
//! test focusing.
//!
//! Three checks run in a fixed order: inspection coverage by size, pooled
//! reading rate, and a minimum number of inspection defects. The thresholds
//! are configuration; the defaults are conservative and non-normative.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::ProjectData;
use crate::num::round4;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateConfig {
    /// Inspected LOC / total LOC.
    pub min_inspection_coverage: f64,
    /// LOC per hour, inclusive bounds.
    pub reading_rate_bounds: (f64, f64),
    pub min_total_inspection_defects: u64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            min_inspection_coverage: 0.75,
            reading_rate_bounds: (50.0, 600.0),
            min_total_inspection_defects: 1,
        }
    }
}

impl GateConfig {
    pub fn is_valid(&self) -> bool {
        let (lo, hi) = self.reading_rate_bounds;
        (0.0..=1.0).contains(&self.min_inspection_coverage) && lo <= hi && lo >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[allow(non_camel_case_types)]
pub enum GateCheckId {
    COVERAGE,
    READING_RATE,
    DEFECT_COUNT,
}

impl fmt::Display for GateCheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::COVERAGE => "COVERAGE",
            Self::READING_RATE => "READING_RATE",
            Self::DEFECT_COUNT => "DEFECT_COUNT",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateCheck {
    pub check_id: GateCheckId,
    /// Rounded to 4 decimals. `None` when the quantity is undefined (no
    /// inspection effort recorded).
    pub measured_value: Option<f64>,
    pub threshold_description: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateReport {
    pub passed: bool,
    pub checks: Vec<GateCheck>,
}

/// Runs the three checks. Does not refuse to answer on a failing project;
/// callers decide whether a failed gate blocks further work.
pub fn run_gate(p: &ProjectData, cfg: &GateConfig) -> GateReport {
    let total_loc: u64 = p.units.iter().map(|u| u.size_loc).sum();
    let inspected_loc: u64 = p
        .units
        .iter()
        .filter(|u| u.inspected)
        .map(|u| u.size_loc)
        .sum();
    let effort_minutes: f64 = p
        .units
        .iter()
        .filter(|u| u.inspected)
        .filter_map(|u| u.inspection_effort_minutes)
        .sum();

    let coverage = if total_loc == 0 {
        0.0
    } else {
        inspected_loc as f64 / total_loc as f64
    };
    let coverage_ok = coverage >= cfg.min_inspection_coverage;
    let coverage_check = GateCheck {
        check_id: GateCheckId::COVERAGE,
        measured_value: Some(round4(coverage)),
        threshold_description: format!(">= {:.4}", cfg.min_inspection_coverage),
        passed: coverage_ok,
    };

    let (lo, hi) = cfg.reading_rate_bounds;
    let bounds = format!("within [{lo:.4}, {hi:.4}] LOC/h");
    let rate_check = if effort_minutes > 0.0 {
        let rate = inspected_loc as f64 / (effort_minutes / 60.0);
        GateCheck {
            check_id: GateCheckId::READING_RATE,
            measured_value: Some(round4(rate)),
            threshold_description: bounds,
            passed: lo <= rate && rate <= hi,
        }
    } else if !coverage_ok {
        GateCheck {
            check_id: GateCheckId::READING_RATE,
            measured_value: None,
            threshold_description: format!("{bounds} (skipped: no inspection effort)"),
            passed: true,
        }
    } else {
        // covered LOC read in zero time
        GateCheck {
            check_id: GateCheckId::READING_RATE,
            measured_value: None,
            threshold_description: format!("{bounds} (undefined: no inspection effort)"),
            passed: false,
        }
    };

    let defects = p.inspection_defects.len() as u64;
    let count_check = GateCheck {
        check_id: GateCheckId::DEFECT_COUNT,
        measured_value: Some(defects as f64),
        threshold_description: format!(">= {}", cfg.min_total_inspection_defects),
        passed: defects >= cfg.min_total_inspection_defects,
    };

    let checks = alloc::vec![coverage_check, rate_check, count_check];
    GateReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
