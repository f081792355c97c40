//! Domain types for one QA run and whole-project consistency validation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// An inspectable and testable part of the system, typically a code class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CodeUnit {
    pub id: String,
    pub name: String,
    pub size_loc: u64,
    /// McCabe value or similar.
    pub complexity: Option<f64>,
    pub inspected: bool,
    pub inspection_effort_minutes: Option<f64>,
}

impl CodeUnit {
    pub fn new(id: impl Into<String>, size_loc: u64) -> Self {
        let id = id.into();
        Self {
            name: id.clone(),
            id,
            size_loc,
            complexity: None,
            inspected: false,
            inspection_effort_minutes: None,
        }
    }

    pub fn inspected(mut self, effort_minutes: f64) -> Self {
        self.inspected = true;
        self.inspection_effort_minutes = Some(effort_minutes);
        self
    }

    pub fn with_complexity(mut self, complexity: f64) -> Self {
        self.complexity = Some(complexity);
        self
    }
}

/// The QA activity that found a defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Phase {
    Inspection,
    Test,
    Historical,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Inspection => "inspection",
            Phase::Test => "test",
            Phase::Historical => "historical",
        })
    }
}

/// Carried through, never interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Severity {
    Minor,
    Major,
    Critical,
}

/// One defect, attributed to exactly one unit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DefectRecord {
    pub id: String,
    pub unit_id: String,
    pub phase: Phase,
    pub severity: Option<Severity>,
    pub defect_type: Option<String>,
}

impl DefectRecord {
    pub fn new(id: impl Into<String>, unit_id: impl Into<String>, phase: Phase) -> Self {
        Self {
            id: id.into(),
            unit_id: unit_id.into(),
            phase,
            severity: None,
            defect_type: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestEffortRecord {
    pub unit_id: String,
    pub effort_minutes: f64,
}

/// Context factors (project, domain, team, ...) that scope assumption validity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ContextProfile {
    pub factors: BTreeMap<String, String>,
}

impl ContextProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.factors.insert(key.into(), value.into());
        self
    }

    /// Sorted `key=value` pairs joined by `;`.
    pub fn canonical_key(&self) -> String {
        let mut out = String::new();
        for (i, (k, v)) in self.factors.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(k);
            out.push('=');
            out.push_str(v);
        }
        out
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for ContextProfile {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self {
            factors: iter
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }
}

/// Everything recorded for one QA run.
///
/// `test_defects` and `test_effort` form the post-analysis bundle and are
/// either both present or both absent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectData {
    pub run_id: String,
    pub context: ContextProfile,
    pub units: Vec<CodeUnit>,
    pub inspection_defects: Vec<DefectRecord>,
    pub historical_defects: Vec<DefectRecord>,
    pub test_defects: Option<Vec<DefectRecord>>,
    pub test_effort: Option<Vec<TestEffortRecord>>,
}

impl ProjectData {
    pub fn unit(&self, id: &str) -> Option<&CodeUnit> {
        self.units.iter().find(|u| u.id == id)
    }

    pub fn has_test_data(&self) -> bool {
        self.test_defects.is_some() && self.test_effort.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[allow(non_camel_case_types)]
pub enum ViolationCode {
    DANGLING_UNIT_REF,
    DUPLICATE_DEFECT_ID,
    DUPLICATE_EFFORT_RECORD,
    DUPLICATE_UNIT_ID,
    EMPTY_CONTEXT_KEY,
    EMPTY_ID,
    INCOMPLETE_TEST_BUNDLE,
    INVALID_NUMBER,
    MISSING_INSPECTION_EFFORT,
    NON_POSITIVE_SIZE,
    PHASE_MISMATCH,
    UNINSPECTED_DEFECT_UNIT,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DANGLING_UNIT_REF => "DANGLING_UNIT_REF",
            Self::DUPLICATE_DEFECT_ID => "DUPLICATE_DEFECT_ID",
            Self::DUPLICATE_EFFORT_RECORD => "DUPLICATE_EFFORT_RECORD",
            Self::DUPLICATE_UNIT_ID => "DUPLICATE_UNIT_ID",
            Self::EMPTY_CONTEXT_KEY => "EMPTY_CONTEXT_KEY",
            Self::EMPTY_ID => "EMPTY_ID",
            Self::INCOMPLETE_TEST_BUNDLE => "INCOMPLETE_TEST_BUNDLE",
            Self::INVALID_NUMBER => "INVALID_NUMBER",
            Self::MISSING_INSPECTION_EFFORT => "MISSING_INSPECTION_EFFORT",
            Self::NON_POSITIVE_SIZE => "NON_POSITIVE_SIZE",
            Self::PHASE_MISMATCH => "PHASE_MISMATCH",
            Self::UNINSPECTED_DEFECT_UNIT => "UNINSPECTED_DEFECT_UNIT",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
    /// The offending id (unit, defect or context key).
    pub id: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}): {}", self.code, self.id, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

/// Checks every structural invariant of a project bundle.
///
/// Violations are sorted by code name, then offending id, then message.
pub fn validate_project(p: &ProjectData) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |code, id: &str, message: String| {
        out.push(Violation {
            code,
            message,
            id: String::from(id),
        })
    };

    for key in p.context.factors.keys() {
        if key.trim().is_empty() {
            push(
                ViolationCode::EMPTY_CONTEXT_KEY,
                key,
                String::from("context factor key is empty"),
            );
        }
    }

    let mut units: BTreeMap<&str, &CodeUnit> = BTreeMap::new();
    let mut reported_dup: BTreeSet<&str> = BTreeSet::new();
    for u in &p.units {
        if u.id.is_empty() {
            push(
                ViolationCode::EMPTY_ID,
                "",
                String::from("unit id is empty"),
            );
        }
        // first declaration wins for reference checks
        if !units.contains_key(u.id.as_str()) {
            units.insert(u.id.as_str(), u);
        } else if reported_dup.insert(u.id.as_str()) {
            push(
                ViolationCode::DUPLICATE_UNIT_ID,
                &u.id,
                format!("unit id {:?} declared more than once", u.id),
            );
        }
        if u.size_loc < 1 {
            push(
                ViolationCode::NON_POSITIVE_SIZE,
                &u.id,
                String::from("size_loc must be at least 1"),
            );
        }
        if let Some(c) = u.complexity {
            if !(c.is_finite() && c >= 0.0) {
                push(
                    ViolationCode::INVALID_NUMBER,
                    &u.id,
                    format!("complexity {c} is not a non-negative number"),
                );
            }
        }
        match u.inspection_effort_minutes {
            Some(e) if !(e.is_finite() && e >= 0.0) => push(
                ViolationCode::INVALID_NUMBER,
                &u.id,
                format!("inspection_effort_minutes {e} is not a non-negative number"),
            ),
            None if u.inspected => push(
                ViolationCode::MISSING_INSPECTION_EFFORT,
                &u.id,
                String::from("inspected unit has no inspection_effort_minutes"),
            ),
            _ => {}
        }
    }

    let sections: [(Phase, Option<&[DefectRecord]>); 3] = [
        (Phase::Inspection, Some(&p.inspection_defects)),
        (Phase::Historical, Some(&p.historical_defects)),
        (Phase::Test, p.test_defects.as_deref()),
    ];
    for (phase, defects) in sections {
        let Some(defects) = defects else { continue };
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut reported: BTreeSet<&str> = BTreeSet::new();
        for d in defects {
            if d.id.is_empty() {
                push(
                    ViolationCode::EMPTY_ID,
                    "",
                    format!("{phase} defect id is empty"),
                );
            }
            if !seen.insert(&d.id) && reported.insert(&d.id) {
                push(
                    ViolationCode::DUPLICATE_DEFECT_ID,
                    &d.id,
                    format!("{phase} defect id {:?} used more than once", d.id),
                );
            }
            if d.phase != phase {
                push(
                    ViolationCode::PHASE_MISMATCH,
                    &d.id,
                    format!("defect with phase {} listed under {phase} defects", d.phase),
                );
            }
            match units.get(d.unit_id.as_str()) {
                None => push(
                    ViolationCode::DANGLING_UNIT_REF,
                    &d.unit_id,
                    format!("{phase} defect {:?} references unknown unit", d.id),
                ),
                Some(u) if phase == Phase::Inspection && !u.inspected => push(
                    ViolationCode::UNINSPECTED_DEFECT_UNIT,
                    &d.id,
                    format!("inspection defect on uninspected unit {:?}", u.id),
                ),
                Some(_) => {}
            }
        }
    }

    if let Some(effort) = &p.test_effort {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut reported: BTreeSet<&str> = BTreeSet::new();
        for e in effort {
            if !seen.insert(&e.unit_id) && reported.insert(&e.unit_id) {
                push(
                    ViolationCode::DUPLICATE_EFFORT_RECORD,
                    &e.unit_id,
                    String::from("more than one test effort record for unit"),
                );
            }
            if !(e.effort_minutes.is_finite() && e.effort_minutes > 0.0) {
                push(
                    ViolationCode::INVALID_NUMBER,
                    &e.unit_id,
                    format!(
                        "effort_minutes {} is not a positive number",
                        e.effort_minutes
                    ),
                );
            }
            if !units.contains_key(e.unit_id.as_str()) {
                push(
                    ViolationCode::DANGLING_UNIT_REF,
                    &e.unit_id,
                    String::from("test effort record references unknown unit"),
                );
            }
        }
    }

    if p.test_defects.is_some() != p.test_effort.is_some() {
        let (present, missing) = if p.test_defects.is_some() {
            ("test_defects", "test_effort")
        } else {
            ("test_effort", "test_defects")
        };
        push(
            ViolationCode::INCOMPLETE_TEST_BUNDLE,
            missing,
            format!("{present} present without {missing}"),
        );
    }

    out.sort_by(|a, b| {
        a.code
            .as_str()
            .cmp(b.code.as_str())
            .then_with(|| a.id.cmp(&b.id))
            .then_with(|| a.message.cmp(&b.message))
    });
    ValidationReport { violations: out }
}
