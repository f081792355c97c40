//! Project bundles, rule lists and report output.
//!
//! A project bundle is one JSON document per QA run:
//!
//! ```json
//! { "run_id": "...", "context": {"project": "..."},
//!   "units": [{"id": "c1", "name": "...", "size_loc": 120, "complexity": 7,
//!              "inspected": true, "inspection_effort_minutes": 15}],
//!   "inspection_defects": [{"id": "d1", "unit_id": "c1", "severity": "major"}],
//!   "historical_defects": [...], "test_defects": [...],
//!   "test_effort": [{"unit_id": "c1", "effort_minutes": 30}] }
//! ```
//!
//! Reports are written with stable key order and every floating point value
//! fixed at 4 fractional digits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io;

use infocus_core::{
    validate_project, CodeUnit, ContextProfile, DefectProfile, DefectRecord, EvaluationReport,
    GateReport, GridSpec, Phase, Prioritization, ProjectData, RankingTable, Severity,
    TestEffortRecord, ValidationReport, ViolationCode,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatErrorKind {
    Syntax,
    Schema,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} error at {location}: {message}")]
pub struct FormatError {
    pub kind: FormatErrorKind,
    pub location: String,
    pub message: String,
}

impl FormatError {
    fn new(kind: FormatErrorKind, location: impl Into<String>, message: impl Into<String>) -> Self {
        let location = location.into();
        Self {
            kind,
            location: if location.is_empty() {
                "document".into()
            } else {
                location
            },
            message: message.into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectDoc {
    run_id: String,
    context: BTreeMap<String, String>,
    units: Vec<UnitDoc>,
    inspection_defects: Vec<DefectDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    historical_defects: Option<Vec<DefectDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    test_defects: Option<Vec<DefectDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    test_effort: Option<Vec<EffortDoc>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitDoc {
    id: String,
    name: String,
    size_loc: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    complexity: Option<f64>,
    inspected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inspection_effort_minutes: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefectDoc {
    id: String,
    unit_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    severity: Option<Severity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    defect_type: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffortDoc {
    unit_id: String,
    effort_minutes: f64,
}

fn defects(docs: Vec<DefectDoc>, phase: Phase) -> Vec<DefectRecord> {
    docs.into_iter()
        .map(|d| DefectRecord {
            id: d.id,
            unit_id: d.unit_id,
            phase,
            severity: d.severity,
            defect_type: d.defect_type,
        })
        .collect()
}

fn defect_docs(records: &[DefectRecord]) -> Vec<DefectDoc> {
    records
        .iter()
        .map(|d| DefectDoc {
            id: d.id.clone(),
            unit_id: d.unit_id.clone(),
            severity: d.severity,
            defect_type: d.defect_type.clone(),
        })
        .collect()
}

impl From<ProjectDoc> for ProjectData {
    fn from(doc: ProjectDoc) -> Self {
        ProjectData {
            run_id: doc.run_id,
            context: ContextProfile {
                factors: doc.context,
            },
            units: doc
                .units
                .into_iter()
                .map(|u| CodeUnit {
                    id: u.id,
                    name: u.name,
                    size_loc: u.size_loc,
                    complexity: u.complexity,
                    inspected: u.inspected,
                    inspection_effort_minutes: u.inspection_effort_minutes,
                })
                .collect(),
            inspection_defects: defects(doc.inspection_defects, Phase::Inspection),
            historical_defects: defects(
                doc.historical_defects.unwrap_or_default(),
                Phase::Historical,
            ),
            test_defects: doc.test_defects.map(|d| defects(d, Phase::Test)),
            test_effort: doc.test_effort.map(|e| {
                e.into_iter()
                    .map(|e| TestEffortRecord {
                        unit_id: e.unit_id,
                        effort_minutes: e.effort_minutes,
                    })
                    .collect()
            }),
        }
    }
}

impl From<&ProjectData> for ProjectDoc {
    fn from(p: &ProjectData) -> Self {
        ProjectDoc {
            run_id: p.run_id.clone(),
            context: p.context.factors.clone(),
            units: p
                .units
                .iter()
                .map(|u| UnitDoc {
                    id: u.id.clone(),
                    name: u.name.clone(),
                    size_loc: u.size_loc,
                    complexity: u.complexity,
                    inspected: u.inspected,
                    inspection_effort_minutes: u.inspection_effort_minutes,
                })
                .collect(),
            inspection_defects: defect_docs(&p.inspection_defects),
            historical_defects: (!p.historical_defects.is_empty())
                .then(|| defect_docs(&p.historical_defects)),
            test_defects: p.test_defects.as_deref().map(defect_docs),
            test_effort: p.test_effort.as_ref().map(|e| {
                e.iter()
                    .map(|e| EffortDoc {
                        unit_id: e.unit_id.clone(),
                        effort_minutes: e.effort_minutes,
                    })
                    .collect()
            }),
        }
    }
}

fn json_error(e: serde_json::Error) -> FormatError {
    use serde_json::error::Category;
    let kind = match e.classify() {
        Category::Data => FormatErrorKind::Schema,
        Category::Io | Category::Syntax | Category::Eof => FormatErrorKind::Syntax,
    };
    let location = if e.line() == 0 {
        String::new()
    } else {
        format!("line {}, column {}", e.line(), e.column())
    };
    FormatError::new(kind, location, e.to_string())
}

/// Parses a bundle without checking cross-references. `validate` uses this so
/// it can report every violation instead of the first.
pub fn load_project_unchecked(bytes: &[u8]) -> Result<ProjectData, FormatError> {
    // well-formedness first, so `[1,]` is a syntax error rather than a type one
    serde_json::from_slice::<serde::de::IgnoredAny>(bytes).map_err(json_error)?;
    let doc: ProjectDoc = serde_json::from_slice(bytes).map_err(json_error)?;
    Ok(doc.into())
}

/// Parses and validates a project bundle.
pub fn load_project(bytes: &[u8]) -> Result<ProjectData, FormatError> {
    let p = load_project_unchecked(bytes)?;
    validation_error(&validate_project(&p)).map_or(Ok(p), Err)
}

fn validation_error(report: &ValidationReport) -> Option<FormatError> {
    let first = report.violations.first()?;
    let kind = if report.has(ViolationCode::DANGLING_UNIT_REF) {
        FormatErrorKind::Reference
    } else {
        FormatErrorKind::Schema
    };
    let message = report
        .violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    Some(FormatError::new(
        kind,
        format!("{} {}", first.code, first.id),
        message,
    ))
}

/// Serializes a project in the bundle format. Absent optional sections stay
/// absent.
pub fn write_project(p: &ProjectData) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&ProjectDoc::from(p)).expect("project serializes");
    out.push(b'\n');
    out
}

/// Parses `name: rule` lines. Blank lines and `#` comments are skipped.
pub fn load_rules_file(text: &str) -> Result<Vec<(String, String)>, FormatError> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut names = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let location = format!("line {}", i + 1);
        let Some((name, rule)) = line.split_once(':') else {
            return Err(FormatError::new(
                FormatErrorKind::Syntax,
                location,
                "expected `name: rule`",
            ));
        };
        let (name, rule) = (name.trim(), rule.trim());
        if name.is_empty() {
            return Err(FormatError::new(
                FormatErrorKind::Schema,
                location,
                "empty rule name",
            ));
        }
        if !names.insert(name.to_string()) {
            return Err(FormatError::new(
                FormatErrorKind::Schema,
                location,
                format!("duplicate rule name {name:?}"),
            ));
        }
        out.push((name.into(), rule.into()));
    }
    Ok(out)
}

/// Reads a rule grid from TOML:
///
/// ```toml
/// metrics = ["dc", "dd"]
/// top_ks = [1, 2, 3]
/// pareto_ps = [0.8]
/// fracmax_fs = [0.5]
/// threshold_specs = [[">=", 20.0]]
/// ```
pub fn load_grid_spec(text: &str) -> Result<GridSpec, FormatError> {
    toml::from_str(text).map_err(|e: toml::de::Error| {
        let location = e
            .span()
            .map(|s| format!("byte {}", s.start))
            .unwrap_or_default();
        FormatError::new(FormatErrorKind::Schema, location, e.message())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Gate(&'a GateReport),
    Profile(&'a DefectProfile),
    /// Several profiles in one document (one CSV table, one JSON array).
    Profiles(&'a [DefectProfile]),
    Prioritization(&'a Prioritization),
    Prioritizations(&'a [Prioritization]),
    Evaluation(&'a EvaluationReport),
    Ranking(&'a RankingTable),
    Validation(&'a ValidationReport),
}

impl Report<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Report::Gate(_) => "gate report",
            Report::Profile(_) | Report::Profiles(_) => "profile",
            Report::Prioritization(_) | Report::Prioritizations(_) => "prioritization",
            Report::Evaluation(_) => "evaluation report",
            Report::Ranking(_) => "ranking table",
            Report::Validation(_) => "validation report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{format:?} output is not defined for a {report}")]
pub struct UnsupportedFormat {
    pub report: &'static str,
    pub format: ReportFormat,
}

/// JSON formatter that prints floats with exactly 4 fractional digits.
struct FixedFloats(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.4}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{value:.4}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        FixedFloats(serde_json::ser::PrettyFormatter::new()),
    );
    value.serialize(&mut ser).expect("report serializes");
    out.push(b'\n');
    out
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn profiles_csv(profiles: &[DefectProfile]) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(["unit_id", "metric", "value"]).unwrap();
    for p in profiles {
        for (unit, v) in &p.values {
            w.write_record([unit.as_str(), p.metric_id.as_str(), &format!("{v:.4}")])
                .unwrap();
        }
    }
    w.into_inner().expect("in-memory writer")
}

fn ranking_csv(table: &RankingTable) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record([
        "rule_name",
        "effectiveness_ratio",
        "effort_reduction",
        "efficiency_improvement",
    ])
    .unwrap();
    for r in &table.rows {
        w.write_record([
            r.rule_name.as_str(),
            &format!("{:.4}", r.effectiveness_ratio),
            &format!("{:.4}", r.effort_reduction),
            &format!("{:.4}", r.efficiency_improvement),
        ])
        .unwrap();
    }
    w.into_inner().expect("in-memory writer")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.4}"))
}

fn text(report: &Report<'_>) -> String {
    let mut s = String::new();
    match report {
        Report::Gate(g) => {
            let verdict = if g.passed { "PASSED" } else { "FAILED" };
            writeln!(s, "gate: {verdict}").unwrap();
            for c in &g.checks {
                writeln!(
                    s,
                    "  {:<13} {:>12}  {}  {}",
                    c.check_id.to_string(),
                    fmt_opt(c.measured_value),
                    c.threshold_description,
                    if c.passed { "ok" } else { "FAIL" }
                )
                .unwrap();
            }
        }
        Report::Profile(p) => text_profile(&mut s, p),
        Report::Profiles(ps) => {
            for p in *ps {
                text_profile(&mut s, p);
            }
        }
        Report::Prioritization(p) => text_prioritization(&mut s, p),
        Report::Prioritizations(ps) => {
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    s.push('\n');
                }
                text_prioritization(&mut s, p);
            }
        }
        Report::Evaluation(r) => {
            writeln!(s, "rule: {}", r.rule_source).unwrap();
            writeln!(s, "total_test_defects: {}", r.total_test_defects).unwrap();
            writeln!(s, "found_in_selected: {}", r.found_in_selected).unwrap();
            writeln!(s, "effectiveness_ratio: {:.4}", r.effectiveness_ratio).unwrap();
            writeln!(s, "total_effort_minutes: {:.4}", r.total_effort_minutes).unwrap();
            writeln!(
                s,
                "selected_effort_minutes: {:.4}",
                r.selected_effort_minutes
            )
            .unwrap();
            writeln!(s, "effort_reduction: {:.4}", r.effort_reduction).unwrap();
            writeln!(s, "efficiency_full: {:.4}", r.efficiency_full).unwrap();
            writeln!(s, "efficiency_focused: {}", fmt_opt(r.efficiency_focused)).unwrap();
            writeln!(s, "efficiency_improvement: {:.4}", r.efficiency_improvement).unwrap();
        }
        Report::Ranking(t) => {
            let width = t
                .rows
                .iter()
                .map(|r| r.rule_name.len())
                .max()
                .unwrap_or(4)
                .max(4);
            writeln!(
                s,
                "{:>4}  {:<width$}  {:>13}  {:>16}  {:>22}",
                "rank", "rule", "effectiveness", "effort_reduction", "efficiency_improvement"
            )
            .unwrap();
            for (i, r) in t.rows.iter().enumerate() {
                writeln!(
                    s,
                    "{:>4}  {:<width$}  {:>13.4}  {:>16.4}  {:>22.4}",
                    i + 1,
                    r.rule_name,
                    r.effectiveness_ratio,
                    r.effort_reduction,
                    r.efficiency_improvement
                )
                .unwrap();
            }
        }
        Report::Validation(v) => {
            if v.is_empty() {
                s.push_str("valid: no violations\n");
            } else {
                writeln!(s, "invalid: {} violation(s)", v.violations.len()).unwrap();
                for violation in &v.violations {
                    writeln!(s, "  {violation}").unwrap();
                }
            }
        }
    }
    s
}

fn text_profile(s: &mut String, p: &DefectProfile) {
    writeln!(s, "profile {} ({})", p.metric_id, p.domain_note).unwrap();
    for (unit, v) in &p.values {
        writeln!(s, "  {unit:<16} {v:>12.4}").unwrap();
    }
}

fn text_prioritization(s: &mut String, p: &Prioritization) {
    writeln!(s, "rule: {}", p.rule_source).unwrap();
    writeln!(s, "validity: {}", p.validity_at_evaluation).unwrap();
    writeln!(s, "selected: {}", p.selected.join(", ")).unwrap();
    writeln!(s, "ranking:").unwrap();
    for (i, r) in p.ranking.iter().enumerate() {
        let mark = if p.is_selected(&r.unit_id) { " *" } else { "" };
        writeln!(
            s,
            "  {:>3}. {:<16} {:>12.4}{mark}",
            i + 1,
            r.unit_id,
            r.score
        )
        .unwrap();
    }
}

/// Renders a report. CSV exists only for profiles and ranking tables.
pub fn write_report(
    report: Report<'_>,
    format: ReportFormat,
) -> Result<Vec<u8>, UnsupportedFormat> {
    let unsupported = || UnsupportedFormat {
        report: report.kind(),
        format,
    };
    Ok(match format {
        ReportFormat::Json => match report {
            Report::Gate(r) => to_json(r),
            Report::Profile(r) => to_json(r),
            Report::Profiles(r) => to_json(r),
            Report::Prioritization(r) => to_json(r),
            Report::Prioritizations(r) => to_json(r),
            Report::Evaluation(r) => to_json(r),
            Report::Ranking(r) => to_json(r),
            Report::Validation(r) => to_json(r),
        },
        ReportFormat::Csv => match report {
            Report::Profile(p) => profiles_csv(std::slice::from_ref(p)),
            Report::Profiles(ps) => profiles_csv(ps),
            Report::Ranking(t) => ranking_csv(t),
            _ => return Err(unsupported()),
        },
        ReportFormat::Text => text(&report).into_bytes(),
    })
}
