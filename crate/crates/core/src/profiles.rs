//! Defect profiles: per-unit metric values consumed by selection rules.
//!
//! Built-in metric ids:
//!
//! | id    | meaning                                                     |
//! |-------|-------------------------------------------------------------|
//! | `dc`  | defect content, inspection defects per unit                 |
//! | `dd`  | defect density, inspection defects per KLOC                 |
//! | `loc` | size in lines of code                                       |
//! | `cx`  | complexity as recorded on the unit                          |
//! | `hd`  | historical defects per unit                                 |
//! | `est` | inspection defects, extrapolated to uninspected units       |
//!
//! Further ids are declared through [`CombineSpec`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{DefectRecord, ProjectData};

pub const BUILTIN_METRICS: [&str; 6] = ["dc", "dd", "loc", "cx", "hd", "est"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("metric {metric} missing on unit {unit_id}")]
    MissingMetric { metric: String, unit_id: String },
    #[error("no inspected units to estimate from")]
    NoInspectedUnits,
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("profile {metric} has no value for unit {unit_id}")]
    IncompleteProfile { metric: String, unit_id: String },
    #[error("invalid combined profile {id:?}: {reason}")]
    InvalidCombineSpec { id: String, reason: String },
}

/// A named mapping from unit id to metric value.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DefectProfile {
    pub metric_id: String,
    pub values: BTreeMap<String, f64>,
    pub domain_note: String,
}

impl DefectProfile {
    pub fn get(&self, unit_id: &str) -> Option<f64> {
        self.values.get(unit_id).copied()
    }

    /// Returns an error naming the first unit of `p` without a value.
    pub fn check_domain(&self, p: &ProjectData) -> Result<(), ProfileError> {
        check_domain(self, p.units.iter().map(|u| u.id.as_str()))
    }
}

fn check_domain<'a>(
    profile: &DefectProfile,
    mut ids: impl Iterator<Item = &'a str>,
) -> Result<(), ProfileError> {
    match ids.find(|id| !profile.values.contains_key(*id)) {
        Some(id) => Err(ProfileError::IncompleteProfile {
            metric: profile.metric_id.clone(),
            unit_id: String::from(id),
        }),
        None => Ok(()),
    }
}

fn counts(p: &ProjectData, defects: &[DefectRecord]) -> BTreeMap<String, f64> {
    let mut values: BTreeMap<String, f64> = p.units.iter().map(|u| (u.id.clone(), 0.0)).collect();
    for d in defects {
        if let Some(v) = values.get_mut(&d.unit_id) {
            *v += 1.0;
        }
    }
    values
}

/// Inspection defects per unit; uninspected units get 0.
pub fn defect_content(p: &ProjectData) -> DefectProfile {
    DefectProfile {
        metric_id: "dc".into(),
        values: counts(p, &p.inspection_defects),
        domain_note: "all units; uninspected units count 0".into(),
    }
}

/// Inspection defects per KLOC.
pub fn defect_density(p: &ProjectData) -> DefectProfile {
    let dc = counts(p, &p.inspection_defects);
    let values = p
        .units
        .iter()
        .map(|u| (u.id.clone(), dc[&u.id] / (u.size_loc as f64 / 1000.0)))
        .collect();
    DefectProfile {
        metric_id: "dd".into(),
        values,
        domain_note: "all units; defects per KLOC, uninspected units 0".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductMetric {
    Loc,
    Cx,
}

pub fn product_metric(
    p: &ProjectData,
    which: ProductMetric,
) -> Result<DefectProfile, ProfileError> {
    let (metric_id, domain_note) = match which {
        ProductMetric::Loc => ("loc", "all units; lines of code"),
        ProductMetric::Cx => ("cx", "all units; recorded complexity"),
    };
    let mut values = BTreeMap::new();
    for u in &p.units {
        let v = match which {
            ProductMetric::Loc => u.size_loc as f64,
            ProductMetric::Cx => u.complexity.ok_or_else(|| ProfileError::MissingMetric {
                metric: metric_id.into(),
                unit_id: u.id.clone(),
            })?,
        };
        values.insert(u.id.clone(), v);
    }
    Ok(DefectProfile {
        metric_id: metric_id.into(),
        values,
        domain_note: domain_note.into(),
    })
}

pub fn historical_metric(p: &ProjectData) -> DefectProfile {
    DefectProfile {
        metric_id: "hd".into(),
        values: counts(p, &p.historical_defects),
        domain_note: "all units; historical defects, 0 when none recorded".into(),
    }
}

/// Inspected units keep their defect content; uninspected units get the
/// pooled density of the inspected ones times their size.
pub fn estimate_defects(p: &ProjectData) -> Result<DefectProfile, ProfileError> {
    let dc = counts(p, &p.inspection_defects);
    let inspected: Vec<_> = p.units.iter().filter(|u| u.inspected).collect();
    if inspected.is_empty() {
        return Err(ProfileError::NoInspectedUnits);
    }
    let defects: f64 = inspected.iter().map(|u| dc[&u.id]).sum();
    let kloc: f64 = inspected.iter().map(|u| u.size_loc as f64 / 1000.0).sum();
    let pooled = defects / kloc;
    let values = p
        .units
        .iter()
        .map(|u| {
            let v = if u.inspected {
                dc[&u.id]
            } else {
                pooled * (u.size_loc as f64 / 1000.0)
            };
            (u.id.clone(), v)
        })
        .collect();
    Ok(DefectProfile {
        metric_id: "est".into(),
        values,
        domain_note: format!("all units; uninspected units extrapolated at {pooled} defects/KLOC"),
    })
}

/// A weighted sum of min-max normalized profiles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CombineSpec {
    pub id: String,
    pub terms: Vec<(String, f64)>,
}

impl CombineSpec {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            terms: Vec::new(),
        }
    }

    pub fn term(mut self, metric: impl Into<String>, weight: f64) -> Self {
        self.terms.push((metric.into(), weight));
        self
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let invalid = |reason: &str| ProfileError::InvalidCombineSpec {
            id: self.id.clone(),
            reason: reason.into(),
        };
        if !is_identifier(&self.id) {
            return Err(invalid("id is not an identifier"));
        }
        if BUILTIN_METRICS.contains(&self.id.as_str()) {
            return Err(invalid("id shadows a built-in metric"));
        }
        if self.terms.is_empty() {
            return Err(invalid("no terms"));
        }
        if self.terms.iter().any(|(_, w)| !w.is_finite()) {
            return Err(invalid("weights must be finite"));
        }
        Ok(())
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn normalized(profile: &DefectProfile, ids: &[&str]) -> Vec<f64> {
    let raw: Vec<f64> = ids.iter().map(|id| profile.values[*id]).collect();
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span.is_nan() || span <= 0.0 {
        return alloc::vec![0.0; raw.len()];
    }
    raw.iter().map(|v| (v - min) / span).collect()
}

pub fn combine(
    p: &ProjectData,
    spec: &CombineSpec,
    base: &ProfileSet,
) -> Result<DefectProfile, ProfileError> {
    spec.validate()?;
    let ids: Vec<&str> = p.units.iter().map(|u| u.id.as_str()).collect();
    let mut values: Vec<f64> = alloc::vec![0.0; ids.len()];
    for (metric, weight) in &spec.terms {
        let profile = base
            .get(metric)
            .ok_or_else(|| ProfileError::UnknownMetric(metric.clone()))?;
        check_domain(profile, ids.iter().copied())?;
        for (acc, n) in values.iter_mut().zip(normalized(profile, &ids)) {
            *acc += weight * n;
        }
    }
    let mut note = String::from("all units; min-max normalized");
    for (metric, weight) in &spec.terms {
        note.push_str(&format!(" {weight}*{metric}"));
    }
    Ok(DefectProfile {
        metric_id: spec.id.clone(),
        values: ids.iter().map(|id| String::from(*id)).zip(values).collect(),
        domain_note: note,
    })
}

/// Computes one of the built-in metrics.
pub fn compute_builtin(p: &ProjectData, metric: &str) -> Result<DefectProfile, ProfileError> {
    match metric {
        "dc" => Ok(defect_content(p)),
        "dd" => Ok(defect_density(p)),
        "loc" => product_metric(p, ProductMetric::Loc),
        "cx" => product_metric(p, ProductMetric::Cx),
        "hd" => Ok(historical_metric(p)),
        "est" => estimate_defects(p),
        other => Err(ProfileError::UnknownMetric(other.into())),
    }
}

/// Profiles keyed by metric id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSet {
    profiles: BTreeMap<String, DefectProfile>,
}

impl ProfileSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every built-in metric the project can support, plus the declared
    /// combinations. `cx` is left out when complexity is missing anywhere and
    /// `est` when nothing was inspected; combinations over those fail.
    pub fn for_project(p: &ProjectData, combined: &[CombineSpec]) -> Result<Self, ProfileError> {
        let mut set = Self::new();
        for metric in BUILTIN_METRICS {
            match compute_builtin(p, metric) {
                Ok(profile) => set.insert(profile),
                Err(ProfileError::MissingMetric { .. } | ProfileError::NoInspectedUnits) => {}
                Err(e) => return Err(e),
            }
        }
        for spec in combined {
            let profile = combine(p, spec, &set)?;
            set.insert(profile);
        }
        Ok(set)
    }

    pub fn insert(&mut self, profile: DefectProfile) {
        self.profiles.insert(profile.metric_id.clone(), profile);
    }

    pub fn get(&self, metric: &str) -> Option<&DefectProfile> {
        self.profiles.get(metric)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DefectProfile> {
        self.profiles.values()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

impl FromIterator<DefectProfile> for ProfileSet {
    fn from_iter<I: IntoIterator<Item = DefectProfile>>(iter: I) -> Self {
        let mut set = Self::new();
        for p in iter {
            set.insert(p);
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CodeUnit, Phase};
    use alloc::vec;

    fn project(units: Vec<CodeUnit>, inspection: &[&str]) -> ProjectData {
        ProjectData {
            run_id: "r".into(),
            units,
            inspection_defects: inspection
                .iter()
                .enumerate()
                .map(|(i, u)| DefectRecord::new(format!("d{i}"), *u, Phase::Inspection))
                .collect(),
            ..Default::default()
        }
    }

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (String::from(*k), *v)).collect()
    }

    #[test]
    fn dc_counts() {
        let p = project(
            vec![
                CodeUnit::new("A", 10).inspected(1.0),
                CodeUnit::new("B", 10).inspected(1.0),
            ],
            &["A", "A", "A"],
        );
        assert_eq!(defect_content(&p).values, map(&[("A", 3.0), ("B", 0.0)]));
        let empty = project(vec![CodeUnit::new("A", 10)], &[]);
        assert_eq!(defect_content(&empty).values, map(&[("A", 0.0)]));
    }

    #[test]
    fn dc_spread_sums_to_total() {
        let units = ["A", "B", "C", "D"]
            .iter()
            .map(|id| CodeUnit::new(*id, 100).inspected(10.0))
            .collect();
        let p = project(units, &["A", "A", "A", "A", "A", "B", "B", "B", "C", "D"]);
        let dc = defect_content(&p);
        assert_eq!(
            dc.values,
            map(&[("A", 5.0), ("B", 3.0), ("C", 1.0), ("D", 1.0)])
        );
        assert_eq!(dc.values.values().sum::<f64>(), 10.0);
    }

    #[test]
    fn dd_per_kloc() {
        let p = project(
            vec![
                CodeUnit::new("A", 100).inspected(1.0),
                CodeUnit::new("B", 1000).inspected(1.0),
                CodeUnit::new("C", 77).inspected(1.0),
            ],
            &["A", "A", "B", "B"],
        );
        let dd = defect_density(&p);
        assert_eq!(dd.values, map(&[("A", 20.0), ("B", 2.0), ("C", 0.0)]));

        let p = project(vec![CodeUnit::new("A", 100).inspected(1.0)], &["A"; 4]);
        assert_eq!(defect_density(&p).get("A"), Some(40.0));
    }

    #[test]
    fn product_metrics() {
        let p = project(
            vec![
                CodeUnit::new("A", 100).with_complexity(7.0),
                CodeUnit::new("B", 200).with_complexity(3.0),
            ],
            &[],
        );
        assert_eq!(
            product_metric(&p, ProductMetric::Loc).unwrap().values,
            map(&[("A", 100.0), ("B", 200.0)])
        );
        assert_eq!(
            product_metric(&p, ProductMetric::Cx).unwrap().values,
            map(&[("A", 7.0), ("B", 3.0)])
        );
        let p = project(
            vec![
                CodeUnit::new("A", 100).with_complexity(7.0),
                CodeUnit::new("B", 1),
            ],
            &[],
        );
        assert_eq!(
            product_metric(&p, ProductMetric::Cx),
            Err(ProfileError::MissingMetric {
                metric: "cx".into(),
                unit_id: "B".into()
            })
        );
    }

    #[test]
    fn historical_counts() {
        let mut p = project(vec![CodeUnit::new("A", 1), CodeUnit::new("B", 1)], &[]);
        assert_eq!(historical_metric(&p).values, map(&[("A", 0.0), ("B", 0.0)]));
        p.historical_defects = vec![
            DefectRecord::new("h1", "A", Phase::Historical),
            DefectRecord::new("h2", "A", Phase::Historical),
        ];
        assert_eq!(historical_metric(&p).values, map(&[("A", 2.0), ("B", 0.0)]));
    }

    #[test]
    fn estimation() {
        let p = project(
            vec![
                CodeUnit::new("A", 100).inspected(5.0),
                CodeUnit::new("B", 200),
            ],
            &["A"; 4],
        );
        let est = estimate_defects(&p).unwrap();
        assert_eq!(est.values, map(&[("A", 4.0), ("B", 8.0)]));

        let all = project(
            vec![
                CodeUnit::new("A", 100).inspected(5.0),
                CodeUnit::new("B", 200).inspected(5.0),
            ],
            &["A", "B", "B"],
        );
        assert_eq!(
            estimate_defects(&all).unwrap().values,
            defect_content(&all).values
        );

        let clean = project(
            vec![
                CodeUnit::new("A", 100).inspected(5.0),
                CodeUnit::new("B", 200),
            ],
            &[],
        );
        assert_eq!(estimate_defects(&clean).unwrap().get("B"), Some(0.0));

        let none = project(vec![CodeUnit::new("A", 100)], &[]);
        assert_eq!(estimate_defects(&none), Err(ProfileError::NoInspectedUnits));
    }

    fn abc() -> ProjectData {
        project(
            vec![
                CodeUnit::new("A", 1).inspected(1.0),
                CodeUnit::new("B", 1).inspected(1.0),
                CodeUnit::new("C", 1).inspected(1.0),
            ],
            &[],
        )
    }

    fn profile(metric: &str, pairs: &[(&str, f64)]) -> DefectProfile {
        DefectProfile {
            metric_id: metric.into(),
            values: map(pairs),
            domain_note: String::new(),
        }
    }

    #[test]
    fn combine_min_max() {
        let base: ProfileSet = [
            profile("dc", &[("A", 5.0), ("B", 3.0), ("C", 1.0)]),
            profile("cx", &[("A", 10.0), ("B", 0.0), ("C", 5.0)]),
            profile("flat", &[("A", 2.0), ("B", 2.0), ("C", 2.0)]),
        ]
        .into_iter()
        .collect();
        let spec = CombineSpec::new("risk").term("dc", 1.0).term("cx", 1.0);
        let c = combine(&abc(), &spec, &base).unwrap();
        assert_eq!(c.values, map(&[("A", 2.0), ("B", 0.5), ("C", 0.5)]));

        let flat = CombineSpec::new("f").term("flat", 3.0);
        let c = combine(&abc(), &flat, &base).unwrap();
        assert!(c.values.values().all(|v| *v == 0.0));

        let unknown = CombineSpec::new("u").term("zz", 1.0);
        assert_eq!(
            combine(&abc(), &unknown, &base),
            Err(ProfileError::UnknownMetric("zz".into()))
        );
    }

    #[test]
    fn combine_spec_validation() {
        assert!(CombineSpec::new("x").validate().is_err());
        assert!(CombineSpec::new("dc").term("dd", 1.0).validate().is_err());
        assert!(CombineSpec::new("x")
            .term("dd", f64::NAN)
            .validate()
            .is_err());
        assert!(CombineSpec::new("9x").term("dd", 1.0).validate().is_err());
        assert!(CombineSpec::new("risk_2")
            .term("dd", 1.0)
            .validate()
            .is_ok());
    }

    #[test]
    fn profile_set_skips_unsupported_builtins() {
        let p = project(vec![CodeUnit::new("A", 10)], &[]);
        let set = ProfileSet::for_project(&p, &[]).unwrap();
        assert!(set.get("cx").is_none());
        assert!(set.get("est").is_none());
        assert_eq!(set.len(), 4);
        let combined = [CombineSpec::new("x").term("cx", 1.0)];
        assert!(ProfileSet::for_project(&p, &combined).is_err());
    }
}
