//! CLI configuration: a flat list of dotted keys.
//!
//! ```toml
//! gate.min_inspection_coverage = 0.75
//! gate.reading_rate_min_loc_per_hour = 50
//! gate.reading_rate_max_loc_per_hour = 600
//! gate.min_total_inspection_defects = 1
//! criterion.min_effectiveness_ratio = 0.95
//! criterion.min_effort_reduction = 0.05
//! ledger.path = "ledger.json"
//! prioritize.min_validity = 1
//! combine.risk = "dc:1, cx:0.5"
//! ```

use std::path::PathBuf;

use infocus_core::{CombineSpec, GateConfig, SuccessCriterion};
use thiserror::Error;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliConfig {
    pub gate: GateConfig,
    pub combined: Vec<CombineSpec>,
    pub criterion: SuccessCriterion,
    pub ledger_path: Option<PathBuf>,
    pub min_validity: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("config key {key:?}: {reason}")]
    BadValue { key: String, reason: String },
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn number(key: &str, v: &toml::Value) -> Result<f64, ConfigError> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "expected a number")),
    }
}

fn count(key: &str, v: &toml::Value) -> Result<u64, ConfigError> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(bad(key, "expected a non-negative integer")),
    }
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Parses `metric:weight` terms separated by commas.
pub fn parse_combine_terms(id: &str, text: &str) -> Result<CombineSpec, String> {
    let mut spec = CombineSpec::new(id);
    for term in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (metric, weight) = term
            .split_once(':')
            .ok_or_else(|| format!("term {term:?} is not `metric:weight`"))?;
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|_| format!("weight {weight:?} is not a number"))?;
        spec = spec.term(metric.trim(), weight);
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        let mut entries = Vec::new();
        flatten("", &table, &mut entries);

        let mut cfg = CliConfig::default();
        for (key, value) in &entries {
            let k = key.as_str();
            match k {
                "gate.min_inspection_coverage" => {
                    cfg.gate.min_inspection_coverage = number(k, value)?
                }
                "gate.reading_rate_min_loc_per_hour" => {
                    cfg.gate.reading_rate_bounds.0 = number(k, value)?
                }
                "gate.reading_rate_max_loc_per_hour" => {
                    cfg.gate.reading_rate_bounds.1 = number(k, value)?
                }
                "gate.min_total_inspection_defects" => {
                    cfg.gate.min_total_inspection_defects = count(k, value)?
                }
                "criterion.min_effectiveness_ratio" => {
                    cfg.criterion.min_effectiveness_ratio = number(k, value)?
                }
                "criterion.min_effort_reduction" => {
                    cfg.criterion.min_effort_reduction = number(k, value)?
                }
                "ledger.path" => match value {
                    toml::Value::String(s) if !s.is_empty() => cfg.ledger_path = Some(s.into()),
                    _ => return Err(bad(k, "expected a non-empty path")),
                },
                "prioritize.min_validity" => {
                    let v = count(k, value)?;
                    cfg.min_validity = Some(u32::try_from(v).map_err(|_| bad(k, "too large"))?);
                }
                _ if k.starts_with("combine.") => {
                    let id = &k["combine.".len()..];
                    let toml::Value::String(text) = value else {
                        return Err(bad(k, "expected a string of `metric:weight` terms"));
                    };
                    cfg.combined
                        .push(parse_combine_terms(id, text).map_err(|r| bad(k, r))?);
                }
                _ => return Err(ConfigError::UnknownKey(key.clone())),
            }
        }
        if !cfg.gate.is_valid() {
            return Err(bad(
                "gate",
                "coverage must be in [0, 1] and reading rate bounds ordered",
            ));
        }
        if !cfg.criterion.is_valid() {
            return Err(bad("criterion", "thresholds must be in [0, 1]"));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_when_empty() {
        assert_eq!(CliConfig::parse("").unwrap(), CliConfig::default());
    }

    #[test]
    fn all_keys() {
        let cfg = CliConfig::parse(
            r#"
gate.min_inspection_coverage = 0.5
gate.reading_rate_min_loc_per_hour = 10
gate.reading_rate_max_loc_per_hour = 900.5
gate.min_total_inspection_defects = 3
criterion.min_effectiveness_ratio = 0.9
criterion.min_effort_reduction = 0.1
ledger.path = "l.json"
prioritize.min_validity = 2
combine.risk = "dc:1, cx:0.5"
"#,
        )
        .unwrap();
        assert_eq!(cfg.gate.min_inspection_coverage, 0.5);
        assert_eq!(cfg.gate.reading_rate_bounds, (10.0, 900.5));
        assert_eq!(cfg.gate.min_total_inspection_defects, 3);
        assert_eq!(cfg.criterion.min_effort_reduction, 0.1);
        assert_eq!(cfg.ledger_path, Some(PathBuf::from("l.json")));
        assert_eq!(cfg.min_validity, Some(2));
        assert_eq!(
            cfg.combined,
            vec![CombineSpec::new("risk").term("dc", 1.0).term("cx", 0.5)]
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            CliConfig::parse("gate.nope = 1"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            CliConfig::parse("gate.min_inspection_coverage = \"x\""),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(CliConfig::parse("gate.reading_rate_min_loc_per_hour = 700").is_err());
        assert!(CliConfig::parse("combine.dc = \"dd:1\"").is_err());
        assert!(matches!(
            CliConfig::parse("= ="),
            Err(ConfigError::Syntax(_))
        ));
    }
}
