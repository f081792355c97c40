//! Selection rules: a small expression language over defect profiles that
//! turns an assumption ("units with many inspection defects will have many
//! test defects") into a concrete set of units to test.
//!
//! ```text
//! rule   := expr
//! expr   := term { "|" term }
//! term   := atom { ("&" | "-") atom }
//! atom   := func | "(" expr ")"
//! func   := "top" "(" metric "," int ")"
//!         | "pareto" "(" metric "," float ")"
//!         | "threshold" "(" metric "," cmp "," float ")"
//!         | "fracmax" "(" metric "," float ")"
//!         | "all" "(" ")" | "none" "(" ")"
//! cmp    := ">=" | ">" | "<=" | "<"
//! ```
//!
//! Also home to the validity ledger, which counts how often an assumption's
//! rule met the success criterion in a given context.

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use thiserror::Error;

mod eval;
mod grid;
mod ledger;
mod parser;

pub use eval::{evaluate_rule, Prioritization, RankedUnit};
pub use grid::{generate_rule_grid, GridSpec};
pub use ledger::{get_validity, record_outcome, LedgerEntry, ValidityLedger};
pub use parser::{parse_rule, render_rule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("profile {metric} has no value for unit {unit_id}")]
    IncompleteProfile { metric: String, unit_id: String },
    #[error("no units to prioritize")]
    EmptyUnitList,
    #[error("outcome already recorded for assumption {assumption_id:?}, run {run_id:?} in context {context_key:?}")]
    DuplicateOutcome {
        context_key: String,
        assumption_id: String,
        run_id: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Cmp {
    #[cfg_attr(feature = "serde", serde(rename = ">="))]
    Ge,
    #[cfg_attr(feature = "serde", serde(rename = ">"))]
    Gt,
    #[cfg_attr(feature = "serde", serde(rename = "<="))]
    Le,
    #[cfg_attr(feature = "serde", serde(rename = "<"))]
    Lt,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Le => "<=",
            Cmp::Lt => "<",
        }
    }

    /// Short name used in generated rule names.
    pub fn mnemonic(self) -> &'static str {
        match self {
            Cmp::Ge => "ge",
            Cmp::Gt => "gt",
            Cmp::Le => "le",
            Cmp::Lt => "lt",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Cmp::Ge => lhs >= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Lt => lhs < rhs,
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            ">=" => Some(Cmp::Ge),
            ">" => Some(Cmp::Gt),
            "<=" => Some(Cmp::Le),
            "<" => Some(Cmp::Lt),
            _ => None,
        }
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// The `k` highest-scoring units.
    Top {
        metric: String,
        k: u32,
    },
    /// Shortest prefix of the ranking holding at least `share` of the total.
    Pareto {
        metric: String,
        share: f64,
    },
    Threshold {
        metric: String,
        cmp: Cmp,
        value: f64,
    },
    /// Units scoring at least `fraction` of the maximum.
    FracMax {
        metric: String,
        fraction: f64,
    },
    All,
    None,
    Union(Box<Expr>, Box<Expr>),
    Intersect(Box<Expr>, Box<Expr>),
    Difference(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn top(metric: impl Into<String>, k: u32) -> Self {
        Expr::Top {
            metric: metric.into(),
            k,
        }
    }

    pub fn pareto(metric: impl Into<String>, share: f64) -> Self {
        Expr::Pareto {
            metric: metric.into(),
            share,
        }
    }

    pub fn threshold(metric: impl Into<String>, cmp: Cmp, value: f64) -> Self {
        Expr::Threshold {
            metric: metric.into(),
            cmp,
            value,
        }
    }

    pub fn fracmax(metric: impl Into<String>, fraction: f64) -> Self {
        Expr::FracMax {
            metric: metric.into(),
            fraction,
        }
    }

    pub fn union(self, rhs: Expr) -> Self {
        Expr::Union(Box::new(self), Box::new(rhs))
    }

    pub fn intersect(self, rhs: Expr) -> Self {
        Expr::Intersect(Box::new(self), Box::new(rhs))
    }

    pub fn difference(self, rhs: Expr) -> Self {
        Expr::Difference(Box::new(self), Box::new(rhs))
    }

    /// The metric of the leftmost selector, if any.
    pub fn leftmost_metric(&self) -> Option<&str> {
        match self {
            Expr::Top { metric, .. }
            | Expr::Pareto { metric, .. }
            | Expr::Threshold { metric, .. }
            | Expr::FracMax { metric, .. } => Some(metric),
            Expr::All | Expr::None => None,
            Expr::Union(l, r) | Expr::Intersect(l, r) | Expr::Difference(l, r) => {
                l.leftmost_metric().or_else(|| r.leftmost_metric())
            }
        }
    }

    /// Calls `f` on every metric id, left to right.
    pub fn for_each_metric<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Top { metric, .. }
            | Expr::Pareto { metric, .. }
            | Expr::Threshold { metric, .. }
            | Expr::FracMax { metric, .. } => f(metric),
            Expr::All | Expr::None => {}
            Expr::Union(l, r) | Expr::Intersect(l, r) | Expr::Difference(l, r) => {
                l.for_each_metric(f);
                r.for_each_metric(f);
            }
        }
    }

    /// Checks parameter ranges and metric identifiers.
    pub fn check_domain(&self) -> Result<(), RuleError> {
        use alloc::format;
        let metric_ok = |m: &str| {
            if crate::profiles::is_identifier(m) {
                Ok(())
            } else {
                Err(RuleError::Domain(format!(
                    "{m:?} is not a metric identifier"
                )))
            }
        };
        match self {
            Expr::Top { metric, k } => {
                metric_ok(metric)?;
                if *k < 1 {
                    return Err(RuleError::Domain(format!("top: k must be >= 1, got {k}")));
                }
            }
            Expr::Pareto { metric, share } => {
                metric_ok(metric)?;
                if !(0.0..=1.0).contains(share) {
                    return Err(RuleError::Domain(format!(
                        "pareto: share must be in [0, 1], got {share}"
                    )));
                }
            }
            Expr::FracMax { metric, fraction } => {
                metric_ok(metric)?;
                if !(0.0..=1.0).contains(fraction) {
                    return Err(RuleError::Domain(format!(
                        "fracmax: fraction must be in [0, 1], got {fraction}"
                    )));
                }
            }
            Expr::Threshold { metric, value, .. } => {
                metric_ok(metric)?;
                if !value.is_finite() {
                    return Err(RuleError::Domain(format!(
                        "threshold: value must be finite, got {value}"
                    )));
                }
            }
            Expr::All | Expr::None => {}
            Expr::Union(l, r) | Expr::Intersect(l, r) | Expr::Difference(l, r) => {
                l.check_domain()?;
                r.check_domain()?;
            }
        }
        Ok(())
    }
}

/// A parsed rule. Equality is structural: the retained source text does not
/// take part in it.
#[derive(Debug, Clone)]
pub struct SelectionRule {
    pub source: String,
    pub ast: Expr,
}

impl SelectionRule {
    /// Wraps an expression, using its canonical rendering as source.
    pub fn from_expr(ast: Expr) -> Result<Self, RuleError> {
        ast.check_domain()?;
        let source = parser::render_expr(&ast);
        Ok(Self { source, ast })
    }
}

impl PartialEq for SelectionRule {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_rule(self))
    }
}

impl core::str::FromStr for SelectionRule {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rule(s)
    }
}

/// A hypothesis about where test defects concentrate, with the rule that
/// operationalizes it.
#[derive(Debug, Clone, PartialEq)]
pub struct Assumption {
    pub id: String,
    pub description: String,
    pub rule: SelectionRule,
}
