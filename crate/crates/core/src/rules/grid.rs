use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Cmp, Expr, RuleError, SelectionRule};

/// Parameter grid for bulk rule generation. Empty lists switch a family off.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GridSpec {
    pub metrics: Vec<String>,
    pub top_ks: Vec<u32>,
    pub pareto_ps: Vec<f64>,
    pub fracmax_fs: Vec<f64>,
    pub threshold_specs: Vec<(Cmp, f64)>,
}

/// Cross product of families, metrics and parameters, in that nesting order.
///
/// Names are `<family>_<metric>_<param>`; threshold params are written as
/// `<cmp mnemonic>_<value>`, e.g. `threshold_dd_ge_20`. A rule whose
/// canonical form was already generated is dropped.
pub fn generate_rule_grid(spec: &GridSpec) -> Result<Vec<(String, SelectionRule)>, RuleError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |name: String, expr: Expr| -> Result<(), RuleError> {
        let rule = SelectionRule::from_expr(expr)?;
        if seen.insert(rule.source.clone()) {
            out.push((name, rule));
        }
        Ok(())
    };
    for m in &spec.metrics {
        for k in &spec.top_ks {
            push(format!("top_{m}_{k}"), Expr::top(m.clone(), *k))?;
        }
    }
    for m in &spec.metrics {
        for p in &spec.pareto_ps {
            push(format!("pareto_{m}_{p}"), Expr::pareto(m.clone(), *p))?;
        }
    }
    for m in &spec.metrics {
        for f in &spec.fracmax_fs {
            push(format!("fracmax_{m}_{f}"), Expr::fracmax(m.clone(), *f))?;
        }
    }
    for m in &spec.metrics {
        for (cmp, t) in &spec.threshold_specs {
            push(
                format!("threshold_{m}_{}_{t}", cmp.mnemonic()),
                Expr::threshold(m.clone(), *cmp, *t),
            )?;
        }
    }
    Ok(out)
}
