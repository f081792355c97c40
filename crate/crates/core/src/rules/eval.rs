use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Expr, RuleError, SelectionRule};
use crate::model::CodeUnit;
use crate::num::rank_order;
use crate::profiles::{DefectProfile, ProfileSet};

/// Relative slack on the pareto target, absorbing rounding in `share * total`.
const PARETO_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedUnit {
    pub unit_id: String,
    pub score: f64,
}

/// Ranked units plus the subset chosen for focused testing.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prioritization {
    pub rule_source: String,
    /// Score descending, then unit id ascending. Covers every unit.
    pub ranking: Vec<RankedUnit>,
    /// In ranking order.
    pub selected: Vec<String>,
    pub validity_at_evaluation: u32,
}

impl Prioritization {
    pub fn is_selected(&self, unit_id: &str) -> bool {
        self.selected.iter().any(|s| s == unit_id)
    }
}

struct Ctx<'a> {
    profiles: &'a ProfileSet,
    ids: Vec<&'a str>,
}

impl<'a> Ctx<'a> {
    fn profile(&self, metric: &str) -> Result<&'a DefectProfile, RuleError> {
        self.profiles
            .get(metric)
            .ok_or_else(|| RuleError::UnknownMetric(metric.into()))
    }

    /// (id, value) sorted by value descending, id ascending.
    fn ranked(&self, metric: &str) -> Result<Vec<(&'a str, f64)>, RuleError> {
        let profile = self.profile(metric)?;
        let mut out = Vec::with_capacity(self.ids.len());
        for id in &self.ids {
            let v = profile
                .get(id)
                .ok_or_else(|| RuleError::IncompleteProfile {
                    metric: metric.into(),
                    unit_id: String::from(*id),
                })?;
            out.push((*id, v));
        }
        out.sort_by(|a, b| rank_order(a.1, a.0, b.1, b.0));
        Ok(out)
    }

    fn select(&self, e: &Expr) -> Result<BTreeSet<&'a str>, RuleError> {
        Ok(match e {
            Expr::Top { metric, k } => self
                .ranked(metric)?
                .into_iter()
                .take(*k as usize)
                .map(|(id, _)| id)
                .collect(),
            Expr::Pareto { metric, share } => {
                let ranked = self.ranked(metric)?;
                // summed in ranking order so that share = 1 reaches the total exactly
                let total: f64 = ranked.iter().map(|(_, v)| v).sum();
                let mut out = BTreeSet::new();
                if *share > 0.0 && total > 0.0 {
                    let target = share * total;
                    let slack = PARETO_REL_TOL * total;
                    let mut cumulative = 0.0;
                    for (id, v) in ranked {
                        cumulative += v;
                        out.insert(id);
                        if cumulative + slack >= target {
                            break;
                        }
                    }
                }
                out
            }
            Expr::Threshold { metric, cmp, value } => self
                .ranked(metric)?
                .into_iter()
                .filter(|(_, v)| cmp.holds(*v, *value))
                .map(|(id, _)| id)
                .collect(),
            Expr::FracMax { metric, fraction } => {
                let ranked = self.ranked(metric)?;
                let max = ranked.first().map_or(0.0, |(_, v)| *v);
                let cut = fraction * max;
                ranked
                    .into_iter()
                    .filter(|(_, v)| *v >= cut)
                    .map(|(id, _)| id)
                    .collect()
            }
            Expr::All => self.ids.iter().copied().collect(),
            Expr::None => BTreeSet::new(),
            Expr::Union(l, r) => {
                let mut s = self.select(l)?;
                s.extend(self.select(r)?);
                s
            }
            Expr::Intersect(l, r) => {
                let rhs = self.select(r)?;
                let mut s = self.select(l)?;
                s.retain(|id| rhs.contains(id));
                s
            }
            Expr::Difference(l, r) => {
                let rhs = self.select(r)?;
                let mut s = self.select(l)?;
                s.retain(|id| !rhs.contains(id));
                s
            }
        })
    }
}

/// Applies a rule to the given profiles.
///
/// The ranking uses the leftmost metric in the rule; rules built only from
/// `all()`/`none()` rank by unit id with score 0.
pub fn evaluate_rule(
    rule: &SelectionRule,
    profiles: &ProfileSet,
    units: &[CodeUnit],
    validity: u32,
) -> Result<Prioritization, RuleError> {
    if units.is_empty() {
        return Err(RuleError::EmptyUnitList);
    }
    let ctx = Ctx {
        profiles,
        ids: units.iter().map(|u| u.id.as_str()).collect(),
    };
    // surface unknown metrics even in branches that would not be reached
    let mut missing = None;
    rule.ast.for_each_metric(&mut |m| {
        if missing.is_none() && profiles.get(m).is_none() {
            missing = Some(String::from(m));
        }
    });
    if let Some(m) = missing {
        return Err(RuleError::UnknownMetric(m));
    }

    let selected = ctx.select(&rule.ast)?;
    let ranking: Vec<RankedUnit> = match rule.ast.leftmost_metric() {
        Some(metric) => ctx
            .ranked(metric)?
            .into_iter()
            .map(|(id, score)| RankedUnit {
                unit_id: id.into(),
                score,
            })
            .collect(),
        None => {
            let mut ids = ctx.ids.clone();
            ids.sort_unstable();
            ids.into_iter()
                .map(|id| RankedUnit {
                    unit_id: id.into(),
                    score: 0.0,
                })
                .collect()
        }
    };
    let selected = ranking
        .iter()
        .filter(|r| selected.contains(r.unit_id.as_str()))
        .map(|r| r.unit_id.clone())
        .collect();
    Ok(Prioritization {
        rule_source: rule.source.clone(),
        ranking,
        selected,
        validity_at_evaluation: validity,
    })
}
