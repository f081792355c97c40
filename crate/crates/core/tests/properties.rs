use std::collections::BTreeSet;

use infocus_core::profiles::{combine, defect_content, defect_density, estimate_defects};
use infocus_core::*;
use proptest::prelude::*;

fn unit_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("u{i:02}")).collect()
}

fn profile(metric: &str, ids: &[String], values: &[f64]) -> DefectProfile {
    DefectProfile {
        metric_id: metric.into(),
        values: ids.iter().cloned().zip(values.iter().copied()).collect(),
        domain_note: String::new(),
    }
}

fn units(ids: &[String]) -> Vec<CodeUnit> {
    ids.iter()
        .map(|id| CodeUnit::new(id.clone(), 100))
        .collect()
}

fn select(rule: &Expr, set: &ProfileSet, units: &[CodeUnit]) -> BTreeSet<String> {
    let rule = SelectionRule::from_expr(rule.clone()).unwrap();
    evaluate_rule(&rule, set, units, 0)
        .unwrap()
        .selected
        .into_iter()
        .collect()
}

fn project_strategy() -> impl Strategy<Value = ProjectData> {
    (1usize..12)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((1u64..5000, any::<bool>(), 0.0f64..50.0), n),
                prop::collection::vec(0usize..n, 0..40),
            )
        })
        .prop_map(|(specs, defect_units)| {
            let mut units: Vec<CodeUnit> = specs
                .iter()
                .enumerate()
                .map(|(i, (size, inspected, cx))| {
                    let u = CodeUnit::new(format!("u{i:02}"), *size).with_complexity(*cx);
                    if *inspected {
                        u.inspected(*size as f64 / 200.0)
                    } else {
                        u
                    }
                })
                .collect();
            // at least one inspected unit so estimation is defined
            if !units.iter().any(|u| u.inspected) {
                units[0].inspected = true;
                units[0].inspection_effort_minutes = Some(1.0);
            }
            let inspected: Vec<usize> = (0..units.len()).filter(|i| units[*i].inspected).collect();
            let inspection_defects = defect_units
                .iter()
                .enumerate()
                .map(|(k, i)| {
                    let target = inspected[i % inspected.len()];
                    DefectRecord::new(format!("d{k}"), units[target].id.clone(), Phase::Inspection)
                })
                .collect();
            ProjectData {
                run_id: "prop".into(),
                context: ContextProfile::new().with("project", "prop"),
                units,
                inspection_defects,
                ..Default::default()
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn density_times_size_is_content(p in project_strategy()) {
        prop_assert!(validate_project(&p).is_empty());
        let dc = defect_content(&p);
        let dd = defect_density(&p);
        for u in &p.units {
            let back = dd.values[&u.id] * u.size_loc as f64 / 1000.0;
            prop_assert!((back - dc.values[&u.id]).abs() <= 1e-9);
        }
        prop_assert_eq!(dc.values.values().sum::<f64>(), p.inspection_defects.len() as f64);
    }
}

proptest! {
    #[test]
    fn estimation_with_uniform_density(sizes in prop::collection::vec((1u64..40, any::<bool>()), 2..10), per_kloc in 1u64..5) {
        // inspected units of size k*250 LOC carry k*per_kloc/4 * ... defects: use multiples of 1000
        let mut units = Vec::new();
        let mut defects = Vec::new();
        for (i, (k, inspected)) in sizes.iter().enumerate() {
            let id = format!("u{i}");
            let size = k * 1000;
            let u = CodeUnit::new(id.clone(), size);
            if *inspected || i == 0 {
                units.push(u.inspected(10.0));
                for d in 0..(k * per_kloc) {
                    defects.push(DefectRecord::new(format!("{id}-{d}"), id.clone(), Phase::Inspection));
                }
            } else {
                units.push(u);
            }
        }
        let p = ProjectData { units, inspection_defects: defects, ..Default::default() };
        let est = estimate_defects(&p).unwrap();
        for u in p.units.iter().filter(|u| !u.inspected) {
            let expected = per_kloc as f64 * u.size_loc as f64 / 1000.0;
            prop_assert!((est.values[&u.id] - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn single_term_combine_preserves_order(values in prop::collection::vec(0u32..50, 1..12), w in 0.01f64..100.0) {
        let ids = unit_ids(values.len());
        let vals: Vec<f64> = values.iter().map(|v| *v as f64).collect();
        let base: ProfileSet = [profile("dc", &ids, &vals)].into_iter().collect();
        let p = ProjectData { units: units(&ids), ..Default::default() };
        let combined = combine(&p, &CombineSpec::new("c").term("dc", w), &base).unwrap();
        let mut set = base.clone();
        set.insert(combined);
        let order = |metric: &str| -> Vec<String> {
            let r = SelectionRule::from_expr(Expr::top(metric, 1)).unwrap();
            evaluate_rule(&r, &set, &p.units, 0).unwrap().ranking.into_iter().map(|r| r.unit_id).collect()
        };
        // constant profiles normalize to zero, which keeps the id order too
        prop_assert_eq!(order("dc"), order("c"));
    }
}

/// Smallest subset size whose mass reaches `share` of the total, by
/// enumerating every subset.
fn min_cover_cardinality(values: &[u32], share: f64) -> Option<usize> {
    let total: f64 = values.iter().map(|v| *v as f64).sum();
    let target = share * total;
    let slack = 1e-9 * total;
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << values.len()) {
        let sum: f64 = (0..values.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| values[i] as f64)
            .sum();
        if sum + slack >= target {
            let size = mask.count_ones() as usize;
            best = Some(best.map_or(size, |b| b.min(size)));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn pareto_is_minimal(values in prop::collection::vec(0u32..20, 1..=10), share in 0.0f64..=1.0) {
        let ids = unit_ids(values.len());
        let vals: Vec<f64> = values.iter().map(|v| *v as f64).collect();
        let set: ProfileSet = [profile("dc", &ids, &vals)].into_iter().collect();
        let chosen = select(&Expr::pareto("dc", share), &set, &units(&ids));
        let total: u32 = values.iter().sum();
        if share == 0.0 || total == 0 {
            prop_assert!(chosen.is_empty());
        } else {
            let mass: f64 = ids.iter().zip(&vals).filter(|(id, _)| chosen.contains(*id)).map(|(_, v)| v).sum();
            prop_assert!(mass + 1e-9 * total as f64 >= share * total as f64);
            prop_assert_eq!(Some(chosen.len()), min_cover_cardinality(&values, share));
        }
    }
}

fn metric_name() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("dc".to_string()),
        Just("dd".to_string()),
        Just("loc".to_string()),
        "[a-z_][a-z0-9_]{0,6}",
    ]
}

fn share() -> impl Strategy<Value = f64> {
    prop_oneof![0.0f64..=1.0, Just(0.0), Just(1.0), Just(0.8)]
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let cmp = prop_oneof![Just(Cmp::Ge), Just(Cmp::Gt), Just(Cmp::Le), Just(Cmp::Lt)];
    let leaf = prop_oneof![
        (metric_name(), 1u32..1000).prop_map(|(m, k)| Expr::top(m, k)),
        (metric_name(), share()).prop_map(|(m, p)| Expr::pareto(m, p)),
        (metric_name(), share()).prop_map(|(m, f)| Expr::fracmax(m, f)),
        (metric_name(), cmp, -1e6f64..1e6).prop_map(|(m, c, t)| Expr::threshold(m, c, t)),
        Just(Expr::All),
        Just(Expr::None),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.union(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.intersect(b)),
            (inner.clone(), inner).prop_map(|(a, b)| a.difference(b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn render_parse_round_trip(expr in expr_strategy()) {
        let rule = SelectionRule::from_expr(expr).unwrap();
        let text = render_rule(&rule);
        let again = parse_rule(&text).unwrap();
        prop_assert_eq!(&again, &rule);
        prop_assert_eq!(render_rule(&again), text);
    }
}

fn family(metric: &str, which: u8, k: u32, p: f64) -> Expr {
    match which % 3 {
        0 => Expr::top(metric, k),
        1 => Expr::pareto(metric, p),
        _ => Expr::fracmax(metric, p),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn scale_invariance(
        values in prop::collection::vec(0u32..100, 1..15),
        which in 0u8..3,
        k in 1u32..15,
        p in 0.001f64..0.999,
        c in 0.001f64..1000.0,
    ) {
        let ids = unit_ids(values.len());
        let vals: Vec<f64> = values.iter().map(|v| *v as f64).collect();
        let scaled: Vec<f64> = vals.iter().map(|v| v * c).collect();
        let set: ProfileSet = [profile("m", &ids, &vals), profile("s", &ids, &scaled)].into_iter().collect();
        let units = units(&ids);
        let a = SelectionRule::from_expr(family("m", which, k, p)).unwrap();
        let b = SelectionRule::from_expr(family("s", which, k, p)).unwrap();
        let pa = evaluate_rule(&a, &set, &units, 0).unwrap();
        let pb = evaluate_rule(&b, &set, &units, 0).unwrap();
        prop_assert_eq!(&pa.selected, &pb.selected);
        let order = |p: &Prioritization| p.ranking.iter().map(|r| r.unit_id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(order(&pa), order(&pb));
    }

    #[test]
    fn monotonicity(
        values in prop::collection::vec(0.0f64..100.0, 1..15),
        t1 in 0.0f64..100.0, t2 in 0.0f64..100.0,
        k1 in 1u32..15, k2 in 1u32..15,
        p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0,
    ) {
        let ids = unit_ids(values.len());
        let set: ProfileSet = [profile("m", &ids, &values)].into_iter().collect();
        let units = units(&ids);
        let (t1, t2) = (t1.min(t2), t1.max(t2));
        let (k1, k2) = (k1.min(k2), k1.max(k2));
        let (p1, p2) = (p1.min(p2), p1.max(p2));
        prop_assert!(select(&Expr::threshold("m", Cmp::Ge, t1), &set, &units)
            .is_superset(&select(&Expr::threshold("m", Cmp::Ge, t2), &set, &units)));
        prop_assert!(select(&Expr::top("m", k1), &set, &units)
            .is_subset(&select(&Expr::top("m", k2), &set, &units)));
        prop_assert!(select(&Expr::pareto("m", p1), &set, &units)
            .is_subset(&select(&Expr::pareto("m", p2), &set, &units)));
    }

    #[test]
    fn set_identities(values in prop::collection::vec(0.0f64..100.0, 1..12), expr in expr_strategy()) {
        let ids = unit_ids(values.len());
        // every metric the generated rule can mention resolves to the same values
        let mut metrics = BTreeSet::new();
        expr.for_each_metric(&mut |m| { metrics.insert(m.to_string()); });
        let set: ProfileSet = metrics.iter().map(|m| profile(m, &ids, &values)).collect();
        let units = units(&ids);
        let base = select(&expr, &set, &units);
        prop_assert_eq!(&select(&expr.clone().union(Expr::None), &set, &units), &base);
        prop_assert_eq!(&select(&expr.clone().intersect(Expr::All), &set, &units), &base);
        prop_assert!(select(&expr.clone().difference(expr.clone()), &set, &units).is_empty());
    }
}

fn scored_project() -> impl Strategy<Value = (ProjectData, Vec<bool>)> {
    (1usize..10)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((1u32..20, 0.5f64..200.0), n),
                prop::collection::vec(any::<bool>(), n),
            )
        })
        .prop_map(|(specs, selected)| {
            let mut p = ProjectData {
                run_id: "s".into(),
                test_defects: Some(Vec::new()),
                test_effort: Some(Vec::new()),
                ..Default::default()
            };
            for (i, (defects, effort)) in specs.iter().enumerate() {
                let id = format!("u{i}");
                p.units.push(CodeUnit::new(id.clone(), 100));
                // half the units get no test defects
                let n = if i % 2 == 0 { *defects } else { 0 };
                for d in 0..n {
                    p.test_defects.as_mut().unwrap().push(DefectRecord::new(
                        format!("{id}-{d}"),
                        id.clone(),
                        Phase::Test,
                    ));
                }
                p.test_effort.as_mut().unwrap().push(TestEffortRecord {
                    unit_id: id,
                    effort_minutes: *effort,
                });
            }
            (p, selected)
        })
}

fn prioritization(p: &ProjectData, selected: &[bool]) -> Prioritization {
    Prioritization {
        rule_source: "manual".into(),
        ranking: p
            .units
            .iter()
            .map(|u| RankedUnit {
                unit_id: u.id.clone(),
                score: 0.0,
            })
            .collect(),
        selected: p
            .units
            .iter()
            .zip(selected)
            .filter(|(_, s)| **s)
            .map(|(u, _)| u.id.clone())
            .collect(),
        validity_at_evaluation: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn closed_form_and_bounds((p, selected) in scored_project()) {
        let r = score(&prioritization(&p, &selected), &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.effectiveness_ratio));
        prop_assert!((0.0..=1.0).contains(&r.effort_reduction));
        prop_assert!(r.efficiency_improvement >= -1.0);
        prop_assert!(r.found_in_selected <= r.total_test_defects);
        prop_assert!(r.selected_effort_minutes <= r.total_effort_minutes);
        if r.selected_effort_minutes > 0.0 {
            let closed = efficiency_improvement_closed_form(r.effort_reduction, r.effectiveness_ratio).unwrap();
            prop_assert!((r.efficiency_improvement - closed).abs() <= 1e-9);
        }
        if r.found_in_selected == r.total_test_defects && r.selected_effort_minutes > 0.0 {
            let rr = r.effort_reduction;
            prop_assert!((r.efficiency_improvement - rr / (1.0 - rr)).abs() <= 1e-9);
        }
    }

    #[test]
    fn adding_defect_free_unit_never_helps((p, selected) in scored_project()) {
        let before = score(&prioritization(&p, &selected), &p).unwrap();
        // odd-indexed units carry no test defects
        for i in (1..p.units.len()).step_by(2) {
            if selected[i] { continue; }
            let mut more = selected.clone();
            more[i] = true;
            let after = score(&prioritization(&p, &more), &p).unwrap();
            prop_assert!(after.efficiency_improvement <= before.efficiency_improvement + 1e-12);
        }
    }

    #[test]
    fn benchmark_is_permutation_invariant((p, _) in scored_project(), seed in any::<u64>()) {
        let ids: Vec<String> = p.units.iter().map(|u| u.id.clone()).collect();
        let sizes: Vec<f64> = (0..ids.len()).map(|i| ((i as u64 * 7 + seed) % 11) as f64).collect();
        let profiles: ProfileSet = [profile("m", &ids, &sizes)].into_iter().collect();
        let grid = generate_rule_grid(&GridSpec {
            metrics: vec!["m".into()],
            top_ks: vec![1, 2, 3],
            pareto_ps: vec![0.5, 0.8],
            fracmax_fs: vec![0.5],
            threshold_specs: vec![(Cmp::Gt, 3.0)],
        }).unwrap();
        let forward = benchmark(&grid, &p, &profiles, |_, _| 0).unwrap();
        let mut shuffled = grid.clone();
        shuffled.reverse();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        prop_assert_eq!(forward, benchmark(&shuffled, &p, &profiles, |_, _| 0).unwrap());
    }
}

#[test]
fn grid_rules_round_trip() {
    let spec = GridSpec {
        metrics: ["dc", "dd", "loc", "cx", "hd"].map(String::from).to_vec(),
        top_ks: (1..=8).collect(),
        pareto_ps: vec![0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95],
        fracmax_fs: vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        threshold_specs: vec![(Cmp::Ge, 1.0), (Cmp::Lt, 2.5)],
    };
    let grid = generate_rule_grid(&spec).unwrap();
    assert_eq!(grid.len(), 130);
    let names: BTreeSet<_> = grid.iter().map(|(n, _)| n.clone()).collect();
    assert_eq!(names.len(), grid.len());
    for (_, rule) in &grid {
        assert_eq!(&parse_rule(&render_rule(rule)).unwrap(), rule);
    }
}

proptest! {
    #[test]
    fn failures_never_change_validity(outcomes in prop::collection::vec(any::<bool>(), 0..20)) {
        let ctx = ContextProfile::new().with("project", "p");
        let mut ledger = ValidityLedger::new();
        let mut successes = 0;
        for (i, ok) in outcomes.iter().enumerate() {
            let before = get_validity(&ledger, &ctx, "a");
            ledger = record_outcome(ledger, &ctx, "a", &format!("run{i}"), *ok, "t").unwrap();
            if *ok { successes += 1; } else {
                prop_assert_eq!(get_validity(&ledger, &ctx, "a"), before);
            }
        }
        prop_assert_eq!(get_validity(&ledger, &ctx, "a"), successes);
    }

    #[test]
    fn validation_is_deterministic(p in project_strategy()) {
        let mut bad = p.clone();
        bad.inspection_defects.push(DefectRecord::new("x", "nowhere", Phase::Inspection));
        bad.units.push(bad.units[0].clone());
        let a = validate_project(&bad);
        prop_assert_eq!(&a, &validate_project(&bad));
        let keys: Vec<_> = a.violations.iter().map(|v| (v.code.as_str(), v.id.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        prop_assert_eq!(keys, sorted);
    }
}

#[test]
fn top_tie_break_matches_enumeration() {
    // both orders of the tied pair are valid descending sorts; the id
    // tie-break picks A
    let ids: Vec<String> = ["B", "A", "C"].map(String::from).to_vec();
    let set: ProfileSet = [profile("dc", &ids, &[3.0, 3.0, 1.0])]
        .into_iter()
        .collect();
    let chosen = select(&Expr::top("dc", 1), &set, &units(&ids));
    assert_eq!(chosen, BTreeSet::from(["A".to_string()]));
}
