//! End-to-end two-stage behavior on the 4-bus test graph.

use nc_core::balance::SynthesisOptions;
use nc_core::contingency::ContingencyVector;
use nc_core::netgraph::{g4, EdgeMask};
use nc_core::scots::{
    audit_criteria, evaluate_statistics, solve_recourse, solve_two_stage, Generator, NcBundle,
    NcMode, ScenarioMode, ScenarioSet, ScotsCase, TwoStageOptions,
};

fn g4_case(e4_capacity: f64, voll: f64) -> ScotsCase {
    ScotsCase {
        topology: g4(),
        loads: vec![0.0, 10.0, 8.0, 5.0],
        generators: vec![
            Generator {
                bus: 1,
                p_min: 0.0,
                p_max: 40.0,
                cost: 5.0,
                reg_up: 40.0,
                reg_down: 40.0,
            },
            Generator {
                bus: 2,
                p_min: 0.0,
                p_max: 40.0,
                cost: 15.0,
                reg_up: 40.0,
                reg_down: 40.0,
            },
        ],
        susceptance: vec![10.0; 4],
        capacity: vec![40.0, 40.0, 40.0, e4_capacity],
        switch_budget: 2,
        voll,
        switch_cost: 1.0,
        eta: 2,
        lambda: 1,
    }
}

fn branch_scenarios(case: &ScotsCase, p_none: f64) -> ScenarioSet {
    let n_g = case.num_generators();
    let n_b = case.topology.branch_count();
    let mut scenarios = vec![(ContingencyVector::all_in_service(n_g, n_b), p_none)];
    let p_each = (1.0 - p_none) / n_b as f64;
    for e in 0..n_b {
        let mut o = ContingencyVector::all_in_service(n_g, n_b);
        o.o_b[e] = false;
        scenarios.push((o, p_each));
    }
    ScenarioSet {
        mode: ScenarioMode::Stochastic,
        scenarios,
    }
}

#[test]
fn full_criteria_keeps_every_line_on() {
    let case = g4_case(40.0, 500.0);
    let nc = NcBundle::prepare(&case.topology, case.lambda, &SynthesisOptions::default()).unwrap();
    let set = branch_scenarios(&case, 0.8);
    let sol = solve_two_stage(&case, &nc, &set, NcMode::FullCriteria, &TwoStageOptions::default())
        .unwrap();
    assert_eq!(sol.z, vec![true; 4], "criteria must pin every branch on");

    let audit = audit_criteria(&case, &nc, &sol, 1_000_000).unwrap();
    assert!(audit.clean(), "audit: {audit:?}");

    let stats = evaluate_statistics(&case, &nc, &sol, 1_000_000).unwrap();
    assert_eq!(stats.r_tilde, Some(0.0));
    assert_eq!(stats.r_bar, Some(0.0));
}

#[test]
fn baseline_with_biased_costs_switches_off_and_pays_for_it() {
    // a tiny capacity on branch 4 makes keeping it in service expensive
    let case = g4_case(0.5, 200.0);
    let nc = NcBundle::prepare(&case.topology, case.lambda, &SynthesisOptions::default()).unwrap();
    let set = branch_scenarios(&case, 0.96);
    let sol = solve_two_stage(
        &case,
        &nc,
        &set,
        NcMode::FirstStageOnly,
        &TwoStageOptions::default(),
    )
    .unwrap();
    assert!(!sol.z[3], "baseline should drop the congested branch: {:?}", sol.z);

    let stats = evaluate_statistics(&case, &nc, &sol, 1_000_000).unwrap();
    assert!(stats.r_tilde.unwrap() > 0.0, "stats: {stats:?}");
}

#[test]
fn empty_scenario_set_reduces_to_single_stage() {
    let case = g4_case(0.5, 200.0);
    let nc = NcBundle::prepare(&case.topology, case.lambda, &SynthesisOptions::default()).unwrap();
    let set = ScenarioSet {
        mode: ScenarioMode::Stochastic,
        scenarios: Vec::new(),
    };
    let sol = solve_two_stage(
        &case,
        &nc,
        &set,
        NcMode::FirstStageOnly,
        &TwoStageOptions::default(),
    )
    .unwrap();
    assert!(!sol.z[3]);
    assert_eq!(sol.second_stage_value, 0.0);
    assert!(sol.scenarios.is_empty());
}

#[test]
fn recourse_covers_islanded_load_by_shedding() {
    let case = g4_case(40.0, 500.0);
    let nc = NcBundle::prepare(&case.topology, case.lambda, &SynthesisOptions::default()).unwrap();
    // branch 3 fails with every line on: bus 4 is stranded, its load is shed
    let mut o = ContingencyVector::all_in_service(2, 4);
    o.o_b[2] = false;
    let z = EdgeMask::all_on(4);
    let r = solve_recourse(&case, &nc, &z, &[23.0, 0.0], &o, NcMode::FullCriteria).unwrap();
    assert!((r.shed_total - 5.0).abs() < 1e-6, "shed {:?}", r.shed_total);
    // shed 5 MW at the penalty plus 5 MW of downward regulation at the
    // survivor's rate
    assert!((r.cost - (5.0 * 500.0 + 5.0 * 5.0)).abs() < 1e-5, "cost {}", r.cost);

    // generator failure: the survivor regulates up to cover the whole load
    let mut o = ContingencyVector::all_in_service(2, 4);
    o.o_g[0] = false;
    let r = solve_recourse(&case, &nc, &z, &[23.0, 0.0], &o, NcMode::FullCriteria).unwrap();
    assert!(r.shed_total < 1e-6, "gen outage recourse: {r:?}");
    assert!((r.cost - 23.0 * 15.0).abs() < 1e-5, "gen outage cost {}", r.cost);

    // no-failure scenario costs nothing
    let o = ContingencyVector::all_in_service(2, 4);
    let r = solve_recourse(&case, &nc, &z, &[23.0, 0.0], &o, NcMode::FullCriteria).unwrap();
    assert!(r.cost.abs() < 1e-6);
}
