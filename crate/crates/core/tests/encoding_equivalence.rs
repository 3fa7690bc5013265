//! The two single-level encodings of the criteria must price every scenario
//! identically at a fixed first stage, and both must match the sequential
//! recourse path.

use nc_core::balance::SynthesisOptions;
use nc_core::contingency::ContingencyVector;
use nc_core::netgraph::{g4, EdgeMask};
use nc_core::scots::{
    build_second_stage, solve_recourse, Generator, NcBundle, NcEncoding, NcMode, ScotsCase,
};
use nc_core::solver::{self, Expr, MilpOptions, Model, Status};

fn case() -> ScotsCase {
    ScotsCase {
        topology: g4(),
        loads: vec![0.0, 10.0, 8.0, 5.0],
        generators: vec![
            Generator { bus: 1, p_min: 0.0, p_max: 40.0, cost: 5.0, reg_up: 40.0, reg_down: 40.0 },
            Generator { bus: 2, p_min: 0.0, p_max: 40.0, cost: 15.0, reg_up: 40.0, reg_down: 40.0 },
        ],
        susceptance: vec![10.0; 4],
        capacity: vec![40.0; 4],
        switch_budget: 2,
        voll: 500.0,
        switch_cost: 1.0,
        eta: 2,
        lambda: 1,
    }
}

#[test]
fn encodings_agree_per_scenario() {
    let case = case();
    let nc = NcBundle::prepare(&case.topology, case.lambda, &SynthesisOptions::default()).unwrap();
    let form = nc.compact(&case.topology);
    for failed in [None, Some(0), Some(1), Some(2), Some(3)] {
        let mut o = ContingencyVector::all_in_service(2, 4);
        if let Some(e) = failed {
            o.o_b[e] = false;
        }
        let mut costs: Vec<f64> = Vec::new();
        for encoding in [NcEncoding::Certificates, NcEncoding::Kkt] {
            let mut model = Model::new();
            let z: Vec<Expr> = (0..4).map(|_| Expr::constant(1.0)).collect();
            let p: Vec<Expr> = vec![Expr::constant(23.0), Expr::constant(0.0)];
            let vars = build_second_stage(
                &mut model, &case, &nc, &form, &o, &z, &p, NcMode::FullCriteria, encoding, "s",
            );
            model.add_objective(&vars.cost);
            let sol = solver::solve_milp(&model.to_problem(), &MilpOptions::default()).unwrap();
            assert_eq!(sol.status, Status::Optimal, "failed={failed:?} {encoding:?}");
            costs.push(sol.objective);
        }
        // sequential path at the same fixed first stage
        let recourse = solve_recourse(
            &case,
            &nc,
            &EdgeMask::all_on(4),
            &[23.0, 0.0],
            &o,
            NcMode::FullCriteria,
        )
        .unwrap();
        costs.push(recourse.cost);
        for pair in costs.windows(2) {
            assert!(
                (pair[0] - pair[1]).abs() <= 1e-6 * (1.0 + pair[0].abs()),
                "failed={failed:?}: costs disagree {costs:?}"
            );
        }
    }
}
