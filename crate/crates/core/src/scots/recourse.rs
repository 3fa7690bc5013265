//! Per-contingency corrective control at a fixed first stage.
//!
//! The sequential path: classify the post-contingency mask first (its program
//! depends only on fixed data), fix the indicator values, then solve the
//! corrective mixed-integer dispatch with the membership obligations the
//! class imposes. For a fixed first stage this is equivalent to the embedded
//! single-level form.

use super::model::{dispatch_block, phi1_for};
use super::{NcBundle, NcMode, ScotsCase, ScotsError};
use crate::connectedness::{region_constraints, solve_classification_lp, Klass};
use crate::contingency::ContingencyVector;
use crate::netgraph::EdgeMask;
use crate::solver::{self, Expr, MilpOptions, Model, Status, VarId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecourseResult {
    pub label: String,
    pub cost: f64,
    /// Post-contingency classification of z⊙o_b.
    pub z_tilde_class: Klass,
    pub classification_objective: f64,
    /// True when a λ-branch contingency landed outside the allowed bands, so
    /// the criteria leave no feasible corrective action.
    pub criterion1_violated: bool,
    pub z_plus: Vec<bool>,
    pub z_minus: Vec<bool>,
    pub z_bar: Vec<bool>,
    pub shed_total: f64,
    pub reg_total: f64,
}

pub fn solve_recourse(
    case: &ScotsCase,
    nc: &NcBundle,
    z: &EdgeMask,
    p_g: &[f64],
    scenario: &ContingencyVector,
    nc_mode: NcMode,
) -> Result<RecourseResult, ScotsError> {
    let topology = &case.topology;
    let n = topology.bus_count();
    let n_b = topology.branch_count();
    let n_g = case.num_generators();
    assert_eq!(z.len(), n_b);
    assert_eq!(p_g.len(), n_g);

    let z_tilde = EdgeMask::new(
        (0..n_b)
            .map(|e| z.is_on(e) && scenario.o_b[e])
            .collect(),
    );
    let classified = solve_classification_lp(topology, &z_tilde, &nc.balanced, nc.n_u(), None)?;
    let klass = classified.klass;
    let phi1 = phi1_for(scenario, case.lambda);

    if nc_mode == NcMode::FullCriteria && phi1 > 0.5 && klass == Klass::OtherDisconnected {
        return Ok(RecourseResult {
            label: scenario.label(),
            cost: f64::INFINITY,
            z_tilde_class: klass,
            classification_objective: classified.objective,
            criterion1_violated: true,
            z_plus: vec![false; n_b],
            z_minus: vec![false; n_b],
            z_bar: z_tilde.bits().to_vec(),
            shed_total: 0.0,
            reg_total: 0.0,
        });
    }

    let mut model = Model::new();
    let z_plus: Vec<VarId> = (0..n_b)
        .map(|e| model.binary(format!("zp{}", e + 1)))
        .collect();
    let z_minus: Vec<VarId> = (0..n_b)
        .map(|e| model.binary(format!("zm{}", e + 1)))
        .collect();
    let shed: Vec<VarId> = (0..n)
        .map(|i| model.var(format!("shed{}", i + 1), 0.0, case.loads[i]))
        .collect();
    let mut reg_up = Vec::with_capacity(n_g);
    let mut reg_down = Vec::with_capacity(n_g);
    for (k, g) in case.generators.iter().enumerate() {
        let alive = scenario.o_g[k];
        reg_up.push(model.var(format!("rup{k}"), 0.0, if alive { g.reg_up } else { 0.0 }));
        reg_down.push(model.var(format!("rdn{k}"), 0.0, if alive { g.reg_down } else { 0.0 }));
    }

    let mut z_bar: Vec<Expr> = Vec::with_capacity(n_b);
    for e in 0..n_b {
        let zt = if z_tilde.is_on(e) { 1.0 } else { 0.0 };
        let ob = if scenario.o_b[e] { 1.0 } else { 0.0 };
        // z₊ ≤ o_b - z̃ and z₋ ≤ z̃
        model.le(format!("zp_dom{e}"), Expr::from(z_plus[e]), ob - zt);
        model.le(format!("zm_dom{e}"), Expr::from(z_minus[e]), zt);
        z_bar.push(
            Expr::constant(zt)
                .add_term(z_plus[e], 1.0)
                .add_term(z_minus[e], -1.0),
        );
    }
    let switch_count = Expr::sum(
        z_plus
            .iter()
            .chain(z_minus.iter())
            .map(|&v| Expr::from(v)),
    );
    model.le("budget", switch_count.clone(), case.switch_budget as f64);

    let mut injections: Vec<Expr> = (0..n)
        .map(|i| Expr::term(shed[i], 1.0).plus(&Expr::constant(-case.loads[i])))
        .collect();
    for (k, g) in case.generators.iter().enumerate() {
        if scenario.o_g[k] {
            let output = Expr::constant(p_g[k])
                .add_term(reg_up[k], 1.0)
                .add_term(reg_down[k], -1.0);
            model.ge(format!("gmin{k}"), output.clone(), g.p_min);
            model.le(format!("gmax{k}"), output.clone(), g.p_max);
            injections[g.bus - 1] = injections[g.bus - 1].clone().plus(&output);
        }
    }
    dispatch_block(&mut model, case, &z_bar, &injections, "dc");

    if nc_mode == NcMode::FullCriteria {
        let big_m = crate::connectedness::default_region_big_m(topology, &nc.balanced.c);
        match klass {
            Klass::Connected => {
                region_constraints(
                    &mut model,
                    topology,
                    "zbar",
                    &z_bar,
                    &Expr::constant(0.0),
                    &nc.balanced.c,
                    None,
                    big_m,
                );
            }
            Klass::WDisconnected => {
                let restored: Vec<Expr> = (0..n_b)
                    .map(|e| {
                        let add = if scenario.o_b[e] { 0.0 } else { 1.0 };
                        z_bar[e].clone().plus(&Expr::constant(add))
                    })
                    .collect();
                region_constraints(
                    &mut model,
                    topology,
                    "rest",
                    &restored,
                    &Expr::constant(0.0),
                    &nc.balanced.c,
                    None,
                    big_m,
                );
            }
            Klass::OtherDisconnected => {}
        }
    }

    let mut cost = Expr::sum(case.generators.iter().enumerate().map(|(k, g)| {
        Expr::term(reg_up[k], g.cost).add_term(reg_down[k], g.cost)
    }));
    cost = cost.plus(&Expr::sum(shed.iter().map(|&s| Expr::term(s, case.voll))));
    cost = cost.plus(&switch_count.scaled(case.switch_cost));
    model.add_objective(&cost);

    let sol = solver::solve_milp(&model.to_problem(), &MilpOptions::default())?;
    if sol.status != Status::Optimal {
        return Err(ScotsError::Solver(solver::SolverError::NumericalFailure(
            format!(
                "recourse for {} ended with {:?}",
                scenario.label(),
                sol.status
            ),
        )));
    }
    let zp: Vec<bool> = z_plus.iter().map(|v| sol.primal[v.0] > 0.5).collect();
    let zm: Vec<bool> = z_minus.iter().map(|v| sol.primal[v.0] > 0.5).collect();
    let z_bar_bits: Vec<bool> = (0..n_b)
        .map(|e| (z_tilde.is_on(e) || zp[e]) && !zm[e])
        .collect();
    Ok(RecourseResult {
        label: scenario.label(),
        cost: sol.objective,
        z_tilde_class: klass,
        classification_objective: classified.objective,
        criterion1_violated: false,
        z_plus: zp,
        z_minus: zm,
        z_bar: z_bar_bits,
        shed_total: shed.iter().map(|v| sol.primal[v.0]).sum(),
        reg_total: reg_up
            .iter()
            .chain(reg_down.iter())
            .map(|v| sol.primal[v.0])
            .sum(),
    })
}

impl RecourseResult {
    pub fn switches(&self) -> usize {
        self.z_plus.iter().filter(|&&b| b).count()
            + self.z_minus.iter().filter(|&&b| b).count()
    }
}
