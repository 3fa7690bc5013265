//! Extensive-form assembly and solution of the two-stage switching problem.
//!
//! Small instances get the literal extensive form: the first stage plus one
//! second-stage block per scenario, probability-weighted or under a
//! worst-case epigraph. Beyond the row budget the solver switches to
//! audited scenario activation: the master holds the first stage plus the
//! blocks and connectedness cuts activated so far, candidate solutions are
//! audited scenario by scenario through the recourse path, and the worst
//! mismatch joins the master until the bounds meet. Both paths optimize over
//! the same finite scenario universe.

use super::model::{build_second_stage, dispatch_block, NcEncoding};
use super::recourse::{solve_recourse, RecourseResult};
use super::{NcBundle, NcMode, ScenarioMode, ScenarioSet, ScotsCase, ScotsError};
use crate::connectedness::{classify, oracle_objective, region_constraints, Klass};
use crate::contingency::ContingencyVector;
use crate::netgraph::EdgeMask;
use crate::solver::{self, Expr, MilpOptions, Model, Status, VarId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct TwoStageOptions {
    /// Block encoding; None picks the indicator embedding for small region
    /// systems and the certificate form beyond.
    pub encoding: Option<NcEncoding>,
    /// Row budget under which the literal extensive form is solved directly.
    pub full_form_row_limit: usize,
    pub master_row_limit: usize,
    pub max_rounds: usize,
    /// Relative gap at which activation stops.
    pub gap_tol: f64,
    pub milp: MilpOptions,
}

impl Default for TwoStageOptions {
    fn default() -> Self {
        TwoStageOptions {
            encoding: None,
            full_form_row_limit: 2600,
            master_row_limit: 9000,
            max_rounds: 60,
            gap_tol: 1e-6,
            milp: MilpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub contingency: ContingencyVector,
    pub probability: f64,
    pub cost: f64,
    pub z_tilde_class: Klass,
    pub z_plus: Vec<bool>,
    pub z_minus: Vec<bool>,
    pub shed_total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScotsSolution {
    pub mode: ScenarioMode,
    pub nc_mode: NcMode,
    pub z: Vec<bool>,
    pub p_g: Vec<f64>,
    pub first_stage_cost: f64,
    /// Expected (stochastic) or worst-case (robust) second-stage cost.
    pub second_stage_value: f64,
    pub objective: f64,
    pub scenarios: Vec<ScenarioOutcome>,
    pub rounds: usize,
    pub convergence_gap: f64,
}

impl ScotsSolution {
    pub fn z_mask(&self) -> EdgeMask {
        EdgeMask::new(self.z.clone())
    }
}

struct FirstStage {
    p_g: Vec<VarId>,
    z: Vec<VarId>,
}

fn build_first_stage(model: &mut Model, case: &ScotsCase, nc: &NcBundle) -> FirstStage {
    let topology = &case.topology;
    let n = topology.bus_count();
    let n_b = topology.branch_count();
    let p_g: Vec<VarId> = case
        .generators
        .iter()
        .enumerate()
        .map(|(k, g)| model.var(format!("pg{k}"), g.p_min, g.p_max))
        .collect();
    let z: Vec<VarId> = (0..n_b)
        .map(|e| model.binary(format!("z{}", e + 1)))
        .collect();
    for e in nc.w_catalog.must_stay_on() {
        model.eq(format!("must_on{}", e + 1), Expr::from(z[e]), 1.0);
    }
    let z_exprs: Vec<Expr> = z.iter().map(|&v| Expr::from(v)).collect();
    // the normal-state mask must be connected
    region_constraints(
        model,
        topology,
        "x.nc",
        &z_exprs,
        &Expr::constant(0.0),
        &nc.balanced.c,
        None,
        crate::connectedness::default_region_big_m(topology, &nc.balanced.c),
    );
    let mut injections: Vec<Expr> = (0..n)
        .map(|i| Expr::constant(-case.loads[i]))
        .collect();
    for (k, g) in case.generators.iter().enumerate() {
        injections[g.bus - 1] = injections[g.bus - 1].clone().add_term(p_g[k], 1.0);
    }
    dispatch_block(model, case, &z_exprs, &injections, "x");
    let cost = Expr::sum(
        case.generators
            .iter()
            .enumerate()
            .map(|(k, g)| Expr::term(p_g[k], g.cost)),
    );
    model.add_objective(&cost);
    FirstStage { p_g, z }
}

/// Budgeted slack membership forcing criterion 1 for one scenario: the
/// post-contingency mask must admit a slack vector within the inevitable
/// band.
fn criterion1_cut(
    model: &mut Model,
    case: &ScotsCase,
    nc: &NcBundle,
    z: &[VarId],
    scenario: &ContingencyVector,
    prefix: &str,
) {
    let topology = &case.topology;
    let n = topology.bus_count();
    let z_tilde: Vec<Expr> = (0..topology.branch_count())
        .map(|e| {
            Expr::term(z[e], if scenario.o_b[e] { 1.0 } else { 0.0 })
        })
        .collect();
    let d_plus: Vec<VarId> = (0..n)
        .map(|i| model.var(format!("{prefix}.dp{i}"), 0.0, f64::INFINITY))
        .collect();
    let d_minus: Vec<VarId> = (0..n)
        .map(|i| model.var(format!("{prefix}.dm{i}"), 0.0, f64::INFINITY))
        .collect();
    let d: Vec<Expr> = (0..n)
        .map(|i| Expr::from(d_plus[i]).add_term(d_minus[i], -1.0))
        .collect();
    region_constraints(
        model,
        topology,
        prefix,
        &z_tilde,
        &Expr::constant(0.0),
        &nc.balanced.c,
        Some(&d),
        crate::connectedness::default_region_big_m(topology, &nc.balanced.c),
    );
    let d_total = Expr::sum(
        d_plus
            .iter()
            .chain(d_minus.iter())
            .map(|&v| Expr::from(v)),
    );
    model.le(
        format!("{prefix}.band"),
        d_total,
        nc.n_u() as f64 * nc.balanced.r,
    );
}

pub fn solve_two_stage(
    case: &ScotsCase,
    nc: &NcBundle,
    scenario_set: &ScenarioSet,
    nc_mode: NcMode,
    options: &TwoStageOptions,
) -> Result<ScotsSolution, ScotsError> {
    case.validate()?;
    scenario_set.validate(case)?;
    let encoding = options.encoding.unwrap_or(NcEncoding::Certificates);

    // try the literal extensive form first
    let all: BTreeSet<usize> = (0..scenario_set.scenarios.len()).collect();
    let (full_model, _) =
        build_master(case, nc, scenario_set, nc_mode, encoding, &BTreeSet::new(), &all)?;
    if full_model.num_rows() <= options.full_form_row_limit {
        return solve_full_form(case, nc, scenario_set, nc_mode, encoding, options);
    }

    solve_by_activation(case, nc, scenario_set, nc_mode, encoding, options)
}

type MasterParts = (Model, FirstStage);

fn build_master(
    case: &ScotsCase,
    nc: &NcBundle,
    scenario_set: &ScenarioSet,
    nc_mode: NcMode,
    encoding: NcEncoding,
    crit1_cuts: &BTreeSet<usize>,
    cost_blocks: &BTreeSet<usize>,
) -> Result<MasterParts, ScotsError> {
    let mut model = Model::new();
    let fs = build_first_stage(&mut model, case, nc);
    let form = nc.compact(&case.topology);
    let z_exprs: Vec<Expr> = fs.z.iter().map(|&v| Expr::from(v)).collect();
    let p_exprs: Vec<Expr> = fs.p_g.iter().map(|&v| Expr::from(v)).collect();

    if nc_mode == NcMode::FullCriteria {
        for &s in crit1_cuts {
            if cost_blocks.contains(&s) {
                continue; // the full block already enforces it
            }
            let scenario = &scenario_set.scenarios[s].0;
            criterion1_cut(&mut model, case, nc, &fs.z, scenario, &format!("c1s{s}"));
        }
    }

    let mut block_costs: Vec<Option<Expr>> = vec![None; scenario_set.scenarios.len()];
    for &s in cost_blocks {
        let scenario = &scenario_set.scenarios[s].0;
        let vars = build_second_stage(
            &mut model,
            case,
            nc,
            &form,
            scenario,
            &z_exprs,
            &p_exprs,
            nc_mode,
            encoding,
            &format!("s{s}"),
        );
        block_costs[s] = Some(vars.cost);
    }


    match scenario_set.mode {
        ScenarioMode::Stochastic => {
            for (s, cost) in block_costs.iter().enumerate() {
                if let Some(cost) = cost {
                    let p = scenario_set.scenarios[s].1;
                    model.add_objective(&cost.clone().scaled(p));
                }
            }
        }
        ScenarioMode::Robust => {
            if !scenario_set.scenarios.is_empty() && !cost_blocks.is_empty() {
                let t = model.var("t_worst", 0.0, f64::INFINITY);
                model.objective[t.0] = 1.0;
                for (s, cost) in block_costs.iter().enumerate() {
                    if let Some(cost) = cost {
                        model.ge(
                            format!("epi{s}"),
                            Expr::from(t).minus(cost),
                            0.0,
                        );
                    }
                }
            }
        }
    }
    Ok((model, fs))
}

fn aggregate(mode: ScenarioMode, set: &ScenarioSet, costs: &[f64]) -> f64 {
    match mode {
        ScenarioMode::Stochastic => set
            .scenarios
            .iter()
            .zip(costs)
            .map(|((_, p), c)| p * c)
            .sum(),
        ScenarioMode::Robust => costs.iter().copied().fold(0.0, f64::max),
    }
}

fn audit_recourse(
    case: &ScotsCase,
    nc: &NcBundle,
    set: &ScenarioSet,
    z: &EdgeMask,
    p_g: &[f64],
    nc_mode: NcMode,
) -> Result<Vec<RecourseResult>, ScotsError> {
    let results: Vec<Result<RecourseResult, ScotsError>> = set
        .scenarios
        .par_iter()
        .map(|(o, _)| solve_recourse(case, nc, z, p_g, o, nc_mode))
        .collect();
    results.into_iter().collect()
}

fn extract_first_stage(case: &ScotsCase, fs: &FirstStage, primal: &[f64]) -> (EdgeMask, Vec<f64>, f64) {
    let z = EdgeMask::new(fs.z.iter().map(|v| primal[v.0] > 0.5).collect());
    let p_g: Vec<f64> = fs.p_g.iter().map(|v| primal[v.0]).collect();
    let f_cost: f64 = case
        .generators
        .iter()
        .enumerate()
        .map(|(k, g)| g.cost * p_g[k])
        .sum();
    (z, p_g, f_cost)
}

fn assemble(
    set: &ScenarioSet,
    nc_mode: NcMode,
    z: EdgeMask,
    p_g: Vec<f64>,
    first_stage_cost: f64,
    recourse: Vec<RecourseResult>,
    rounds: usize,
    gap: f64,
) -> ScotsSolution {
    let costs: Vec<f64> = recourse.iter().map(|r| r.cost).collect();
    let second = aggregate(set.mode, set, &costs);
    let scenarios: Vec<ScenarioOutcome> = set
        .scenarios
        .iter()
        .zip(recourse.iter())
        .map(|((o, p), r)| ScenarioOutcome {
            contingency: o.clone(),
            probability: *p,
            cost: r.cost,
            z_tilde_class: r.z_tilde_class,
            z_plus: r.z_plus.clone(),
            z_minus: r.z_minus.clone(),
            shed_total: r.shed_total,
        })
        .collect();
    ScotsSolution {
        mode: set.mode,
        nc_mode,
        z: z.bits().to_vec(),
        p_g,
        first_stage_cost,
        second_stage_value: second,
        objective: first_stage_cost + second,
        scenarios,
        rounds,
        convergence_gap: gap,
    }
}

fn solve_full_form(
    case: &ScotsCase,
    nc: &NcBundle,
    set: &ScenarioSet,
    nc_mode: NcMode,
    encoding: NcEncoding,
    options: &TwoStageOptions,
) -> Result<ScotsSolution, ScotsError> {
    let all: BTreeSet<usize> = (0..set.scenarios.len()).collect();
    let (model, fs) = build_master(case, nc, set, nc_mode, encoding, &BTreeSet::new(), &all)?;
    let sol = solver::solve_milp(&model.to_problem(), &options.milp)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(ScotsError::Infeasible),
        other => {
            return Err(ScotsError::Solver(solver::SolverError::NumericalFailure(
                format!("extensive form ended with {other:?}"),
            )))
        }
    }
    let (z, p_g, f_cost) = extract_first_stage(case, &fs, &sol.primal);
    let recourse = audit_recourse(case, nc, set, &z, &p_g, nc_mode)?;
    Ok(assemble(set, nc_mode, z, p_g, f_cost, recourse, 1, 0.0))
}

fn solve_by_activation(
    case: &ScotsCase,
    nc: &NcBundle,
    set: &ScenarioSet,
    nc_mode: NcMode,
    encoding: NcEncoding,
    options: &TwoStageOptions,
) -> Result<ScotsSolution, ScotsError> {
    let mut crit1_cuts: BTreeSet<usize> = BTreeSet::new();
    let mut cost_blocks: BTreeSet<usize> = BTreeSet::new();

    for round in 1..=options.max_rounds {
        let (model, fs) =
            build_master(case, nc, set, nc_mode, encoding, &crit1_cuts, &cost_blocks)?;
        if model.num_rows() > options.master_row_limit {
            return Err(ScotsError::ExplosionGuard(format!(
                "master grew to {} rows (limit {})",
                model.num_rows(),
                options.master_row_limit
            )));
        }
        let sol = solver::solve_milp(&model.to_problem(), &options.milp)?;
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => return Err(ScotsError::Infeasible),
            other => {
                return Err(ScotsError::Solver(solver::SolverError::NumericalFailure(
                    format!("master round {round} ended with {other:?}"),
                )))
            }
        }
        let master_obj = sol.objective;
        let (z, p_g, f_cost) = extract_first_stage(case, &fs, &sol.primal);

        // connectedness screening before any recourse work
        if nc_mode == NcMode::FullCriteria {
            let mut added = false;
            for (s, (o, _)) in set.scenarios.iter().enumerate() {
                if !o.is_lambda_branch(case.lambda) || crit1_cuts.contains(&s) {
                    continue;
                }
                let z_tilde = EdgeMask::new(
                    (0..case.topology.branch_count())
                        .map(|e| z.is_on(e) && o.o_b[e])
                        .collect(),
                );
                let objective = oracle_objective(&case.topology, &z_tilde, &nc.balanced.c);
                if classify(objective as f64, &nc.balanced, nc.n_u()) == Klass::OtherDisconnected
                {
                    crit1_cuts.insert(s);
                    added = true;
                }
            }
            if added {
                continue;
            }
        }

        let recourse = audit_recourse(case, nc, set, &z, &p_g, nc_mode)?;
        if let Some(bad) = recourse.iter().find(|r| r.criterion1_violated) {
            // the screening pass covers every λ-branch scenario in the set,
            // so a violation here is an internal inconsistency
            return Err(ScotsError::Solver(solver::SolverError::NumericalFailure(
                format!("screening missed a violated scenario {}", bad.label),
            )));
        }
        let costs: Vec<f64> = recourse.iter().map(|r| r.cost).collect();
        let upper = f_cost + aggregate(set.mode, set, &costs);
        let gap = upper - master_obj;
        if gap <= options.gap_tol * (1.0 + upper.abs()) {
            return Ok(assemble(
                set, nc_mode, z, p_g, f_cost, recourse, round, gap.max(0.0),
            ));
        }

        // activate the scenario with the largest understatement
        let mut worst: Option<(usize, f64)> = None;
        for (s, r) in recourse.iter().enumerate() {
            if cost_blocks.contains(&s) {
                continue;
            }
            let understated = match set.mode {
                ScenarioMode::Stochastic => set.scenarios[s].1 * r.cost,
                ScenarioMode::Robust => r.cost,
            };
            if understated > 0.0 && worst.map_or(true, |(_, w)| understated > w) {
                worst = Some((s, understated));
            }
        }
        match worst {
            Some((s, _)) => {
                cost_blocks.insert(s);
            }
            None => {
                // nothing left to activate; accept with the recorded gap
                return Ok(assemble(
                    set, nc_mode, z, p_g, f_cost, recourse, round, gap,
                ));
            }
        }
    }
    Err(ScotsError::NoConvergence(options.max_rounds))
}
