//! Exhaustive post-solution sweeps: the two audit fractions and the
//! criterion checks.
//!
//! Both sweeps enumerate every contingency within the failure budget. The
//! first fraction needs only the first-stage mask: it counts λ-branch
//! contingencies whose post-contingency topology lands in the other-
//! disconnection band. The second re-solves the corrective problem per
//! contingency at the fixed first stage and counts the ones where corrective
//! switching actually fired and left the network worse-connected than the
//! second criterion requires.

use super::recourse::solve_recourse;
use super::{NcBundle, ScotsCase, ScotsError, ScotsSolution};
use crate::connectedness::{classify, oracle_objective, Klass};
use crate::contingency::{enumerate_contingencies, ContingencyVector};
use crate::netgraph::EdgeMask;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NcStatistics {
    pub eta: usize,
    pub lambda: usize,
    /// λ-branch contingencies with a disconnected-but-not-inevitable
    /// post-contingency topology, over all λ-branch contingencies.
    pub r_tilde: Option<f64>,
    pub lambda_branch_total: usize,
    pub lambda_branch_bad: usize,
    /// Contingencies where corrective switching fired and weakened
    /// connectedness beyond what the second criterion allows, over all
    /// contingencies within the budget.
    pub r_bar: Option<f64>,
    pub total: usize,
    pub r_bar_bad: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriteriaAudit {
    /// Labels of λ-branch contingencies violating criterion 1.
    pub criterion1_bad: Vec<String>,
    /// Labels of contingencies where the corrective response violates
    /// criterion 2.
    pub criterion2_bad: Vec<String>,
}

impl CriteriaAudit {
    pub fn clean(&self) -> bool {
        self.criterion1_bad.is_empty() && self.criterion2_bad.is_empty()
    }
}

fn z_tilde_of(case: &ScotsCase, z: &EdgeMask, o: &ContingencyVector) -> EdgeMask {
    EdgeMask::new(
        (0..case.topology.branch_count())
            .map(|e| z.is_on(e) && o.o_b[e])
            .collect(),
    )
}

fn restored_mask(case: &ScotsCase, z_bar: &[bool], o: &ContingencyVector) -> EdgeMask {
    EdgeMask::new(
        (0..case.topology.branch_count())
            .map(|e| z_bar[e] || !o.o_b[e])
            .collect(),
    )
}

struct SweepRow {
    label: String,
    lambda_branch: bool,
    klass: Klass,
    switched: bool,
    criterion2_ok: bool,
}

fn sweep(
    case: &ScotsCase,
    nc: &NcBundle,
    solution: &ScotsSolution,
    cap: usize,
) -> Result<Vec<SweepRow>, ScotsError> {
    let contingencies = enumerate_contingencies(
        case.num_generators(),
        case.topology.branch_count(),
        case.eta,
        cap,
    )?;
    let z = solution.z_mask();
    let rows: Vec<Result<SweepRow, ScotsError>> = contingencies
        .par_iter()
        .map(|o| {
            let z_tilde = z_tilde_of(case, &z, o);
            let objective = oracle_objective(&case.topology, &z_tilde, &nc.balanced.c);
            let klass = classify(objective as f64, &nc.balanced, nc.n_u());
            let recourse = solve_recourse(case, nc, &z, &solution.p_g, o, solution.nc_mode)?;
            let switched = recourse.switches() > 0;
            let criterion2_ok = match klass {
                Klass::Connected => case
                    .topology
                    .is_connected(&EdgeMask::new(recourse.z_bar.clone()))?,
                Klass::WDisconnected => case
                    .topology
                    .is_connected(&restored_mask(case, &recourse.z_bar, o))?,
                Klass::OtherDisconnected => true,
            };
            Ok(SweepRow {
                label: o.label(),
                lambda_branch: o.is_lambda_branch(case.lambda),
                klass,
                switched,
                criterion2_ok,
            })
        })
        .collect();
    rows.into_iter().collect()
}

/// Exhaustive audit fractions for a solved case.
pub fn evaluate_statistics(
    case: &ScotsCase,
    nc: &NcBundle,
    solution: &ScotsSolution,
    cap: usize,
) -> Result<NcStatistics, ScotsError> {
    let rows = sweep(case, nc, solution, cap)?;
    let lambda_branch_total = rows.iter().filter(|r| r.lambda_branch).count();
    let lambda_branch_bad = rows
        .iter()
        .filter(|r| r.lambda_branch && r.klass == Klass::OtherDisconnected)
        .count();
    let total = rows.len();
    let r_bar_bad = rows
        .iter()
        .filter(|r| {
            matches!(r.klass, Klass::Connected | Klass::WDisconnected)
                && r.switched
                && !r.criterion2_ok
        })
        .count();
    Ok(NcStatistics {
        eta: case.eta,
        lambda: case.lambda,
        r_tilde: if lambda_branch_total > 0 {
            Some(lambda_branch_bad as f64 / lambda_branch_total as f64)
        } else {
            None
        },
        lambda_branch_total,
        lambda_branch_bad,
        r_bar: if total > 0 {
            Some(r_bar_bad as f64 / total as f64)
        } else {
            None
        },
        total,
        r_bar_bad,
    })
}

/// Exhaustive criterion audit: criterion 1 over λ-branch contingencies and
/// criterion 2 over every corrective response, regardless of whether
/// switching fired.
pub fn audit_criteria(
    case: &ScotsCase,
    nc: &NcBundle,
    solution: &ScotsSolution,
    cap: usize,
) -> Result<CriteriaAudit, ScotsError> {
    let rows = sweep(case, nc, solution, cap)?;
    Ok(CriteriaAudit {
        criterion1_bad: rows
            .iter()
            .filter(|r| r.lambda_branch && r.klass == Klass::OtherDisconnected)
            .map(|r| r.label.clone())
            .collect(),
        criterion2_bad: rows
            .iter()
            .filter(|r| !r.criterion2_ok)
            .map(|r| r.label.clone())
            .collect(),
    })
}
