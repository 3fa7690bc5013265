//! LP-based branch and bound.
//!
//! Best-bound node selection with most-fractional branching; node
//! re-solves warm-start the shared tableau through the dual simplex, so
//! jumping between nodes in the pool only replays integer bound changes.

use super::simplex::{LpOutcome, Tableau};
use super::{record_lp_audit, Problem, SolveStats, Solution, SolverError, Status};
use super::{DEFAULT_ABS_GAP, FEAS_TOL, INT_TOL};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
pub struct MilpOptions {
    /// Absolute optimality gap for pruning and termination.
    pub abs_gap: f64,
    pub node_limit: u64,
    /// Optional feasible point used as the initial incumbent.
    pub initial: Option<Vec<f64>>,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            abs_gap: DEFAULT_ABS_GAP,
            node_limit: 2_000_000,
            initial: None,
        }
    }
}

struct NodeData {
    parent: usize,
    /// Integer variable whose bounds this node tightened (usize::MAX at root).
    var: usize,
    lo: f64,
    hi: f64,
    bound: f64,
}

struct PoolEntry {
    bound: f64,
    id: u64,
    node: usize,
}

impl PartialEq for PoolEntry {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for PoolEntry {}
impl PartialOrd for PoolEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PoolEntry {
    // BinaryHeap is a max-heap: invert so the smallest bound pops first,
    // oldest node first among ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub(crate) fn solve(p: &Problem, options: &MilpOptions) -> Result<Solution, SolverError> {
    if !p.has_integers() {
        return super::simplex::solve(p);
    }
    let int_vars: Vec<usize> = (0..p.num_vars()).filter(|&j| p.integer[j]).collect();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(point) = &options.initial {
        verify_point(p, point)?;
        let obj = objective_of(p, point);
        incumbent = Some((obj, point.clone()));
    }

    let mut tab = Tableau::new(p);
    let mut stats = SolveStats::default();
    let root_outcome = tab.primal_solve();
    stats.nodes = 1;
    match root_outcome {
        LpOutcome::Infeasible => {
            return Ok(done(incumbent, Status::Infeasible, &tab, stats));
        }
        LpOutcome::Unbounded => {
            return Ok(Solution {
                status: Status::Unbounded,
                objective: f64::NAN,
                primal: Vec::new(),
                row_duals: Vec::new(),
                stats,
            });
        }
        LpOutcome::IterationLimit => {
            return Ok(done(incumbent, Status::IterationLimit, &tab, stats));
        }
        LpOutcome::Optimal => {}
    }

    let mut arena: Vec<NodeData> = vec![NodeData {
        parent: usize::MAX,
        var: usize::MAX,
        lo: 0.0,
        hi: 0.0,
        bound: tab.objective_value(),
    }];
    let mut pool: BinaryHeap<PoolEntry> = BinaryHeap::new();
    let mut next_id: u64 = 0;
    pool.push(PoolEntry { bound: arena[0].bound, id: next_id, node: 0 });
    next_id += 1;

    let root_bounds: Vec<(f64, f64)> = int_vars.iter().map(|&j| (p.lower[j], p.upper[j])).collect();
    let mut current: Vec<(f64, f64)> = root_bounds.clone();
    let mut path_buf: Vec<(usize, f64, f64)> = Vec::new();
    let mut best_proven_bound = f64::NEG_INFINITY;

    while let Some(entry) = pool.pop() {
        if let Some((inc_obj, _)) = &incumbent {
            if entry.bound >= inc_obj - options.abs_gap {
                best_proven_bound = best_proven_bound.max(entry.bound);
                break; // best-bound order: everything left is prunable
            }
        }
        if stats.nodes >= options.node_limit {
            return Ok(done(incumbent, Status::IterationLimit, &tab, stats));
        }

        // replay the node's integer bounds onto the shared tableau
        path_buf.clear();
        let mut at = entry.node;
        while at != usize::MAX {
            let nd = &arena[at];
            if nd.var != usize::MAX {
                path_buf.push((nd.var, nd.lo, nd.hi));
            }
            at = nd.parent;
        }
        let mut wanted = root_bounds.clone();
        for &(var, lo, hi) in path_buf.iter().rev() {
            let slot = int_vars.binary_search(&var).expect("int var");
            wanted[slot].0 = wanted[slot].0.max(lo);
            wanted[slot].1 = wanted[slot].1.min(hi);
        }
        for (slot, &j) in int_vars.iter().enumerate() {
            if wanted[slot] != current[slot] {
                tab.set_var_bounds(j, wanted[slot].0, wanted[slot].1);
                current[slot] = wanted[slot];
            }
        }

        stats.nodes += 1;
        let mut outcome = tab.dual_resolve();
        if outcome != LpOutcome::Optimal && outcome != LpOutcome::Infeasible {
            outcome = tab.reset_and_solve();
        }
        match outcome {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                // children of a bounded relaxation stay bounded
                return Err(SolverError::NumericalFailure(
                    "unbounded node below bounded root".to_string(),
                ));
            }
            LpOutcome::IterationLimit => {
                return Ok(done(incumbent, Status::IterationLimit, &tab, stats));
            }
            LpOutcome::Optimal => {}
        }

        tab.refresh();
        let (pr, dr, gap) = tab.residuals();
        let obj = tab.objective_value();
        record_lp_audit(gap <= 1e-6 * (1.0 + obj.abs()) && pr <= 1e-6 && dr <= 1e-6);
        stats.primal_residual = stats.primal_residual.max(pr);
        stats.dual_residual = stats.dual_residual.max(dr);
        stats.duality_gap = stats.duality_gap.max(gap);
        if pr > 1e-6 || dr > 1e-6 {
            tab.try_rebuild()?;
            if tab.primal_solve() != LpOutcome::Optimal {
                continue;
            }
        }

        let obj = tab.objective_value();
        if let Some((inc_obj, _)) = &incumbent {
            if obj >= inc_obj - options.abs_gap {
                continue;
            }
        }

        let x = tab.primal_values();
        let frac = most_fractional(&int_vars, &x);
        match frac {
            None => {
                let rounded = round_integers(p, &x);
                incumbent = Some((objective_of(p, &rounded), rounded));
            }
            Some((j, v)) => {
                let down = NodeData {
                    parent: entry.node,
                    var: j,
                    lo: p.lower[j],
                    hi: v.floor(),
                    bound: obj,
                };
                let up = NodeData {
                    parent: entry.node,
                    var: j,
                    lo: v.ceil(),
                    hi: p.upper[j],
                    bound: obj,
                };
                for nd in [down, up] {
                    arena.push(nd);
                    pool.push(PoolEntry {
                        bound: obj,
                        id: next_id,
                        node: arena.len() - 1,
                    });
                    next_id += 1;
                }
            }
        }
    }
    let _ = best_proven_bound;

    Ok(done(incumbent, Status::Infeasible, &tab, stats))
}

fn done(
    incumbent: Option<(f64, Vec<f64>)>,
    status_if_none: Status,
    tab: &Tableau,
    mut stats: SolveStats,
) -> Solution {
    stats.pivots = tab.pivots;
    stats.refreshes = tab.refreshes;
    stats.rebuilds = tab.rebuilds;
    match incumbent {
        Some((obj, x)) => Solution {
            status: if status_if_none == Status::IterationLimit {
                Status::IterationLimit
            } else {
                Status::Optimal
            },
            objective: obj,
            primal: x,
            row_duals: Vec::new(),
            stats,
        },
        None => Solution {
            status: status_if_none,
            objective: f64::NAN,
            primal: Vec::new(),
            row_duals: Vec::new(),
            stats,
        },
    }
}

fn most_fractional(int_vars: &[usize], x: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for &j in int_vars {
        let v = x[j];
        let dist = (v - v.round()).abs();
        if dist > INT_TOL {
            // closest to one half wins; first index breaks ties
            let score = (dist - 0.5).abs();
            if best.map_or(true, |(_, _, s)| score < s - 1e-12) {
                best = Some((j, v, score));
            }
        }
    }
    best.map(|(j, v, _)| (j, v))
}

fn round_integers(p: &Problem, x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(j, &v)| if p.integer[j] { v.round() } else { v })
        .collect()
}

fn objective_of(p: &Problem, x: &[f64]) -> f64 {
    p.objective.iter().zip(x.iter()).map(|(c, v)| c * v).sum()
}

fn verify_point(p: &Problem, x: &[f64]) -> Result<(), SolverError> {
    if x.len() != p.num_vars() {
        return Err(SolverError::BadWarmStart(format!(
            "point has {} entries, problem has {}",
            x.len(),
            p.num_vars()
        )));
    }
    for j in 0..x.len() {
        let tol = FEAS_TOL * (1.0 + x[j].abs()) + 1e-9;
        if x[j] < p.lower[j] - tol || x[j] > p.upper[j] + tol {
            return Err(SolverError::BadWarmStart(format!("variable {j} out of bounds")));
        }
        if p.integer[j] && (x[j] - x[j].round()).abs() > INT_TOL {
            return Err(SolverError::BadWarmStart(format!("variable {j} not integral")));
        }
    }
    for (i, row) in p.constraints.iter().enumerate() {
        let act: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        let tol = 1e-6 * (1.0 + row.rhs.abs());
        let ok = match row.sense {
            super::Sense::Le => act <= row.rhs + tol,
            super::Sense::Ge => act >= row.rhs - tol,
            super::Sense::Eq => (act - row.rhs).abs() <= tol,
        };
        if !ok {
            return Err(SolverError::BadWarmStart(format!("row {i} violated")));
        }
    }
    Ok(())
}
