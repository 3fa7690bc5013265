//! Balanced injection vectors.
//!
//! A vector c over the buses is *uniquely balanced* when it sums to zero over
//! the whole bus set and to a nonzero value over every proper connected
//! node-induced subgraph. It is additionally *cut-aware balanced* (against a
//! cut catalog with max component count n_u) when some radius r bounds every
//! stranded-set sum by r in magnitude while every remaining catalog sum stays
//! at least n_u·r in magnitude. Integral vectors are preferred throughout:
//! they make both classification thresholds exact.

use crate::contingency::{WCatalog, WMatrices};
use crate::netgraph::{SubgraphCatalog, Topology};
use crate::solver::{self, Expr, MilpOptions, Model, Status};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BalanceError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("synthesis program is infeasible")]
    Infeasible,
    #[error("synthesized vector failed verification (bad big-M or eps)")]
    VerificationFailed,
    #[error("feasibility search exhausted after {0} candidates")]
    SearchExhausted(u64),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
}

/// A candidate injection vector together with its subgraph sums and balance
/// certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalancedVector {
    /// Per-bus integer injections, bus v at index v-1.
    pub c: Vec<i64>,
    /// Subgraph sums over the catalog; entry 0 is the full-set sum.
    pub b: Vec<i64>,
    /// Radius bounding the stranded-set sums.
    pub r: f64,
    /// Second-smallest absolute value among the entries of `b`.
    pub b_second_min_abs: i64,
    pub uniquely_balanced: bool,
    pub w_uniquely_balanced: bool,
}

impl BalancedVector {
    /// Lower classification threshold `2‖b‖₋₂∞`.
    pub fn lower_threshold(&self) -> f64 {
        2.0 * self.b_second_min_abs as f64
    }

    /// Upper classification threshold `n_u·r`.
    pub fn upper_threshold(&self, n_u: usize) -> f64 {
        n_u as f64 * self.r
    }
}

/// Second-smallest absolute value among the entries (counting multiplicity).
pub fn second_min_abs(values: &[i64]) -> i64 {
    let mut best = [i64::MAX, i64::MAX];
    for &v in values {
        let a = v.abs();
        if a < best[0] {
            best[1] = best[0];
            best[0] = a;
        } else if a < best[1] {
            best[1] = a;
        }
    }
    best[1]
}

/// The closed-form uniquely balanced vector (n-1, -1, ..., -1): a proper
/// subset holding bus 1 sums to n-k > 0 and one without it sums to -k < 0.
pub fn trivial_uniquely_balanced(
    topology: &Topology,
    catalog: &SubgraphCatalog,
    w: Option<(&WMatrices, usize)>,
) -> BalancedVector {
    let n = topology.bus_count();
    let mut c = vec![-1i64; n];
    c[0] = n as i64 - 1;
    let r = match w {
        Some((m, _)) if !m.e_w.is_empty() => WMatrices::row_sums(&m.e_w, &c)
            .iter()
            .map(|s| s.abs())
            .max()
            .unwrap_or(0) as f64,
        _ => 0.0,
    };
    assemble(c, r, catalog, w)
}

/// Evaluates every clause of the balance definition directly.
pub fn verify_w_balance(
    c: &[i64],
    r: f64,
    catalog: &SubgraphCatalog,
    w_matrices: &WMatrices,
    n_u: usize,
) -> Result<BalancedVector, BalanceError> {
    let n = catalog.subsets[0].len();
    if c.len() != n {
        return Err(BalanceError::DimensionMismatch(format!(
            "c has {} entries, catalog covers {} buses",
            c.len(),
            n
        )));
    }
    Ok(assemble(c.to_vec(), r, catalog, Some((w_matrices, n_u))))
}

fn assemble(
    c: Vec<i64>,
    r: f64,
    catalog: &SubgraphCatalog,
    w: Option<(&WMatrices, usize)>,
) -> BalancedVector {
    let b = catalog.subset_sums(&c);
    let uniquely_balanced = b[0] == 0 && b[1..].iter().all(|&v| v != 0);
    let w_uniquely_balanced = match w {
        None => false,
        Some((m, n_u)) => {
            let e_max = WMatrices::row_sums(&m.e_w, &c)
                .iter()
                .map(|s| s.abs())
                .max()
                .unwrap_or(0);
            let j_min = WMatrices::row_sums(&m.j_w, &c)
                .iter()
                .map(|s| s.abs())
                .min()
                .unwrap_or(i64::MAX);
            uniquely_balanced
                && r >= 0.0
                && (e_max as f64) <= r + 1e-9
                && (m.j_w.is_empty() || j_min as f64 >= n_u as f64 * r - 1e-9)
        }
    };
    let b_second_min_abs = second_min_abs(&b);
    BalancedVector {
        c,
        b,
        r,
        b_second_min_abs,
        uniquely_balanced,
        w_uniquely_balanced,
    }
}

/// Options for `synthesize_w_balanced`.
#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    pub eps: f64,
    /// Box bound on the entries of c; the big-M is (n+1) times this.
    pub c_bound: Option<f64>,
    /// Above this many sign binaries the exact program is skipped in favor of
    /// the seeded feasibility search.
    pub milp_binary_limit: usize,
    pub seed: u64,
    pub search_tries: u64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            eps: 1.0,
            c_bound: None,
            milp_binary_limit: 48,
            seed: 424242,
            search_tries: 2_000_000,
        }
    }
}

/// Synthesizes a cut-aware balanced vector: any feasible point of the sign
/// program suffices, so small catalogs go through the exact mixed-integer
/// program and large ones through a seeded integer feasibility search whose
/// output is verified against the definition clause by clause.
pub fn synthesize_w_balanced(
    topology: &Topology,
    catalog: &SubgraphCatalog,
    w_catalog: &WCatalog,
    w_matrices: &WMatrices,
    options: &SynthesisOptions,
) -> Result<BalancedVector, BalanceError> {
    let n_s = catalog.len();
    let n_d = w_matrices.n_d();
    let binaries = (n_s - 1) + n_d;
    if binaries <= options.milp_binary_limit {
        synthesize_exact(topology, catalog, w_catalog, w_matrices, options)
    } else {
        synthesize_search(topology, catalog, w_catalog, w_matrices, options)
    }
}

/// The sign program, stated verbatim: variables (c, b, beta, gamma, r),
/// objective min r, with `b = Jc`, `b_1 = 0`, the stranded sums within
/// [-r, r], big-M sign disjunctions giving |b_i| >= eps for i >= 2, and
/// big-M sign disjunctions giving |J_w c| >= n_u r. Entries of c are
/// declared integer so the thresholds derived from the result are exact;
/// r >= 0 covers the empty-catalog case where the radius is otherwise free.
fn synthesize_exact(
    _topology: &Topology,
    catalog: &SubgraphCatalog,
    w_catalog: &WCatalog,
    w_matrices: &WMatrices,
    options: &SynthesisOptions,
) -> Result<BalancedVector, BalanceError> {
    let n = catalog.subsets[0].len();
    let n_s = catalog.len();
    let n_u = w_catalog.n_u;
    let eps = options.eps;
    let c_bound = options.c_bound.unwrap_or(10.0 * n as f64);
    let big_m = (n as f64 + 1.0) * c_bound;

    let mut model = Model::new();
    let c_vars: Vec<_> = (0..n)
        .map(|v| model.integer_var(format!("c{}", v + 1), -c_bound, c_bound))
        .collect();
    let r = model.var("r", 0.0, n as f64 * c_bound);
    model.objective[r.0] = 1.0;

    let sum_expr = |set: &[usize]| -> Expr {
        let mut e = Expr::default();
        for &v in set {
            e = e.add_term(c_vars[v - 1], 1.0);
        }
        e
    };

    // b_1 = 0; b kept implicit as Jc expressions
    model.eq("full_sum", sum_expr(&catalog.subsets[0]), 0.0);
    // stranded sums within the radius
    for (i, row) in w_matrices.e_w.iter().enumerate() {
        let e = sum_expr(row);
        model.le(
            format!("ew{i}.hi"),
            e.clone().minus(&Expr::from(r)),
            0.0,
        );
        model.ge(format!("ew{i}.lo"), e.plus(&Expr::from(r)), 0.0);
    }
    // sign disjunction per proper catalog row: b_i >= eps or b_i <= -eps
    for i in 1..n_s {
        let beta = model.binary(format!("beta{i}"));
        let e = sum_expr(&catalog.subsets[i]);
        model.ge(
            format!("b{i}.pos"),
            e.clone().add_term(beta, big_m),
            eps,
        );
        model.le(format!("b{i}.neg"), e.add_term(beta, big_m), -eps + big_m);
    }
    // pruned rows: J_w c >= n_u r or <= -n_u r
    for (k, row) in w_matrices.j_w.iter().enumerate() {
        let gamma = model.binary(format!("gamma{k}"));
        let e = sum_expr(row);
        model.ge(
            format!("jw{k}.pos"),
            e.clone()
                .add_term(r, -(n_u as f64))
                .add_term(gamma, big_m),
            0.0,
        );
        model.le(
            format!("jw{k}.neg"),
            e.add_term(r, n_u as f64).add_term(gamma, big_m),
            big_m,
        );
    }

    let sol = solver::solve_milp(&model.to_problem(), &MilpOptions::default())?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(BalanceError::Infeasible),
        other => {
            return Err(BalanceError::Solver(solver::SolverError::NumericalFailure(
                format!("synthesis solve ended with {other:?}"),
            )))
        }
    }
    let c: Vec<i64> = c_vars
        .iter()
        .map(|v| sol.primal[v.0].round() as i64)
        .collect();
    // tightest radius for the rounded vector
    let e_max = WMatrices::row_sums(&w_matrices.e_w, &c)
        .iter()
        .map(|s| s.abs())
        .max()
        .unwrap_or(0) as f64;
    let out = assemble(c, e_max, catalog, Some((w_matrices, n_u)));
    if out.w_uniquely_balanced {
        Ok(out)
    } else {
        Err(BalanceError::VerificationFailed)
    }
}

/// Seeded feasibility search over integer vectors for catalogs too large for
/// the sign program. Buses inside stranded sets get unit-magnitude values
/// (radius 1); the rest draw from a widening range until every remaining
/// catalog sum clears the n_u margin. Any hit is a feasible point of the
/// sign program with eps = 1.
fn synthesize_search(
    topology: &Topology,
    catalog: &SubgraphCatalog,
    w_catalog: &WCatalog,
    w_matrices: &WMatrices,
    options: &SynthesisOptions,
) -> Result<BalancedVector, BalanceError> {
    let n = topology.bus_count();
    let n_u = w_catalog.n_u.max(1) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut stranded_buses: Vec<usize> = w_matrices
        .e_w
        .iter()
        .flat_map(|row| row.iter().copied())
        .collect();
    stranded_buses.sort_unstable();
    stranded_buses.dedup();

    for tries in 0..options.search_tries {
        // widen the draw range as attempts accumulate
        let half_width = (4 * n as i64) + (tries as i64 / 500) * n as i64;
        let mut c = vec![0i64; n];
        for v in 1..=n {
            if stranded_buses.contains(&v) {
                c[v - 1] = if rng.gen_bool(0.5) { 1 } else { -1 };
            } else {
                let mut x = 0;
                while x == 0 {
                    x = rng.gen_range(-half_width..=half_width);
                }
                c[v - 1] = x;
            }
        }
        // repair the total onto a non-stranded bus
        let total: i64 = c.iter().sum();
        let repair = (1..=n).find(|v| !stranded_buses.contains(v)).unwrap_or(1) - 1;
        c[repair] -= total;
        if c[repair] == 0 {
            continue;
        }
        let r = if w_matrices.e_w.is_empty() {
            0.0
        } else {
            WMatrices::row_sums(&w_matrices.e_w, &c)
                .iter()
                .map(|s| s.abs())
                .max()
                .unwrap_or(0) as f64
        };
        if !w_matrices.e_w.is_empty() && r < 1.0 {
            continue; // a zero stranded sum breaks unique balance anyway
        }
        let candidate = assemble(c, r, catalog, Some((w_matrices, n_u as usize)));
        if candidate.w_uniquely_balanced {
            return Ok(candidate);
        }
    }
    Err(BalanceError::SearchExhausted(options.search_tries))
}
