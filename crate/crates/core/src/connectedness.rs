//! Electrical-flow connectedness region, the mask classification LP, and the
//! analytic component-sum oracle.
//!
//! The region over branch statuses u is the big-M feasibility system in
//! auxiliary potentials ϑ and flows ρ:
//!
//! ```text
//!   M(u - 1 - φ1) ≤ Eᵀϑ - ρ ≤ M(1 - u + φ1)
//!           -M(u + φ1) ≤ ρ ≤ M(u + φ1)
//!     -φM1 ≤ Eρ - (c + d) ≤ φM1
//! ```
//!
//! With φ = 0 and d = 0, membership of a mask is equivalent to connectedness
//! of its topology. The classification program minimizes 1ᵀ(d₊+d₋) subject to
//! membership with slack injections d = d₊-d₋; its optimum is 0 exactly on
//! connected masks, equals the sum of absolute component sums of c otherwise,
//! and the catalog thresholds split the disconnected band into inevitable and
//! other disconnections.

use crate::balance::BalancedVector;
use crate::netgraph::{EdgeMask, Topology};
use crate::solver::{self, Constraint, Expr, Model, Problem, Sense, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("classification requires a cut-aware balanced vector")]
    NotWBalanced,
    #[error("mask length {got} does not match branch count {expected}")]
    MaskLength { got: usize, expected: usize },
    #[error("objective {objective} landed in the forbidden band (0, {lower_threshold})")]
    ForbiddenBand { objective: f64, lower_threshold: f64 },
    #[error("big-M audit failed: {0} void rows binding at M")]
    BigMTooSmall(usize),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Klass {
    Connected,
    WDisconnected,
    OtherDisconnected,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub objective: f64,
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    pub klass: Klass,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub big_m: f64,
    pub duality_gap: f64,
}

/// Default big-M for the region: flows are bounded by the total absolute
/// injection plus the worst slack mass, which 2·n·‖c‖₁ dominates.
pub fn default_region_big_m(topology: &Topology, c: &[i64]) -> f64 {
    let norm1: i64 = c.iter().map(|v| v.abs()).sum();
    2.0 * topology.bus_count() as f64 * norm1 as f64
}

/// Fresh auxiliary variables of one region membership block.
pub struct RegionVars {
    pub theta: Vec<VarId>,
    pub rho: Vec<VarId>,
}

/// Emits the three big-M constraint groups over (u, ϑ, ρ) with the status
/// vector u, the deactivation level φ, and the slack injection d given as
/// affine expressions; usable inside any larger program.
pub fn region_constraints(
    model: &mut Model,
    topology: &Topology,
    label: &str,
    u: &[Expr],
    phi: &Expr,
    c: &[i64],
    d: Option<&[Expr]>,
    big_m: f64,
) -> RegionVars {
    let n = topology.bus_count();
    let n_b = topology.branch_count();
    assert_eq!(u.len(), n_b, "status expression per branch");
    let theta: Vec<VarId> = (0..n)
        .map(|i| model.free_var(format!("{label}.theta{}", i + 1)))
        .collect();
    let rho: Vec<VarId> = (0..n_b)
        .map(|e| model.free_var(format!("{label}.rho{}", e + 1)))
        .collect();

    for (e, &(a, b)) in topology.branches().iter().enumerate() {
        let grad = Expr::term(theta[a - 1], 1.0)
            .add_term(theta[b - 1], -1.0)
            .add_term(rho[e], -1.0);
        // Eᵀϑ - ρ ≤ M(1 - u_e + φ)
        model.le(
            format!("{label}.grad_hi{e}"),
            grad.clone()
                .plus(&u[e].clone().scaled(big_m))
                .minus(&phi.clone().scaled(big_m)),
            big_m,
        );
        // Eᵀϑ - ρ ≥ M(u_e - 1 - φ)
        model.ge(
            format!("{label}.grad_lo{e}"),
            grad.plus(&u[e].clone().scaled(-big_m))
                .plus(&phi.clone().scaled(big_m)),
            -big_m,
        );
        // ρ ≤ M(u_e + φ) and ρ ≥ -M(u_e + φ)
        model.le(
            format!("{label}.flow_hi{e}"),
            Expr::from(rho[e])
                .minus(&u[e].clone().scaled(big_m))
                .minus(&phi.clone().scaled(big_m)),
            0.0,
        );
        model.ge(
            format!("{label}.flow_lo{e}"),
            Expr::from(rho[e])
                .plus(&u[e].clone().scaled(big_m))
                .plus(&phi.clone().scaled(big_m)),
            0.0,
        );
    }
    let incidence = topology.incidence_matrix();
    for i in 0..n {
        let mut divergence = Expr::default();
        for e in 0..n_b {
            if incidence[i][e] != 0.0 {
                divergence = divergence.add_term(rho[e], incidence[i][e]);
            }
        }
        if let Some(d) = d {
            divergence = divergence.minus(&d[i]);
        }
        // Eρ - (c + d) within ±φM
        model.le(
            format!("{label}.balance_hi{i}"),
            divergence.clone().minus(&phi.clone().scaled(big_m)),
            c[i] as f64,
        );
        model.ge(
            format!("{label}.balance_lo{i}"),
            divergence.plus(&phi.clone().scaled(big_m)),
            c[i] as f64,
        );
    }
    RegionVars { theta, rho }
}

/// The classification program in compact all-≤ form `min hᵀy, Ay ≤ w(z̃)`
/// with y = (d₊, d₋, ϑ, ρ) free and 4(n_n + n_b) rows.
///
/// Row order: per-branch gradient upper / gradient lower / flow upper / flow
/// lower blocks, then per-bus balance upper / balance lower / -d₊ ≤ 0 /
/// -d₋ ≤ 0 blocks. Each w entry is affine in one branch status.
#[derive(Debug, Clone)]
pub struct CompactForm {
    pub n: usize,
    pub n_b: usize,
    pub big_m: f64,
    pub rows: Vec<CompactRow>,
}

/// One row `a·y ≤ w_const + w_coeff·z̃_branch`.
#[derive(Debug, Clone)]
pub struct CompactRow {
    pub coeffs: Vec<(usize, f64)>,
    pub w_const: f64,
    pub w_branch: Option<(usize, f64)>,
}

impl CompactForm {
    pub fn num_y(&self) -> usize {
        3 * self.n + self.n_b
    }

    pub fn d_plus_index(&self, i: usize) -> usize {
        i
    }
    pub fn d_minus_index(&self, i: usize) -> usize {
        self.n + i
    }
    pub fn theta_index(&self, i: usize) -> usize {
        2 * self.n + i
    }
    pub fn rho_index(&self, e: usize) -> usize {
        3 * self.n + e
    }

    /// Objective vector h: ones on the two slack blocks.
    pub fn h(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.num_y()];
        for i in 0..2 * self.n {
            h[i] = 1.0;
        }
        h
    }

    pub fn w_value(&self, row: &CompactRow, mask: &EdgeMask) -> f64 {
        row.w_const
            + row
                .w_branch
                .map_or(0.0, |(e, k)| if mask.is_on(e) { k } else { 0.0 })
    }
}

pub fn compact_form(topology: &Topology, c: &[i64], big_m: f64) -> CompactForm {
    let n = topology.bus_count();
    let n_b = topology.branch_count();
    let mut form = CompactForm {
        n,
        n_b,
        big_m,
        rows: Vec::with_capacity(4 * (n + n_b)),
    };
    let th = |i: usize| 2 * n + i;
    let rho = |e: usize| 3 * n + e;
    for (e, &(a, b)) in topology.branches().iter().enumerate() {
        // ϑ_a - ϑ_b - ρ_e ≤ M(1 - z̃_e)
        form.rows.push(CompactRow {
            coeffs: vec![(th(a - 1), 1.0), (th(b - 1), -1.0), (rho(e), -1.0)],
            w_const: big_m,
            w_branch: Some((e, -big_m)),
        });
        // -(ϑ_a - ϑ_b) + ρ_e ≤ M(1 - z̃_e)
        form.rows.push(CompactRow {
            coeffs: vec![(th(a - 1), -1.0), (th(b - 1), 1.0), (rho(e), 1.0)],
            w_const: big_m,
            w_branch: Some((e, -big_m)),
        });
        // ρ_e ≤ M z̃_e and -ρ_e ≤ M z̃_e
        form.rows.push(CompactRow {
            coeffs: vec![(rho(e), 1.0)],
            w_const: 0.0,
            w_branch: Some((e, big_m)),
        });
        form.rows.push(CompactRow {
            coeffs: vec![(rho(e), -1.0)],
            w_const: 0.0,
            w_branch: Some((e, big_m)),
        });
    }
    let incidence = topology.incidence_matrix();
    for i in 0..n {
        let cols: Vec<(usize, f64)> = (0..n_b)
            .filter(|&e| incidence[i][e] != 0.0)
            .map(|e| (rho(e), incidence[i][e]))
            .collect();
        // Eρ - d₊ + d₋ ≤ c_i
        let mut hi = cols.clone();
        hi.push((i, -1.0));
        hi.push((n + i, 1.0));
        form.rows.push(CompactRow {
            coeffs: hi,
            w_const: c[i] as f64,
            w_branch: None,
        });
        // -Eρ + d₊ - d₋ ≤ -c_i
        let mut lo: Vec<(usize, f64)> = cols.iter().map(|&(j, v)| (j, -v)).collect();
        lo.push((i, 1.0));
        lo.push((n + i, -1.0));
        form.rows.push(CompactRow {
            coeffs: lo,
            w_const: -(c[i] as f64),
            w_branch: None,
        });
    }
    for i in 0..n {
        form.rows.push(CompactRow {
            coeffs: vec![(i, -1.0)],
            w_const: 0.0,
            w_branch: None,
        });
    }
    for i in 0..n {
        form.rows.push(CompactRow {
            coeffs: vec![(n + i, -1.0)],
            w_const: 0.0,
            w_branch: None,
        });
    }
    form
}

/// Closed-form optimum of the classification program: the sum of absolute
/// component sums of c over the masked graph (zero when connected).
pub fn oracle_objective(topology: &Topology, mask: &EdgeMask, c: &[i64]) -> i64 {
    let parts = topology
        .connected_components(mask)
        .expect("mask length checked by caller");
    if parts.components.len() == 1 {
        return 0;
    }
    parts
        .components
        .iter()
        .map(|comp| comp.iter().map(|&v| c[v - 1]).sum::<i64>().abs())
        .sum()
}

/// Band mapping: zero is connected, up to n_u·r is an inevitable
/// disconnection, beyond is any other disconnection.
pub fn classify(objective: f64, balanced: &BalancedVector, n_u: usize) -> Klass {
    if objective <= 1e-6 {
        Klass::Connected
    } else if objective <= balanced.upper_threshold(n_u) + 1e-6 {
        Klass::WDisconnected
    } else {
        Klass::OtherDisconnected
    }
}

/// Solves the mask-parameterized classification LP and maps the optimum onto
/// the class bands, cross-checking the forbidden band and the big-M audit.
pub fn solve_classification_lp(
    topology: &Topology,
    mask: &EdgeMask,
    balanced: &BalancedVector,
    n_u: usize,
    big_m: Option<f64>,
) -> Result<ClassificationResult, ClassifyError> {
    if !balanced.w_uniquely_balanced {
        return Err(ClassifyError::NotWBalanced);
    }
    if mask.len() != topology.branch_count() {
        return Err(ClassifyError::MaskLength {
            got: mask.len(),
            expected: topology.branch_count(),
        });
    }
    let big_m = big_m.unwrap_or_else(|| default_region_big_m(topology, &balanced.c));
    let form = compact_form(topology, &balanced.c, big_m);
    let n_y = form.num_y();
    let problem = Problem {
        objective: form.h(),
        constraints: form
            .rows
            .iter()
            .map(|row| Constraint {
                coeffs: row.coeffs.clone(),
                sense: Sense::Le,
                rhs: form.w_value(row, mask),
            })
            .collect(),
        lower: vec![f64::NEG_INFINITY; n_y],
        upper: vec![f64::INFINITY; n_y],
        integer: vec![false; n_y],
    };
    let sol = solver::solve_lp(&problem)?;
    if !sol.is_optimal() {
        return Err(ClassifyError::Solver(solver::SolverError::NumericalFailure(
            format!("classification LP ended with {:?}", sol.status),
        )));
    }
    let objective = sol.objective;
    let lower_threshold = balanced.lower_threshold();
    let upper_threshold = balanced.upper_threshold(n_u);
    if objective > 1e-6 && objective < lower_threshold - 0.5 {
        return Err(ClassifyError::ForbiddenBand {
            objective,
            lower_threshold,
        });
    }
    // void big-M rows must not be binding
    let mut binding_at_m = 0;
    for (row, cons) in form.rows.iter().zip(problem.constraints.iter()) {
        if cons.rhs >= 0.5 * big_m {
            let activity: f64 = cons.coeffs.iter().map(|&(j, a)| a * sol.primal[j]).sum();
            if cons.rhs - activity < 1e-4 * big_m {
                binding_at_m += 1;
            }
        }
        let _ = row;
    }
    if binding_at_m > 0 {
        return Err(ClassifyError::BigMTooSmall(binding_at_m));
    }
    let n = topology.bus_count();
    Ok(ClassificationResult {
        objective,
        d_plus: sol.primal[..n].to_vec(),
        d_minus: sol.primal[n..2 * n].to_vec(),
        klass: classify(objective, balanced, n_u),
        lower_threshold,
        upper_threshold,
        big_m,
        duality_gap: sol.stats.duality_gap,
    })
}

/// Feasibility of a plain membership query `mask ∈ C(0, c, 0)`, solved as an
/// LP with zero objective; used to certify connectedness of fixed masks.
pub fn region_membership(
    topology: &Topology,
    mask: &EdgeMask,
    c: &[i64],
    big_m: Option<f64>,
) -> Result<bool, ClassifyError> {
    if mask.len() != topology.branch_count() {
        return Err(ClassifyError::MaskLength {
            got: mask.len(),
            expected: topology.branch_count(),
        });
    }
    let big_m = big_m.unwrap_or_else(|| default_region_big_m(topology, c));
    let mut model = Model::new();
    let u: Vec<Expr> = mask
        .bits()
        .iter()
        .map(|&on| Expr::constant(if on { 1.0 } else { 0.0 }))
        .collect();
    region_constraints(
        &mut model,
        topology,
        "m",
        &u,
        &Expr::constant(0.0),
        c,
        None,
        big_m,
    );
    let sol = solver::solve_lp(&model.to_problem())?;
    Ok(sol.is_optimal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::verify_w_balance;
    use crate::contingency::{build_w_matrices, enumerate_w_lambda};
    use crate::netgraph::{g4, DEFAULT_CATALOG_CAP};

    fn g4_balanced() -> (Topology, BalancedVector, usize) {
        let t = g4();
        let cat = t
            .enumerate_connected_induced_subgraphs(DEFAULT_CATALOG_CAP)
            .unwrap();
        let w = enumerate_w_lambda(&t, 1, 3).unwrap();
        let m = build_w_matrices(&w, &cat);
        let bv = verify_w_balance(&[4, -8, 3, 1], 1.0, &cat, &m, w.n_u).unwrap();
        (t, bv, w.n_u)
    }

    use crate::netgraph::Topology;

    #[test]
    fn oracle_values_on_g4() {
        let (t, bv, _) = g4_balanced();
        let m = |s: &str| EdgeMask::parse(s).unwrap();
        assert_eq!(oracle_objective(&t, &m("1111"), &bv.c), 0);
        assert_eq!(oracle_objective(&t, &m("1101"), &bv.c), 2);
        assert_eq!(oracle_objective(&t, &m("0110"), &bv.c), 8);
    }

    #[test]
    fn classification_matches_worked_values() {
        let (t, bv, n_u) = g4_balanced();
        let m = |s: &str| EdgeMask::parse(s).unwrap();

        let r = solve_classification_lp(&t, &m("1111"), &bv, n_u, None).unwrap();
        assert!(r.objective.abs() <= 1e-6);
        assert_eq!(r.klass, Klass::Connected);

        let r = solve_classification_lp(&t, &m("1101"), &bv, n_u, None).unwrap();
        assert!((r.objective - 2.0).abs() <= 1e-6);
        assert_eq!(r.klass, Klass::WDisconnected);
        assert_eq!(r.lower_threshold, 2.0);
        assert_eq!(r.upper_threshold, 2.0);

        let r = solve_classification_lp(&t, &m("0110"), &bv, n_u, None).unwrap();
        assert!((r.objective - 8.0).abs() <= 1e-6);
        assert_eq!(r.klass, Klass::OtherDisconnected);
    }

    #[test]
    fn classification_requires_w_balance() {
        let (t, mut bv, n_u) = g4_balanced();
        bv.w_uniquely_balanced = false;
        let err = solve_classification_lp(&t, &EdgeMask::all_on(4), &bv, n_u, None).unwrap_err();
        assert!(matches!(err, ClassifyError::NotWBalanced));
    }

    #[test]
    fn membership_mirrors_connectivity() {
        let (t, bv, _) = g4_balanced();
        for bits in 0u32..16 {
            let mask = EdgeMask::new((0..4).map(|k| bits >> k & 1 == 1).collect());
            let member = region_membership(&t, &mask, &bv.c, None).unwrap();
            let connected = t.is_connected(&mask).unwrap();
            assert_eq!(member, connected, "mask {bits:04b}");
        }
    }

    #[test]
    fn deactivated_region_accepts_anything() {
        let (t, bv, _) = g4_balanced();
        let big_m = default_region_big_m(&t, &bv.c);
        let mut model = Model::new();
        let u: Vec<Expr> = (0..4).map(|_| Expr::constant(0.0)).collect();
        region_constraints(
            &mut model,
            &t,
            "void",
            &u,
            &Expr::constant(1.0),
            &bv.c,
            None,
            big_m,
        );
        let sol = solver::solve_lp(&model.to_problem()).unwrap();
        assert!(sol.is_optimal());
    }

    #[test]
    fn band_mapping() {
        let (_, bv, n_u) = g4_balanced();
        assert_eq!(classify(0.0, &bv, n_u), Klass::Connected);
        assert_eq!(classify(2.0, &bv, n_u), Klass::WDisconnected);
        assert_eq!(classify(8.0, &bv, n_u), Klass::OtherDisconnected);
    }

    // Exhaustive oracle equivalence over every mask of G4.
    #[test]
    fn lp_equals_oracle_on_all_g4_masks() {
        let (t, bv, n_u) = g4_balanced();
        for bits in 0u32..16 {
            let mask = EdgeMask::new((0..4).map(|k| bits >> k & 1 == 1).collect());
            let lp = solve_classification_lp(&t, &mask, &bv, n_u, None).unwrap();
            let oracle = oracle_objective(&t, &mask, &bv.c) as f64;
            assert!(
                (lp.objective - oracle).abs() <= 1e-6,
                "mask {bits:04b}: lp {} oracle {}",
                lp.objective,
                oracle
            );
        }
    }
}
