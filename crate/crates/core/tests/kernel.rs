//! LP/MILP kernel behavior: the worked micro-instances, determinism, and
//! random cross-checks against exhaustive enumeration.

use nc_core::solver::{
    lp_audit_counters, solve_lp, solve_milp, Constraint, Expr, MilpOptions, Model, Problem, Sense,
    Status, VarId,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[test]
fn min_x_subject_to_x_ge_1() {
    let mut m = Model::new();
    let x = m.free_var("x");
    m.objective[x.0] = 1.0;
    m.ge("r", Expr::from(x), 1.0);
    let sol = solve_lp(&m.to_problem()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-9);
    assert!((sol.row_duals[0] - 1.0).abs() < 1e-9);
}

// Single-component transfer: min 1ᵀ(d₊+d₋) with 1ᵀ(d₊−d₋) = 5 moves exactly
// the imbalance, and the equality row prices at 1.
#[test]
fn single_component_transfer_instance() {
    let n = 3;
    let mut m = Model::new();
    let dp: Vec<VarId> = (0..n).map(|i| m.var(format!("dp{i}"), 0.0, f64::INFINITY)).collect();
    let dm: Vec<VarId> = (0..n).map(|i| m.var(format!("dm{i}"), 0.0, f64::INFINITY)).collect();
    for v in dp.iter().chain(dm.iter()) {
        m.objective[v.0] = 1.0;
    }
    let balance = Expr::sum(dp.iter().map(|&v| Expr::from(v)))
        .minus(&Expr::sum(dm.iter().map(|&v| Expr::from(v))));
    m.eq("balance", balance, 5.0);
    let sol = solve_lp(&m.to_problem()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 5.0).abs() < 1e-8);
    assert!((sol.row_duals[0] - 1.0).abs() < 1e-8);
}

#[test]
fn infeasible_lp() {
    let mut m = Model::new();
    let x = m.var("x", 0.0, f64::INFINITY);
    m.le("r", Expr::from(x), -1.0);
    let sol = solve_lp(&m.to_problem()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
}

#[test]
fn unbounded_lp() {
    let mut m = Model::new();
    let x = m.free_var("x");
    m.objective[x.0] = -1.0;
    m.ge("r", Expr::from(x), 0.0);
    let sol = solve_lp(&m.to_problem()).unwrap();
    assert_eq!(sol.status, Status::Unbounded);
}

#[test]
fn max_matching_pair() {
    // max x1+x2 with x1+x2 <= 1, binary, as minimization of the negation
    let mut m = Model::new();
    let x1 = m.binary("x1");
    let x2 = m.binary("x2");
    m.objective[x1.0] = -1.0;
    m.objective[x2.0] = -1.0;
    m.le("cap", Expr::from(x1).plus(&Expr::from(x2)), 1.0);
    let sol = solve_milp(&m.to_problem(), &MilpOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective + 1.0).abs() < 1e-9);
}

#[test]
fn tiny_knapsack() {
    // max 3a+2b subject to 2a+2b <= 3 picks a alone
    let mut m = Model::new();
    let a = m.binary("a");
    let b = m.binary("b");
    m.objective[a.0] = -3.0;
    m.objective[b.0] = -2.0;
    m.le("w", Expr::term(a, 2.0).add_term(b, 2.0), 3.0);
    let sol = solve_milp(&m.to_problem(), &MilpOptions::default()).unwrap();
    assert!((sol.objective + 3.0).abs() < 1e-9);
    assert!((sol.primal[a.0] - 1.0).abs() < 1e-6);
    assert!(sol.primal[b.0].abs() < 1e-6);
}

#[test]
fn equality_with_bounds() {
    // min 2x + 10y, x + y = 4, x <= 3  → x = 3, y = 1
    let mut m = Model::new();
    let x = m.var("x", 0.0, 3.0);
    let y = m.var("y", 0.0, f64::INFINITY);
    m.objective[x.0] = 2.0;
    m.objective[y.0] = 10.0;
    m.eq("sum", Expr::from(x).plus(&Expr::from(y)), 4.0);
    let sol = solve_lp(&m.to_problem()).unwrap();
    assert!((sol.objective - 16.0).abs() < 1e-8);
    assert!((sol.primal[x.0] - 3.0).abs() < 1e-7);
}

#[test]
fn resolve_is_deterministic() {
    let p = random_lp(&mut ChaCha8Rng::seed_from_u64(3), 8, 6, false);
    let a = solve_lp(&p).unwrap();
    let b = solve_lp(&p).unwrap();
    assert_eq!(a.status, b.status);
    if a.status == Status::Optimal {
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.primal, b.primal);
    }
}

fn random_lp(rng: &mut ChaCha8Rng, n: usize, m_rows: usize, integers: bool) -> Problem {
    let mut p = Problem {
        objective: (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect(),
        constraints: Vec::new(),
        lower: vec![0.0; n],
        upper: (0..n)
            .map(|_| if integers { 1.0 } else { rng.gen_range(1..=10) as f64 })
            .collect(),
        integer: vec![integers; n],
    };
    for _ in 0..m_rows {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                coeffs.push((j, rng.gen_range(-4..=4) as f64));
            }
        }
        if coeffs.is_empty() {
            continue;
        }
        let sense = match rng.gen_range(0..3) {
            0 => Sense::Le,
            1 => Sense::Ge,
            _ => Sense::Eq,
        };
        // keep a margin of feasibility around the box midpoint
        let mid: f64 = coeffs.iter().map(|&(j, a)| a * p.upper[j] * 0.5).sum();
        let rhs = match sense {
            Sense::Le => mid + rng.gen_range(0.0..4.0),
            Sense::Ge => mid - rng.gen_range(0.0..4.0),
            Sense::Eq => mid,
        };
        p.constraints.push(Constraint { coeffs, sense, rhs });
    }
    p
}

// Optimality certificate: strong duality holds on every optimal LP the
// kernel reports, across a batch of random instances.
#[test]
fn random_lps_self_certify() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (solves0, fails0) = lp_audit_counters();
    let mut optimal = 0;
    for _ in 0..120 {
        let n = rng.gen_range(2..=10);
        let m_rows = rng.gen_range(1..=8);
        let p = random_lp(&mut rng, n, m_rows, false);
        let sol = solve_lp(&p).expect("numerical failure");
        if sol.status == Status::Optimal {
            optimal += 1;
            assert!(sol.stats.duality_gap <= 1e-6 * (1.0 + sol.objective.abs()));
            assert!(sol.stats.primal_residual <= 1e-6);
            assert!(sol.stats.dual_residual <= 1e-6);
        }
    }
    assert!(optimal > 40, "too few optimal instances: {optimal}");
    let (solves1, fails1) = lp_audit_counters();
    assert!(solves1 - solves0 >= optimal as u64);
    assert_eq!(fails1, fails0);
}

fn enumerate_binary_optimum(p: &Problem) -> Option<f64> {
    let ints: Vec<usize> = (0..p.num_vars()).filter(|&j| p.integer[j]).collect();
    assert!(ints.len() <= 20);
    let mut best: Option<f64> = None;
    for bits in 0u64..(1 << ints.len()) {
        let x: Vec<f64> = (0..p.num_vars())
            .map(|j| {
                if let Some(k) = ints.iter().position(|&v| v == j) {
                    (bits >> k & 1) as f64
                } else {
                    0.0
                }
            })
            .collect();
        let ok = p.constraints.iter().all(|row| {
            let act: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            match row.sense {
                Sense::Le => act <= row.rhs + 1e-9,
                Sense::Ge => act >= row.rhs - 1e-9,
                Sense::Eq => (act - row.rhs).abs() <= 1e-9,
            }
        });
        if ok {
            let obj: f64 = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            if best.map_or(true, |b| obj < b) {
                best = Some(obj);
            }
        }
    }
    best
}

#[test]
fn milp_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    while compared < 20 {
        let n = rng.gen_range(3..=16);
        let m_rows = rng.gen_range(1..=6);
        let p = random_lp(&mut rng, n, m_rows, true);
        let brute = enumerate_binary_optimum(&p);
        let sol = solve_milp(&p, &MilpOptions::default()).unwrap();
        match brute {
            None => assert_eq!(sol.status, Status::Infeasible, "{}", p.dump()),
            Some(best) => {
                assert_eq!(sol.status, Status::Optimal, "{}", p.dump());
                assert!(
                    (sol.objective - best).abs() <= 1e-6 * (1.0 + best.abs()),
                    "kernel {} vs brute {}\n{}",
                    sol.objective,
                    best,
                    p.dump()
                );
            }
        }
        compared += 1;
    }
}

#[test]
fn warm_start_is_respected() {
    let mut m = Model::new();
    let a = m.binary("a");
    let b = m.binary("b");
    m.objective[a.0] = -3.0;
    m.objective[b.0] = -2.0;
    m.le("w", Expr::term(a, 2.0).add_term(b, 2.0), 3.0);
    let p = m.to_problem();
    let opts = MilpOptions {
        initial: Some(vec![0.0, 1.0]),
        ..MilpOptions::default()
    };
    let sol = solve_milp(&p, &opts).unwrap();
    assert!((sol.objective + 3.0).abs() < 1e-9);

    let bad = MilpOptions {
        initial: Some(vec![1.0, 1.0]), // violates the weight row
        ..MilpOptions::default()
    };
    assert!(solve_milp(&p, &bad).is_err());
}
