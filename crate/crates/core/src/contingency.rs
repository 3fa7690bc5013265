//! Enumeration of inevitable-disconnection cut pairs and of contingency
//! vectors.
//!
//! A cut pair (L, N) records a branch set L whose removal from the full graph
//! strands the bus set N outside the main component, with no strictly smaller
//! sub-cut stranding the same N. The catalog of all such pairs with |L| up to
//! lambda drives both the balance synthesis and the classification bands.

use crate::netgraph::{EdgeMask, SubgraphCatalog, Topology};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContingencyError {
    #[error("lambda {0} exceeds configured cap {1}")]
    LambdaTooLarge(usize, usize),
    #[error("contingency enumeration would exceed cap of {0}")]
    ExplosionGuard(usize),
}

pub const DEFAULT_LAMBDA_CAP: usize = 3;
pub const DEFAULT_CONTINGENCY_CAP: usize = 1_000_000;

/// One minimal cut pair: branch indices (0-based, ascending) and the stranded
/// bus set (1-based, ascending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutPair {
    pub branches: Vec<usize>,
    pub stranded: Vec<usize>,
    /// Component count of the full graph with `branches` removed.
    pub component_count: usize,
}

/// Catalog of all minimal small-cut disconnections of the full graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WCatalog {
    pub pairs: Vec<CutPair>,
    pub lambda: usize,
    /// Max component count over the catalog; 0 when the catalog is empty.
    pub n_u: usize,
}

impl WCatalog {
    pub fn n_w(&self) -> usize {
        self.pairs.len()
    }

    /// Union of all cut branch sets (0-based indices, ascending). These
    /// branches must not be switched off in the first stage.
    pub fn must_stay_on(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.pairs.iter().flat_map(|p| p.branches.iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Indicator matrices derived from a `WCatalog` and a subgraph catalog.
///
/// Rows of `e_w` are the stranded sets; `j_w` keeps the catalog rows that are
/// neither the full bus set, nor a stranded set, nor the complement of one.
/// Rows are stored as bus sets; dense 0/1 matrices are recoverable on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WMatrices {
    pub e_w: Vec<Vec<usize>>,
    pub j_w: Vec<Vec<usize>>,
    /// Indices into the subgraph catalog of the rows kept in `j_w`.
    pub j_w_catalog_rows: Vec<usize>,
}

impl WMatrices {
    pub fn n_d(&self) -> usize {
        self.j_w.len()
    }

    pub fn row_sums(rows: &[Vec<usize>], c: &[i64]) -> Vec<i64> {
        rows.iter()
            .map(|r| r.iter().map(|&v| c[v - 1]).sum())
            .collect()
    }
}

/// One N-k contingency: per-generator and per-branch service flags
/// (true = in service).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContingencyVector {
    pub o_g: Vec<bool>,
    pub o_b: Vec<bool>,
}

impl ContingencyVector {
    pub fn all_in_service(n_g: usize, n_b: usize) -> Self {
        ContingencyVector {
            o_g: vec![true; n_g],
            o_b: vec![true; n_b],
        }
    }

    pub fn failed_generators(&self) -> usize {
        self.o_g.iter().filter(|&&x| !x).count()
    }

    pub fn failed_branches(&self) -> usize {
        self.o_b.iter().filter(|&&x| !x).count()
    }

    pub fn total_failures(&self) -> usize {
        self.failed_generators() + self.failed_branches()
    }

    /// True when the number of failed branches is at most `lambda`.
    pub fn is_lambda_branch(&self, lambda: usize) -> bool {
        self.failed_branches() <= lambda
    }

    pub fn branch_mask(&self) -> EdgeMask {
        EdgeMask::new(self.o_b.clone())
    }

    /// Compact label such as "none", "b3", or "g1+b2+b4" (1-based).
    pub fn label(&self) -> String {
        let mut parts: Vec<String> = self
            .o_g
            .iter()
            .enumerate()
            .filter(|&(_, &up)| !up)
            .map(|(i, _)| format!("g{}", i + 1))
            .collect();
        parts.extend(
            self.o_b
                .iter()
                .enumerate()
                .filter(|&(_, &up)| !up)
                .map(|(i, _)| format!("b{}", i + 1)),
        );
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Enumerates all minimal cut pairs with at most `lambda` branches, by brute
/// force over branch subsets; minimality is checked against every strictly
/// smaller sub-cut.
pub fn enumerate_w_lambda(
    topology: &Topology,
    lambda: usize,
    lambda_cap: usize,
) -> Result<WCatalog, ContingencyError> {
    if lambda > lambda_cap {
        return Err(ContingencyError::LambdaTooLarge(lambda, lambda_cap));
    }
    let n_b = topology.branch_count();
    let mut pairs = Vec::new();
    let mut n_u = 0usize;

    let mut subset = Vec::new();
    let mut sizes = Vec::new();
    for size in 1..=lambda.min(n_b) {
        sizes.push(size);
    }
    for &size in &sizes {
        subset.clear();
        enumerate_size_subsets(n_b, size, 0, &mut subset, &mut |cut: &[usize]| {
            let mask = EdgeMask::all_on_except(n_b, cut);
            let parts = topology.connected_components(&mask).expect("mask length");
            if parts.components.len() < 2 {
                return;
            }
            let stranded = parts.outside_main();
            if !is_minimal(topology, cut, &stranded) {
                return;
            }
            n_u = n_u.max(parts.components.len());
            pairs.push(CutPair {
                branches: cut.to_vec(),
                stranded,
                component_count: parts.components.len(),
            });
        });
    }
    Ok(WCatalog { pairs, lambda, n_u })
}

fn enumerate_size_subsets(
    n: usize,
    size: usize,
    start: usize,
    acc: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if acc.len() == size {
        visit(acc);
        return;
    }
    let remaining = size - acc.len();
    for k in start..=n.saturating_sub(remaining) {
        acc.push(k);
        enumerate_size_subsets(n, size, k + 1, acc, visit);
        acc.pop();
    }
}

// No strictly smaller sub-cut may strand the same bus set.
fn is_minimal(topology: &Topology, cut: &[usize], stranded: &[usize]) -> bool {
    let n_b = topology.branch_count();
    if cut.len() <= 1 {
        return true;
    }
    let total = 1usize << cut.len();
    for pick in 1..total - 1 {
        let sub: Vec<usize> = cut
            .iter()
            .enumerate()
            .filter(|&(i, _)| pick >> i & 1 == 1)
            .map(|(_, &k)| k)
            .collect();
        let mask = EdgeMask::all_on_except(n_b, &sub);
        let parts = topology.connected_components(&mask).expect("mask length");
        if parts.components.len() >= 2 && parts.outside_main() == stranded {
            return false;
        }
    }
    true
}

/// Builds the stranded-set indicator rows and the pruned catalog rows.
pub fn build_w_matrices(catalog: &WCatalog, subgraphs: &SubgraphCatalog) -> WMatrices {
    let e_w: Vec<Vec<usize>> = catalog.pairs.iter().map(|p| p.stranded.clone()).collect();
    let full = &subgraphs.subsets[0];
    let complements: Vec<Vec<usize>> = e_w
        .iter()
        .map(|n_set| full.iter().copied().filter(|v| !n_set.contains(v)).collect())
        .collect();

    let mut j_w = Vec::new();
    let mut j_w_catalog_rows = Vec::new();
    for (i, row) in subgraphs.subsets.iter().enumerate() {
        if i == 0 {
            continue; // all-ones row
        }
        if e_w.contains(row) || complements.contains(row) {
            continue;
        }
        j_w.push(row.clone());
        j_w_catalog_rows.push(i);
    }
    WMatrices {
        e_w,
        j_w,
        j_w_catalog_rows,
    }
}

/// All contingency vectors with at most `eta` total failures, in a fixed
/// deterministic order (by failure count, then lexicographic position).
pub fn enumerate_contingencies(
    n_g: usize,
    n_b: usize,
    eta: usize,
    cap: usize,
) -> Result<Vec<ContingencyVector>, ContingencyError> {
    let total = n_g + n_b;
    let mut count: usize = 0;
    let mut binom: u128 = 1;
    for k in 0..=eta.min(total) {
        if k > 0 {
            binom = binom * (total - k + 1) as u128 / k as u128;
        }
        count = count.saturating_add(binom.min(usize::MAX as u128) as usize);
        if count > cap {
            return Err(ContingencyError::ExplosionGuard(cap));
        }
    }

    let mut out = Vec::with_capacity(count);
    let mut subset = Vec::new();
    for k in 0..=eta.min(total) {
        enumerate_size_subsets(total, k, 0, &mut subset, &mut |fail: &[usize]| {
            let mut v = ContingencyVector::all_in_service(n_g, n_b);
            for &idx in fail {
                if idx < n_g {
                    v.o_g[idx] = false;
                } else {
                    v.o_b[idx - n_g] = false;
                }
            }
            out.push(v);
        });
    }
    Ok(out)
}

/// Keeps only the contingencies with at most `lambda` branch failures.
pub fn lambda_branch_filter(
    list: &[ContingencyVector],
    lambda: usize,
) -> Vec<ContingencyVector> {
    list.iter()
        .filter(|o| o.is_lambda_branch(lambda))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{g4, DEFAULT_CATALOG_CAP};

    #[test]
    fn g4_w1() {
        let t = g4();
        let w = enumerate_w_lambda(&t, 1, DEFAULT_LAMBDA_CAP).unwrap();
        assert_eq!(w.n_w(), 1);
        assert_eq!(w.n_u, 2);
        assert_eq!(w.pairs[0].branches, vec![2]); // e3
        assert_eq!(w.pairs[0].stranded, vec![4]);
        assert_eq!(w.must_stay_on(), vec![2]);
    }

    #[test]
    fn g4_w2() {
        let t = g4();
        let w = enumerate_w_lambda(&t, 2, DEFAULT_LAMBDA_CAP).unwrap();
        let got: Vec<(Vec<usize>, Vec<usize>)> = w
            .pairs
            .iter()
            .map(|p| (p.branches.clone(), p.stranded.clone()))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec![2], vec![4]),
                (vec![0, 1], vec![2]),
                (vec![0, 3], vec![1]),
                (vec![1, 3], vec![3, 4]), // 2-2 tie: main holds bus 1
            ]
        );
        assert_eq!(w.n_u, 2);
        // ({e1,e3},{4}) must have been rejected by minimality
        assert!(!got.iter().any(|(l, _)| l == &vec![0, 2]));
    }

    #[test]
    fn triangle_has_no_cuts() {
        let t = Topology::new(3, vec![(1, 2), (2, 3), (1, 3)]).unwrap();
        let w = enumerate_w_lambda(&t, 1, DEFAULT_LAMBDA_CAP).unwrap();
        assert_eq!(w.n_w(), 0);
        assert_eq!(w.n_u, 0);
    }

    #[test]
    fn lambda_cap_enforced() {
        let t = g4();
        assert_eq!(
            enumerate_w_lambda(&t, 4, 3).unwrap_err(),
            ContingencyError::LambdaTooLarge(4, 3)
        );
    }

    #[test]
    fn g4_w_matrices_lambda1() {
        let t = g4();
        let cat = t
            .enumerate_connected_induced_subgraphs(DEFAULT_CATALOG_CAP)
            .unwrap();
        let w = enumerate_w_lambda(&t, 1, DEFAULT_LAMBDA_CAP).unwrap();
        let m = build_w_matrices(&w, &cat);
        assert_eq!(m.e_w, vec![vec![4]]);
        assert_eq!(m.n_d(), 9);
        let expected: Vec<Vec<usize>> = vec![
            vec![1],
            vec![2],
            vec![3],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3],
            vec![3, 4],
            vec![1, 3, 4],
            vec![2, 3, 4],
        ];
        assert_eq!(m.j_w, expected);
    }

    #[test]
    fn g4_w_matrices_lambda2() {
        let t = g4();
        let cat = t
            .enumerate_connected_induced_subgraphs(DEFAULT_CATALOG_CAP)
            .unwrap();
        let w = enumerate_w_lambda(&t, 2, DEFAULT_LAMBDA_CAP).unwrap();
        let m = build_w_matrices(&w, &cat);
        // {1},{2},{4},{3,4} stranded; their complements and the all-ones row go too
        assert_eq!(m.j_w, vec![vec![3], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn triangle_w_matrices() {
        let t = Topology::new(3, vec![(1, 2), (2, 3), (1, 3)]).unwrap();
        let cat = t
            .enumerate_connected_induced_subgraphs(DEFAULT_CATALOG_CAP)
            .unwrap();
        let w = enumerate_w_lambda(&t, 1, DEFAULT_LAMBDA_CAP).unwrap();
        let m = build_w_matrices(&w, &cat);
        assert!(m.e_w.is_empty());
        assert_eq!(m.n_d(), cat.len() - 1);
    }

    #[test]
    fn contingency_counts() {
        let list = enumerate_contingencies(2, 4, 1, DEFAULT_CONTINGENCY_CAP).unwrap();
        assert_eq!(list.len(), 7);
        let list = enumerate_contingencies(2, 4, 2, DEFAULT_CONTINGENCY_CAP).unwrap();
        assert_eq!(list.len(), 22);
        let lb = lambda_branch_filter(&list, 1);
        // drop the C(4,2)=6 double-branch vectors
        assert_eq!(lb.len(), 16);
        for o in &lb {
            assert!(o.o_b.iter().filter(|&&x| !x).count() <= 1);
        }
        assert_eq!(
            enumerate_contingencies(2, 4, 2, 10).unwrap_err(),
            ContingencyError::ExplosionGuard(10)
        );
    }

    #[test]
    fn labels() {
        let mut o = ContingencyVector::all_in_service(2, 4);
        assert_eq!(o.label(), "none");
        o.o_g[0] = false;
        o.o_b[2] = false;
        assert_eq!(o.label(), "g1+b3");
        assert_eq!(o.total_failures(), 2);
        assert!(o.is_lambda_branch(1));
    }

    // Cross-check: a full-topology mask with <= lambda branch failures is
    // disconnected iff the failed set contains some cut pair with matching
    // stranded set.
    #[test]
    fn w_catalog_matches_disconnection_semantics() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(3..=7);
            let mut branches: Vec<(usize, usize)> =
                (2..=n).map(|v| (rng.gen_range(1..v), v)).collect();
            for _ in 0..rng.gen_range(0..=3) {
                let a = rng.gen_range(1..=n);
                let b = rng.gen_range(1..=n);
                if a != b {
                    branches.push((a.min(b), a.max(b)));
                }
            }
            let t = Topology::new(n, branches).unwrap();
            let n_b = t.branch_count();
            if n_b > 12 {
                continue;
            }
            for lambda in 1..=2usize {
                let w = enumerate_w_lambda(&t, lambda, 3).unwrap();
                for fail_bits in 0u32..(1 << n_b) {
                    let failed: Vec<usize> =
                        (0..n_b).filter(|k| fail_bits >> k & 1 == 1).collect();
                    if failed.len() > lambda {
                        continue;
                    }
                    let mask = EdgeMask::all_on_except(n_b, &failed);
                    let parts = t.connected_components(&mask).unwrap();
                    let disconnected = parts.components.len() > 1;
                    let matches_w = w.pairs.iter().any(|p| {
                        p.branches.iter().all(|k| failed.contains(k))
                            && parts.outside_main() == p.stranded
                    });
                    if disconnected {
                        assert!(
                            matches_w,
                            "disconnection without matching cut pair: {failed:?}"
                        );
                    }
                }
            }
        }
    }
}
