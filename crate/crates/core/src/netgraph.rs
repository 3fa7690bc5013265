//! Network topology, connectivity primitives, and enumeration of connected
//! node-induced subgraphs.
//!
//! Buses are numbered 1..=n. Branches are kept in their input order and keep
//! their input orientation; parallel branches are allowed as distinct entries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("bus index {0} out of range 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("self-loop at bus {0}")]
    SelfLoop(usize),
    #[error("full graph is disconnected")]
    FullGraphDisconnected,
    #[error("mask has {got} bits, topology has {expected} branches")]
    LengthMismatch { got: usize, expected: usize },
    #[error("subgraph catalog exceeds cap of {0} entries")]
    CatalogTooLarge(usize),
}

/// Undirected multigraph of buses and branches with fixed branch orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    bus_count: usize,
    branches: Vec<(usize, usize)>,
}

impl Topology {
    /// Builds a topology from 1-based (from, to) bus pairs. The full graph
    /// (all branches present) must be connected.
    pub fn new(bus_count: usize, branches: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        for &(a, b) in &branches {
            if a == 0 || a > bus_count {
                return Err(GraphError::IndexOutOfRange(a, bus_count));
            }
            if b == 0 || b > bus_count {
                return Err(GraphError::IndexOutOfRange(b, bus_count));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
        }
        let topo = Topology { bus_count, branches };
        if !topo.is_connected(&EdgeMask::all_on(topo.branch_count()))? {
            return Err(GraphError::FullGraphDisconnected);
        }
        Ok(topo)
    }

    pub fn bus_count(&self) -> usize {
        self.bus_count
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Branch endpoints as 1-based (from, to) pairs in input order.
    pub fn branches(&self) -> &[(usize, usize)] {
        &self.branches
    }

    /// Oriented incidence matrix, `bus_count` rows by `branch_count` columns;
    /// the column for branch (i, j) has +1 at i and -1 at j.
    pub fn incidence_matrix(&self) -> Vec<Vec<f64>> {
        let mut e = vec![vec![0.0; self.branches.len()]; self.bus_count];
        for (k, &(a, b)) in self.branches.iter().enumerate() {
            e[a - 1][k] = 1.0;
            e[b - 1][k] = -1.0;
        }
        e
    }

    /// Connected components of the subgraph with the masked branches present.
    pub fn connected_components(&self, mask: &EdgeMask) -> Result<ComponentPartition, GraphError> {
        if mask.len() != self.branches.len() {
            return Err(GraphError::LengthMismatch {
                got: mask.len(),
                expected: self.branches.len(),
            });
        }
        let mut dsu = DisjointSet::new(self.bus_count);
        for (k, &(a, b)) in self.branches.iter().enumerate() {
            if mask.is_on(k) {
                dsu.union(a - 1, b - 1);
            }
        }
        Ok(ComponentPartition::from_dsu(&mut dsu, self.bus_count))
    }

    pub fn is_connected(&self, mask: &EdgeMask) -> Result<bool, GraphError> {
        Ok(self.connected_components(mask)?.components.len() == 1)
    }

    /// Enumerates every connected node-induced subgraph of the full graph.
    pub fn enumerate_connected_induced_subgraphs(
        &self,
        cap: usize,
    ) -> Result<SubgraphCatalog, GraphError> {
        enumerate_catalog(self, cap)
    }

    /// Adjacency as bus-index bitmasks (0-based bits), parallel edges merged.
    pub(crate) fn adjacency_bits(&self) -> Vec<u64> {
        let mut adj = vec![0u64; self.bus_count];
        for &(a, b) in &self.branches {
            adj[a - 1] |= 1 << (b - 1);
            adj[b - 1] |= 1 << (a - 1);
        }
        adj
    }
}

/// Branch on/off mask; bit k corresponds to branch k in topology order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeMask {
    bits: Vec<bool>,
}

impl EdgeMask {
    pub fn new(bits: Vec<bool>) -> Self {
        EdgeMask { bits }
    }

    pub fn all_on(len: usize) -> Self {
        EdgeMask { bits: vec![true; len] }
    }

    /// Parses a mask written as a 0/1 string, e.g. "1101".
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(format!("invalid mask character {other:?}")),
            }
        }
        if bits.is_empty() {
            return Err("empty mask".to_string());
        }
        Ok(EdgeMask { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_on(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn set(&mut self, k: usize, on: bool) {
        self.bits[k] = on;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_on(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn count_off(&self) -> usize {
        self.bits.len() - self.count_on()
    }

    /// Mask with the given 0-based branch indices switched off.
    pub fn all_on_except(len: usize, off: &[usize]) -> Self {
        let mut m = Self::all_on(len);
        for &k in off {
            m.set(k, false);
        }
        m
    }

    pub fn to_string_bits(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Partition of the bus set into connected components.
///
/// The main component is the one of maximal cardinality; ties go to the
/// component containing the smallest-index bus. Components are listed in
/// order of their smallest bus, each sorted ascending (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentPartition {
    pub component_of: Vec<usize>,
    pub components: Vec<Vec<usize>>,
    pub main_index: usize,
}

impl ComponentPartition {
    fn from_dsu(dsu: &mut DisjointSet, n: usize) -> Self {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_to_id = vec![usize::MAX; n];
        let mut component_of = vec![0usize; n];
        for v in 0..n {
            let r = dsu.find(v);
            if root_to_id[r] == usize::MAX {
                root_to_id[r] = groups.len();
                groups.push(Vec::new());
            }
            let id = root_to_id[r];
            component_of[v] = id;
            groups[id].push(v + 1);
        }
        // groups are already ordered by smallest member because buses are
        // scanned in increasing order
        let mut main_index = 0;
        for (i, g) in groups.iter().enumerate() {
            if g.len() > groups[main_index].len() {
                main_index = i;
            }
        }
        ComponentPartition {
            component_of,
            components: groups,
            main_index,
        }
    }

    pub fn main_component(&self) -> &[usize] {
        &self.components[self.main_index]
    }

    /// Buses outside the main component, ascending (1-based).
    pub fn outside_main(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .components
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.main_index)
            .flat_map(|(_, g)| g.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Exhaustive catalog of connected node-induced subgraphs.
///
/// Entry 0 is the full bus set; the remaining entries are sorted by size then
/// lexicographically, so the catalog order (and hence the row order of the
/// subset-sum matrix built from it) is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgraphCatalog {
    pub subsets: Vec<Vec<usize>>,
}

impl SubgraphCatalog {
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// Subset sums `b = J c` for an integer bus vector `c` (c[v-1] is bus v).
    pub fn subset_sums(&self, c: &[i64]) -> Vec<i64> {
        self.subsets
            .iter()
            .map(|s| s.iter().map(|&v| c[v - 1]).sum())
            .collect()
    }

    /// Position of a bus set in the catalog, if present.
    pub fn position(&self, set: &[usize]) -> Option<usize> {
        self.subsets.iter().position(|s| s == set)
    }
}

pub const DEFAULT_CATALOG_CAP: usize = 1_000_000;

fn enumerate_catalog(topo: &Topology, cap: usize) -> Result<SubgraphCatalog, GraphError> {
    let n = topo.bus_count();
    assert!(n <= 63, "bus count beyond bitmask range");
    let adj = topo.adjacency_bits();
    let mut found: Vec<u64> = Vec::new();

    // Anchor-based expansion: every connected set is produced exactly once
    // from its smallest vertex, growing only through vertices above the
    // anchor and never revisiting an excluded vertex.
    for v in 0..n {
        let above = !0u64 << v;
        let mut stack = vec![(1u64 << v, adj[v] & above & !(1 << v), 0u64)];
        while let Some((set, ext, excluded)) = stack.pop() {
            found.push(set);
            if found.len() > cap {
                return Err(GraphError::CatalogTooLarge(cap));
            }
            let mut ext = ext;
            let mut excl = excluded;
            while ext != 0 {
                let u = ext.trailing_zeros() as usize;
                ext &= ext - 1;
                let grown = set | (1 << u);
                let new_ext = (ext | (adj[u] & above)) & !grown & !excl;
                stack.push((grown, new_ext, excl));
                excl |= 1 << u;
            }
        }
    }

    let full: u64 = if n == 63 { !0 >> 1 } else { (1 << n) - 1 };
    let mut proper: Vec<u64> = found.into_iter().filter(|&s| s != full).collect();
    proper.sort_unstable_by_key(|&s| (s.count_ones(), !lex_key(s, n)));
    proper.dedup();

    let mut subsets = Vec::with_capacity(proper.len() + 1);
    subsets.push((1..=n).collect());
    subsets.extend(proper.into_iter().map(|s| bits_to_buses(s, n)));
    Ok(SubgraphCatalog { subsets })
}

// Bus-1-first bitmask; lexicographic member order == descending key order.
fn lex_key(set: u64, n: usize) -> u64 {
    let mut key = 0u64;
    for v in 0..n {
        if set >> v & 1 == 1 {
            key |= 1 << (n - 1 - v);
        }
    }
    key
}

fn bits_to_buses(set: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|v| set >> v & 1 == 1).map(|v| v + 1).collect()
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// The canonical 4-bus test graph: branches (1,2), (2,3), (3,4), (1,3).
pub fn g4() -> Topology {
    Topology::new(4, vec![(1, 2), (2, 3), (3, 4), (1, 3)]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_rejects_bad_input() {
        assert_eq!(
            Topology::new(2, vec![(1, 1)]).unwrap_err(),
            GraphError::SelfLoop(1)
        );
        assert_eq!(
            Topology::new(3, vec![(1, 2)]).unwrap_err(),
            GraphError::FullGraphDisconnected
        );
        assert_eq!(
            Topology::new(2, vec![(1, 3)]).unwrap_err(),
            GraphError::IndexOutOfRange(3, 2)
        );
        assert!(Topology::new(4, vec![(1, 2), (2, 3), (3, 4), (1, 3)]).is_ok());
    }

    #[test]
    fn components_and_main_tiebreak() {
        let t = g4();
        let full = t.connected_components(&EdgeMask::all_on(4)).unwrap();
        assert_eq!(full.components, vec![vec![1, 2, 3, 4]]);

        let p = t
            .connected_components(&EdgeMask::parse("1101").unwrap())
            .unwrap();
        assert_eq!(p.components, vec![vec![1, 2, 3], vec![4]]);
        assert_eq!(p.main_component(), &[1, 2, 3]);
        assert_eq!(p.outside_main(), vec![4]);

        let p = t
            .connected_components(&EdgeMask::parse("0110").unwrap())
            .unwrap();
        assert_eq!(p.components, vec![vec![1], vec![2, 3, 4]]);
        assert_eq!(p.main_component(), &[2, 3, 4]);

        // 2-2 tie goes to the component holding bus 1
        let p = t
            .connected_components(&EdgeMask::parse("1010").unwrap())
            .unwrap();
        assert_eq!(p.main_component(), &[1, 2]);
        assert_eq!(p.outside_main(), vec![3, 4]);
    }

    #[test]
    fn connectivity_checks() {
        let t = g4();
        assert!(t.is_connected(&EdgeMask::parse("1111").unwrap()).unwrap());
        assert!(!t.is_connected(&EdgeMask::parse("1101").unwrap()).unwrap());
        assert!(t.is_connected(&EdgeMask::parse("1110").unwrap()).unwrap());
        assert_eq!(
            t.is_connected(&EdgeMask::parse("11").unwrap()).unwrap_err(),
            GraphError::LengthMismatch { got: 2, expected: 4 }
        );
    }

    #[test]
    fn g4_catalog() {
        let t = g4();
        let cat = t.enumerate_connected_induced_subgraphs(1_000_000).unwrap();
        assert_eq!(cat.len(), 12);
        assert_eq!(cat.subsets[0], vec![1, 2, 3, 4]);
        let expected: Vec<Vec<usize>> = vec![
            vec![1],
            vec![2],
            vec![3],
            vec![4],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3],
            vec![3, 4],
            vec![1, 2, 3],
            vec![1, 3, 4],
            vec![2, 3, 4],
        ];
        assert_eq!(&cat.subsets[1..], expected.as_slice());
    }

    #[test]
    fn small_catalogs() {
        let path3 = Topology::new(3, vec![(1, 2), (2, 3)]).unwrap();
        assert_eq!(
            path3
                .enumerate_connected_induced_subgraphs(1_000_000)
                .unwrap()
                .len(),
            6
        );
        let edge2 = Topology::new(2, vec![(1, 2)]).unwrap();
        assert_eq!(
            edge2
                .enumerate_connected_induced_subgraphs(1_000_000)
                .unwrap()
                .len(),
            3
        );
    }

    #[test]
    fn catalog_cap() {
        let t = g4();
        assert_eq!(
            t.enumerate_connected_induced_subgraphs(5).unwrap_err(),
            GraphError::CatalogTooLarge(5)
        );
    }

    #[test]
    fn incidence_matrix_columns() {
        let t = g4();
        let e = t.incidence_matrix();
        let col = |k: usize| (0..4).map(|i| e[i][k]).collect::<Vec<_>>();
        assert_eq!(col(0), vec![1.0, -1.0, 0.0, 0.0]);
        assert_eq!(col(3), vec![1.0, 0.0, -1.0, 0.0]);
        for k in 0..4 {
            assert_eq!(col(k).iter().sum::<f64>(), 0.0);
        }
    }

    // Independent brute force: test every node subset for induced connectivity.
    fn brute_force_catalog(t: &Topology) -> Vec<Vec<usize>> {
        let n = t.bus_count();
        let adj = t.adjacency_bits();
        let mut out = Vec::new();
        for mask in 1u64..(1 << n) {
            let start = mask.trailing_zeros() as usize;
            let mut seen = 1u64 << start;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                let mut nb = adj[u] & mask & !seen;
                while nb != 0 {
                    let w = nb.trailing_zeros() as usize;
                    nb &= nb - 1;
                    seen |= 1 << w;
                    stack.push(w);
                }
            }
            if seen == mask {
                out.push(bits_to_buses(mask, n));
            }
        }
        out
    }

    #[test]
    fn catalog_matches_brute_force() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..20 {
            let n = rng.gen_range(3..=9);
            // random connected graph: spanning tree plus extra edges
            let mut branches: Vec<(usize, usize)> = (2..=n)
                .map(|v| (rng.gen_range(1..v), v))
                .collect();
            for _ in 0..rng.gen_range(0..=n) {
                let a = rng.gen_range(1..=n);
                let b = rng.gen_range(1..=n);
                if a != b {
                    branches.push((a.min(b), a.max(b)));
                }
            }
            let t = Topology::new(n, branches).unwrap();
            let cat = t.enumerate_connected_induced_subgraphs(1_000_000).unwrap();
            let mut brute = brute_force_catalog(&t);
            let mut ours = cat.subsets.clone();
            brute.sort();
            ours.sort();
            assert_eq!(ours, brute, "trial {trial}");
        }
    }

    #[test]
    fn components_partition_bus_set() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let t = g4();
        for _ in 0..50 {
            let mask = EdgeMask::new((0..4).map(|_| rng.gen_bool(0.5)).collect());
            let p = t.connected_components(&mask).unwrap();
            let mut all: Vec<usize> = p.components.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, vec![1, 2, 3, 4]);
            for (v, &cid) in p.component_of.iter().enumerate() {
                assert!(p.components[cid].contains(&(v + 1)));
            }
        }
    }
}
