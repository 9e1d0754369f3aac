//! Brute-force exact solvers for tiny instances. Everything else in the
//! crate is tested against these.
//!
//! The solvers enumerate partitions of the vertex set into exactly `k`
//! connected blocks by growing the block of the smallest uncovered vertex as
//! a connected subset, recursing on the rest. Within a fixed vertex set only
//! the induced minimum spanning tree matters for the min-max objective (a
//! lighter spanning tree on the same vertices never makes the heaviest tree
//! heavier), and symmetrically only the induced maximum spanning tree
//! matters for max-min. The same dominance argument powers the pricing
//! oracle, where the weight multiplier `sum of zeta over the tree` is
//! non-negative.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{
    induced_max_spanning_tree, induced_mst, SpanningKForest, Tree, WeightedGraph,
};
use crate::pricing::DualValues;

/// Hard size cap for the public entry points.
pub const MAX_ORACLE_N: usize = 14;
/// Cap for the subset-enumeration oracles.
pub const MAX_ENUM_N: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for brute force: n = {n} > {max}")]
    TooLarge { n: usize, max: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("k = {k} out of range 1..={n}")]
    BadK { k: usize, n: usize },
}

fn set_of(mask: u64) -> BTreeSet<usize> {
    (0..64).filter(|&v| mask >> v & 1 == 1).collect()
}

/// Calls `f` on every connected subset of `allowed` that contains `start`,
/// where `start` is the smallest allowed vertex of the subset under
/// construction. Each subset is visited exactly once.
fn for_each_connected_superset(
    g: &WeightedGraph,
    allowed: u64,
    start: usize,
    f: &mut impl FnMut(u64),
) {
    fn neighbors_mask(g: &WeightedGraph, v: usize) -> u64 {
        g.incident(v)
            .iter()
            .fold(0u64, |m, &eid| m | 1 << g.edge(eid).other(v))
    }
    fn rec(g: &WeightedGraph, subset: u64, banned: u64, allowed: u64, f: &mut impl FnMut(u64)) {
        f(subset);
        // Frontier: allowed neighbors of the subset not yet decided.
        let mut frontier = 0u64;
        let mut rest = subset;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            frontier |= neighbors_mask(g, v);
        }
        frontier &= allowed & !subset & !banned;
        let mut newly_banned = banned;
        let mut c = frontier;
        while c != 0 {
            let v = c.trailing_zeros() as usize;
            c &= c - 1;
            rec(g, subset | 1 << v, newly_banned, allowed, f);
            newly_banned |= 1 << v;
        }
    }
    debug_assert!(allowed >> start & 1 == 1);
    rec(g, 1 << start, 0, allowed, f);
}

enum Objective {
    MinMax,
    MaxMin,
}

fn block_tree(g: &WeightedGraph, mask: u64, obj: &Objective) -> Option<Tree> {
    let vs = set_of(mask);
    match obj {
        Objective::MinMax => induced_mst(g, &vs),
        Objective::MaxMin => induced_max_spanning_tree(g, &vs),
    }
}

fn exact_solve(
    g: &WeightedGraph,
    k: usize,
    obj: Objective,
    max_n: usize,
) -> Result<(u64, SpanningKForest), OracleError> {
    let n = g.n();
    if n > max_n || n > 63 {
        return Err(OracleError::TooLarge { n, max: max_n });
    }
    if k < 1 || k > n {
        return Err(OracleError::BadK { k, n });
    }
    if !g.is_connected() {
        return Err(OracleError::Disconnected);
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1 << n) - 1 };

    struct Search<'a> {
        g: &'a WeightedGraph,
        k: usize,
        obj: Objective,
        best: Option<(u64, Vec<Tree>)>,
    }

    impl Search<'_> {
        fn beats(&self, candidate: u64) -> bool {
            match (&self.best, &self.obj) {
                (None, _) => true,
                (Some((b, _)), Objective::MinMax) => candidate < *b,
                (Some((b, _)), Objective::MaxMin) => candidate > *b,
            }
        }

        /// `bound` is the value over completed blocks (max so far for
        /// min-max, min so far for max-min).
        fn rec(&mut self, unassigned: u64, used: usize, bound: Option<u64>, blocks: &mut Vec<Tree>) {
            if unassigned == 0 {
                if used == self.k {
                    let value = bound.expect("at least one block");
                    if self.beats(value) {
                        self.best = Some((value, blocks.clone()));
                    }
                }
                return;
            }
            let remaining = self.k - used;
            if remaining == 0 {
                return;
            }
            // Pruning on the partial objective: a completed heavy block can
            // never get lighter (min-max), and a completed light block caps
            // the final minimum (max-min).
            if let (Some(b), Some((best, _))) = (bound, &self.best) {
                match self.obj {
                    Objective::MinMax if b >= *best => return,
                    Objective::MaxMin if b <= *best => return,
                    _ => {}
                }
            }
            let start = unassigned.trailing_zeros() as usize;
            if remaining == 1 {
                // Last block must absorb everything left.
                if let Some(t) = block_tree(self.g, unassigned, &self.obj) {
                    let w = t.weight();
                    let value = match self.obj {
                        Objective::MinMax => bound.map_or(w, |b| b.max(w)),
                        Objective::MaxMin => bound.map_or(w, |b| b.min(w)),
                    };
                    if self.beats(value) {
                        blocks.push(t);
                        self.best = Some((value, blocks.clone()));
                        blocks.pop();
                    }
                }
                return;
            }
            let mut subsets = Vec::new();
            for_each_connected_superset(self.g, unassigned, start, &mut |s| subsets.push(s));
            for s in subsets {
                let rest = unassigned & !s;
                // Every remaining block must be nonempty.
                if (rest.count_ones() as usize) < remaining - 1 {
                    continue;
                }
                let t = block_tree(self.g, s, &self.obj).expect("enumerated subsets are connected");
                let w = t.weight();
                let new_bound = match self.obj {
                    Objective::MinMax => Some(bound.map_or(w, |b| b.max(w))),
                    Objective::MaxMin => Some(bound.map_or(w, |b| b.min(w))),
                };
                blocks.push(t);
                self.rec(rest, used + 1, new_bound, blocks);
                blocks.pop();
            }
        }
    }

    let mut search = Search {
        g,
        k,
        obj,
        best: None,
    };
    search.rec(full, 0, None, &mut Vec::new());
    let (value, trees) = search.best.expect("connected graph always has a k-forest");
    let forest = SpanningKForest::new(g, trees).expect("search produces valid partitions");
    Ok((value, forest))
}

/// Exact min-max solver. Enumerates every partition of the vertices into `k`
/// connected blocks; `n` is capped at [`MAX_ORACLE_N`].
pub fn exact_minmax(g: &WeightedGraph, k: usize) -> Result<(u64, SpanningKForest), OracleError> {
    exact_solve(g, k, Objective::MinMax, MAX_ORACLE_N)
}

/// Exact max-min solver, same scheme with induced maximum spanning trees.
pub fn exact_maxmin(g: &WeightedGraph, k: usize) -> Result<(u64, SpanningKForest), OracleError> {
    exact_solve(g, k, Objective::MaxMin, MAX_ORACLE_N)
}

/// [`exact_minmax`] with a caller-chosen size cap. Intended for structured
/// sparse instances (the partition count, not `n` alone, is what the default
/// cap guards against); still limited to 63 vertices.
pub fn exact_minmax_with_limit(
    g: &WeightedGraph,
    k: usize,
    max_n: usize,
) -> Result<(u64, SpanningKForest), OracleError> {
    exact_solve(g, k, Objective::MinMax, max_n)
}

/// All dominant trees of `g` with weight at most `budget`: for every
/// connected vertex subset, the induced MST. This set is complete for the
/// min-max partition relaxation because replacing a tree by the induced MST
/// on the same vertices never hurts.
pub fn enumerate_dominant_trees(g: &WeightedGraph, budget: u64) -> Result<Vec<Tree>, OracleError> {
    let n = g.n();
    if n > MAX_ENUM_N {
        return Err(OracleError::TooLarge { n, max: MAX_ENUM_N });
    }
    let mut out = Vec::new();
    for start in 0..n {
        // Subsets whose smallest vertex is `start`.
        let allowed: u64 = ((1u64 << n) - 1) & !((1 << start) - 1);
        for_each_connected_superset(g, allowed, start, &mut |s| {
            let t = induced_mst(g, &set_of(s)).expect("enumerated subsets are connected");
            if t.weight() <= budget {
                out.push(t);
            }
        });
    }
    Ok(out)
}

/// Maximizes the reduced cost `rho(T) = -theta + sum eta over V(T) -
/// w(T) * sum zeta over V(T)` over trees with weight at most `budget`, by
/// connected-subset enumeration with the induced MST per subset (valid since
/// `zeta >= 0` makes lighter trees weakly better on a fixed vertex set).
/// Ties go to the smaller vertex set, then lexicographically.
pub fn pricing_oracle(
    g: &WeightedGraph,
    duals: &DualValues,
    budget: u64,
) -> Result<(f64, Tree), OracleError> {
    let n = g.n();
    if n > MAX_ENUM_N {
        return Err(OracleError::TooLarge { n, max: MAX_ENUM_N });
    }
    let mut best: Option<(f64, Tree)> = None;
    for start in 0..n {
        let allowed: u64 = ((1u64 << n) - 1) & !((1 << start) - 1);
        for_each_connected_superset(g, allowed, start, &mut |s| {
            let vs = set_of(s);
            let t = induced_mst(g, &vs).expect("enumerated subsets are connected");
            if t.weight() > budget {
                return;
            }
            let rho = duals.reduced_cost_parts(&vs, t.weight());
            let better = match &best {
                None => true,
                Some((b, bt)) => {
                    rho > b + 1e-9
                        || ((rho - b).abs() <= 1e-9
                            && (t.vertices().len(), t.vertices())
                                < (bt.vertices().len(), bt.vertices()))
                }
            };
            if better {
                best = Some((rho, t));
            }
        });
    }
    Ok(best.expect("graphs have at least one vertex"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo8() -> WeightedGraph {
        WeightedGraph::new(
            8,
            &[
                (0, 1, 1),
                (1, 4, 1),
                (4, 2, 1),
                (2, 3, 1),
                (1, 2, 3),
                (4, 5, 1),
                (5, 6, 1),
                (5, 7, 1),
            ],
        )
        .unwrap()
    }

    /// Star of `k` two-edge paths whose designated endpoints all attach to
    /// the last path's endpoint. Unit weights; a tree with k leaves.
    pub fn spider(k: usize) -> WeightedGraph {
        // Path i has vertices (3i, 3i+1, 3i+2) = (u_i, mid, leaf).
        let mut edges = Vec::new();
        for i in 0..k {
            edges.push((3 * i, 3 * i + 1, 1));
            edges.push((3 * i + 1, 3 * i + 2, 1));
        }
        let hub = 3 * (k - 1);
        for i in 0..k - 1 {
            edges.push((hub, 3 * i, 1));
        }
        WeightedGraph::new(3 * k, &edges).unwrap()
    }

    /// Two hubs joined by k length-3 paths with heavy middles and heavy hub
    /// spokes; the family where solving on the MST alone goes wrong.
    pub fn double_spider(k: usize, tau: u64) -> WeightedGraph {
        // Path i: u_i = 4i, x_i = 4i+1, y_i = 4i+2, v_i = 4i+3.
        let mut edges = Vec::new();
        for i in 0..k {
            edges.push((4 * i, 4 * i + 1, 1));
            edges.push((4 * i + 1, 4 * i + 2, tau));
            edges.push((4 * i + 2, 4 * i + 3, 1));
        }
        let (u_hub, v_hub) = (4 * (k - 1), 4 * (k - 1) + 3);
        for i in 0..k - 1 {
            edges.push((u_hub, 4 * i, tau));
            edges.push((v_hub, 4 * i + 3, tau));
        }
        WeightedGraph::new(4 * k, &edges).unwrap()
    }

    #[test]
    fn demo8_minmax_is_4() {
        let g = demo8();
        let (v, f) = exact_minmax(&g, 2).unwrap();
        assert_eq!(v, 4);
        assert_eq!(f.value_minmax(), 4);
        assert_eq!(f.k(), 2);
    }

    #[test]
    fn demo8_maxmin_is_3() {
        let g = demo8();
        let (v, f) = exact_maxmin(&g, 2).unwrap();
        assert_eq!(v, 3);
        assert_eq!(f.value_maxmin(), 3);
    }

    #[test]
    fn tree_with_k1_gives_total_weight() {
        let g = WeightedGraph::new(4, &[(0, 1, 2), (1, 2, 3), (1, 3, 4)]).unwrap();
        let (v, _) = exact_minmax(&g, 1).unwrap();
        assert_eq!(v, 9);
        let (v, _) = exact_maxmin(&g, 1).unwrap();
        assert_eq!(v, 9);
    }

    #[test]
    fn single_edge_k1_maxmin() {
        let g = WeightedGraph::new(2, &[(0, 1, 5)]).unwrap();
        let (v, _) = exact_maxmin(&g, 1).unwrap();
        assert_eq!(v, 5);
    }

    #[test]
    fn spider_k3_optimum_is_2() {
        let g = spider(3);
        let (v, _) = exact_minmax(&g, 3).unwrap();
        assert_eq!(v, 2);
    }

    #[test]
    fn double_spider_k2_optimum() {
        // With two paths the graph is a single cycle; the optimum cuts two
        // heavy edges leaving both paths whole, value tau + 2.
        let tau = 3;
        let g = double_spider(2, tau);
        let (v, _) = exact_minmax(&g, 2).unwrap();
        assert_eq!(v, tau + 2);
    }

    #[test]
    fn too_large_is_rejected() {
        let edges: Vec<_> = (0..14).map(|i| (i, i + 1, 1)).collect();
        let g = WeightedGraph::new(15, &edges).unwrap();
        assert_eq!(
            exact_minmax(&g, 2),
            Err(OracleError::TooLarge { n: 15, max: 14 })
        );
        assert!(exact_minmax_with_limit(&g, 2, 20).is_ok());
    }

    #[test]
    fn dominant_tree_counts() {
        let k3 = WeightedGraph::new(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
        assert_eq!(enumerate_dominant_trees(&k3, u64::MAX).unwrap().len(), 7);
        assert_eq!(enumerate_dominant_trees(&k3, 0).unwrap().len(), 3);

        let g = demo8();
        assert_eq!(enumerate_dominant_trees(&g, 0).unwrap().len(), 8);
        assert_eq!(enumerate_dominant_trees(&g, 1).unwrap().len(), 15);
    }

    #[test]
    fn minmax_lower_bounds_every_feasible_forest() {
        use crate::graph::Tree;
        // Cross-validate the oracle value against hand-built forests.
        let g = demo8();
        let (opt, _) = exact_minmax(&g, 2).unwrap();
        let forests = [
            vec![vec![0usize, 1, 2, 3], vec![6, 7]],
            vec![vec![0], vec![2, 3, 5, 6, 7]],
        ];
        for ids in forests {
            let trees: Vec<Tree> = ids
                .iter()
                .map(|e| Tree::from_edge_ids(&g, e).unwrap())
                .collect();
            let f = SpanningKForest::new(&g, trees).unwrap();
            assert!(opt <= f.value_minmax());
        }
    }

    #[test]
    fn pricing_oracle_examples() {
        // All-ones eta, zero zeta: any spanning vertex set wins with rho = n.
        let g = demo8();
        let d = DualValues::new(0.0, vec![1.0; 8], vec![0.0; 8]);
        let (rho, t) = pricing_oracle(&g, &d, u64::MAX).unwrap();
        assert!((rho - 8.0).abs() < 1e-9);
        assert_eq!(t.vertices().len(), 8);

        // Constant -theta: everything ties; smallest vertex set wins.
        let d = DualValues::new(10.0, vec![0.0; 8], vec![0.0; 8]);
        let (rho, t) = pricing_oracle(&g, &d, u64::MAX).unwrap();
        assert!((rho + 10.0).abs() < 1e-9);
        assert_eq!(t.vertices(), &[0]);

        // Two vertices, tie between the edge tree and the better singleton.
        let g2 = WeightedGraph::new(2, &[(0, 1, 4)]).unwrap();
        let d = DualValues::new(1.0, vec![2.0, 3.0], vec![0.25, 0.25]);
        let (rho, t) = pricing_oracle(&g2, &d, u64::MAX).unwrap();
        assert!((rho - 2.0).abs() < 1e-9);
        assert_eq!(t.vertices(), &[1]);
    }

    #[test]
    fn pricing_oracle_agrees_with_double_loop() {
        // Slow reference: subsets x all spanning trees of the subset.
        fn slow_best(g: &WeightedGraph, d: &DualValues, budget: u64) -> f64 {
            let n = g.n();
            let mut best = f64::NEG_INFINITY;
            for mask in 1u64..(1 << n) {
                let vs = set_of(mask);
                let size = vs.len();
                if size == 1 {
                    best = best.max(d.reduced_cost_parts(&vs, 0));
                    continue;
                }
                // Enumerate all edge subsets of size |S|-1 forming a tree on S.
                let inside: Vec<usize> = (0..g.m())
                    .filter(|&id| {
                        let e = g.edge(id);
                        vs.contains(&e.u) && vs.contains(&e.v)
                    })
                    .collect();
                for emask in 0u64..(1 << inside.len()) {
                    if emask.count_ones() as usize != size - 1 {
                        continue;
                    }
                    let ids: Vec<usize> = inside
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| emask >> i & 1 == 1)
                        .map(|(_, &id)| id)
                        .collect();
                    if let Ok(t) = Tree::from_edge_ids(g, &ids) {
                        if t.vertices().len() == size && t.weight() <= budget {
                            best = best.max(d.reduced_cost_parts(&vs, t.weight()));
                        }
                    }
                }
            }
            best
        }

        let mut rng = crate::rng::SplitMix64::new(0x5eed_0003);
        for round in 0..25 {
            let n = 3 + (round % 4) as usize; // 3..=6
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.next_u64() % 100 < 70 {
                        edges.push((u, v, 1 + rng.next_u64() % 9));
                    }
                }
            }
            let Ok(g) = WeightedGraph::new(n, &edges) else {
                continue;
            };
            let eta: Vec<f64> = (0..n).map(|_| rng.f64() * 8.0 - 3.0).collect();
            let zeta: Vec<f64> = (0..n).map(|_| rng.f64() * 0.5).collect();
            let d = DualValues::new(rng.f64() * 3.0, eta, zeta);
            let budget = rng.next_u64() % 20;
            let (rho, t) = pricing_oracle(&g, &d, budget).unwrap();
            assert!(t.weight() <= budget);
            let slow = slow_best(&g, &d, budget);
            assert!(
                (rho - slow).abs() < 1e-9,
                "oracle {rho} vs slow {slow} (n = {n})"
            );
        }
    }
}
