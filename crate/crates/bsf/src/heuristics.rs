//! Primal algorithms: the tight k-approximation, an exact min-max partition
//! subroutine for trees, a best-first improvement search over forbidden-edge
//! sets, and the randomized column seeding used by branch-and-price.

use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use crate::graph::{
    induced_mst, kruskal_mst, mst_excluding, GraphError, SpanningKForest, Tree, WeightedGraph,
};
use crate::rng::SplitMix64;

/// How ties among equal-weight spanning-tree edges are broken when the
/// k-approximation picks the `k - 1` edges to drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalTieBreak {
    /// Drop the edge with the higher id first (the library default).
    HighestId,
    /// Prefer edges incident to a leaf of the spanning tree. This is the
    /// adversarial choice under which the approximation guarantee is tight.
    LeafIncident,
}

/// Splits the host graph's vertices into the components left after keeping
/// only `kept` edges.
fn forest_from_kept_edges(g: &WeightedGraph, kept: &[usize]) -> Vec<Tree> {
    let mut uf = crate::graph::UnionFind::new(g.n());
    for &id in kept {
        let e = g.edge(id);
        uf.union(e.u, e.v);
    }
    let mut comp_edges: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for &id in kept {
        let root = uf.find(g.edge(id).u);
        comp_edges[root].push(id);
    }
    let mut trees = Vec::new();
    for v in 0..g.n() {
        if uf.find(v) == v {
            if comp_edges[v].is_empty() {
                trees.push(Tree::singleton(v));
            } else {
                trees.push(Tree::from_edge_ids(g, &comp_edges[v]).expect("components are trees"));
            }
        }
    }
    trees
}

/// The k-approximation: compute an MST and drop its `k - 1` heaviest edges.
/// The heaviest tree of the result weighs at most `k` times the optimum.
pub fn k_approx(g: &WeightedGraph, k: usize) -> Result<SpanningKForest, GraphError> {
    k_approx_with(g, k, RemovalTieBreak::HighestId)
}

/// [`k_approx`] with an explicit tie-break among equal-weight edges.
pub fn k_approx_with(
    g: &WeightedGraph,
    k: usize,
    tie: RemovalTieBreak,
) -> Result<SpanningKForest, GraphError> {
    assert!(k >= 1 && k <= g.n(), "k out of range");
    let mst = kruskal_mst(g)?;
    let mut order: Vec<usize> = mst.edge_ids().to_vec();
    let is_leaf_edge = |id: usize| -> bool {
        let e = g.edge(id);
        let deg = |v: usize| {
            mst.edge_ids()
                .iter()
                .filter(|&&eid| {
                    let f = g.edge(eid);
                    f.u == v || f.v == v
                })
                .count()
        };
        deg(e.u) == 1 || deg(e.v) == 1
    };
    match tie {
        RemovalTieBreak::HighestId => {
            order.sort_by(|&a, &b| g.edge(b).w.cmp(&g.edge(a).w).then(b.cmp(&a)));
        }
        RemovalTieBreak::LeafIncident => {
            order.sort_by(|&a, &b| {
                g.edge(b)
                    .w
                    .cmp(&g.edge(a).w)
                    .then(is_leaf_edge(b).cmp(&is_leaf_edge(a)))
                    .then(b.cmp(&a))
            });
        }
    }
    let dropped: BTreeSet<usize> = order.into_iter().take(k - 1).collect();
    let kept: Vec<usize> = mst
        .edge_ids()
        .iter()
        .copied()
        .filter(|id| !dropped.contains(id))
        .collect();
    SpanningKForest::new(g, forest_from_kept_edges(g, &kept))
}

/// Minimum number of edge cuts so that every component of the tree weighs at
/// most `limit`, together with the cut edge ids. Children are merged
/// lightest-first, which keeps both the cut count and the residual weight at
/// each vertex minimal.
fn min_cuts_for_limit(
    g: &WeightedGraph,
    tree: &Tree,
    limit: u64,
) -> Option<(usize, Vec<usize>)> {
    let root = tree.vertices()[0];
    // Iterative post-order over the tree.
    let mut parent_edge: Vec<Option<usize>> = vec![None; g.n()];
    let mut order = Vec::with_capacity(tree.vertices().len());
    let mut stack = vec![(root, usize::MAX)];
    let tree_edges: HashSet<usize> = tree.edge_ids().iter().copied().collect();
    let mut visited = HashSet::new();
    visited.insert(root);
    while let Some((v, pe)) = stack.pop() {
        order.push(v);
        if pe != usize::MAX {
            parent_edge[v] = Some(pe);
        }
        for &eid in g.incident(v) {
            if !tree_edges.contains(&eid) {
                continue;
            }
            let o = g.edge(eid).other(v);
            if visited.insert(o) {
                stack.push((o, eid));
            }
        }
    }
    let mut acc: Vec<u64> = vec![0; g.n()];
    let mut children: Vec<Vec<(u64, usize, usize)>> = vec![Vec::new(); g.n()];
    let mut cuts = Vec::new();
    for &v in order.iter().rev() {
        let mut contributions = std::mem::take(&mut children[v]);
        contributions.sort_unstable();
        let mut kept = 0u64;
        for (c, _, eid) in contributions {
            if kept + c <= limit {
                kept += c;
            } else {
                cuts.push(eid);
            }
        }
        acc[v] = kept;
        if let Some(pe) = parent_edge[v] {
            let w = g.edge(pe).w;
            let p = g.edge(pe).other(v);
            let contribution = acc[v].checked_add(w)?;
            if contribution > limit && acc[v] > limit {
                // A single subtree already over the limit: infeasible at
                // this limit regardless of cuts above it.
                return None;
            }
            children[p].push((contribution, v, pe));
        } else if acc[v] > limit {
            return None;
        }
    }
    Some((cuts.len(), cuts))
}

/// Exact min-max spanning k-forest of a tree given as a standalone graph.
/// Binary search on the answer with a greedy bottom-up feasibility check;
/// cutting extra edges is free because weights are non-negative.
pub fn tree_mskf(t: &WeightedGraph, k: usize) -> Result<SpanningKForest, GraphError> {
    if t.n() == 0 || t.m() != t.n() - 1 || !t.is_connected() {
        return Err(GraphError::NotATree);
    }
    assert!(k >= 1 && k <= t.n(), "k out of range");
    if t.n() == 1 {
        return SpanningKForest::new(t, vec![Tree::singleton(0)]);
    }
    let whole = Tree::from_edge_ids(t, &(0..t.m()).collect::<Vec<_>>())?;
    let trees = partition_tree_min_max(t, &whole, k);
    SpanningKForest::new(t, trees)
}

/// Core of [`tree_mskf`], reusable on a tree living inside a host graph.
/// Returns exactly `k` trees covering the tree's vertices.
pub(crate) fn partition_tree_min_max(g: &WeightedGraph, tree: &Tree, k: usize) -> Vec<Tree> {
    let nv = tree.vertices().len();
    assert!(k >= 1 && k <= nv);
    if nv == 1 {
        return vec![tree.clone()];
    }
    let (mut lo, mut hi) = (0u64, tree.weight());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match min_cuts_for_limit(g, tree, mid) {
            Some((c, _)) if c <= k - 1 => hi = mid,
            _ => lo = mid + 1,
        }
    }
    let (_, mut cuts) = min_cuts_for_limit(g, tree, lo).expect("limit = weight is feasible");
    // Top up to exactly k - 1 cuts; splitting never increases the max.
    if cuts.len() < k - 1 {
        let cut_set: HashSet<usize> = cuts.iter().copied().collect();
        let mut extra: Vec<usize> = tree
            .edge_ids()
            .iter()
            .copied()
            .filter(|id| !cut_set.contains(id))
            .collect();
        extra.sort_by(|&a, &b| g.edge(b).w.cmp(&g.edge(a).w).then(b.cmp(&a)));
        let need = k - 1 - cuts.len();
        cuts.extend(extra.into_iter().take(need));
    }
    let cut_set: HashSet<usize> = cuts.iter().copied().collect();
    let kept: Vec<usize> = tree
        .edge_ids()
        .iter()
        .copied()
        .filter(|id| !cut_set.contains(id))
        .collect();
    // Components restricted to the tree's vertices.
    let mut uf = crate::graph::UnionFind::new(g.n());
    for &id in &kept {
        let e = g.edge(id);
        uf.union(e.u, e.v);
    }
    let mut comp_edges: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for &id in &kept {
        comp_edges[uf.find(g.edge(id).u)].push(id);
    }
    let mut out = Vec::new();
    for &v in tree.vertices() {
        if uf.find(v) == v {
            if comp_edges[v].is_empty() {
                out.push(Tree::singleton(v));
            } else {
                out.push(Tree::from_edge_ids(g, &comp_edges[v]).expect("components are trees"));
            }
        }
    }
    debug_assert_eq!(out.len(), k);
    out
}

/// Deduplicating store of trees offered to the master problem as columns.
/// Insertion order is preserved; a tree is only admitted while its weight
/// does not exceed the upper bound active at insertion time.
#[derive(Debug, Default, Clone)]
pub struct ColumnPool {
    trees: Vec<Tree>,
    seen: HashSet<(Vec<usize>, Vec<usize>)>,
}

impl ColumnPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn contains(&self, t: &Tree) -> bool {
        self.seen.contains(&t.key())
    }

    /// Returns true iff the tree was new and within the bound.
    pub fn insert(&mut self, t: Tree, ub: u64) -> bool {
        if t.weight() > ub || self.seen.contains(&t.key()) {
            return false;
        }
        self.seen.insert(t.key());
        self.trees.push(t);
        true
    }
}

/// Stopping rules for [`heuristic_bnb`]. Node budgets keep runs reproducible
/// where wall-clock limits would not.
#[derive(Debug, Clone, Default)]
pub struct SearchLimits {
    pub time: Option<Duration>,
    pub nodes: Option<u64>,
}

impl SearchLimits {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn nodes(n: u64) -> Self {
        SearchLimits {
            time: None,
            nodes: Some(n),
        }
    }

    pub fn time(d: Duration) -> Self {
        SearchLimits {
            time: Some(d),
            nodes: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeuristicOutcome {
    pub value: u64,
    pub forest: SpanningKForest,
    pub nodes: u64,
}

/// Best-first search over forbidden-edge sets: each node carries a set of
/// banned edges, an MST of the remaining graph, and the bound
/// `ceil(w(MST)/k)`; expanding a node solves the exact tree partition on its
/// MST and spawns one child per tree edge. Every tree of every forest found
/// along the way is offered to `pool`.
pub fn heuristic_bnb(
    g: &WeightedGraph,
    k: usize,
    limits: &SearchLimits,
    pool: &mut ColumnPool,
) -> Result<HeuristicOutcome, GraphError> {
    assert!(k >= 1 && k <= g.n(), "k out of range");
    let start = Instant::now();
    let root_mst = kruskal_mst(g)?;
    let lb0 = root_mst.weight().div_ceil(k as u64);

    struct Node {
        forbidden: BTreeSet<usize>,
        mst: Tree,
    }

    let mut nodes: Vec<Node> = vec![Node {
        forbidden: BTreeSet::new(),
        mst: root_mst,
    }];
    let mut queue: BinaryHeap<std::cmp::Reverse<(u64, usize)>> = BinaryHeap::new();
    queue.push(std::cmp::Reverse((lb0, 0)));
    let mut seen_msts: HashSet<Vec<usize>> = HashSet::new();
    seen_msts.insert(nodes[0].mst.edge_ids().to_vec());

    let mut ub = u64::MAX;
    let mut best: Option<SpanningKForest> = None;
    let mut processed = 0u64;

    while let Some(std::cmp::Reverse((lb, idx))) = queue.pop() {
        if lb >= ub {
            break; // best-first: every remaining node is bounded too
        }
        processed += 1;
        let (forbidden, mst) = {
            let node = &nodes[idx];
            (node.forbidden.clone(), node.mst.clone())
        };
        let trees = partition_tree_min_max(g, &mst, k);
        let forest = SpanningKForest::new(g, trees).expect("tree partition spans the graph");
        if forest.value_minmax() < ub {
            ub = forest.value_minmax();
            best = Some(forest.clone());
        }
        for t in forest.trees() {
            pool.insert(t.clone(), ub);
        }
        // Children: forbid each tree edge, heaviest first.
        let mut order: Vec<usize> = mst.edge_ids().to_vec();
        order.sort_by(|&a, &b| g.edge(b).w.cmp(&g.edge(a).w).then(a.cmp(&b)));
        for eid in order {
            let mut child_forbidden = forbidden.clone();
            child_forbidden.insert(eid);
            let Ok(child_mst) = mst_excluding(g, &child_forbidden) else {
                continue;
            };
            if !seen_msts.insert(child_mst.edge_ids().to_vec()) {
                continue;
            }
            let lb_child = child_mst.weight().div_ceil(k as u64);
            if lb_child < ub {
                let id = nodes.len();
                nodes.push(Node {
                    forbidden: child_forbidden,
                    mst: child_mst,
                });
                queue.push(std::cmp::Reverse((lb_child, id)));
            }
        }
        if let Some(cap) = limits.nodes {
            if processed >= cap {
                break;
            }
        }
        if let Some(t) = limits.time {
            if start.elapsed() >= t {
                break;
            }
        }
    }
    let forest = best.expect("root node is always processed");
    Ok(HeuristicOutcome {
        value: ub,
        forest,
        nodes: processed,
    })
}

/// Column target for the seeding stage.
pub fn column_target(n: usize, k: usize) -> u64 {
    (2f64).powf(0.1 * n as f64 + 12.0 - k as f64 / 2.0).ceil() as u64
}

/// Time budget for the heuristic stage of pool construction, growing
/// exponentially with instance size.
pub fn seeding_time_limit(n: usize) -> f64 {
    (3f64).powf((n as f64 - 20.0) / 10.0)
}

/// Randomized pool enrichment: repeatedly pick a stored tree, add or remove
/// a random vertex, recompute the induced MST if connected, and keep the
/// result when new and within `ub`. Stops at the [`column_target`] or after
/// 1000 consecutive failures.
pub fn seed_columns(
    g: &WeightedGraph,
    k: usize,
    ub: u64,
    pool: &mut ColumnPool,
    rng_seed: u64,
) {
    const STAGNATION_LIMIT: u32 = 1000;
    if pool.is_empty() {
        return;
    }
    let target = column_target(g.n(), k);
    let mut rng = SplitMix64::new(rng_seed);
    let mut failures = 0u32;
    while (pool.len() as u64) < target && failures < STAGNATION_LIMIT {
        let t = &pool.trees()[rng.usize_below(pool.len())];
        let mut vs = t.vertex_set();
        let added = if rng.next_u64() % 2 == 0 {
            // Vertex removal.
            let idx = rng.usize_below(vs.len());
            let v = *vs.iter().nth(idx).unwrap();
            vs.remove(&v);
            !vs.is_empty()
        } else {
            // Vertex addition.
            let outside: Vec<usize> = (0..g.n()).filter(|v| !vs.contains(v)).collect();
            if outside.is_empty() {
                false
            } else {
                vs.insert(outside[rng.usize_below(outside.len())]);
                true
            }
        };
        let candidate = if added { induced_mst(g, &vs) } else { None };
        let inserted = candidate.map(|t| pool.insert(t, ub)).unwrap_or(false);
        if inserted {
            failures = 0;
        } else {
            failures += 1;
        }
    }
}
