//! Graph data structures and the primitive algorithms every solver builds on:
//! minimum/maximum spanning trees, connectivity queries and max-flow/min-cut.
//!
//! Vertices are `0..n`. Edges are identified by their position in the edge
//! list handed to [`WeightedGraph::new`]; every [`Tree`] refers back to those
//! edge ids. Weights are non-negative integers so all combinatorial
//! comparisons stay exact.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph is not connected")]
    Disconnected,
    #[error("input graph is not a tree")]
    NotATree,
    #[error("vertex {v} out of range (n = {n})")]
    InvalidVertex { v: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("parallel edge between {0} and {1}")]
    ParallelEdge(usize, usize),
    #[error("forest is not a spanning k-forest: {0}")]
    InvalidForest(String),
}

/// An undirected edge with a non-negative integer weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: u64,
}

impl Edge {
    /// The endpoint that is not `x`. Panics if `x` is not an endpoint.
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            debug_assert_eq!(x, self.v);
            self.u
        }
    }
}

/// Simple undirected graph with non-negative integer edge weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    /// Incident edge ids per vertex.
    adj: Vec<Vec<usize>>,
}

impl WeightedGraph {
    /// Builds a graph from an edge list. Rejects out-of-range endpoints,
    /// self-loops and parallel edges.
    pub fn new(n: usize, edge_list: &[(usize, usize, u64)]) -> Result<Self, GraphError> {
        let mut edges = Vec::with_capacity(edge_list.len());
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v, w) in edge_list {
            if u >= n {
                return Err(GraphError::InvalidVertex { v: u, n });
            }
            if v >= n {
                return Err(GraphError::InvalidVertex { v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::ParallelEdge(key.0, key.1));
            }
            let id = edges.len();
            edges.push(Edge { u, v, w });
            adj[u].push(id);
            adj[v].push(id);
        }
        Ok(WeightedGraph { n, edges, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    /// Ids of the edges incident to `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Looks up the edge id of the pair `{u, v}`, if present.
    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u]
            .iter()
            .copied()
            .find(|&id| self.edges[id].other(u) == v)
    }

    /// True iff the subgraph induced by `subset` is connected.
    /// The empty set is not connected; a singleton is.
    pub fn is_connected_subset(&self, subset: &BTreeSet<usize>) -> bool {
        let Some(&start) = subset.iter().next() else {
            return false;
        };
        let mut visited = BTreeSet::new();
        visited.insert(start);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &eid in &self.adj[v] {
                let o = self.edges[eid].other(v);
                if subset.contains(&o) && visited.insert(o) {
                    stack.push(o);
                }
            }
        }
        visited.len() == subset.len()
    }

    /// True iff the whole graph is connected. Empty graphs are not.
    pub fn is_connected(&self) -> bool {
        self.is_connected_subset(&(0..self.n).collect())
    }
}

/// Convenience wrapper matching the library API: connectivity of an induced
/// subgraph given as a vertex set.
pub fn is_connected(g: &WeightedGraph, subset: &BTreeSet<usize>) -> bool {
    g.is_connected_subset(subset)
}

/// A tree inside a host graph: a vertex set together with the edge ids that
/// span it. `weight` is always the recomputed sum of member edge weights.
///
/// A single vertex with no edges is a valid (weight-0) tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    vertices: Vec<usize>,
    edges: Vec<usize>,
    weight: u64,
}

impl Tree {
    /// The tree consisting of the single vertex `v`.
    pub fn singleton(v: usize) -> Tree {
        Tree {
            vertices: vec![v],
            edges: Vec::new(),
            weight: 0,
        }
    }

    /// Builds a tree from edge ids of `g`, validating that they form a tree
    /// (connected, acyclic) and deriving the vertex set.
    pub fn from_edge_ids(g: &WeightedGraph, edge_ids: &[usize]) -> Result<Tree, GraphError> {
        if edge_ids.is_empty() {
            return Err(GraphError::NotATree);
        }
        let mut vertices = BTreeSet::new();
        for &id in edge_ids {
            let e = g.edge(id);
            vertices.insert(e.u);
            vertices.insert(e.v);
        }
        if edge_ids.len() != vertices.len() - 1 {
            return Err(GraphError::NotATree);
        }
        // |E| = |V| - 1 and connected => tree.
        let mut uf = UnionFind::new(g.n());
        for &id in edge_ids {
            let e = g.edge(id);
            if !uf.union(e.u, e.v) {
                return Err(GraphError::NotATree);
            }
        }
        let mut edges: Vec<usize> = edge_ids.to_vec();
        edges.sort_unstable();
        edges.dedup();
        if edges.len() != edge_ids.len() {
            return Err(GraphError::NotATree);
        }
        let weight = edges.iter().map(|&id| g.edge(id).w).sum();
        Ok(Tree {
            vertices: vertices.into_iter().collect(),
            edges,
            weight,
        })
    }

    /// Sorted vertex ids.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Sorted edge ids of the host graph.
    pub fn edge_ids(&self) -> &[usize] {
        &self.edges
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.vertices.iter().copied().collect()
    }

    /// Canonical identity used for deduplication in column pools.
    pub fn key(&self) -> (Vec<usize>, Vec<usize>) {
        (self.vertices.clone(), self.edges.clone())
    }
}

/// A collection of `k` vertex-disjoint trees whose vertex sets partition the
/// host graph's vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningKForest {
    trees: Vec<Tree>,
    value_minmax: u64,
    value_maxmin: u64,
}

impl SpanningKForest {
    /// Validates disjointness and coverage; trees are stored sorted by their
    /// smallest vertex so equal forests compare equal.
    pub fn new(g: &WeightedGraph, mut trees: Vec<Tree>) -> Result<Self, GraphError> {
        if trees.is_empty() {
            return Err(GraphError::InvalidForest("no trees".into()));
        }
        let mut covered = vec![false; g.n()];
        for t in &trees {
            for &v in t.vertices() {
                if v >= g.n() {
                    return Err(GraphError::InvalidVertex { v, n: g.n() });
                }
                if covered[v] {
                    return Err(GraphError::InvalidForest(format!(
                        "vertex {v} covered twice"
                    )));
                }
                covered[v] = true;
            }
        }
        if covered.iter().any(|&c| !c) {
            return Err(GraphError::InvalidForest("not spanning".into()));
        }
        trees.sort_by_key(|t| t.vertices()[0]);
        let value_minmax = trees.iter().map(Tree::weight).max().unwrap();
        let value_maxmin = trees.iter().map(Tree::weight).min().unwrap();
        Ok(SpanningKForest {
            trees,
            value_minmax,
            value_maxmin,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn k(&self) -> usize {
        self.trees.len()
    }

    /// Weight of the heaviest tree.
    pub fn value_minmax(&self) -> u64 {
        self.value_minmax
    }

    /// Weight of the lightest tree.
    pub fn value_maxmin(&self) -> u64 {
        self.value_maxmin
    }
}

/// Disjoint-set forest with union by rank and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `x` and `y` were already in the same set.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry,
            std::cmp::Ordering::Greater => self.parent[ry] = rx,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
        true
    }

    pub fn same(&mut self, x: usize, y: usize) -> bool {
        self.find(x) == self.find(y)
    }
}

fn kruskal_on(
    g: &WeightedGraph,
    allowed: impl Fn(usize) -> bool,
    maximize: bool,
) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..g.m()).filter(|&id| allowed(id)).collect();
    // Equal weights break towards the lower edge id, for both senses.
    if maximize {
        order.sort_by(|&a, &b| {
            g.edge(b)
                .w
                .cmp(&g.edge(a).w)
                .then_with(|| a.cmp(&b))
        });
    } else {
        order.sort_by(|&a, &b| {
            g.edge(a)
                .w
                .cmp(&g.edge(b).w)
                .then_with(|| a.cmp(&b))
        });
    }
    let mut uf = UnionFind::new(g.n());
    let mut chosen = Vec::new();
    for id in order {
        let e = g.edge(id);
        if uf.union(e.u, e.v) {
            chosen.push(id);
        }
    }
    Some(chosen)
}

/// Minimum spanning tree via Kruskal's algorithm. Among equal-weight edges
/// the lower edge id wins, which makes the result deterministic.
pub fn kruskal_mst(g: &WeightedGraph) -> Result<Tree, GraphError> {
    mst_excluding(g, &BTreeSet::new())
}

/// MST of the graph with the given edge ids removed. Used by the search
/// heuristic which explores forbidden-edge sets.
pub fn mst_excluding(g: &WeightedGraph, forbidden: &BTreeSet<usize>) -> Result<Tree, GraphError> {
    if g.n() == 0 {
        return Err(GraphError::Disconnected);
    }
    if g.n() == 1 {
        return Ok(Tree::singleton(0));
    }
    let chosen = kruskal_on(g, |id| !forbidden.contains(&id), false).unwrap();
    if chosen.len() != g.n() - 1 {
        return Err(GraphError::Disconnected);
    }
    Tree::from_edge_ids(g, &chosen)
}

/// Maximum spanning tree; same tie-break as [`kruskal_mst`].
pub fn max_spanning_tree(g: &WeightedGraph) -> Result<Tree, GraphError> {
    if g.n() == 0 {
        return Err(GraphError::Disconnected);
    }
    if g.n() == 1 {
        return Ok(Tree::singleton(0));
    }
    let chosen = kruskal_on(g, |_| true, true).unwrap();
    if chosen.len() != g.n() - 1 {
        return Err(GraphError::Disconnected);
    }
    Tree::from_edge_ids(g, &chosen)
}

/// MST of the subgraph induced by `subset`, or `None` when that subgraph is
/// disconnected. A singleton subset yields a weight-0 tree.
pub fn induced_mst(g: &WeightedGraph, subset: &BTreeSet<usize>) -> Option<Tree> {
    let first = *subset.iter().next()?;
    if subset.len() == 1 {
        return Some(Tree::singleton(first));
    }
    let inside = |id: usize| {
        let e = g.edge(id);
        subset.contains(&e.u) && subset.contains(&e.v)
    };
    let chosen = kruskal_on(g, inside, false).unwrap();
    if chosen.len() != subset.len() - 1 {
        return None;
    }
    Tree::from_edge_ids(g, &chosen).ok()
}

/// Maximum spanning tree of an induced subgraph; `None` when disconnected.
pub fn induced_max_spanning_tree(g: &WeightedGraph, subset: &BTreeSet<usize>) -> Option<Tree> {
    let first = *subset.iter().next()?;
    if subset.len() == 1 {
        return Some(Tree::singleton(first));
    }
    let inside = |id: usize| {
        let e = g.edge(id);
        subset.contains(&e.u) && subset.contains(&e.v)
    };
    let chosen = kruskal_on(g, inside, true).unwrap();
    if chosen.len() != subset.len() - 1 {
        return None;
    }
    Tree::from_edge_ids(g, &chosen).ok()
}

/// Directed flow network with a designated source and sink. Capacities are
/// non-negative; `f64::INFINITY` is the dedicated unbounded-capacity
/// sentinel and is never produced by adding finite capacities.
#[derive(Debug, Clone)]
pub struct FlowDigraph {
    nodes: usize,
    arcs: Vec<(usize, usize, f64)>,
    source: usize,
    sink: usize,
}

impl FlowDigraph {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        assert!(source < nodes && sink < nodes && source != sink);
        FlowDigraph {
            nodes,
            arcs: Vec::new(),
            source,
            sink,
        }
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, capacity: f64) {
        assert!(tail < self.nodes && head < self.nodes);
        assert!(capacity >= 0.0);
        self.arcs.push((tail, head, capacity));
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }
}

/// Maximum s-t flow and a minimum s-t cut (the source side `S`, with
/// `s ∈ S`, `t ∉ S`). Edmonds-Karp; fine at the scales the separation
/// routines use. If the flow is unbounded the value is the infinity
/// sentinel and `S` is the set of vertices reachable through
/// infinite-capacity arcs alone.
pub fn max_flow_min_cut(d: &FlowDigraph) -> (f64, BTreeSet<usize>) {
    let n = d.nodes;
    // Residual network: forward arc + reverse arc per input arc.
    let mut head = Vec::with_capacity(d.arcs.len() * 2);
    let mut cap = Vec::with_capacity(d.arcs.len() * 2);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v, c) in &d.arcs {
        adj[u].push(head.len());
        head.push(v);
        cap.push(c);
        adj[v].push(head.len());
        head.push(u);
        cap.push(0.0);
    }
    let mut total = 0.0f64;
    loop {
        // BFS for a shortest augmenting path.
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(d.source);
        let mut seen = vec![false; n];
        seen[d.source] = true;
        while let Some(u) = queue.pop_front() {
            if u == d.sink {
                break;
            }
            for &a in &adj[u] {
                let v = head[a];
                if !seen[v] && cap[a] > 0.0 {
                    seen[v] = true;
                    pred[v] = Some(a);
                    queue.push_back(v);
                }
            }
        }
        if !seen[d.sink] {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = d.sink;
        while v != d.source {
            let a = pred[v].unwrap();
            bottleneck = bottleneck.min(cap[a]);
            v = head[a ^ 1];
        }
        if bottleneck.is_infinite() {
            // Unbounded: report the infinite-arc reachable set as S.
            let mut s_side = BTreeSet::new();
            s_side.insert(d.source);
            let mut stack = vec![d.source];
            while let Some(u) = stack.pop() {
                for &a in &adj[u] {
                    if a % 2 == 0 && cap[a].is_infinite() {
                        let v = head[a];
                        if v != d.sink && s_side.insert(v) {
                            stack.push(v);
                        }
                    }
                }
            }
            return (f64::INFINITY, s_side);
        }
        let mut v = d.sink;
        while v != d.source {
            let a = pred[v].unwrap();
            if cap[a].is_finite() {
                cap[a] -= bottleneck;
            }
            if cap[a ^ 1].is_finite() {
                cap[a ^ 1] += bottleneck;
            }
            v = head[a ^ 1];
        }
        total += bottleneck;
    }
    // Min cut: vertices reachable from s in the final residual network.
    let mut s_side = BTreeSet::new();
    s_side.insert(d.source);
    let mut stack = vec![d.source];
    while let Some(u) = stack.pop() {
        for &a in &adj[u] {
            let v = head[a];
            if cap[a] > 0.0 && s_side.insert(v) {
                stack.push(v);
            }
        }
    }
    (total, s_side)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The 8-vertex, 8-edge demo instance used throughout the test suite:
    /// seven unit edges forming two clusters joined through vertex 4, plus
    /// one weight-3 edge closing a cycle on the left cluster.
    pub fn demo8() -> WeightedGraph {
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

    fn set(vs: &[usize]) -> BTreeSet<usize> {
        vs.iter().copied().collect()
    }

    /// All spanning trees of a small graph, by brute-force edge subsets.
    fn all_spanning_trees(g: &WeightedGraph) -> Vec<Tree> {
        let m = g.m();
        let n = g.n();
        let mut out = Vec::new();
        if n < 2 {
            return out;
        }
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize != n - 1 {
                continue;
            }
            let ids: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
            if let Ok(t) = Tree::from_edge_ids(g, &ids) {
                if t.vertices().len() == n {
                    out.push(t);
                }
            }
        }
        out
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert!(matches!(
            WeightedGraph::new(2, &[(0, 2, 1)]),
            Err(GraphError::InvalidVertex { .. })
        ));
        assert!(matches!(
            WeightedGraph::new(2, &[(1, 1, 1)]),
            Err(GraphError::SelfLoop(_))
        ));
        assert!(matches!(
            WeightedGraph::new(3, &[(0, 1, 1), (1, 0, 2)]),
            Err(GraphError::ParallelEdge(0, 1))
        ));
    }

    #[test]
    fn mst_demo8_uses_all_unit_edges() {
        let g = demo8();
        let t = kruskal_mst(&g).unwrap();
        assert_eq!(t.weight(), 7);
        assert!(!t.edge_ids().contains(&4)); // the weight-3 edge
        // Cross-check against full enumeration.
        let best = all_spanning_trees(&g)
            .iter()
            .map(Tree::weight)
            .min()
            .unwrap();
        assert_eq!(best, 7);
    }

    #[test]
    fn mst_single_edge() {
        let g = WeightedGraph::new(2, &[(0, 1, 5)]).unwrap();
        let t = kruskal_mst(&g).unwrap();
        assert_eq!(t.weight(), 5);
        assert_eq!(t.edge_ids(), &[0]);
    }

    #[test]
    fn mst_triangle() {
        let g = WeightedGraph::new(3, &[(0, 1, 1), (1, 2, 2), (0, 2, 3)]).unwrap();
        let t = kruskal_mst(&g).unwrap();
        assert_eq!(t.weight(), 3);
        assert_eq!(t.edge_ids(), &[0, 1]);
    }

    #[test]
    fn mst_disconnected_errors() {
        let g = WeightedGraph::new(4, &[(0, 1, 1), (2, 3, 1)]).unwrap();
        assert_eq!(kruskal_mst(&g), Err(GraphError::Disconnected));
    }

    #[test]
    fn max_spanning_tree_triangle() {
        let g = WeightedGraph::new(3, &[(0, 1, 1), (1, 2, 2), (0, 2, 3)]).unwrap();
        let t = max_spanning_tree(&g).unwrap();
        assert_eq!(t.weight(), 5);
        assert_eq!(t.edge_ids(), &[1, 2]);
    }

    #[test]
    fn max_spanning_tree_path_is_whole_path() {
        let g = WeightedGraph::new(4, &[(0, 1, 9), (1, 2, 1), (2, 3, 4)]).unwrap();
        let t = max_spanning_tree(&g).unwrap();
        assert_eq!(t.edge_ids(), &[0, 1, 2]);
        assert_eq!(t.weight(), 14);
    }

    #[test]
    fn connectivity_queries() {
        let g = demo8();
        assert!(is_connected(&g, &set(&[0, 1, 4])));
        assert!(!is_connected(&g, &set(&[0, 3])));
        assert!(is_connected(&g, &set(&[6])));
        assert!(!is_connected(&g, &BTreeSet::new()));
        assert!(g.is_connected());
    }

    #[test]
    fn induced_mst_cases() {
        let g = demo8();
        let right = induced_mst(&g, &set(&[5, 6, 7])).unwrap();
        assert_eq!(right.weight(), 2);
        let single = induced_mst(&g, &set(&[2])).unwrap();
        assert_eq!(single.weight(), 0);
        assert_eq!(single.vertices(), &[2]);
        assert!(induced_mst(&g, &set(&[0, 3])).is_none());
        // Whole vertex set reproduces the MST.
        assert_eq!(
            induced_mst(&g, &(0..8).collect()).unwrap(),
            kruskal_mst(&g).unwrap()
        );
    }

    #[test]
    fn mst_no_heavier_than_any_spanning_tree_small() {
        let mut rng = crate::rng::SplitMix64::new(0x5eed_0001);
        for _ in 0..60 {
            let n = 4 + (rng.next_u64() % 4) as usize; // 4..=7
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.next_u64() % 100 < 60 {
                        edges.push((u, v, 1 + rng.next_u64() % 9));
                    }
                }
            }
            let Ok(g) = WeightedGraph::new(n, &edges) else {
                continue;
            };
            let trees = all_spanning_trees(&g);
            match kruskal_mst(&g) {
                Ok(t) => {
                    assert!(!trees.is_empty());
                    assert_eq!(t.weight(), trees.iter().map(Tree::weight).min().unwrap());
                }
                Err(GraphError::Disconnected) => assert!(trees.is_empty()),
                Err(e) => panic!("unexpected {e:?}"),
            }
        }
    }

    #[test]
    fn flow_examples() {
        // s -> a (2), a -> t (1)
        let mut d = FlowDigraph::new(3, 0, 2);
        d.add_arc(0, 1, 2.0);
        d.add_arc(1, 2, 1.0);
        let (v, s) = max_flow_min_cut(&d);
        assert_eq!(v, 1.0);
        assert_eq!(s, set(&[0, 1]));

        // single arc s -> t (3)
        let mut d = FlowDigraph::new(2, 0, 1);
        d.add_arc(0, 1, 3.0);
        let (v, s) = max_flow_min_cut(&d);
        assert_eq!(v, 3.0);
        assert_eq!(s, set(&[0]));

        // two parallel unit paths
        let mut d = FlowDigraph::new(4, 0, 3);
        d.add_arc(0, 1, 1.0);
        d.add_arc(1, 3, 1.0);
        d.add_arc(0, 2, 1.0);
        d.add_arc(2, 3, 1.0);
        let (v, _) = max_flow_min_cut(&d);
        assert_eq!(v, 2.0);
    }

    #[test]
    fn flow_infinite_sentinel() {
        let mut d = FlowDigraph::new(3, 0, 2);
        d.add_arc(0, 1, f64::INFINITY);
        d.add_arc(1, 2, 4.0);
        let (v, s) = max_flow_min_cut(&d);
        assert_eq!(v, 4.0);
        assert_eq!(s, set(&[0, 1]));

        let mut d = FlowDigraph::new(2, 0, 1);
        d.add_arc(0, 1, f64::INFINITY);
        let (v, _) = max_flow_min_cut(&d);
        assert!(v.is_infinite());
    }

    #[test]
    fn max_flow_equals_brute_force_min_cut() {
        // Dyadic capacities keep every intermediate sum exact in f64, so the
        // equality check below is legitimately exact.
        let mut rng = crate::rng::SplitMix64::new(0x5eed_0002);
        for _ in 0..200 {
            let n = 3 + (rng.next_u64() % 8) as usize; // 3..=10
            let s = 0;
            let t = n - 1;
            let mut d = FlowDigraph::new(n, s, t);
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.next_u64() % 100 < 35 {
                        let cap = (rng.next_u64() % 64) as f64 / 4.0;
                        d.add_arc(u, v, cap);
                    }
                }
            }
            let (flow, cut) = max_flow_min_cut(&d);
            // Brute force over all s-side subsets.
            let inner: Vec<usize> = (1..n - 1).collect();
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << inner.len()) {
                let mut side = set(&[s]);
                for (i, &v) in inner.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        side.insert(v);
                    }
                }
                let c: f64 = d
                    .arcs
                    .iter()
                    .filter(|&&(u, v, _)| side.contains(&u) && !side.contains(&v))
                    .map(|&(_, _, c)| c)
                    .sum();
                best = best.min(c);
            }
            assert_eq!(flow, best, "flow != min cut on {n} nodes");
            // The returned cut must attain the optimum.
            let returned: f64 = d
                .arcs
                .iter()
                .filter(|&&(u, v, _)| cut.contains(&u) && !cut.contains(&v))
                .map(|&(_, _, c)| c)
                .sum();
            assert_eq!(returned, best);
            assert!(cut.contains(&s) && !cut.contains(&t));
        }
    }

    #[test]
    fn forest_validation() {
        let g = demo8();
        let left = Tree::from_edge_ids(&g, &[0, 1, 2, 3]).unwrap(); // {0..4}, weight 4
        let right = Tree::from_edge_ids(&g, &[6, 7]).unwrap(); // {5,6,7}, weight 2
        let f = SpanningKForest::new(&g, vec![left.clone(), right]).unwrap();
        assert_eq!(f.value_minmax(), 4);
        assert_eq!(f.value_maxmin(), 2);
        assert_eq!(f.k(), 2);
        // Overlapping coverage (edge 5 re-covers vertex 4) is rejected.
        let overlap = Tree::from_edge_ids(&g, &[5, 6, 7]).unwrap();
        assert!(SpanningKForest::new(&g, vec![left.clone(), overlap]).is_err());
        // Missing coverage is rejected too.
        let short = Tree::from_edge_ids(&g, &[6]).unwrap();
        assert!(SpanningKForest::new(&g, vec![left, short]).is_err());
    }

    #[test]
    fn tree_from_edges_rejects_cycles_and_disconnection() {
        let g = WeightedGraph::new(4, &[(0, 1, 1), (1, 2, 1), (0, 2, 1), (2, 3, 1)]).unwrap();
        assert!(Tree::from_edge_ids(&g, &[0, 1, 2]).is_err()); // cycle
        assert!(Tree::from_edge_ids(&g, &[0, 3]).is_err()); // disconnected
        assert!(Tree::from_edge_ids(&g, &[0, 1, 3]).is_ok());
    }
}
