//! The compact flow formulation: a solution is a set of k arborescences in
//! the bidirected graph, with flows carrying subtree weights down to the
//! roots. Exact whenever edge weights are positive (a zero-weight directed
//! cycle can satisfy the flow balance, which extraction rejects).

use std::collections::BTreeSet;

use super::ModelError;
use crate::graph::{
    kruskal_mst, max_spanning_tree, GraphError, SpanningKForest, Tree, WeightedGraph,
};
use crate::lp::{LinearProgram, RowSense, Sense};

/// Which linearization the max-min model uses for the "omega is at most
/// every root load" coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxMinMode {
    /// Rows `omega <= g_v + U (1 - y_v)`.
    BigM,
    /// Per-class disaggregation: each root is assigned a class, its load is
    /// routed into that class's slot, and omega is capped by every class
    /// total. Splitting a load across classes is blocked by the assignment
    /// binaries; without them the cap degrades to the average root load.
    Theta,
}

/// A built flow model plus the variable index maps needed to read solutions
/// back out.
#[derive(Debug, Clone)]
pub struct FlowModel {
    pub lp: LinearProgram,
    pub integers: Vec<usize>,
    /// Root indicator per vertex.
    pub y: Vec<usize>,
    /// Tree-weight-at-root variable per vertex.
    pub load: Vec<usize>,
    /// Arc use indicator, indexed `2 * edge + dir` (dir 0: u->v, 1: v->u).
    pub z: Vec<usize>,
    /// Arc flow, same indexing as `z`.
    pub f: Vec<usize>,
    pub omega: usize,
    /// Max-min theta mode only: per (vertex, class) load slot.
    pub theta: Vec<Vec<usize>>,
    /// Max-min theta mode only: per (vertex, class) root assignment.
    pub class_assign: Vec<Vec<usize>>,
    pub k: usize,
    pub upper_bound: u64,
}

impl FlowModel {
    /// Tail and head of arc `a` in the host graph.
    pub fn arc_ends(g: &WeightedGraph, a: usize) -> (usize, usize) {
        let e = g.edge(a / 2);
        if a % 2 == 0 {
            (e.u, e.v)
        } else {
            (e.v, e.u)
        }
    }
}

fn base_model(g: &WeightedGraph, k: usize, u_bound: u64, sense: Sense) -> FlowModel {
    let n = g.n();
    let m = g.m();
    let uf = u_bound as f64;
    let mut lp = LinearProgram::new(sense);
    let y: Vec<usize> = (0..n)
        .map(|v| lp.add_named_variable(0.0, 1.0, 0.0, format!("y_{v}")))
        .collect();
    let load: Vec<usize> = (0..n)
        .map(|v| lp.add_named_variable(0.0, uf, 0.0, format!("g_{v}")))
        .collect();
    let mut z = Vec::with_capacity(2 * m);
    let mut f = Vec::with_capacity(2 * m);
    for a in 0..2 * m {
        let (t, h) = FlowModel::arc_ends(g, a);
        z.push(lp.add_named_variable(0.0, 1.0, 0.0, format!("z_{t}_{h}")));
        f.push(lp.add_named_variable(0.0, uf, 0.0, format!("f_{t}_{h}")));
    }
    let omega = lp.add_named_variable(0.0, f64::INFINITY, 1.0, "omega");

    // Exactly k roots.
    lp.add_row(y.iter().map(|&j| (j, 1.0)).collect(), RowSense::Eq, k as f64);
    // Each vertex is a root or has exactly one incoming arc.
    for v in 0..n {
        let mut coeffs = vec![(y[v], 1.0)];
        for &eid in g.incident(v) {
            let a = 2 * eid + usize::from(g.edge(eid).u == v); // arc into v
            coeffs.push((z[a], 1.0));
        }
        lp.add_row(coeffs, RowSense::Eq, 1.0);
    }
    // Flow balance: load + inflow - outflow = weight of the incoming arc.
    for v in 0..n {
        let mut coeffs = vec![(load[v], 1.0)];
        for &eid in g.incident(v) {
            let e = g.edge(eid);
            let into = 2 * eid + usize::from(e.u == v);
            let out = 2 * eid + usize::from(e.v == v);
            coeffs.push((f[into], 1.0));
            coeffs.push((f[out], -1.0));
            coeffs.push((z[into], -(e.w as f64)));
        }
        lp.add_row(coeffs, RowSense::Eq, 0.0);
    }
    // Arc flow is bounded by its use indicator on both sides.
    for a in 0..2 * m {
        let w = g.edge(a / 2).w as f64;
        lp.add_row(vec![(f[a], 1.0), (z[a], -w)], RowSense::Ge, 0.0);
        lp.add_row(vec![(f[a], 1.0), (z[a], -uf)], RowSense::Le, 0.0);
    }
    // Loads only at roots.
    for v in 0..n {
        lp.add_row(vec![(load[v], 1.0), (y[v], -uf)], RowSense::Le, 0.0);
    }
    // An edge is used in at most one direction.
    for e in 0..m {
        lp.add_row(vec![(z[2 * e], 1.0), (z[2 * e + 1], 1.0)], RowSense::Le, 1.0);
    }
    // Symmetry breaking: no arc from a root to a lower-indexed vertex.
    for a in 0..2 * m {
        let (t, h) = FlowModel::arc_ends(g, a);
        if h < t {
            lp.add_row(vec![(y[t], 1.0), (z[a], 1.0)], RowSense::Le, 1.0);
        }
    }
    let integers = y.iter().chain(z.iter()).copied().collect();
    FlowModel {
        lp,
        integers,
        y,
        load,
        z,
        f,
        omega,
        theta: Vec::new(),
        class_assign: Vec::new(),
        k,
        upper_bound: u_bound,
    }
}

/// A weight the optimum can never drop below: completing any spanning
/// k-forest with k-1 edges yields a spanning tree, so the MST weight is at
/// most k times the optimum plus the k-1 connecting edges.
pub fn minmax_lower_bound(g: &WeightedGraph, k: usize) -> Result<u64, ModelError> {
    let mst = kruskal_mst(g)?;
    let w_max = g.edges().iter().map(|e| e.w).max().unwrap_or(0);
    let slack = (k as u64 - 1) * w_max;
    Ok(mst.weight().saturating_sub(slack).div_ceil(k as u64))
}

/// Min-max flow model: minimize `omega` with `omega >= g_v` plus the
/// strengthening row `k omega >= sum g_v`. `u_bound` must be at least the
/// optimum; anything at or above the improvement-search value works. A
/// bound provably below the optimum is rejected; one merely below the
/// optimum makes the model honestly infeasible.
pub fn build_flow_minmax(
    g: &WeightedGraph,
    k: usize,
    u_bound: u64,
) -> Result<FlowModel, ModelError> {
    let required = minmax_lower_bound(g, k)?;
    if u_bound < required {
        return Err(ModelError::BadBound {
            given: u_bound,
            required,
        });
    }
    let mut model = base_model(g, k, u_bound, Sense::Min);
    for v in 0..g.n() {
        model.lp.add_row(
            vec![(model.omega, 1.0), (model.load[v], -1.0)],
            RowSense::Ge,
            0.0,
        );
    }
    let mut strengthen = vec![(model.omega, k as f64)];
    strengthen.extend(model.load.iter().map(|&j| (j, -1.0)));
    model.lp.add_row(strengthen, RowSense::Ge, 0.0);
    Ok(model)
}

/// Max-min flow model. `u_bound` must be at least the weight of a maximum
/// spanning tree so that every candidate forest stays encodable.
pub fn build_flow_maxmin(
    g: &WeightedGraph,
    k: usize,
    u_bound: u64,
    mode: MaxMinMode,
) -> Result<FlowModel, ModelError> {
    let required = max_spanning_tree(g)?.weight();
    if u_bound < required {
        return Err(ModelError::BadBound {
            given: u_bound,
            required,
        });
    }
    let mut model = base_model(g, k, u_bound, Sense::Max);
    let uf = u_bound as f64;
    // The lightest root load never exceeds the average.
    let mut avg = vec![(model.omega, k as f64)];
    avg.extend(model.load.iter().map(|&j| (j, -1.0)));
    model.lp.add_row(avg, RowSense::Le, 0.0);
    match mode {
        MaxMinMode::BigM => {
            // omega <= g_v + U(1 - y_v)
            for v in 0..g.n() {
                model.lp.add_row(
                    vec![(model.omega, 1.0), (model.load[v], -1.0), (model.y[v], uf)],
                    RowSense::Le,
                    uf,
                );
            }
        }
        MaxMinMode::Theta => {
            let n = g.n();
            let mut theta = vec![vec![0usize; k]; n];
            let mut assign = vec![vec![0usize; k]; n];
            for v in 0..n {
                for i in 0..k {
                    theta[v][i] = model.lp.add_named_variable(
                        0.0,
                        uf,
                        0.0,
                        format!("t_{v}_{i}"),
                    );
                    assign[v][i] =
                        model
                            .lp
                            .add_named_variable(0.0, 1.0, 0.0, format!("r_{v}_{i}"));
                    model.integers.push(assign[v][i]);
                }
            }
            // A root takes exactly one class; a class takes exactly one root.
            for v in 0..n {
                let mut coeffs = vec![(model.y[v], -1.0)];
                coeffs.extend((0..k).map(|i| (assign[v][i], 1.0)));
                model.lp.add_row(coeffs, RowSense::Eq, 0.0);
            }
            for i in 0..k {
                let coeffs = (0..n).map(|v| (assign[v][i], 1.0)).collect();
                model.lp.add_row(coeffs, RowSense::Eq, 1.0);
            }
            // Loads flow into the assigned class's slot only.
            for v in 0..n {
                for i in 0..k {
                    model.lp.add_row(
                        vec![(theta[v][i], 1.0), (assign[v][i], -uf)],
                        RowSense::Le,
                        0.0,
                    );
                }
                let mut coeffs = vec![(model.load[v], 1.0)];
                coeffs.extend((0..k).map(|i| (theta[v][i], -1.0)));
                model.lp.add_row(coeffs, RowSense::Eq, 0.0);
            }
            // Omega is capped by every class total.
            for i in 0..k {
                let mut coeffs = vec![(model.omega, 1.0)];
                coeffs.extend((0..n).map(|v| (theta[v][i], -1.0)));
                model.lp.add_row(coeffs, RowSense::Le, 0.0);
            }
            model.theta = theta;
            model.class_assign = assign;
        }
    }
    Ok(model)
}

/// Encodes a forest as a flow-model assignment usable as a warm start.
/// Each tree is rooted at its smallest vertex, which keeps the symmetry
/// rows satisfied.
pub fn flow_warm_start(model: &FlowModel, g: &WeightedGraph, forest: &SpanningKForest) -> Vec<f64> {
    let mut x = vec![0.0; model.lp.num_vars()];
    let mut loads = vec![0.0f64; g.n()];
    for tree in forest.trees() {
        let root = tree.vertices()[0];
        x[model.y[root]] = 1.0;
        loads[root] = tree.weight() as f64;
        if tree.edge_ids().is_empty() {
            continue;
        }
        // Orient edges away from the root; flow on an arc is the weight of
        // the subtree hanging below it plus the arc itself.
        let members: BTreeSet<usize> = tree.vertices().iter().copied().collect();
        let in_tree: BTreeSet<usize> = tree.edge_ids().iter().copied().collect();
        let mut parent: Vec<Option<usize>> = vec![None; g.n()]; // arc into v
        let mut order = vec![root];
        let mut seen = BTreeSet::new();
        seen.insert(root);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &eid in g.incident(v) {
                if !in_tree.contains(&eid) {
                    continue;
                }
                let o = g.edge(eid).other(v);
                if members.contains(&o) && seen.insert(o) {
                    parent[o] = Some(2 * eid + usize::from(g.edge(eid).u == o));
                    order.push(o);
                }
            }
        }
        // Subtree weights bottom-up.
        let mut below = vec![0.0f64; g.n()];
        for &v in order.iter().rev() {
            if let Some(a) = parent[v] {
                let w = g.edge(a / 2).w as f64;
                x[model.z[a]] = 1.0;
                x[model.f[a]] = below[v] + w;
                let p = {
                    let (t, _) = FlowModel::arc_ends(g, a);
                    t
                };
                below[p] += below[v] + w;
            }
        }
    }
    for v in 0..g.n() {
        x[model.load[v]] = loads[v];
    }
    if !model.class_assign.is_empty() {
        // Theta mode: hand class i to the i-th root in vertex order.
        let mut roots: Vec<usize> = forest.trees().iter().map(|t| t.vertices()[0]).collect();
        roots.sort_unstable();
        for (i, &r) in roots.iter().enumerate() {
            x[model.class_assign[r][i]] = 1.0;
            x[model.theta[r][i]] = loads[r];
        }
    }
    x[model.omega] = match model.lp.sense {
        Sense::Min => forest.value_minmax() as f64,
        Sense::Max => forest.value_maxmin() as f64,
    };
    x
}

/// Decodes an integral flow solution back into a spanning k-forest.
/// `tol` follows the solver interpretation tolerance for 0/1 variables.
pub fn extract_forest_from_flow(
    model: &FlowModel,
    g: &WeightedGraph,
    x: &[f64],
) -> Result<SpanningKForest, ModelError> {
    let tol = 1e-3;
    let mut chosen = Vec::new();
    for e in 0..g.m() {
        let z0 = x[model.z[2 * e]];
        let z1 = x[model.z[2 * e + 1]];
        for z in [z0, z1] {
            if z > tol && z < 1.0 - tol {
                return Err(ModelError::InconsistentSolution(format!(
                    "arc variable not integral within {tol}: {z}"
                )));
            }
        }
        if z0 > 0.5 || z1 > 0.5 {
            chosen.push(e);
        }
    }
    let roots: Vec<usize> = (0..g.n()).filter(|&v| x[model.y[v]] > 0.5).collect();
    if roots.len() != model.k {
        return Err(ModelError::InconsistentSolution(format!(
            "expected {} roots, found {}",
            model.k,
            roots.len()
        )));
    }
    let mut uf = crate::graph::UnionFind::new(g.n());
    for &e in &chosen {
        let edge = g.edge(e);
        if !uf.union(edge.u, edge.v) {
            return Err(ModelError::InconsistentSolution(
                "chosen arcs contain a cycle".into(),
            ));
        }
    }
    let mut comp_edges: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for &e in &chosen {
        comp_edges[uf.find(g.edge(e).u)].push(e);
    }
    let mut trees = Vec::new();
    for v in 0..g.n() {
        if uf.find(v) == v {
            if comp_edges[v].is_empty() {
                trees.push(Tree::singleton(v));
            } else {
                let t = Tree::from_edge_ids(g, &comp_edges[v])
                    .map_err(|e: GraphError| ModelError::InconsistentSolution(e.to_string()))?;
                trees.push(t);
            }
        }
    }
    // Exactly one root per component.
    let mut root_comp = BTreeSet::new();
    for &r in &roots {
        if !root_comp.insert(uf.find(r)) {
            return Err(ModelError::InconsistentSolution(
                "two roots in one component".into(),
            ));
        }
    }
    if root_comp.len() != trees.len() {
        return Err(ModelError::InconsistentSolution(
            "component without a root".into(),
        ));
    }
    SpanningKForest::new(g, trees).map_err(|e| ModelError::InconsistentSolution(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::{heuristic_bnb, ColumnPool, SearchLimits};
    use crate::mip::{solve_mip, MipSpec, MipStatus, DEFAULT_GAP_TOL};
    use crate::oracle::{exact_maxmin, exact_minmax};
    use std::time::Duration;

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

    fn tl() -> Duration {
        Duration::from_secs(120)
    }

    #[test]
    fn variable_count_demo8() {
        // 8 y + 8 g + 16 z + 16 f + 1 omega = 49.
        let g = demo8();
        let model = build_flow_minmax(&g, 2, 7).unwrap();
        assert_eq!(model.lp.num_vars(), 49);
    }

    #[test]
    fn bad_bound_rejected() {
        let g = demo8();
        // MST weight 7, heaviest edge 3, k = 2: the optimum cannot be
        // below ceil((7 - 3)/2) = 2.
        assert_eq!(minmax_lower_bound(&g, 2).unwrap(), 2);
        assert!(matches!(
            build_flow_minmax(&g, 2, 1),
            Err(ModelError::BadBound { required: 2, .. })
        ));
        assert!(build_flow_minmax(&g, 2, 4).is_ok());
        // A sound but sub-optimal bound gives an honestly infeasible model.
        let model = build_flow_minmax(&g, 2, 3).unwrap();
        let spec = MipSpec::new(model.lp.clone(), model.integers.clone());
        let r = solve_mip(spec, tl(), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(r.status, MipStatus::Infeasible);
    }

    #[test]
    fn demo8_minmax_solves_to_4() {
        let g = demo8();
        let model = build_flow_minmax(&g, 2, 7).unwrap();
        let spec = MipSpec::new(model.lp.clone(), model.integers.clone());
        let r = solve_mip(spec, tl(), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert!((r.objective.unwrap() - 4.0).abs() < 1e-6);
        let forest = extract_forest_from_flow(&model, &g, &r.best.unwrap()).unwrap();
        assert_eq!(forest.value_minmax(), 4);
    }

    #[test]
    fn k1_equals_mst_weight() {
        let g = demo8();
        let w = kruskal_mst(&g).unwrap().weight();
        let model = build_flow_minmax(&g, 1, w).unwrap();
        let spec = MipSpec::new(model.lp.clone(), model.integers.clone());
        let r = solve_mip(spec, tl(), DEFAULT_GAP_TOL).unwrap();
        assert!((r.objective.unwrap() - w as f64).abs() < 1e-6);
    }

    #[test]
    fn maxmin_both_modes_on_demo8() {
        let g = demo8();
        let u = max_spanning_tree(&g).unwrap().weight();
        for mode in [MaxMinMode::BigM, MaxMinMode::Theta] {
            let model = build_flow_maxmin(&g, 2, u, mode).unwrap();
            let spec = MipSpec::new(model.lp.clone(), model.integers.clone());
            let r = solve_mip(spec, tl(), DEFAULT_GAP_TOL).unwrap();
            assert_eq!(r.status, MipStatus::Optimal, "{mode:?}");
            assert!((r.objective.unwrap() - 3.0).abs() < 1e-6, "{mode:?}");
            let forest = extract_forest_from_flow(&model, &g, &r.best.unwrap()).unwrap();
            assert_eq!(forest.value_maxmin(), 3);
        }
    }

    #[test]
    fn maxmin_k1_is_max_spanning_tree() {
        let g = demo8();
        let u = max_spanning_tree(&g).unwrap().weight();
        let model = build_flow_maxmin(&g, 1, u, MaxMinMode::Theta).unwrap();
        let spec = MipSpec::new(model.lp.clone(), model.integers.clone());
        let r = solve_mip(spec, tl(), DEFAULT_GAP_TOL).unwrap();
        assert!((r.objective.unwrap() - u as f64).abs() < 1e-6);
    }

    #[test]
    fn maxmin_modes_agree_on_random_instances() {
        let mut checked = 0;
        for seed in 0..40u64 {
            let spec = crate::instances::InstanceSpec::new(
                5 + (seed % 4) as usize,
                0.7,
                2 + (seed % 2) as usize,
                0xaa00 + seed,
            );
            let Ok((g, k)) = crate::instances::generate(&spec) else {
                continue;
            };
            if checked >= 12 {
                break;
            }
            checked += 1;
            let u = max_spanning_tree(&g).unwrap().weight();
            let mut values = Vec::new();
            for mode in [MaxMinMode::BigM, MaxMinMode::Theta] {
                let model = build_flow_maxmin(&g, k, u, mode).unwrap();
                let spec = MipSpec::new(model.lp.clone(), model.integers.clone());
                let r = solve_mip(spec, tl(), DEFAULT_GAP_TOL).unwrap();
                assert_eq!(r.status, MipStatus::Optimal);
                values.push(r.objective.unwrap().round() as u64);
            }
            assert_eq!(values[0], values[1], "seed {seed}");
            let (opt, _) = exact_maxmin(&g, k).unwrap();
            assert_eq!(values[0], opt, "seed {seed}");
        }
        assert!(checked >= 12);
    }

    #[test]
    fn warm_start_round_trips_through_extraction() {
        // Build, warm-start with the heuristic forest, solve, extract, and
        // re-evaluate: the objective must match the extracted forest.
        let cases: Vec<(WeightedGraph, usize)> = vec![
            (demo8(), 2),
            (
                WeightedGraph::new(4, &[(0, 1, 2), (1, 2, 5), (2, 3, 1)]).unwrap(),
                2,
            ),
            {
                let spec = crate::instances::InstanceSpec::new(7, 0.7, 3, 0x77);
                let (g, k) = crate::instances::generate(&spec).unwrap();
                (g, k)
            },
        ];
        for (g, k) in cases {
            let mut pool = ColumnPool::new();
            let heur = heuristic_bnb(&g, k, &SearchLimits::nodes(500), &mut pool).unwrap();
            let model = build_flow_minmax(&g, k, heur.value).unwrap();
            let warm = flow_warm_start(&model, &g, &heur.forest);
            assert!(
                crate::mip::check_assignment(&model.lp, &warm),
                "warm start must satisfy the model"
            );
            let spec = MipSpec::new(model.lp.clone(), model.integers.clone()).with_warm_start(warm);
            let r = solve_mip(spec, tl(), DEFAULT_GAP_TOL).unwrap();
            assert_eq!(r.status, MipStatus::Optimal);
            let forest = extract_forest_from_flow(&model, &g, &r.best.unwrap()).unwrap();
            assert_eq!(forest.value_minmax() as f64, r.objective.unwrap());
            let (opt, _) = exact_minmax(&g, k).unwrap();
            assert_eq!(forest.value_minmax(), opt);
        }
    }
}
