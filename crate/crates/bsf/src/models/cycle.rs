//! The cycle-elimination (assignment) formulation: binary variables assign
//! edges to classes, and the exponential family of subtour rows is supplied
//! lazily through a min-cut separation oracle.

use std::collections::BTreeSet;

use super::ModelError;
use crate::graph::{max_flow_min_cut, FlowDigraph, SpanningKForest, WeightedGraph};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Row, RowSense, Sense};

/// Variable layout: `x[e * k + i]` assigns edge `e` to class `i`; `omega`
/// is the last variable.
#[derive(Debug, Clone)]
pub struct CycleModel {
    pub lp: LinearProgram,
    pub integers: Vec<usize>,
    pub k: usize,
    pub m: usize,
    pub omega: usize,
}

impl CycleModel {
    pub fn x(&self, e: usize, i: usize) -> usize {
        e * self.k + i
    }

    /// Class-summed edge values of a solution vector.
    pub fn edge_mass(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|e| (0..self.k).map(|i| x[self.x(e, i)]).sum())
            .collect()
    }

    /// Encodes a forest as an assignment (tree index = class) for warm
    /// starting. Subtour rows are satisfied by construction.
    pub fn warm_start(&self, forest: &SpanningKForest) -> Vec<f64> {
        let mut x = vec![0.0; self.lp.num_vars()];
        for (i, t) in forest.trees().iter().enumerate() {
            for &e in t.edge_ids() {
                x[self.x(e, i)] = 1.0;
            }
        }
        x[self.omega] = forest.value_minmax() as f64;
        x
    }
}

/// Builds the relaxation: objective and class-weight rows, one-class-per-
/// edge rows, vertex-disjointness rows and the edge-count row. Subtour rows
/// come from [`separate_cycle`] via the lazy callback.
pub fn build_cycle_minmax(g: &WeightedGraph, k: usize) -> CycleModel {
    let n = g.n();
    let m = g.m();
    let mut lp = LinearProgram::new(Sense::Min);
    for e in 0..m {
        for i in 0..k {
            lp.add_named_variable(0.0, 1.0, 0.0, format!("x_{e}_{i}"));
        }
    }
    let omega = lp.add_named_variable(0.0, f64::INFINITY, 1.0, "omega");
    let x = |e: usize, i: usize| e * k + i;
    // omega bounds the weight of every class.
    for i in 0..k {
        let mut coeffs = vec![(omega, 1.0)];
        coeffs.extend((0..m).map(|e| (x(e, i), -(g.edge(e).w as f64))));
        lp.add_row(coeffs, RowSense::Ge, 0.0);
    }
    // An edge joins at most one class.
    for e in 0..m {
        lp.add_row((0..k).map(|i| (x(e, i), 1.0)).collect(), RowSense::Le, 1.0);
    }
    // Vertex disjointness: two edges sharing a vertex cannot sit in
    // different classes.
    for v in 0..n {
        let inc = g.incident(v);
        for &e in inc {
            for &f in inc {
                if e == f {
                    continue;
                }
                for i in 0..k {
                    let mut coeffs = vec![(x(e, i), 1.0)];
                    coeffs.extend((0..k).filter(|&j| j != i).map(|j| (x(f, j), 1.0)));
                    lp.add_row(coeffs, RowSense::Le, 1.0);
                }
            }
        }
    }
    // A spanning k-forest has exactly n - k edges.
    let mut all = Vec::with_capacity(m * k);
    for e in 0..m {
        for i in 0..k {
            all.push((x(e, i), 1.0));
        }
    }
    lp.add_row(all, RowSense::Eq, (n - k) as f64);
    let integers = (0..m * k).collect();
    CycleModel {
        lp,
        integers,
        k,
        m,
        omega,
    }
}

/// The subtour row for a vertex set: total class mass inside `S` is at most
/// `|S| - 1`.
pub fn cycle_cut_row(g: &WeightedGraph, k: usize, s: &BTreeSet<usize>) -> Row {
    let mut coeffs = Vec::new();
    for e in 0..g.m() {
        let edge = g.edge(e);
        if s.contains(&edge.u) && s.contains(&edge.v) {
            for i in 0..k {
                coeffs.push((e * k + i, 1.0));
            }
        }
    }
    Row {
        coeffs,
        sense: RowSense::Le,
        rhs: (s.len() - 1) as f64,
        name: None,
    }
}

/// Finds vertex sets whose subtour rows the fractional point violates.
///
/// Builds the auxiliary digraph with capacities `sum_i x[e,i] / 2` on both
/// orientations of each edge, `sum over incident edges / 2` from the source
/// and `1` into the sink, then pins each vertex inside the cut in turn. The
/// cut capacity identity `c(S + s) = |S| + mass outside E(S)` turns the
/// violation test `mass inside E(S) > |S| - 1` into a capacity threshold of
/// `total mass + 1`; for solver points the edge-count row fixes the total
/// to `n - k`, recovering the usual `n - k + 1`. At most 50 deduplicated
/// sets per call.
pub fn separate_cycle(g: &WeightedGraph, k: usize, xbar: &[f64]) -> Vec<BTreeSet<usize>> {
    let n = g.n();
    let m = g.m();
    debug_assert!(xbar.len() >= m * k);
    let mass: Vec<f64> = (0..m)
        .map(|e| (0..k).map(|i| xbar[e * k + i].max(0.0)).sum())
        .collect();
    let total: f64 = mass.iter().sum();
    let threshold = total + 1.0;
    let (s_node, t_node) = (n, n + 1);
    let mut found: Vec<BTreeSet<usize>> = Vec::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for pinned in 0..n {
        let mut d = FlowDigraph::new(n + 2, s_node, t_node);
        for e in 0..m {
            let edge = g.edge(e);
            d.add_arc(edge.u, edge.v, mass[e] / 2.0);
            d.add_arc(edge.v, edge.u, mass[e] / 2.0);
        }
        for v in 0..n {
            if v == pinned {
                d.add_arc(s_node, v, f64::INFINITY);
            } else {
                let deg_mass: f64 = g.incident(v).iter().map(|&e| mass[e]).sum();
                d.add_arc(s_node, v, deg_mass / 2.0);
            }
            d.add_arc(v, t_node, 1.0);
        }
        let (cut_value, side) = max_flow_min_cut(&d);
        if cut_value < threshold - 1e-6 {
            let s: BTreeSet<usize> = side.into_iter().filter(|&v| v < n).collect();
            debug_assert!(s.contains(&pinned));
            if s.is_empty() {
                continue;
            }
            let key: Vec<usize> = s.iter().copied().collect();
            if seen.insert(key) {
                found.push(s);
                if found.len() >= 50 {
                    break;
                }
            }
        }
    }
    found
}

/// Lazy-cut callback for [`crate::mip::solve_mip`] over a cycle model.
pub fn cycle_cut_callback<'a>(
    g: &'a WeightedGraph,
    k: usize,
) -> impl FnMut(&[f64]) -> Vec<Row> + 'a {
    move |x: &[f64]| {
        separate_cycle(g, k, x)
            .into_iter()
            .map(|s| cycle_cut_row(g, k, &s))
            .collect()
    }
}

/// Value of the full linear relaxation (all subtour rows), computed by a
/// cutting-plane loop with fractional separation.
pub fn cycle_lp_bound(g: &WeightedGraph, k: usize) -> Result<f64, ModelError> {
    let mut model = build_cycle_minmax(g, k);
    loop {
        let sol = solve_lp(&model.lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(ModelError::InconsistentSolution(format!(
                "cycle relaxation not optimal: {:?}",
                sol.status
            )));
        }
        let cuts = separate_cycle(g, k, &sol.primal);
        if cuts.is_empty() {
            return Ok(sol.objective);
        }
        for s in cuts {
            let row = cycle_cut_row(g, k, &s);
            model.lp.rows.push(row);
        }
    }
}
