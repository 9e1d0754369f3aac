//! The set-partitioning master problem: one column per tree, covering rows
//! per vertex, a weight row per vertex tying the objective to the heaviest
//! selected tree, and a tree-count row. Artificial columns (one per vertex,
//! excluded from the count row, charged through a penalty row on omega)
//! keep every restriction feasible.

use super::ModelError;
use crate::bnp::BranchRule;
use crate::graph::{SpanningKForest, Tree, WeightedGraph};
use crate::lp::{LinearProgram, LpSolution, RowSense, Sense};
use crate::mip::{solve_mip, MipResult, MipSpec};
use crate::pricing::DualValues;
use std::time::Duration;

/// Row layout: row 0 counts trees, rows `1..=n` cover vertices, rows
/// `n+1..=2n` bound the weight. Variable layout: omega, then one artificial
/// per vertex, then columns. Artificials carry the penalty in the
/// objective; a row like `omega >= P * sum(a)` would let the LP trade a
/// sliver of artificial mass against the heaviest tree's weight row and
/// come in under the true restricted value.
#[derive(Debug, Clone)]
pub struct RmpModel {
    pub lp: LinearProgram,
    columns: Vec<Tree>,
    n: usize,
    pub k: usize,
    pub penalty: f64,
}

impl RmpModel {
    pub fn omega_var(&self) -> usize {
        0
    }

    pub fn artificial_var(&self, v: usize) -> usize {
        1 + v
    }

    pub fn column_var(&self, idx: usize) -> usize {
        1 + self.n + idx
    }

    pub fn columns(&self) -> &[Tree] {
        &self.columns
    }

    /// Appends a tree column: coefficient -1 in the count row, 1 in its
    /// cover rows, -w(T) in its weight rows.
    pub fn add_column(&mut self, t: Tree) -> usize {
        let idx = self.columns.len();
        let var = self
            .lp
            .add_named_variable(0.0, f64::INFINITY, 0.0, format!("xT_{idx}"));
        self.lp.rows[0].coeffs.push((var, -1.0));
        for &v in t.vertices() {
            self.lp.rows[1 + v].coeffs.push((var, 1.0));
            self.lp.rows[1 + self.n + v]
                .coeffs
                .push((var, -(t.weight() as f64)));
        }
        self.columns.push(t);
        idx
    }

    /// Reads the (theta, eta, zeta) duals out of an optimal solution.
    pub fn duals(&self, sol: &LpSolution) -> DualValues {
        let theta = sol.duals[0];
        let eta: Vec<f64> = (0..self.n).map(|v| sol.duals[1 + v]).collect();
        let zeta: Vec<f64> = (0..self.n).map(|v| sol.duals[1 + self.n + v]).collect();
        DualValues::new(theta.max(0.0), eta, zeta)
    }

    /// True when any artificial column carries mass: the restriction cannot
    /// cover every vertex with its admissible columns.
    pub fn is_artificial(&self, primal: &[f64]) -> bool {
        (0..self.n).any(|v| primal[self.artificial_var(v)] > 1e-6)
    }

    /// Total selected mass on every column containing both `u` and `v`.
    pub fn pair_mass(&self, primal: &[f64], u: usize, v: usize) -> f64 {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, t)| t.contains(u) && t.contains(v))
            .map(|(i, _)| primal[self.column_var(i)])
            .sum()
    }

    /// Decodes an integral solution into a forest, splitting trees when
    /// fewer than k were selected (splitting never increases the maximum).
    pub fn extract_forest(&self, g: &WeightedGraph, primal: &[f64]) -> Option<SpanningKForest> {
        if self.is_artificial(primal) {
            return None;
        }
        let mut trees: Vec<Tree> = Vec::new();
        for (i, t) in self.columns.iter().enumerate() {
            let x = primal[self.column_var(i)];
            if x > 1.0 - 1e-3 {
                trees.push(t.clone());
            } else if x > 1e-3 {
                return None; // fractional
            }
        }
        split_to_k_trees(g, &mut trees, self.k)?;
        SpanningKForest::new(g, trees).ok()
    }
}

/// Splits the heaviest splittable trees until exactly `k` remain.
pub(crate) fn split_to_k_trees(
    g: &WeightedGraph,
    trees: &mut Vec<Tree>,
    k: usize,
) -> Option<()> {
    if trees.len() > k {
        return None;
    }
    while trees.len() < k {
        let (idx, _) = trees
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.edge_ids().is_empty())
            .max_by_key(|(_, t)| t.weight())?;
        let t = trees.swap_remove(idx);
        // Drop the heaviest edge (ties towards the higher id).
        let &drop = t
            .edge_ids()
            .iter()
            .max_by(|&&a, &&b| g.edge(a).w.cmp(&g.edge(b).w).then(a.cmp(&b)))
            .unwrap();
        let kept: Vec<usize> = t.edge_ids().iter().copied().filter(|&e| e != drop).collect();
        let mut uf = crate::graph::UnionFind::new(g.n());
        for &e in &kept {
            let edge = g.edge(e);
            uf.union(edge.u, edge.v);
        }
        let mut comp_edges: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
        for &e in &kept {
            comp_edges[uf.find(g.edge(e).u)].push(e);
        }
        for &v in t.vertices() {
            if uf.find(v) == v {
                if comp_edges[v].is_empty() {
                    trees.push(Tree::singleton(v));
                } else {
                    trees.push(Tree::from_edge_ids(g, &comp_edges[v]).expect("split is a tree"));
                }
            }
        }
    }
    Some(())
}

/// True iff the tree satisfies every branching rule: a Together pair is
/// inside or outside as a whole, an Apart pair never appears jointly.
pub fn rules_admit(rules: &[BranchRule], t: &Tree) -> bool {
    rules.iter().all(|r| {
        let has_u = t.contains(r.u);
        let has_v = t.contains(r.v);
        match r.kind {
            crate::bnp::RuleKind::Together => has_u == has_v,
            crate::bnp::RuleKind::Apart => !(has_u && has_v),
        }
    })
}

/// Builds the restricted master over the rule-consistent subset of `pool`.
/// `u_bound` sizes the artificial penalty `(n + 1) * U`.
pub fn build_rmp(
    g: &WeightedGraph,
    pool: &[Tree],
    k: usize,
    rules: &[BranchRule],
    u_bound: u64,
) -> RmpModel {
    let n = g.n();
    let penalty = (n as f64 + 1.0) * (u_bound.max(1)) as f64;
    let mut lp = LinearProgram::new(Sense::Min);
    let omega = lp.add_named_variable(0.0, f64::INFINITY, 1.0, "omega");
    let artificials: Vec<usize> = (0..n)
        .map(|v| lp.add_named_variable(0.0, f64::INFINITY, penalty, format!("art_{v}")))
        .collect();
    // Row 0: tree count (columns join with coefficient -1).
    lp.add_row(Vec::new(), RowSense::Ge, -(k as f64));
    // Cover rows.
    for v in 0..n {
        lp.add_row(vec![(artificials[v], 1.0)], RowSense::Eq, 1.0);
    }
    // Weight rows.
    for _ in 0..n {
        lp.add_row(vec![(omega, 1.0)], RowSense::Ge, 0.0);
    }
    let mut model = RmpModel {
        lp,
        columns: Vec::new(),
        n,
        k,
        penalty,
    };
    for t in pool {
        if rules_admit(rules, t) {
            model.add_column(t.clone());
        }
    }
    model
}

/// Solves the integer restriction of the master (columns binary) for primal
/// bound updates.
pub fn solve_rmp_integer(
    model: &RmpModel,
    time_limit: Duration,
) -> Result<MipResult, ModelError> {
    let mut lp = model.lp.clone();
    let mut integers = Vec::with_capacity(model.columns.len());
    for i in 0..model.columns.len() {
        let var = model.column_var(i);
        lp.variables[var].upper = 1.0;
        integers.push(var);
    }
    // Artificials stay continuous; cover rows make them integral anyway.
    for v in 0..model.n {
        lp.variables[model.artificial_var(v)].upper = 1.0;
    }
    Ok(solve_mip(
        MipSpec::new(lp, integers),
        time_limit,
        crate::mip::DEFAULT_GAP_TOL,
    )?)
}
