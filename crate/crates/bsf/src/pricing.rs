//! The pricing subsystem of column generation: reduced costs, the budgeted
//! prize-collecting Steiner tree (BPCST) solver in its arborescence
//! formulation with lazily separated connectivity cuts, and the two
//! strategies that turn the master duals into BPCST instances — fixing the
//! vertices of the positive-support set, or fixing the tree weight.

use std::collections::BTreeSet;
use std::time::Duration;

use thiserror::Error;

use crate::bnp::{BranchRule, RuleKind};
use crate::graph::{max_flow_min_cut, FlowDigraph, Tree, WeightedGraph};
use crate::lp::{LinearProgram, Row, RowSense, Sense};
use crate::mip::{solve_mip, MipSpec, DEFAULT_GAP_TOL};
use crate::models::rules_admit;

/// Columns below this reduced cost are not worth adding.
pub const RHO_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PricingError {
    #[error("fixed-vertices guard violated: 2^{support} >= 2 * {ub}")]
    GuardViolated { support: usize, ub: u64 },
}

/// Duals of the restricted master problem: `theta` for the tree-count row,
/// `eta` per cover row, `zeta` per weight row. `theta` and every `zeta`
/// component are non-negative up to solver noise.
#[derive(Debug, Clone)]
pub struct DualValues {
    pub theta: f64,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl DualValues {
    pub fn new(theta: f64, eta: Vec<f64>, zeta: Vec<f64>) -> Self {
        assert_eq!(eta.len(), zeta.len());
        debug_assert!(theta >= -1e-6, "theta must be non-negative, got {theta}");
        debug_assert!(
            zeta.iter().all(|&z| z >= -1e-6),
            "zeta must be non-negative"
        );
        // Clamp solver noise so downstream sign reasoning stays valid.
        let theta = theta.max(0.0);
        let zeta = zeta.into_iter().map(|z: f64| z.max(0.0)).collect();
        DualValues { theta, eta, zeta }
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    /// `rho(T) = -theta + sum eta over V(T) - w(T) * sum zeta over V(T)`.
    /// A column improves the master iff this is positive.
    pub fn reduced_cost(&self, t: &Tree) -> f64 {
        let vs: BTreeSet<usize> = t.vertices().iter().copied().collect();
        self.reduced_cost_parts(&vs, t.weight())
    }

    /// Same formula from raw parts (vertex set and tree weight).
    pub fn reduced_cost_parts(&self, vertices: &BTreeSet<usize>, weight: u64) -> f64 {
        let eta_sum: f64 = vertices.iter().map(|&v| self.eta[v]).sum();
        let zeta_sum: f64 = vertices.iter().map(|&v| self.zeta[v]).sum();
        -self.theta + eta_sum - weight as f64 * zeta_sum
    }

    /// The positive support of `zeta`; drives the choice of pricing
    /// strategy.
    pub fn zeta_support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.zeta[v] > 1e-9).collect()
    }
}

/// A built BPCST model over the bidirected host graph plus an artificial
/// root with one zero-weight arc into every vertex.
#[derive(Debug, Clone)]
pub struct BpcstModel {
    pub lp: LinearProgram,
    pub integers: Vec<usize>,
    /// Root arc variable per vertex.
    pub x_root: Vec<usize>,
    /// Edge arc variable, indexed `2 * edge + dir` (dir 0: u->v).
    pub x_arc: Vec<usize>,
    /// Vertex selection variable.
    pub y: Vec<usize>,
    pub budget: u64,
}

/// Builds the arborescence formulation: pick exactly one root arc, give
/// every selected vertex in-degree one, stay within the weight budget, and
/// keep the collected profit non-negative. Connectivity is enforced
/// through [`bpcst_cut_callback`]. `root_profit_shift` is subtracted from
/// every root arc profit (the master dual `theta` during pricing; zero for
/// standalone instances).
pub fn build_bpcst(
    g: &WeightedGraph,
    prizes: &[f64],
    edge_costs: &[f64],
    budget: u64,
    forced_root_target: Option<usize>,
    root_profit_shift: f64,
) -> BpcstModel {
    let n = g.n();
    let m = g.m();
    assert_eq!(prizes.len(), n);
    assert_eq!(edge_costs.len(), m);
    let mut lp = LinearProgram::new(Sense::Max);
    let x_root: Vec<usize> = (0..n)
        .map(|v| {
            lp.add_named_variable(
                0.0,
                1.0,
                prizes[v] - root_profit_shift,
                format!("xr_{v}"),
            )
        })
        .collect();
    let x_arc: Vec<usize> = (0..2 * m)
        .map(|a| {
            let e = g.edge(a / 2);
            let (tail, head) = if a % 2 == 0 { (e.u, e.v) } else { (e.v, e.u) };
            lp.add_named_variable(
                0.0,
                1.0,
                prizes[head] - edge_costs[a / 2],
                format!("xa_{tail}_{head}"),
            )
        })
        .collect();
    let y: Vec<usize> = (0..n)
        .map(|v| lp.add_named_variable(0.0, 1.0, 0.0, format!("y_{v}")))
        .collect();
    // Budget over edge arcs (root arcs are weightless).
    let budget_row: Vec<(usize, f64)> = (0..2 * m)
        .map(|a| (x_arc[a], g.edge(a / 2).w as f64))
        .collect();
    lp.add_row(budget_row, RowSense::Le, budget as f64);
    // Exactly one root arc leaves the artificial root.
    lp.add_row(
        x_root.iter().map(|&j| (j, 1.0)).collect(),
        RowSense::Eq,
        1.0,
    );
    // In-degree equals selection.
    for v in 0..n {
        let mut coeffs = vec![(x_root[v], 1.0), (y[v], -1.0)];
        for &eid in g.incident(v) {
            let into = 2 * eid + usize::from(g.edge(eid).u == v);
            coeffs.push((x_arc[into], 1.0));
        }
        lp.add_row(coeffs, RowSense::Eq, 0.0);
    }
    // Keep the collected profit non-negative; prunes hopeless subtrees.
    let mut guide: Vec<(usize, f64)> = Vec::with_capacity(n + 2 * m);
    for v in 0..n {
        guide.push((x_root[v], prizes[v] - root_profit_shift));
    }
    for a in 0..2 * m {
        let e = g.edge(a / 2);
        let head = if a % 2 == 0 { e.v } else { e.u };
        guide.push((x_arc[a], prizes[head] - edge_costs[a / 2]));
    }
    lp.add_row(guide, RowSense::Ge, 0.0);
    if let Some(target) = forced_root_target {
        lp.variables[x_root[target]].lower = 1.0;
    }
    let integers: Vec<usize> = x_root
        .iter()
        .chain(x_arc.iter())
        .chain(y.iter())
        .copied()
        .collect();
    BpcstModel {
        lp,
        integers,
        x_root,
        x_arc,
        y,
        budget,
    }
}

/// Appends branching rules to a BPCST model: Together pairs share their
/// selection variable value, Apart pairs exclude one another.
pub fn inject_branch_rules(model: &mut BpcstModel, rules: &[BranchRule]) {
    for r in rules {
        match r.kind {
            RuleKind::Together => {
                model.lp.add_row(
                    vec![(model.y[r.u], 1.0), (model.y[r.v], -1.0)],
                    RowSense::Eq,
                    0.0,
                );
            }
            RuleKind::Apart => {
                model.lp.add_row(
                    vec![(model.y[r.u], 1.0), (model.y[r.v], 1.0)],
                    RowSense::Le,
                    1.0,
                );
            }
        }
    }
}

/// Lazy connectivity separation: for every selected vertex, require one
/// unit of root-to-vertex capacity through the selected arcs; a failing
/// min cut yields the violated directed cut row.
pub fn bpcst_cut_callback<'a>(
    g: &'a WeightedGraph,
    model: &BpcstModel,
) -> impl FnMut(&[f64]) -> Vec<Row> + 'a {
    let x_root = model.x_root.clone();
    let x_arc = model.x_arc.clone();
    let y = model.y.clone();
    move |x: &[f64]| {
        let n = g.n();
        let m = g.m();
        let root = n;
        let mut rows = Vec::new();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for v in 0..n {
            if x[y[v]] < 0.5 {
                continue;
            }
            let mut d = FlowDigraph::new(n + 1, root, v);
            for u in 0..n {
                if x[x_root[u]] > 1e-9 {
                    d.add_arc(root, u, x[x_root[u]]);
                }
            }
            for a in 0..2 * m {
                if x[x_arc[a]] > 1e-9 {
                    let e = g.edge(a / 2);
                    let (tail, head) = if a % 2 == 0 { (e.u, e.v) } else { (e.v, e.u) };
                    d.add_arc(tail, head, x[x_arc[a]]);
                }
            }
            let (flow, source_side) = max_flow_min_cut(&d);
            if flow >= x[y[v]] - 1e-6 {
                continue;
            }
            // T: the sink side, inside the original vertex range.
            let t_side: BTreeSet<usize> =
                (0..n).filter(|u| !source_side.contains(u)).collect();
            debug_assert!(t_side.contains(&v));
            let mut key: Vec<usize> = t_side.iter().copied().collect();
            key.push(v);
            if !seen.insert(key) {
                continue;
            }
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for &u in &t_side {
                coeffs.push((x_root[u], 1.0));
            }
            for a in 0..2 * m {
                let e = g.edge(a / 2);
                let (tail, head) = if a % 2 == 0 { (e.u, e.v) } else { (e.v, e.u) };
                if t_side.contains(&head) && !t_side.contains(&tail) {
                    coeffs.push((x_arc[a], 1.0));
                }
            }
            coeffs.push((y[v], -1.0));
            rows.push(Row {
                coeffs,
                sense: RowSense::Ge,
                rhs: 0.0,
                name: None,
            });
        }
        rows
    }
}

/// Decodes a BPCST solution into a tree of the host graph. A solution that
/// selects only a root arc is the corresponding singleton.
pub fn decode_tree(model: &BpcstModel, g: &WeightedGraph, x: &[f64]) -> Option<Tree> {
    let chosen: Vec<usize> = (0..g.m())
        .filter(|&e| x[model.x_arc[2 * e]] > 0.5 || x[model.x_arc[2 * e + 1]] > 0.5)
        .collect();
    let selected: BTreeSet<usize> = (0..g.n()).filter(|&v| x[model.y[v]] > 0.5).collect();
    if chosen.is_empty() {
        let v = *selected.iter().next()?;
        if selected.len() != 1 {
            return None;
        }
        return Some(Tree::singleton(v));
    }
    let t = Tree::from_edge_ids(g, &chosen).ok()?;
    if t.vertex_set() != selected {
        return None;
    }
    Some(t)
}

/// Knobs for the pricing drivers.
#[derive(Debug, Clone)]
pub struct PricingOptions {
    /// Finish the current subproblem sweep iteration and return as soon as
    /// at least one improving column is in hand.
    pub early_exit: bool,
    /// Wall-clock cap per BPCST solve.
    pub subproblem_time_limit: Duration,
}

impl Default for PricingOptions {
    fn default() -> Self {
        PricingOptions {
            early_exit: true,
            subproblem_time_limit: Duration::from_secs(20),
        }
    }
}

fn dedup_push(out: &mut Vec<Tree>, seen: &mut BTreeSet<(Vec<usize>, Vec<usize>)>, t: Tree) {
    if seen.insert(t.key()) {
        out.push(t);
    }
}

/// Solves one BPCST model. Returns the decoded optimum (when feasible) and
/// every retained incumbent.
fn solve_bpcst_collect(
    g: &WeightedGraph,
    model: BpcstModel,
    opts: &PricingOptions,
) -> (Option<Tree>, Vec<Tree>) {
    let cb = bpcst_cut_callback(g, &model);
    let spec = MipSpec::new(model.lp.clone(), model.integers.clone()).with_callback(cb);
    let Ok(result) = solve_mip(spec, opts.subproblem_time_limit, DEFAULT_GAP_TOL) else {
        return (None, Vec::new());
    };
    let optimum = result
        .best
        .as_ref()
        .and_then(|x| decode_tree(&model, g, x));
    let mut all = Vec::new();
    let mut seen = BTreeSet::new();
    for cand in &result.incumbents {
        if let Some(t) = decode_tree(&model, g, cand) {
            dedup_push(&mut all, &mut seen, t);
        }
    }
    (optimum, all)
}

/// Fixed-vertices pricing: one BPCST per subset `S` of the positive zeta
/// support, forcing `S` into the tree and the rest of the support out via
/// large prize/cost shifts. Requires `2^|support| < 2 * ub`.
pub fn price_fixed_vertices(
    g: &WeightedGraph,
    duals: &DualValues,
    ub: u64,
    rules: &[BranchRule],
    opts: &PricingOptions,
) -> Result<Vec<Tree>, PricingError> {
    let support = duals.zeta_support();
    let b = support.len();
    let guard_ok = b < 63 && (1u64 << b) < 2 * ub;
    if !guard_ok {
        return Err(PricingError::GuardViolated { support: b, ub });
    }
    if ub == 0 {
        return Ok(Vec::new());
    }
    let budget = ub - 1;
    let big_m = 1.0
        + duals.eta.iter().map(|e| e.abs()).sum::<f64>()
        + ub as f64 * duals.zeta.iter().sum::<f64>();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for mask in 0u64..(1 << b) {
        let fixed: BTreeSet<usize> = support
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &v)| v)
            .collect();
        let excluded: BTreeSet<usize> = support
            .iter()
            .filter(|v| !fixed.contains(v))
            .copied()
            .collect();
        let alpha: f64 = fixed.iter().map(|&v| duals.zeta[v]).sum();
        let prizes: Vec<f64> = (0..g.n())
            .map(|v| duals.eta[v] + if fixed.contains(&v) { big_m } else { 0.0 })
            .collect();
        let costs: Vec<f64> = (0..g.m())
            .map(|e| {
                let edge = g.edge(e);
                let touches = excluded.contains(&edge.u) || excluded.contains(&edge.v);
                edge.w as f64 * alpha + if touches { big_m } else { 0.0 }
            })
            .collect();
        let forced = fixed.iter().next().copied();
        let mut model = build_bpcst(g, &prizes, &costs, budget, forced, duals.theta);
        inject_branch_rules(&mut model, rules);
        let (_, candidates) = solve_bpcst_collect(g, model, opts);
        for t in candidates {
            // Structural filter: the subset discipline must hold exactly.
            if !fixed.iter().all(|&v| t.contains(v)) {
                continue;
            }
            if excluded.iter().any(|&v| t.contains(v)) {
                continue;
            }
            if t.weight() > budget || !rules_admit(rules, &t) {
                continue;
            }
            if duals.reduced_cost(&t) > RHO_TOL {
                dedup_push(&mut out, &mut seen, t);
            }
        }
        if opts.early_exit && !out.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// The shift making all prizes non-negative at weight parameter `w`.
pub fn gamma_shift(duals: &DualValues, w: u64) -> f64 {
    let min_term = (0..duals.n())
        .map(|v| duals.eta[v] - w as f64 * duals.zeta[v])
        .fold(f64::INFINITY, f64::min);
    min_term.min(0.0)
}

/// Fixed-weight pricing: sweep the weight parameter downward from
/// `ub - 1`, solving one shifted BPCST per value. A tree is accepted on
/// its true reduced cost even when the approximate one is non-positive.
pub fn price_fixed_weight(
    g: &WeightedGraph,
    duals: &DualValues,
    ub: u64,
    rules: &[BranchRule],
    opts: &PricingOptions,
) -> Vec<Tree> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    if ub <= 1 {
        return out;
    }
    let mut w = ub - 1;
    while w >= 1 {
        let gamma = gamma_shift(duals, w);
        let prizes: Vec<f64> = (0..g.n())
            .map(|v| duals.eta[v] - w as f64 * duals.zeta[v] - gamma)
            .collect();
        let costs = vec![-gamma; g.m()];
        let mut model = build_bpcst(g, &prizes, &costs, w, None, duals.theta);
        inject_branch_rules(&mut model, rules);
        let (optimum, candidates) = solve_bpcst_collect(g, model, opts);
        for t in candidates {
            if t.weight() <= ub - 1 && rules_admit(rules, &t) && duals.reduced_cost(&t) > RHO_TOL
            {
                dedup_push(&mut out, &mut seen, t);
            }
        }
        if opts.early_exit && !out.is_empty() {
            break;
        }
        // The subproblem optimum steers the parameter: jump below its
        // weight on success, step down otherwise.
        w = match optimum {
            Some(t) if duals.reduced_cost(&t) > RHO_TOL => {
                if t.weight() == 0 {
                    break;
                }
                t.weight() - 1
            }
            _ => w - 1,
        };
    }
    out
}
