//! Column generation over the partition master and Ryan-Foster branch and
//! price for the min-max problem.
//!
//! Soundness note: pricing is budget-restricted to trees lighter than the
//! incumbent, so a node's converged LP value bounds only the forests that
//! could still improve on the incumbent — every tree of such a forest is
//! itself lighter than the incumbent, which is exactly the column set the
//! LP was proven optimal over. That makes `ceil(omega)` a valid pruning
//! bound against the current upper bound even though heavier trees were
//! never priced.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::graph::{SpanningKForest, Tree, UnionFind, WeightedGraph};
use crate::heuristics::{
    heuristic_bnb, seed_columns, seeding_time_limit, ColumnPool, SearchLimits,
};
use crate::lp::{solve_lp, LpStatus};
use crate::models::{build_rmp, solve_rmp_integer, RmpModel};
use crate::pricing::{
    price_fixed_vertices, price_fixed_weight, PricingOptions, RHO_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Together,
    Apart,
}

/// A Ryan-Foster branching rule on a vertex pair. Pairs are canonical
/// (`u < v`), and a rule set never holds both kinds for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BranchRule {
    pub u: usize,
    pub v: usize,
    pub kind: RuleKind,
}

impl BranchRule {
    pub fn together(a: usize, b: usize) -> Self {
        BranchRule {
            u: a.min(b),
            v: a.max(b),
            kind: RuleKind::Together,
        }
    }

    pub fn apart(a: usize, b: usize) -> Self {
        BranchRule {
            u: a.min(b),
            v: a.max(b),
            kind: RuleKind::Apart,
        }
    }
}

/// A node of the enumeration tree.
#[derive(Debug, Clone)]
pub struct BnPNode {
    pub id: u64,
    pub depth: u32,
    pub rules: Vec<BranchRule>,
}

impl BnPNode {
    pub fn root() -> Self {
        BnPNode {
            id: 0,
            depth: 0,
            rules: Vec::new(),
        }
    }
}

/// Infeasible-node sentinel for lower bounds.
pub const LB_INFEASIBLE: u64 = u64::MAX;

/// Outcome of running column generation at one node.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    /// Converged LP value rounded up; [`LB_INFEASIBLE`] when the node's
    /// rules admit no covering within the bound.
    pub lb: u64,
    /// Possibly improved global upper bound.
    pub ub: u64,
    /// Improved incumbent forest, when one was found.
    pub best: Option<SpanningKForest>,
    /// Most fractional vertex pair, when branching is warranted.
    pub branching_pair: Option<(usize, usize)>,
    /// False when the time limit cut the loop short; the lb is then not a
    /// valid bound and must not be used for pruning.
    pub converged: bool,
    pub columns_added: u64,
    pub iterations: u64,
}

/// Tuning knobs shared by [`column_generation`] and [`branch_and_price`].
#[derive(Debug, Clone)]
pub struct BnPConfig {
    pub time_limit: Duration,
    /// Seed for the randomized column pool enrichment.
    pub seed: u64,
    /// Node budget for the primal improvement search (kept as a node count
    /// so identical runs explore identical trees).
    pub heuristic_nodes: u64,
    pub pricing: PricingOptions,
}

impl Default for BnPConfig {
    fn default() -> Self {
        BnPConfig {
            time_limit: Duration::from_secs(60),
            seed: 0,
            heuristic_nodes: 20_000,
            pricing: PricingOptions::default(),
        }
    }
}

/// Triggers for the root-node integer restriction solve.
const UB_UPDATE_COLUMNS: u64 = 50;
const UB_UPDATE_ITERATIONS: u64 = 20;
const UB_UPDATE_SECS: u64 = 30;
const INTEGER_RMP_CAP: Duration = Duration::from_secs(5);

fn ceil_with_tolerance(omega: f64) -> u64 {
    (omega - 1e-6).ceil().max(0.0) as u64
}

/// Groups an integral-at-partition-level solution into its vertex classes
/// and picks the lightest positive column per class.
fn extract_partition_integral(
    model: &RmpModel,
    g: &WeightedGraph,
    primal: &[f64],
) -> Option<SpanningKForest> {
    if model.is_artificial(primal) {
        return None;
    }
    let mut uf = UnionFind::new(g.n());
    let mut positive: Vec<usize> = Vec::new();
    for (i, t) in model.columns().iter().enumerate() {
        if primal[model.column_var(i)] > 1e-6 {
            positive.push(i);
            let vs = t.vertices();
            for w in vs.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
    }
    // Lightest positive column per class representative.
    let mut best: Vec<Option<usize>> = vec![None; g.n()];
    for &i in &positive {
        let root = uf.find(model.columns()[i].vertices()[0]);
        let replace = match best[root] {
            None => true,
            Some(j) => model.columns()[i].weight() < model.columns()[j].weight(),
        };
        if replace {
            best[root] = Some(i);
        }
    }
    let mut trees: Vec<Tree> = Vec::new();
    for v in 0..g.n() {
        if uf.find(v) == v {
            let i = best[v]?;
            let t = model.columns()[i].clone();
            // Classes must match the chosen column exactly.
            if t.vertices().iter().any(|&u| uf.find(u) != v) {
                return None;
            }
            trees.push(t);
        }
    }
    crate::models::split_to_k_trees(g, &mut trees, model.k)?;
    SpanningKForest::new(g, trees).ok()
}

/// Runs column generation at one node: solve the restricted master, price,
/// add columns, repeat. At the root, the integer restriction is re-solved
/// periodically to pull the upper bound down.
pub fn column_generation(
    g: &WeightedGraph,
    k: usize,
    node: &BnPNode,
    pool: &mut ColumnPool,
    mut ub: u64,
    deadline: Instant,
    config: &BnPConfig,
) -> CgOutcome {
    let mut model = build_rmp(g, pool.trees(), k, &node.rules, ub.max(1));
    let mut best: Option<SpanningKForest> = None;
    let mut columns_added = 0u64;
    let mut iterations = 0u64;
    let mut cols_since_update = 0u64;
    let mut iters_since_update = 0u64;
    let mut update_timer = Instant::now();
    let is_root = node.rules.is_empty();

    let (converged, omega, last_primal) = loop {
        let sol = match solve_lp(&model.lp) {
            Ok(s) if s.status == LpStatus::Optimal => s,
            _ => {
                // Artificials keep the master feasible and bounded; any
                // other outcome is numeric trouble. Give up on the node.
                return CgOutcome {
                    lb: 0,
                    ub,
                    best,
                    branching_pair: None,
                    converged: false,
                    columns_added,
                    iterations,
                };
            }
        };
        if Instant::now() >= deadline {
            break (false, sol.objective, sol.primal);
        }
        let duals = model.duals(&sol);
        let support = duals.zeta_support();
        let use_fixed_vertices =
            support.len() < 63 && (1u128 << support.len()) < 2 * ub.max(1) as u128;
        let columns = if use_fixed_vertices {
            price_fixed_vertices(g, &duals, ub, &node.rules, &config.pricing)
                .expect("guard checked before dispatch")
        } else {
            price_fixed_weight(g, &duals, ub, &node.rules, &config.pricing)
        };
        iterations += 1;
        iters_since_update += 1;
        log::info!(
            target: "bsf::cg",
            "node={} iter={} omega={:.4} support={} strategy={} columns={}",
            node.id,
            iterations,
            sol.objective,
            support.len(),
            if use_fixed_vertices { "fv" } else { "fw" },
            columns.len()
        );
        if columns.is_empty() {
            break (true, sol.objective, sol.primal);
        }
        for t in columns {
            debug_assert!(duals.reduced_cost(&t) > RHO_TOL);
            debug_assert!(crate::models::rules_admit(&node.rules, &t));
            if pool.insert(t.clone(), ub) {
                columns_added += 1;
                cols_since_update += 1;
            }
            model.add_column(t);
        }
        // Root-only primal refresh.
        if is_root
            && sol.objective <= (ub.saturating_sub(1)) as f64 + 1e-6
            && (cols_since_update >= UB_UPDATE_COLUMNS
                || iters_since_update >= UB_UPDATE_ITERATIONS
                || update_timer.elapsed() >= Duration::from_secs(UB_UPDATE_SECS))
        {
            if let Ok(int) = solve_rmp_integer(&model, INTEGER_RMP_CAP) {
                if let (Some(obj), Some(x)) = (int.objective, int.best.as_ref()) {
                    let value = obj.round() as u64;
                    if value < ub {
                        if let Some(forest) = model.extract_forest(g, x) {
                            ub = forest.value_minmax().min(value);
                            best = Some(forest);
                        }
                    }
                }
            }
            cols_since_update = 0;
            iters_since_update = 0;
            update_timer = Instant::now();
        }
    };

    if !converged {
        return CgOutcome {
            lb: ceil_with_tolerance(omega),
            ub,
            best,
            branching_pair: None,
            converged: false,
            columns_added,
            iterations,
        };
    }
    // Rules that admit no covering push all weight onto the artificials.
    if model.is_artificial(&last_primal) {
        return CgOutcome {
            lb: LB_INFEASIBLE,
            ub,
            best,
            branching_pair: None,
            converged: true,
            columns_added,
            iterations,
        };
    }
    let lb = ceil_with_tolerance(omega);
    let mut branching_pair = None;
    if lb < ub {
        // Candidate pairs: unruled, jointly present in some column.
        let ruled: BTreeSet<(usize, usize)> =
            node.rules.iter().map(|r| (r.u, r.v)).collect();
        let mut candidate_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        for t in model.columns() {
            let vs = t.vertices();
            for (i, &u) in vs.iter().enumerate() {
                for &v in &vs[i + 1..] {
                    if !ruled.contains(&(u, v)) {
                        candidate_pairs.insert((u, v));
                    }
                }
            }
        }
        let mut best_pair: Option<((usize, usize), f64)> = None;
        let mut all_integral = true;
        for &(u, v) in &candidate_pairs {
            let mass = model.pair_mass(&last_primal, u, v);
            if (mass - mass.round()).abs() > 1e-6 {
                all_integral = false;
            }
            let dist = (mass - 0.5).abs();
            let better = match &best_pair {
                None => true,
                Some((_, d)) => dist < d - 1e-12,
            };
            if better {
                best_pair = Some(((u, v), dist));
            }
        }
        if all_integral {
            // Integral at the partition level: harvest the forest.
            if let Some(forest) = extract_partition_integral(&model, g, &last_primal) {
                let value = forest.value_minmax();
                if value < ub {
                    ub = value;
                    best = Some(forest);
                }
            }
        } else {
            branching_pair = best_pair.map(|(p, _)| p);
        }
    }
    CgOutcome {
        lb,
        ub,
        best,
        branching_pair,
        converged: true,
        columns_added,
        iterations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnPStatus {
    Optimal,
    TimeLimit,
}

#[derive(Debug)]
pub struct BnPResult {
    pub value: u64,
    pub forest: Option<SpanningKForest>,
    /// `(UB - ceil(min open LB)) / UB`; zero iff the queue emptied.
    pub gap: f64,
    pub status: BnPStatus,
    pub nodes: u64,
    pub columns: u64,
}

/// Full branch and price: heuristic seeding, randomized pool enrichment,
/// root column generation, then best-first Ryan-Foster branching.
pub fn branch_and_price(
    g: &WeightedGraph,
    k: usize,
    config: &BnPConfig,
) -> Result<BnPResult, crate::graph::GraphError> {
    let start = Instant::now();
    let deadline = start + config.time_limit;

    // Primal stage: improvement search plus randomized enrichment.
    let mut pool = ColumnPool::new();
    let heur_time = Duration::from_secs_f64(seeding_time_limit(g.n()).min(600.0));
    let limits = SearchLimits {
        time: Some(heur_time.min(config.time_limit)),
        nodes: Some(config.heuristic_nodes),
    };
    let heur = heuristic_bnb(g, k, &limits, &mut pool)?;
    let mut ub = heur.value;
    let mut best = Some(heur.forest);
    seed_columns(g, k, ub, &mut pool, config.seed);

    let mut nodes_processed = 0u64;
    let mut next_id = 1u64;
    // Open nodes keyed by (lb, reverse depth, id): smallest bound first,
    // then deepest.
    let mut open: Vec<(u64, u32, u64, BnPNode, (usize, usize))> = Vec::new();

    let root = BnPNode::root();
    let out = column_generation(g, k, &root, &mut pool, ub, deadline, config);
    nodes_processed += 1;
    ub = out.ub;
    if let Some(f) = out.best {
        if f.value_minmax() <= ub {
            best = Some(f);
        }
    }
    let mut timed_out = !out.converged;
    if out.converged {
        if let Some(pair) = out.branching_pair {
            if out.lb < ub {
                open.push((out.lb, root.depth, root.id, root, pair));
            }
        }
    }

    while !timed_out {
        if Instant::now() >= deadline {
            timed_out = true;
            break;
        }
        // Best-first pop: smallest lb, then deepest, then oldest.
        open.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then_with(|| b.1.cmp(&a.1))
                .then_with(|| a.2.cmp(&b.2))
        });
        let Some((lb, _, _, node, pair)) = (if open.is_empty() {
            None
        } else {
            Some(open.remove(0))
        }) else {
            break;
        };
        if lb >= ub {
            // Everything left is bounded out.
            open.clear();
            break;
        }
        for kind in [RuleKind::Together, RuleKind::Apart] {
            let rule = match kind {
                RuleKind::Together => BranchRule::together(pair.0, pair.1),
                RuleKind::Apart => BranchRule::apart(pair.0, pair.1),
            };
            let mut rules = node.rules.clone();
            rules.push(rule);
            let child = BnPNode {
                id: next_id,
                depth: node.depth + 1,
                rules,
            };
            next_id += 1;
            let out = column_generation(g, k, &child, &mut pool, ub, deadline, config);
            nodes_processed += 1;
            ub = out.ub;
            if let Some(f) = out.best {
                if f.value_minmax() <= ub {
                    best = Some(f);
                }
            }
            if !out.converged {
                timed_out = true;
                break;
            }
            if out.lb != LB_INFEASIBLE && out.lb < ub {
                if let Some(child_pair) = out.branching_pair {
                    open.push((out.lb, child.depth, child.id, child, child_pair));
                }
            }
        }
    }

    // Drop nodes the final bound already dominates.
    open.retain(|(lb, ..)| *lb < ub);
    let status = if open.is_empty() && !timed_out {
        BnPStatus::Optimal
    } else {
        BnPStatus::TimeLimit
    };
    let gap = if status == BnPStatus::Optimal {
        0.0
    } else if ub == 0 {
        0.0
    } else {
        let min_open = open.iter().map(|(lb, ..)| *lb).min().unwrap_or(0);
        (ub.saturating_sub(min_open)) as f64 / ub as f64
    };
    Ok(BnPResult {
        value: ub,
        forest: best,
        gap,
        status,
        nodes: nodes_processed,
        columns: pool.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_minmax;

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

    fn cfg() -> BnPConfig {
        BnPConfig {
            time_limit: Duration::from_secs(300),
            ..BnPConfig::default()
        }
    }

    #[test]
    fn rules_are_canonical() {
        let r = BranchRule::together(5, 2);
        assert_eq!((r.u, r.v), (2, 5));
    }

    #[test]
    fn root_cg_on_demo8_closes_the_gap() {
        let g = demo8();
        let config = cfg();
        let mut pool = ColumnPool::new();
        let heur = heuristic_bnb(&g, 2, &SearchLimits::nodes(20_000), &mut pool).unwrap();
        assert_eq!(heur.value, 4);
        seed_columns(&g, 2, heur.value, &mut pool, 0);
        let out = column_generation(
            &g,
            2,
            &BnPNode::root(),
            &mut pool,
            heur.value,
            Instant::now() + Duration::from_secs(300),
            &config,
        );
        assert!(out.converged);
        assert_eq!(out.lb, 4);
        assert_eq!(out.ub, 4);
        assert!(out.branching_pair.is_none());
    }

    #[test]
    fn optimal_pool_needs_no_pricing_rounds() {
        let g = demo8();
        let config = cfg();
        let (_, forest) = exact_minmax(&g, 2).unwrap();
        let mut pool = ColumnPool::new();
        for t in forest.trees() {
            pool.insert(t.clone(), u64::MAX);
        }
        let out = column_generation(
            &g,
            2,
            &BnPNode::root(),
            &mut pool,
            4,
            Instant::now() + Duration::from_secs(300),
            &config,
        );
        assert!(out.converged);
        assert_eq!(out.lb, 4);
        // One pricing round that comes back empty is the fixed point.
        assert_eq!(out.iterations, 1);
        assert!(out.branching_pair.is_none());
    }

    #[test]
    fn contradictory_rules_hit_the_infeasible_sentinel() {
        // Path 0-1-2, k = 2: keeping 1 apart from both neighbours leaves no
        // way to cover 0 and 2 with two trees.
        let g = WeightedGraph::new(3, &[(0, 1, 2), (1, 2, 2)]).unwrap();
        let config = cfg();
        let mut pool = ColumnPool::new();
        let _ = heuristic_bnb(&g, 2, &SearchLimits::nodes(100), &mut pool).unwrap();
        let node = BnPNode {
            id: 7,
            depth: 2,
            rules: vec![BranchRule::apart(0, 1), BranchRule::apart(1, 2)],
        };
        let out = column_generation(
            &g,
            2,
            &node,
            &mut pool,
            3,
            Instant::now() + Duration::from_secs(300),
            &config,
        );
        assert!(out.converged);
        assert_eq!(out.lb, LB_INFEASIBLE);
    }

    #[test]
    fn bp_demo8() {
        let g = demo8();
        let r = branch_and_price(&g, 2, &cfg()).unwrap();
        assert_eq!(r.value, 4);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.status, BnPStatus::Optimal);
        assert_eq!(r.forest.unwrap().value_minmax(), 4);
    }

    #[test]
    fn bp_k_equals_n_is_all_singletons() {
        let g = demo8();
        let r = branch_and_price(&g, 8, &cfg()).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.nodes, 1);
    }

    #[test]
    fn bp_matches_oracle_on_random_instances() {
        let mut checked = 0;
        for seed in 0..40u64 {
            let spec = crate::instances::InstanceSpec::new(
                6 + (seed % 4) as usize,
                0.6,
                2 + (seed % 2) as usize,
                0xbb00 + seed,
            );
            let Ok((g, k)) = crate::instances::generate(&spec) else {
                continue;
            };
            if checked >= 10 {
                break;
            }
            checked += 1;
            let r = branch_and_price(&g, k, &cfg()).unwrap();
            let (opt, _) = exact_minmax(&g, k).unwrap();
            assert_eq!(r.value, opt, "seed {seed}");
            assert_eq!(r.gap, 0.0, "seed {seed}");
            let forest = r.forest.unwrap();
            assert_eq!(forest.value_minmax(), opt);
        }
        assert!(checked >= 10);
    }
}
