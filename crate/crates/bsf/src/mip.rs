//! A branch-and-bound MIP engine on top of the simplex solver, with a
//! lazy-cut callback invoked on integral candidates. Best-first node order,
//! most-fractional branching, warm-start incumbents.

use std::time::{Duration, Instant};

use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus, Row, Sense};

/// Tolerance under which a value counts as integral.
pub const INT_TOL: f64 = 1e-6;
/// Default relative optimality gap at which the search stops.
pub const DEFAULT_GAP_TOL: f64 = 1e-5;

/// A callback inspecting an integral candidate solution. Returning one or
/// more violated rows rejects the candidate; the rows are added globally.
pub type CutCallback<'a> = dyn FnMut(&[f64]) -> Vec<Row> + 'a;

/// A mixed-integer program: a base LP, the set of integer variables, and an
/// optional warm-start assignment.
pub struct MipSpec<'a> {
    pub lp: LinearProgram,
    pub integers: Vec<usize>,
    pub cut_callback: Option<Box<CutCallback<'a>>>,
    pub warm_start: Option<Vec<f64>>,
}

impl std::fmt::Debug for MipSpec<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MipSpec")
            .field("vars", &self.lp.num_vars())
            .field("rows", &self.lp.num_rows())
            .field("integers", &self.integers.len())
            .field("has_callback", &self.cut_callback.is_some())
            .finish()
    }
}

impl<'a> MipSpec<'a> {
    pub fn new(lp: LinearProgram, integers: Vec<usize>) -> Self {
        MipSpec {
            lp,
            integers,
            cut_callback: None,
            warm_start: None,
        }
    }

    pub fn with_callback(mut self, cb: impl FnMut(&[f64]) -> Vec<Row> + 'a) -> Self {
        self.cut_callback = Some(Box::new(cb));
        self
    }

    pub fn with_warm_start(mut self, x: Vec<f64>) -> Self {
        self.warm_start = Some(x);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    /// Proved optimal within the gap tolerance.
    Optimal,
    /// Stopped at the limit with an incumbent in hand.
    Feasible,
    /// No feasible solution exists.
    Infeasible,
    /// Stopped at the limit without any incumbent.
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct MipResult {
    pub status: MipStatus,
    pub best: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Best proven bound (lower bound for Min, upper for Max).
    pub bound: f64,
    pub nodes: u64,
    pub elapsed: Duration,
    /// Every accepted integral candidate seen during the search, best last.
    pub incumbents: Vec<Vec<f64>>,
}

impl MipResult {
    /// Relative gap `(best - bound)/max(1, |best|)`, oriented so it is
    /// non-negative for both senses.
    pub fn relative_gap(&self) -> f64 {
        match self.objective {
            None => f64::INFINITY,
            Some(obj) => (obj - self.bound).abs() / obj.abs().max(1.0),
        }
    }
}

struct Node {
    /// (variable, lower, upper) overrides relative to the base LP.
    bounds: Vec<(usize, f64, f64)>,
    parent_bound: f64,
}

fn is_integral(x: &[f64], integers: &[usize]) -> bool {
    integers
        .iter()
        .all(|&j| (x[j] - x[j].round()).abs() <= INT_TOL)
}

pub(crate) fn check_assignment(lp: &LinearProgram, x: &[f64]) -> bool {
    if x.len() != lp.num_vars() {
        return false;
    }
    let tol = 1e-6;
    for (j, v) in lp.variables.iter().enumerate() {
        if x[j] < v.lower - tol || x[j] > v.upper + tol {
            return false;
        }
    }
    for r in &lp.rows {
        let lhs: f64 = r.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
        match r.sense {
            crate::lp::RowSense::Le => {
                if lhs > r.rhs + tol {
                    return false;
                }
            }
            crate::lp::RowSense::Ge => {
                if lhs < r.rhs - tol {
                    return false;
                }
            }
            crate::lp::RowSense::Eq => {
                if (lhs - r.rhs).abs() > tol {
                    return false;
                }
            }
        }
    }
    true
}

/// Solves the MIP by best-first branch and bound. `spec` is consumed
/// because the callback may be stateful.
pub fn solve_mip(
    mut spec: MipSpec<'_>,
    time_limit: Duration,
    relative_gap_tol: f64,
) -> Result<MipResult, LpError> {
    let start = Instant::now();
    let sense = spec.lp.sense;
    let worst = match sense {
        Sense::Min => f64::INFINITY,
        Sense::Max => f64::NEG_INFINITY,
    };
    // `better(a, b)`: a strictly improves on b.
    let better = |a: f64, b: f64| match sense {
        Sense::Min => a < b - 1e-9,
        Sense::Max => a > b + 1e-9,
    };
    for &j in &spec.integers {
        let v = &spec.lp.variables[j];
        assert!(
            v.lower.is_finite() && v.upper.is_finite(),
            "integer variable {j} must have finite bounds"
        );
    }

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut incumbents: Vec<Vec<f64>> = Vec::new();
    if let Some(x) = spec.warm_start.take() {
        if check_assignment(&spec.lp, &x) && is_integral(&x, &spec.integers) {
            let cuts = spec
                .cut_callback
                .as_mut()
                .map(|cb| cb(&x))
                .unwrap_or_default();
            if cuts.is_empty() {
                let obj = spec.lp.objective_value(&x);
                incumbents.push(x.clone());
                incumbent = Some((obj, x));
            } else {
                for c in cuts {
                    spec.lp.rows.push(c);
                }
            }
        }
    }

    let base_bounds: Vec<(f64, f64)> = spec
        .lp
        .variables
        .iter()
        .map(|v| (v.lower, v.upper))
        .collect();
    let mut queue: Vec<Node> = vec![Node {
        bounds: Vec::new(),
        parent_bound: -worst,
    }];
    let mut nodes_processed = 0u64;
    let mut timed_out = false;

    while !queue.is_empty() {
        if start.elapsed() >= time_limit {
            timed_out = true;
            break;
        }
        if let Some((inc_obj, _)) = &incumbent {
            let open_bound = queue
                .iter()
                .map(|n| n.parent_bound)
                .fold(worst, |a, b| match sense {
                    Sense::Min => a.min(b),
                    Sense::Max => a.max(b),
                });
            let gap = (inc_obj - open_bound).abs() / inc_obj.abs().max(1.0);
            if gap <= relative_gap_tol {
                break;
            }
        }
        // Best-first on the parent bound.
        let pick = queue
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| match sense {
                Sense::Min => a.parent_bound.partial_cmp(&b.parent_bound).unwrap(),
                Sense::Max => b.parent_bound.partial_cmp(&a.parent_bound).unwrap(),
            })
            .map(|(i, _)| i)
            .unwrap();
        let node = queue.swap_remove(pick);
        if let Some((inc_obj, _)) = &incumbent {
            if !better(node.parent_bound, *inc_obj) {
                continue;
            }
        }
        nodes_processed += 1;

        for &(j, lo, hi) in &node.bounds {
            spec.lp.variables[j].lower = lo;
            spec.lp.variables[j].upper = hi;
        }
        // Solve, separating lazily until the candidate survives.
        let mut node_result: Option<(f64, Vec<f64>)> = None;
        loop {
            let sol = solve_lp(&spec.lp)?;
            match sol.status {
                LpStatus::Infeasible => break,
                LpStatus::Unbounded => {
                    for (j, &(lo, hi)) in base_bounds.iter().enumerate() {
                        spec.lp.variables[j].lower = lo;
                        spec.lp.variables[j].upper = hi;
                    }
                    return Err(LpError::NumericalFailure(
                        "unbounded LP relaxation inside branch and bound".into(),
                    ));
                }
                LpStatus::Optimal => {
                    if let Some((inc_obj, _)) = &incumbent {
                        if !better(sol.objective, *inc_obj) {
                            break; // bound-dominated
                        }
                    }
                    if is_integral(&sol.primal, &spec.integers) {
                        let cuts = spec
                            .cut_callback
                            .as_mut()
                            .map(|cb| cb(&sol.primal))
                            .unwrap_or_default();
                        if !cuts.is_empty() {
                            for c in cuts {
                                spec.lp.rows.push(c);
                            }
                            continue; // re-solve with the new rows
                        }
                    }
                    node_result = Some((sol.objective, sol.primal));
                    break;
                }
            }
        }
        for (j, &(lo, hi)) in base_bounds.iter().enumerate() {
            spec.lp.variables[j].lower = lo;
            spec.lp.variables[j].upper = hi;
        }
        let Some((obj, x)) = node_result else {
            continue;
        };
        if is_integral(&x, &spec.integers) {
            // Accepted candidate (the callback already approved it).
            incumbents.push(x.clone());
            match &incumbent {
                Some((inc_obj, _)) if !better(obj, *inc_obj) => {}
                _ => incumbent = Some((obj, x)),
            }
            continue;
        }
        // Branch on the most fractional integer variable, ties by index.
        let mut branch_var = None;
        let mut best_dist = f64::INFINITY;
        for &j in &spec.integers {
            let frac = x[j] - x[j].floor();
            if frac > INT_TOL && frac < 1.0 - INT_TOL {
                let dist = (frac - 0.5).abs();
                if dist < best_dist - 1e-12 {
                    best_dist = dist;
                    branch_var = Some(j);
                }
            }
        }
        let j = branch_var.expect("non-integral solution must have a fractional integer");
        let floor = x[j].floor();
        let (node_lo, node_hi) = {
            let mut lo = base_bounds[j].0;
            let mut hi = base_bounds[j].1;
            for &(jj, l, h) in &node.bounds {
                if jj == j {
                    lo = l;
                    hi = h;
                }
            }
            (lo, hi)
        };
        let mut down = node.bounds.clone();
        down.push((j, node_lo, floor));
        let mut up = node.bounds.clone();
        up.push((j, floor + 1.0, node_hi));
        queue.push(Node {
            bounds: down,
            parent_bound: obj,
        });
        queue.push(Node {
            bounds: up,
            parent_bound: obj,
        });
    }

    let open_bound = queue
        .iter()
        .map(|n| n.parent_bound)
        .fold(worst, |a, b| match sense {
            Sense::Min => a.min(b),
            Sense::Max => a.max(b),
        });
    let (status, bound) = match (&incumbent, queue.is_empty(), timed_out) {
        (Some((obj, _)), true, _) => (MipStatus::Optimal, *obj),
        (Some((obj, _)), false, _) => {
            let gap = (obj - open_bound).abs() / obj.abs().max(1.0);
            if gap <= relative_gap_tol {
                (MipStatus::Optimal, open_bound)
            } else {
                (MipStatus::Feasible, open_bound)
            }
        }
        (None, true, false) => (MipStatus::Infeasible, worst),
        (None, _, _) => (MipStatus::TimeLimit, open_bound),
    };
    Ok(MipResult {
        status,
        objective: incumbent.as_ref().map(|(o, _)| *o),
        best: incumbent.map(|(_, x)| x),
        bound,
        nodes: nodes_processed,
        elapsed: start.elapsed(),
        incumbents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RowSense;

    fn minutes(m: u64) -> Duration {
        Duration::from_secs(m * 60)
    }

    #[test]
    fn pure_lp_solves_in_one_node() {
        let mut lp = LinearProgram::new(Sense::Max);
        let x = lp.add_variable(0.0, 4.0, 1.0);
        lp.add_row(vec![(x, 1.0)], RowSense::Le, 2.5);
        let r = solve_mip(MipSpec::new(lp, vec![]), minutes(1), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert_eq!(r.nodes, 1);
        assert!((r.objective.unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn tiny_knapsack() {
        let mut lp = LinearProgram::new(Sense::Max);
        let x = lp.add_variable(0.0, 1.0, 3.0);
        let y = lp.add_variable(0.0, 1.0, 2.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Le, 1.0);
        let r = solve_mip(MipSpec::new(lp, vec![x, y]), minutes(1), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert!((r.objective.unwrap() - 3.0).abs() < 1e-9);
        let best = r.best.unwrap();
        assert!((best[x] - 1.0).abs() < 1e-6);
        assert!(best[y].abs() < 1e-6);
    }

    #[test]
    fn infeasible_mip() {
        let mut lp = LinearProgram::new(Sense::Min);
        let x = lp.add_variable(0.0, 1.0, 1.0);
        lp.add_row(vec![(x, 2.0)], RowSense::Eq, 1.0); // forces x = 0.5
        let r = solve_mip(MipSpec::new(lp, vec![x]), minutes(1), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(r.status, MipStatus::Infeasible);
        assert!(r.best.is_none());
    }

    #[test]
    fn no_cut_callback_matches_plain_solve() {
        let build = || {
            let mut lp = LinearProgram::new(Sense::Max);
            let x = lp.add_variable(0.0, 5.0, 2.0);
            let y = lp.add_variable(0.0, 5.0, 3.0);
            lp.add_row(vec![(x, 2.0), (y, 3.0)], RowSense::Le, 12.0);
            lp.add_row(vec![(x, 1.0), (y, -1.0)], RowSense::Ge, -2.0);
            MipSpec::new(lp, vec![0, 1])
        };
        let plain = solve_mip(build(), minutes(1), DEFAULT_GAP_TOL).unwrap();
        let with_cb = solve_mip(
            build().with_callback(|_| Vec::new()),
            minutes(1),
            DEFAULT_GAP_TOL,
        )
        .unwrap();
        assert_eq!(plain.objective, with_cb.objective);
    }

    #[test]
    fn warm_start_is_kept_as_incumbent() {
        let mut lp = LinearProgram::new(Sense::Max);
        let x = lp.add_variable(0.0, 1.0, 1.0);
        let y = lp.add_variable(0.0, 1.0, 1.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Le, 1.0);
        let spec = MipSpec::new(lp, vec![x, y]).with_warm_start(vec![1.0, 0.0]);
        let r = solve_mip(spec, minutes(1), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert!((r.objective.unwrap() - 1.0).abs() < 1e-9);
        assert!(!r.incumbents.is_empty());
    }

    #[test]
    fn lazy_cuts_reject_candidates() {
        // max x + y/2 over {0,1}^2; the callback vetoes any solution with
        // x = 1, leaving (0,1) as the best survivor.
        let mut lp = LinearProgram::new(Sense::Max);
        let x = lp.add_variable(0.0, 1.0, 1.0);
        let y = lp.add_variable(0.0, 1.0, 0.5);
        let spec = MipSpec::new(lp, vec![x, y]).with_callback(move |sol: &[f64]| {
            if sol[0] > 0.5 {
                vec![Row {
                    coeffs: vec![(0, 1.0)],
                    sense: RowSense::Le,
                    rhs: 0.0,
                    name: None,
                }]
            } else {
                Vec::new()
            }
        });
        let r = solve_mip(spec, minutes(1), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert!((r.objective.unwrap() - 0.5).abs() < 1e-9);
        assert!(r.best.unwrap()[0].abs() < 1e-6);
    }

    /// Random small pure-integer programs against exhaustive enumeration.
    #[test]
    fn random_mips_match_enumeration() {
        let mut rng = crate::rng::SplitMix64::new(0x5eed_0008);
        for round in 0..100 {
            let nv = 2 + (rng.next_u64() % 4) as usize; // 2..=5
            let nr = 1 + (rng.next_u64() % 4) as usize;
            let hi = 2.0 + (rng.next_u64() % 2) as f64;
            let sense = if round % 2 == 0 { Sense::Max } else { Sense::Min };
            let mut lp = LinearProgram::new(sense);
            for _ in 0..nv {
                lp.add_variable(0.0, hi, (rng.next_u64() % 11) as f64 - 5.0);
            }
            for _ in 0..nr {
                let mut coeffs = Vec::new();
                for j in 0..nv {
                    coeffs.push((j, (rng.next_u64() % 9) as f64 - 4.0));
                }
                lp.add_row(coeffs, RowSense::Le, (rng.next_u64() % 10) as f64);
            }
            let lp_clone = lp.clone();
            let r = solve_mip(
                MipSpec::new(lp, (0..nv).collect()),
                minutes(1),
                DEFAULT_GAP_TOL,
            )
            .unwrap();
            let mut best: Option<f64> = None;
            let hi_i = hi as i64;
            let mut assignment = vec![0i64; nv];
            loop {
                let x: Vec<f64> = assignment.iter().map(|&v| v as f64).collect();
                if check_assignment(&lp_clone, &x) {
                    let obj = lp_clone.objective_value(&x);
                    best = Some(match (best, sense) {
                        (None, _) => obj,
                        (Some(b), Sense::Max) => b.max(obj),
                        (Some(b), Sense::Min) => b.min(obj),
                    });
                }
                let mut i = 0;
                loop {
                    if i == nv {
                        break;
                    }
                    assignment[i] += 1;
                    if assignment[i] <= hi_i {
                        break;
                    }
                    assignment[i] = 0;
                    i += 1;
                }
                if i == nv {
                    break;
                }
            }
            match best {
                None => assert_eq!(r.status, MipStatus::Infeasible, "round {round}"),
                Some(b) => {
                    assert_eq!(r.status, MipStatus::Optimal, "round {round}");
                    assert!(
                        (r.objective.unwrap() - b).abs() < 1e-6,
                        "round {round}: mip {} vs enum {b}",
                        r.objective.unwrap()
                    );
                }
            }
        }
    }
}
