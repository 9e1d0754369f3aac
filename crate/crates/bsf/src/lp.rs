//! A self-contained bounded-variable primal simplex solver.
//!
//! Dense two-phase simplex with an explicitly maintained basis inverse,
//! Dantzig pricing and a Bland-rule fallback against cycling. Row duals and
//! reduced costs come out of every optimal solve, which is what the column
//! generation layer lives on. Scale target: a few thousand columns by a few
//! hundred rows.
//!
//! Dual sign convention for a minimization problem: `>=` rows have
//! non-negative duals, `<=` rows non-positive, equalities free; reduced
//! costs are non-negative for variables at their lower bound and
//! non-positive at their upper bound. For maximization everything flips.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("numerical failure in simplex: {0}")]
    NumericalFailure(String),
    #[error("malformed program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
    pub name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            variables: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, lower: f64, upper: f64, objective: f64) -> usize {
        self.variables.push(Variable {
            lower,
            upper,
            objective,
            name: None,
        });
        self.variables.len() - 1
    }

    pub fn add_named_variable(
        &mut self,
        lower: f64,
        upper: f64,
        objective: f64,
        name: impl Into<String>,
    ) -> usize {
        let idx = self.add_variable(lower, upper, objective);
        self.variables[idx].name = Some(name.into());
        idx
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(Row {
            coeffs,
            sense,
            rhs,
            name: None,
        });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var_name(&self, j: usize) -> String {
        self.variables[j]
            .name
            .clone()
            .unwrap_or_else(|| format!("x{j}"))
    }

    pub fn row_name(&self, i: usize) -> String {
        self.rows[i].name.clone().unwrap_or_else(|| format!("r{i}"))
    }

    /// Objective value of an assignment under the program's sense.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(x)
            .map(|(v, &xv)| v.objective * xv)
            .sum()
    }

    fn validate(&self) -> Result<(), LpError> {
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, c) in &r.coeffs {
                if j >= self.variables.len() {
                    return Err(LpError::Malformed(format!(
                        "row {i} references variable {j} of {}",
                        self.variables.len()
                    )));
                }
                if !c.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} has non-finite coeff")));
                }
            }
            if !r.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has non-finite rhs")));
            }
        }
        for (j, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || !v.objective.is_finite() {
                return Err(LpError::Malformed(format!("variable {j} has NaN bound")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the structural variables.
    pub primal: Vec<f64>,
    /// One dual per row, in the convention documented at module level.
    pub duals: Vec<f64>,
    /// Reduced costs of the structural variables.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    fn non_optimal(status: LpStatus, nvars: usize, nrows: usize, objective: f64) -> Self {
        LpSolution {
            status,
            primal: vec![0.0; nvars],
            duals: vec![0.0; nrows],
            reduced_costs: vec![0.0; nvars],
            objective,
        }
    }
}

const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const REFACTOR_EVERY: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
    /// Free variable parked at zero.
    FreeZero,
}

struct Simplex {
    nrows: usize,
    ncols: usize,
    /// Column-wise coefficients.
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    state: Vec<ColState>,
    basis: Vec<usize>,
    x: Vec<f64>,
    /// Dense row-major basis inverse.
    binv: Vec<f64>,
    pivots_since_refactor: u32,
    bland: bool,
    iterations: u64,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Continue,
}

impl Simplex {
    fn col_dot_binv_row(&self, row: &[f64], j: usize) -> f64 {
        self.cols[j].iter().map(|&(i, a)| row[i] * a).sum()
    }

    /// `w = binv * A_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.nrows];
        for &(i, a) in &self.cols[j] {
            if a == 0.0 {
                continue;
            }
            for r in 0..self.nrows {
                w[r] += self.binv[r * self.nrows + i] * a;
            }
        }
        w
    }

    /// `y = c_B * binv`.
    fn duals(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let cb = self.cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for i in 0..self.nrows {
                y[i] += cb * self.binv[r * self.nrows + i];
            }
        }
        y
    }

    fn reduced_cost(&self, y: &[f64], j: usize) -> f64 {
        self.cost[j] - self.col_dot_binv_row(y, j)
    }

    fn rebuild_binv(&mut self) -> Result<(), LpError> {
        let m = self.nrows;
        // Gauss-Jordan on [B | I].
        let mut a = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            let _ = r;
            for &(i, v) in &self.cols[j] {
                a[i * m + r] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(LpError::NumericalFailure("singular basis".into()));
            }
            if piv != col {
                for c in 0..m {
                    a.swap(piv * m + c, col * m + c);
                    inv.swap(piv * m + c, col * m + c);
                }
            }
            let d = a[col * m + col];
            for c in 0..m {
                a[col * m + c] /= d;
                inv[col * m + c] /= d;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f == 0.0 {
                    continue;
                }
                for c in 0..m {
                    a[r * m + c] -= f * a[col * m + c];
                    inv[r * m + c] -= f * inv[col * m + c];
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;
        Ok(())
    }

    /// Recomputes basic variable values from the nonbasic ones.
    fn recompute_basics(&mut self) {
        let m = self.nrows;
        let mut resid = self.rhs.clone();
        for j in 0..self.ncols {
            if self.state[j] == ColState::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            for &(i, a) in &self.cols[j] {
                resid[i] -= a * xj;
            }
        }
        for r in 0..m {
            let mut v = 0.0;
            for i in 0..m {
                v += self.binv[r * m + i] * resid[i];
            }
            self.x[self.basis[r]] = v;
        }
    }

    fn entering(&self, y: &[f64]) -> Option<(usize, f64, f64)> {
        // Returns (column, reduced cost, direction sign).
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            let (dir, score) = match self.state[j] {
                ColState::Basic => continue,
                ColState::AtLower => {
                    if self.lower[j] == self.upper[j] {
                        continue; // fixed
                    }
                    let d = self.reduced_cost(y, j);
                    if d < -DUAL_TOL {
                        (1.0, -d)
                    } else {
                        continue;
                    }
                }
                ColState::AtUpper => {
                    let d = self.reduced_cost(y, j);
                    if d > DUAL_TOL {
                        (-1.0, d)
                    } else {
                        continue;
                    }
                }
                ColState::FreeZero => {
                    let d = self.reduced_cost(y, j);
                    if d < -DUAL_TOL {
                        (1.0, -d)
                    } else if d > DUAL_TOL {
                        (-1.0, d)
                    } else {
                        continue;
                    }
                }
            };
            match &best {
                _ if self.bland => {
                    // Smallest eligible index wins.
                    if best.is_none() {
                        best = Some((j, score, dir));
                    }
                }
                None => best = Some((j, score, dir)),
                Some((_, s, _)) if score > *s => best = Some((j, score, dir)),
                _ => {}
            }
            if self.bland && best.is_some() {
                break;
            }
        }
        best.map(|(j, s, dir)| (j, s, dir))
    }

    fn step(&mut self) -> Result<StepOutcome, LpError> {
        let y = self.duals();
        let Some((j, _, dir)) = self.entering(&y) else {
            return Ok(StepOutcome::Optimal);
        };
        let w = self.ftran(j);
        // Ratio test (Harris two-pass): how far can x_j move in direction
        // `dir`, and which basic variable blocks it. The first pass relaxes
        // every bound by a feasibility tolerance to find how far we may go;
        // the second picks the largest pivot among rows whose exact ratio
        // fits, which keeps the basis well conditioned.
        let own_limit = if self.lower[j].is_finite() && self.upper[j].is_finite() {
            self.upper[j] - self.lower[j]
        } else {
            f64::INFINITY
        };
        let relax = 1e-7;
        let mut t_relaxed = own_limit;
        let mut any_block = false;
        let row_ratio = |r: usize, slack: f64| -> Option<(f64, f64)> {
            // Returns (exact ratio, bound-hit sign) for the basic var of
            // row r, or None when the row never blocks.
            let wr = w[r];
            if wr.abs() <= PIVOT_TOL {
                return None;
            }
            let b = self.basis[r];
            let xb = self.x[b];
            let delta = -dir * wr; // movement of x_b per unit t
            if delta < 0.0 {
                if self.lower[b].is_finite() {
                    Some((((xb - self.lower[b]).max(0.0) + slack) / -delta, -1.0))
                } else {
                    None
                }
            } else if self.upper[b].is_finite() {
                Some((((self.upper[b] - xb).max(0.0) + slack) / delta, 1.0))
            } else {
                None
            }
        };
        for r in 0..self.nrows {
            if let Some((ratio, _)) = row_ratio(r, relax) {
                any_block = true;
                t_relaxed = t_relaxed.min(ratio);
            }
        }
        if t_relaxed.is_infinite() {
            return Ok(StepOutcome::Unbounded);
        }
        let mut leave: Option<(usize, f64, f64)> = None; // (row, exact ratio, sign)
        for r in 0..self.nrows {
            if let Some((exact, sign)) = row_ratio(r, 0.0) {
                if exact <= t_relaxed + 1e-12 {
                    let better = match &leave {
                        None => true,
                        Some((lr, _, _)) => {
                            if self.bland {
                                self.basis[r] < self.basis[*lr]
                            } else {
                                w[r].abs() > w[*lr].abs()
                            }
                        }
                    };
                    if better {
                        leave = Some((r, exact, sign));
                    }
                }
            }
        }
        let _ = any_block;
        // Bound flip when the entering variable's own range is the binding
        // limit.
        let flip = match &leave {
            None => true,
            Some((_, exact, _)) => own_limit < *exact,
        };
        if flip {
            let t = own_limit;
            for r in 0..self.nrows {
                let b = self.basis[r];
                self.x[b] -= dir * t * w[r];
            }
            self.state[j] = if dir > 0.0 {
                ColState::AtUpper
            } else {
                ColState::AtLower
            };
            self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
            self.iterations += 1;
            return Ok(StepOutcome::Continue);
        }
        let (r, exact, sign) = leave.expect("finite limit implies a blocking row");
        // A tiny pivot right after a fresh factorization is real; otherwise
        // refresh the factorization and try the whole step again.
        if w[r].abs() < 1e-7 && self.pivots_since_refactor > 0 {
            self.rebuild_binv()?;
            self.recompute_basics();
            self.iterations += 1;
            return Ok(StepOutcome::Continue);
        }
        let t = exact.max(0.0);
        for rr in 0..self.nrows {
            let b = self.basis[rr];
            self.x[b] -= dir * t * w[rr];
        }
        let leaving = self.basis[r];
        self.x[j] += dir * t;
        self.state[j] = ColState::Basic;
        self.state[leaving] = if sign < 0.0 {
            self.x[leaving] = self.lower[leaving];
            ColState::AtLower
        } else {
            self.x[leaving] = self.upper[leaving];
            ColState::AtUpper
        };
        self.basis[r] = j;
        // Update binv: eliminate column j from the other rows.
        let m = self.nrows;
        let piv = w[r];
        for c in 0..m {
            self.binv[r * m + c] /= piv;
        }
        for rr in 0..m {
            if rr == r {
                continue;
            }
            let f = w[rr];
            if f == 0.0 {
                continue;
            }
            for c in 0..m {
                self.binv[rr * m + c] -= f * self.binv[r * m + c];
            }
        }
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            self.rebuild_binv()?;
            self.recompute_basics();
        }
        self.iterations += 1;
        Ok(StepOutcome::Continue)
    }

    fn objective(&self) -> f64 {
        (0..self.ncols).map(|j| self.cost[j] * self.x[j]).sum()
    }

    fn optimize(&mut self, max_iters: u64) -> Result<bool, LpError> {
        // Returns Ok(true) if optimal, Ok(false) if unbounded.
        let mut last_obj = f64::INFINITY;
        let mut stall = 0u64;
        loop {
            if self.iterations >= max_iters {
                return Err(LpError::NumericalFailure(format!(
                    "iteration limit {max_iters} reached"
                )));
            }
            match self.step()? {
                StepOutcome::Optimal => return Ok(true),
                StepOutcome::Unbounded => return Ok(false),
                StepOutcome::Continue => {}
            }
            let obj = self.objective();
            if obj < last_obj - 1e-12 {
                last_obj = obj;
                stall = 0;
                self.bland = false;
            } else {
                stall += 1;
                if stall > 1000 {
                    self.bland = true;
                }
            }
        }
    }
}

/// Solves a bounded-variable LP. Returns primal values, row duals and
/// reduced costs when optimal.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let nstruct = lp.num_vars();
    let nrows = lp.num_rows();
    for v in &lp.variables {
        if v.lower > v.upper + 1e-12 {
            return Ok(LpSolution::non_optimal(
                LpStatus::Infeasible,
                nstruct,
                nrows,
                0.0,
            ));
        }
    }
    let flip = match lp.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    if nrows == 0 {
        // Pure bound problem.
        let mut x = vec![0.0; nstruct];
        for (j, v) in lp.variables.iter().enumerate() {
            let c = v.objective * flip;
            x[j] = if c > 0.0 {
                if v.lower.is_finite() {
                    v.lower
                } else {
                    return Ok(LpSolution::non_optimal(
                        LpStatus::Unbounded,
                        nstruct,
                        nrows,
                        f64::NEG_INFINITY * flip,
                    ));
                }
            } else if c < 0.0 {
                if v.upper.is_finite() {
                    v.upper
                } else {
                    return Ok(LpSolution::non_optimal(
                        LpStatus::Unbounded,
                        nstruct,
                        nrows,
                        f64::NEG_INFINITY * flip,
                    ));
                }
            } else if v.lower.is_finite() {
                v.lower
            } else if v.upper.is_finite() {
                v.upper
            } else {
                0.0
            };
        }
        let objective = lp.objective_value(&x);
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            primal: x,
            duals: Vec::new(),
            reduced_costs: lp.variables.iter().map(|v| v.objective).collect(),
            objective,
        });
    }

    let ncols = nstruct + nrows + nrows; // structural + slack + artificial
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
    let mut lower = vec![0.0; ncols];
    let mut upper = vec![0.0; ncols];
    let mut cost = vec![0.0; ncols];
    for (j, v) in lp.variables.iter().enumerate() {
        lower[j] = v.lower;
        upper[j] = v.upper;
        cost[j] = v.objective * flip;
    }
    for (i, r) in lp.rows.iter().enumerate() {
        for &(j, c) in &r.coeffs {
            cols[j].push((i, c));
        }
        let s = nstruct + i;
        cols[s].push((i, 1.0));
        match r.sense {
            RowSense::Le => {
                lower[s] = 0.0;
                upper[s] = f64::INFINITY;
            }
            RowSense::Ge => {
                lower[s] = f64::NEG_INFINITY;
                upper[s] = 0.0;
            }
            RowSense::Eq => {
                lower[s] = 0.0;
                upper[s] = 0.0;
            }
        }
    }
    // Merge duplicate structural coefficients (same row listed twice).
    for col in cols.iter_mut().take(nstruct) {
        if col.len() > 1 {
            col.sort_by_key(|&(i, _)| i);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(i, c) in col.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += c,
                    _ => merged.push((i, c)),
                }
            }
            *col = merged;
        }
    }

    // Initial nonbasic point.
    let mut x = vec![0.0; ncols];
    let mut state = vec![ColState::AtLower; ncols];
    for j in 0..nstruct + nrows {
        if lower[j].is_finite() {
            state[j] = ColState::AtLower;
            x[j] = lower[j];
        } else if upper[j].is_finite() {
            state[j] = ColState::AtUpper;
            x[j] = upper[j];
        } else {
            state[j] = ColState::FreeZero;
            x[j] = 0.0;
        }
    }
    // Crash basis: a row whose slack can absorb the residual at the
    // initial point starts with its slack basic; only the rest get an
    // artificial. Residuals exclude the slacks, which start at zero when
    // basic.
    let rhs: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
    let mut resid = rhs.clone();
    for j in 0..nstruct {
        if x[j] != 0.0 {
            for &(i, a) in &cols[j] {
                resid[i] -= a * x[j];
            }
        }
    }
    let mut basis = Vec::with_capacity(nrows);
    let mut needs_artificial = 0usize;
    for i in 0..nrows {
        let slack = nstruct + i;
        let slack_ok = resid[i] >= lower[slack] - 1e-12 && resid[i] <= upper[slack] + 1e-12;
        if slack_ok {
            x[slack] = resid[i];
            state[slack] = ColState::Basic;
            basis.push(slack);
        } else {
            let a = nstruct + nrows + i;
            let sign = if resid[i] >= 0.0 { 1.0 } else { -1.0 };
            cols[a].push((i, sign));
            lower[a] = 0.0;
            upper[a] = f64::INFINITY;
            x[a] = resid[i].abs();
            state[a] = ColState::Basic;
            basis.push(a);
            needs_artificial += 1;
        }
    }
    let _ = needs_artificial;

    let mut s = Simplex {
        nrows,
        ncols,

        cols,
        lower,
        upper,
        cost: vec![0.0; ncols],
        rhs,
        state,
        basis,
        x,
        binv: Vec::new(),
        pivots_since_refactor: 0,
        bland: false,
        iterations: 0,
    };
    s.rebuild_binv()?;

    let max_iters = 50_000 + 200 * (nrows as u64 + ncols as u64);

    // Phase 1: minimize the artificial mass.
    for a in nstruct + nrows..ncols {
        s.cost[a] = 1.0;
    }
    let scale = 1.0 + s.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s.objective() > 0.0 {
        let optimal = s.optimize(max_iters)?;
        debug_assert!(optimal, "phase 1 is bounded below by zero");
    }
    if s.objective() > 1e-7 * scale {
        return Ok(LpSolution::non_optimal(
            LpStatus::Infeasible,
            nstruct,
            nrows,
            0.0,
        ));
    }
    // Freeze artificials at zero. Basic ones stay pinned in the basis
    // (their [0,0] bounds make any movement through them a degenerate
    // pivot, which the ratio test handles), so the basis stays the
    // well-conditioned one phase 1 ended with.
    for a in nstruct + nrows..ncols {
        s.cost[a] = 0.0;
        s.upper[a] = 0.0;
        if s.state[a] != ColState::Basic {
            s.state[a] = ColState::AtLower;
            s.x[a] = 0.0;
        }
    }
    s.recompute_basics();

    // Phase 2: the real objective.
    for j in 0..nstruct {
        s.cost[j] = lp.variables[j].objective * flip;
    }
    for j in nstruct..ncols {
        s.cost[j] = 0.0;
    }
    s.bland = false;
    let optimal = s.optimize(max_iters)?;
    if !optimal {
        return Ok(LpSolution::non_optimal(
            LpStatus::Unbounded,
            nstruct,
            nrows,
            match lp.sense {
                Sense::Min => f64::NEG_INFINITY,
                Sense::Max => f64::INFINITY,
            },
        ));
    }
    s.rebuild_binv()?;
    s.recompute_basics();
    let y = s.duals();
    let mut duals = vec![0.0; nrows];
    for i in 0..nrows {
        // Internal duals are for the equality form; flip for Max.
        duals[i] = -flip * -y[i];
    }
    let mut reduced = vec![0.0; nstruct];
    for (j, r) in reduced.iter_mut().enumerate() {
        *r = flip * s.reduced_cost(&y, j);
    }
    let primal: Vec<f64> = (0..nstruct).map(|j| s.x[j]).collect();
    let objective = lp.objective_value(&primal);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        duals,
        reduced_costs: reduced,
        objective,
    })
}
