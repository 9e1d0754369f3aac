//! Benchmark plumbing: one record per (instance, method) run, CSV
//! emission, and Dolan-More performance profiles with a plain-text plot.

use std::path::Path;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bnp::{branch_and_price, BnPConfig, BnPStatus};
use crate::graph::{max_spanning_tree, SpanningKForest, WeightedGraph};
use crate::heuristics::{heuristic_bnb, k_approx, ColumnPool, SearchLimits};
use crate::mip::{solve_mip, MipSpec, MipStatus, DEFAULT_GAP_TOL};
use crate::models::{
    build_cycle_minmax, build_flow_maxmin, build_flow_minmax, cycle_cut_callback,
    extract_forest_from_flow, flow_warm_start, MaxMinMode,
};
use crate::oracle::{exact_maxmin, exact_minmax, OracleError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("missing record for instance {instance}, method {method}")]
    MissingCell { instance: String, method: String },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad record field {field}: {value}")]
    BadField { field: &'static str, value: String },
}

/// Solution methods exposed by the benchmark harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Approx,
    Heur,
    Flow,
    FlowMaxmin,
    Cyc,
    Bp,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Approx,
        Method::Heur,
        Method::Flow,
        Method::FlowMaxmin,
        Method::Cyc,
        Method::Bp,
        Method::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Approx => "approx",
            Method::Heur => "heur",
            Method::Flow => "flow",
            Method::FlowMaxmin => "flow-maxmin",
            Method::Cyc => "cyc",
            Method::Bp => "bp",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.name() == s)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One solver run. `gap` is `(value - bound)/max(1, value)` for min-max
/// methods (flipped for the max-min method) when both parts are known.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub method: Method,
    pub status: String,
    pub value: Option<u64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub time_ms: u128,
    pub nodes: u64,
    pub columns: u64,
}

impl RunRecord {
    /// True when the run proved optimality.
    pub fn solved(&self) -> bool {
        self.status == "optimal"
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub time_limit: Duration,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            time_limit: Duration::from_secs(60),
            seed: 0,
        }
    }
}

/// Node budget for the warm-start heuristic in front of the MIP methods;
/// a node count rather than a clock keeps reruns identical.
const WARM_START_NODES: u64 = 2_000;

fn minmax_gap(value: u64, bound: f64) -> f64 {
    ((value as f64 - bound) / (value as f64).max(1.0)).max(0.0)
}

fn mip_status_string(s: MipStatus) -> &'static str {
    match s {
        MipStatus::Optimal => "optimal",
        MipStatus::Feasible => "feasible",
        MipStatus::Infeasible => "infeasible",
        MipStatus::TimeLimit => "timelimit",
    }
}

/// Runs one method on one instance. Failures that stem from the instance
/// (oracle size cap, disconnected input) come back as a record with an
/// explanatory status rather than an error.
pub fn run_method(
    g: &WeightedGraph,
    k: usize,
    method: Method,
    opts: &RunOptions,
) -> (RunRecord, Option<SpanningKForest>) {
    let start = Instant::now();
    let mut rec = RunRecord {
        instance: String::new(),
        method,
        status: "error".into(),
        value: None,
        bound: None,
        gap: None,
        time_ms: 0,
        nodes: 0,
        columns: 0,
    };
    let mut forest = None;
    match method {
        Method::Approx => match k_approx(g, k) {
            Ok(f) => {
                rec.status = "feasible".into();
                rec.value = Some(f.value_minmax());
                forest = Some(f);
            }
            Err(e) => rec.status = format!("error: {e}"),
        },
        Method::Heur => {
            let mut pool = ColumnPool::new();
            let limits = SearchLimits {
                time: Some(opts.time_limit),
                nodes: Some(200_000),
            };
            match heuristic_bnb(g, k, &limits, &mut pool) {
                Ok(out) => {
                    rec.status = "feasible".into();
                    rec.value = Some(out.value);
                    rec.nodes = out.nodes;
                    rec.columns = pool.len() as u64;
                    forest = Some(out.forest);
                }
                Err(e) => rec.status = format!("error: {e}"),
            }
        }
        Method::Flow | Method::Cyc => {
            let mut pool = ColumnPool::new();
            let warm_limits = SearchLimits {
                time: Some(opts.time_limit.min(Duration::from_secs(1))),
                nodes: Some(WARM_START_NODES),
            };
            let warm = match heuristic_bnb(g, k, &warm_limits, &mut pool) {
                Ok(out) => out,
                Err(e) => {
                    rec.status = format!("error: {e}");
                    rec.time_ms = start.elapsed().as_millis();
                    return (rec, None);
                }
            };
            let remaining = opts.time_limit.saturating_sub(start.elapsed());
            let solve_result = if method == Method::Flow {
                build_flow_minmax(g, k, warm.value).map(|model| {
                    let ws = flow_warm_start(&model, g, &warm.forest);
                    let spec = MipSpec::new(model.lp.clone(), model.integers.clone())
                        .with_warm_start(ws);
                    let r = solve_mip(spec, remaining, DEFAULT_GAP_TOL);
                    (r, Some(model))
                })
            } else {
                let model = build_cycle_minmax(g, k);
                let ws = model.warm_start(&warm.forest);
                let spec = MipSpec::new(model.lp.clone(), model.integers.clone())
                    .with_warm_start(ws)
                    .with_callback(cycle_cut_callback(g, k));
                let r = solve_mip(spec, remaining, DEFAULT_GAP_TOL);
                Ok((r, None))
            };
            match solve_result {
                Ok((Ok(result), flow_model)) => {
                    rec.status = mip_status_string(result.status).into();
                    rec.nodes = result.nodes;
                    rec.bound = Some(result.bound);
                    if let Some(obj) = result.objective {
                        let value = obj.round() as u64;
                        rec.value = Some(value);
                        rec.gap = Some(minmax_gap(value, result.bound));
                    }
                    if let (Some(model), Some(x)) = (flow_model, result.best.as_ref()) {
                        forest = extract_forest_from_flow(&model, g, x).ok();
                    } else if method == Method::Cyc {
                        forest = warm_forest_or_none(result.best.as_ref(), g, k);
                    }
                    // The heuristic's forest backs up a missing decode.
                    if forest.is_none() && rec.value == Some(warm.value) {
                        forest = Some(warm.forest);
                    }
                }
                Ok((Err(e), _)) => rec.status = format!("error: {e}"),
                Err(e) => rec.status = format!("error: {e}"),
            }
        }
        Method::FlowMaxmin => {
            let u = match max_spanning_tree(g) {
                Ok(t) => t.weight(),
                Err(e) => {
                    rec.status = format!("error: {e}");
                    rec.time_ms = start.elapsed().as_millis();
                    return (rec, None);
                }
            };
            match build_flow_maxmin(g, k, u, MaxMinMode::Theta) {
                Ok(model) => {
                    let warm = k_approx(g, k)
                        .ok()
                        .map(|f| flow_warm_start(&model, g, &f));
                    let mut spec = MipSpec::new(model.lp.clone(), model.integers.clone());
                    if let Some(ws) = warm {
                        spec = spec.with_warm_start(ws);
                    }
                    match solve_mip(spec, opts.time_limit, DEFAULT_GAP_TOL) {
                        Ok(result) => {
                            rec.status = mip_status_string(result.status).into();
                            rec.nodes = result.nodes;
                            rec.bound = Some(result.bound);
                            if let Some(obj) = result.objective {
                                let value = obj.round() as u64;
                                rec.value = Some(value);
                                rec.gap = Some(
                                    ((result.bound - value as f64) / (value as f64).max(1.0))
                                        .max(0.0),
                                );
                            }
                            if let Some(x) = result.best.as_ref() {
                                forest = extract_forest_from_flow(&model, g, x).ok();
                            }
                        }
                        Err(e) => rec.status = format!("error: {e}"),
                    }
                }
                Err(e) => rec.status = format!("error: {e}"),
            }
        }
        Method::Bp => {
            let config = BnPConfig {
                time_limit: opts.time_limit,
                seed: opts.seed,
                ..BnPConfig::default()
            };
            match branch_and_price(g, k, &config) {
                Ok(r) => {
                    rec.status = match r.status {
                        BnPStatus::Optimal => "optimal".into(),
                        BnPStatus::TimeLimit => "timelimit".into(),
                    };
                    rec.value = Some(r.value);
                    rec.gap = Some(r.gap);
                    rec.bound = Some(r.value as f64 * (1.0 - r.gap));
                    rec.nodes = r.nodes;
                    rec.columns = r.columns;
                    forest = r.forest;
                }
                Err(e) => rec.status = format!("error: {e}"),
            }
        }
        Method::Oracle => match exact_minmax(g, k) {
            Ok((value, f)) => {
                rec.status = "optimal".into();
                rec.value = Some(value);
                rec.bound = Some(value as f64);
                rec.gap = Some(0.0);
                forest = Some(f);
            }
            Err(OracleError::TooLarge { n, max }) => {
                rec.status = format!("toolarge: n = {n} > {max}");
            }
            Err(e) => rec.status = format!("error: {e}"),
        },
    }
    rec.time_ms = start.elapsed().as_millis();
    (rec, forest)
}

/// Exact max-min value for the CLI's `flow-maxmin` verification path.
pub fn oracle_maxmin(g: &WeightedGraph, k: usize) -> Result<u64, OracleError> {
    exact_maxmin(g, k).map(|(v, _)| v)
}

fn warm_forest_or_none(
    best: Option<&Vec<f64>>,
    g: &WeightedGraph,
    k: usize,
) -> Option<SpanningKForest> {
    // Decode a cycle-model solution: edges with any class mass belong to
    // the forest.
    let x = best?;
    let kept: Vec<usize> = (0..g.m())
        .filter(|&e| (0..k).any(|i| x[e * k + i] > 0.5))
        .collect();
    let mut uf = crate::graph::UnionFind::new(g.n());
    for &e in &kept {
        let edge = g.edge(e);
        if !uf.union(edge.u, edge.v) {
            return None;
        }
    }
    let mut comp_edges: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for &e in &kept {
        comp_edges[uf.find(g.edge(e).u)].push(e);
    }
    let mut trees = Vec::new();
    for v in 0..g.n() {
        if uf.find(v) == v {
            if comp_edges[v].is_empty() {
                trees.push(crate::graph::Tree::singleton(v));
            } else {
                trees.push(crate::graph::Tree::from_edge_ids(g, &comp_edges[v]).ok()?);
            }
        }
    }
    SpanningKForest::new(g, trees).ok()
}

const CSV_HEADER: [&str; 9] = [
    "instance", "method", "status", "value", "bound", "gap", "time_ms", "nodes", "columns",
];

/// Writes records with the fixed schema header.
pub fn write_csv(records: &[RunRecord], out: impl std::io::Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.instance.clone(),
            r.method.name().to_string(),
            r.status.clone(),
            r.value.map(|v| v.to_string()).unwrap_or_default(),
            r.bound.map(|v| format!("{v:.6}")).unwrap_or_default(),
            r.gap.map(|v| format!("{v:.6}")).unwrap_or_default(),
            r.time_ms.to_string(),
            r.nodes.to_string(),
            r.columns.to_string(),
        ])?;
    }
    w.flush().map_err(BenchError::Io)?;
    Ok(())
}

pub fn write_csv_file(records: &[RunRecord], path: &Path) -> Result<(), BenchError> {
    write_csv(records, std::fs::File::create(path)?)
}

/// Reads records written by [`write_csv`].
pub fn read_csv(input: impl std::io::Read) -> Result<Vec<RunRecord>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("").to_string();
        let opt_u64 = |i: usize, field: &'static str| -> Result<Option<u64>, BenchError> {
            let s = get(i);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| BenchError::BadField {
                    field,
                    value: s,
                })
            }
        };
        let opt_f64 = |i: usize, field: &'static str| -> Result<Option<f64>, BenchError> {
            let s = get(i);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| BenchError::BadField {
                    field,
                    value: s,
                })
            }
        };
        let method = Method::parse(&get(1)).ok_or_else(|| BenchError::BadField {
            field: "method",
            value: get(1),
        })?;
        out.push(RunRecord {
            instance: get(0),
            method,
            status: get(2),
            value: opt_u64(3, "value")?,
            bound: opt_f64(4, "bound")?,
            gap: opt_f64(5, "gap")?,
            time_ms: get(6).parse().map_err(|_| BenchError::BadField {
                field: "time_ms",
                value: get(6),
            })?,
            nodes: opt_u64(7, "nodes")?.unwrap_or(0),
            columns: opt_u64(8, "columns")?.unwrap_or(0),
        });
    }
    Ok(out)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<RunRecord>, BenchError> {
    read_csv(std::fs::File::open(path)?)
}

/// A performance profile: the cumulative share of instances solved within
/// each time ratio. Breakpoints are `(tau, rho)` with `rho` non-decreasing.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub method: Method,
    pub points: Vec<(f64, f64)>,
}

impl ProfileCurve {
    /// Share of instances with ratio at most `tau`.
    pub fn rho_at(&self, tau: f64) -> f64 {
        self.points
            .iter()
            .filter(|(t, _)| *t <= tau + 1e-12)
            .last()
            .map(|(_, r)| *r)
            .unwrap_or(0.0)
    }
}

/// Builds the profile curves. Every instance must carry a record for every
/// method present in the input; unsolved runs count as an infinite ratio.
/// Times are clamped to one millisecond so ratios stay finite.
pub fn performance_profile(records: &[RunRecord]) -> Result<Vec<ProfileCurve>, BenchError> {
    use std::collections::{BTreeMap, BTreeSet};
    let methods: BTreeSet<Method> = records.iter().map(|r| r.method).collect();
    let mut per_instance: BTreeMap<&str, BTreeMap<Method, &RunRecord>> = BTreeMap::new();
    for r in records {
        per_instance
            .entry(r.instance.as_str())
            .or_default()
            .insert(r.method, r);
    }
    for (inst, cells) in &per_instance {
        for m in &methods {
            if !cells.contains_key(m) {
                return Err(BenchError::MissingCell {
                    instance: inst.to_string(),
                    method: m.name().into(),
                });
            }
        }
    }
    let total = per_instance.len() as f64;
    let mut curves = Vec::new();
    for &m in &methods {
        let mut ratios: Vec<f64> = Vec::new();
        for cells in per_instance.values() {
            let best: Option<f64> = cells
                .values()
                .filter(|r| r.solved())
                .map(|r| (r.time_ms.max(1)) as f64)
                .fold(None, |acc, t| Some(acc.map_or(t, |a: f64| a.min(t))));
            let r = cells[&m];
            let ratio = match (r.solved(), best) {
                (true, Some(b)) => (r.time_ms.max(1)) as f64 / b,
                _ => f64::INFINITY,
            };
            ratios.push(ratio);
        }
        ratios.retain(|r| r.is_finite());
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut points = Vec::new();
        let mut count = 0usize;
        for chunk in ratios.chunk_by(|a, b| a == b) {
            count += chunk.len();
            points.push((chunk[0], count as f64 / total));
        }
        if points.is_empty() {
            points.push((1.0, 0.0));
        }
        curves.push(ProfileCurve { method: m, points });
    }
    Ok(curves)
}

/// Breakpoint CSV for the profile curves: `method,tau,rho`.
pub fn write_profile_csv(
    curves: &[ProfileCurve],
    out: impl std::io::Write,
) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "tau", "rho"])?;
    for c in curves {
        for (tau, rho) in &c.points {
            w.write_record([c.method.name().to_string(), format!("{tau:.6}"), format!("{rho:.6}")])?;
        }
    }
    w.flush().map_err(BenchError::Io)?;
    Ok(())
}

/// A plain-text plot of the curves, share of instances against the time
/// ratio. No graphics dependency by design.
pub fn render_profiles(curves: &[ProfileCurve]) -> String {
    let width = 64usize;
    let height = 11usize;
    let tau_max = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|(t, _)| *t))
        .fold(1.0f64, f64::max)
        .max(2.0);
    let mut grid = vec![vec![' '; width]; height];
    let symbols = ['P', 'F', 'E', 'A', 'H', 'M', 'O'];
    let mut legend = String::new();
    for (ci, c) in curves.iter().enumerate() {
        let sym = symbols[ci % symbols.len()];
        legend.push_str(&format!("  {sym} = {}\n", c.method.name()));
        for col in 0..width {
            let tau = 1.0 + (tau_max - 1.0) * col as f64 / (width - 1) as f64;
            let rho = c.rho_at(tau);
            let row = ((1.0 - rho) * (height - 1) as f64).round() as usize;
            let cell = &mut grid[row.min(height - 1)][col];
            if *cell == ' ' {
                *cell = sym;
            } else if *cell != sym {
                *cell = '*';
            }
        }
    }
    let mut out = String::new();
    out.push_str("share of instances solved within ratio tau of the fastest\n");
    for (i, row) in grid.iter().enumerate() {
        let rho = 1.0 - i as f64 / (height - 1) as f64;
        out.push_str(&format!("{rho:>4.1} |"));
        out.extend(row.iter());
        out.push('\n');
    }
    out.push_str(&format!(
        "     +{}\n      tau from 1.0 to {tau_max:.1}\n",
        "-".repeat(width)
    ));
    out.push_str(&legend);
    out
}
