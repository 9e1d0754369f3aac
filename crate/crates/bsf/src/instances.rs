//! Random instance generation and the text file formats for instances and
//! solutions.
//!
//! An instance file is UTF-8 text. Lines starting with `#` are comments. The
//! first non-comment line is `n m k`; exactly `m` lines `u v w` follow with
//! 0-based vertex ids and an integer weight. A solution file carries the
//! objective value on line 1 and then one line per tree listing its edge ids
//! (a singleton tree is an empty line).

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::graph::{SpanningKForest, Tree, WeightedGraph};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible density: m = {m} < n - 1 = {min}")]
    InfeasibleDensity { m: usize, min: usize },
    #[error("no connected graph found after {attempts} attempts")]
    GenerationTimeout { attempts: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parameters of a random instance: `m = floor(p * n(n-1)/2)` edges are drawn
/// uniformly among all simple graphs with those counts, weights i.i.d.
/// uniform on `weight_range`, and disconnected samples are rejected.
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub seed: u64,
    pub weight_range: (u64, u64),
    /// Rejection budget before giving up on connectivity.
    pub max_attempts: usize,
}

impl InstanceSpec {
    pub fn new(n: usize, p: f64, k: usize, seed: u64) -> Self {
        InstanceSpec {
            n,
            p,
            k,
            seed,
            weight_range: (1, 100),
            max_attempts: 10_000,
        }
    }

    /// Number of edges implied by the density.
    pub fn m(&self) -> usize {
        (self.p * (self.n * (self.n - 1) / 2) as f64).floor() as usize
    }

    fn validate(&self) -> Result<(), InstanceError> {
        if self.n < 2 {
            return Err(InstanceError::InvalidSpec("n must be at least 2".into()));
        }
        if self.k < 1 || self.k > self.n {
            return Err(InstanceError::InvalidSpec(format!(
                "k = {} out of range 1..={}",
                self.k, self.n
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(InstanceError::InvalidSpec(format!(
                "density p = {} not in (0, 1]",
                self.p
            )));
        }
        if self.weight_range.0 > self.weight_range.1 {
            return Err(InstanceError::InvalidSpec("empty weight range".into()));
        }
        let m = self.m();
        if m + 1 < self.n {
            return Err(InstanceError::InfeasibleDensity {
                m,
                min: self.n - 1,
            });
        }
        Ok(())
    }
}

/// Draws a connected instance. Deterministic given the seed; two calls with
/// equal specs produce identical graphs.
pub fn generate(spec: &InstanceSpec) -> Result<(WeightedGraph, usize), InstanceError> {
    spec.validate()?;
    let n = spec.n;
    let m = spec.m();
    let mut rng = SplitMix64::new(spec.seed);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            pairs.push((u, v));
        }
    }
    for attempt in 0..spec.max_attempts {
        // Partial Fisher-Yates: the first m entries become a uniform
        // m-subset of the pair universe.
        for i in 0..m {
            let j = i + rng.usize_below(pairs.len() - i);
            pairs.swap(i, j);
        }
        let mut edges: Vec<(usize, usize, u64)> = pairs[..m]
            .iter()
            .map(|&(u, v)| {
                (
                    u,
                    v,
                    rng.range_inclusive(spec.weight_range.0, spec.weight_range.1),
                )
            })
            .collect();
        edges.sort_unstable();
        let g = WeightedGraph::new(n, &edges).expect("sampled edges are simple");
        if g.is_connected() {
            return Ok((g, spec.k));
        }
        let _ = attempt;
    }
    Err(InstanceError::GenerationTimeout {
        attempts: spec.max_attempts,
    })
}

/// Serializes an instance in the text format described in the module docs.
pub fn format_instance(g: &WeightedGraph, k: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", g.n(), g.m(), k);
    for e in g.edges() {
        let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
    }
    out
}

pub fn write_instance(g: &WeightedGraph, k: usize, path: &Path) -> Result<(), InstanceError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(format_instance(g, k).as_bytes())?;
    Ok(())
}

/// Parses an instance from any reader. Errors carry 1-based line numbers.
pub fn parse_instance<R: Read>(reader: R) -> Result<(WeightedGraph, usize), InstanceError> {
    let reader = BufReader::new(reader);
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges: Vec<(usize, usize, u64)> = Vec::new();
    let mut edge_lines = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let parse_field = |s: &str, what: &str| -> Result<u64, InstanceError> {
            s.parse::<u64>().map_err(|_| InstanceError::Parse {
                line: lineno,
                msg: format!("invalid {what}: {s:?}"),
            })
        };
        match header {
            None => {
                if fields.len() != 3 {
                    return Err(InstanceError::Parse {
                        line: lineno,
                        msg: "expected header `n m k`".into(),
                    });
                }
                let n = parse_field(fields[0], "vertex count")? as usize;
                let m = parse_field(fields[1], "edge count")? as usize;
                let k = parse_field(fields[2], "tree count")? as usize;
                if n < 1 || k < 1 || k > n {
                    return Err(InstanceError::Parse {
                        line: lineno,
                        msg: format!("inconsistent header: n = {n}, k = {k}"),
                    });
                }
                header = Some((n, m, k));
            }
            Some((n, m, _)) => {
                if edge_lines == m {
                    return Err(InstanceError::Parse {
                        line: lineno,
                        msg: format!("more than {m} edge lines"),
                    });
                }
                if fields.len() != 3 {
                    return Err(InstanceError::Parse {
                        line: lineno,
                        msg: "expected edge line `u v w`".into(),
                    });
                }
                let u = parse_field(fields[0], "endpoint")? as usize;
                let v = parse_field(fields[1], "endpoint")? as usize;
                let w = parse_field(fields[2], "weight")?;
                if u >= n || v >= n {
                    return Err(InstanceError::Parse {
                        line: lineno,
                        msg: format!("endpoint out of range: {} >= {n}", u.max(v)),
                    });
                }
                edges.push((u, v, w));
                edge_lines += 1;
            }
        }
    }
    let Some((n, m, k)) = header else {
        return Err(InstanceError::Parse {
            line: 0,
            msg: "empty instance".into(),
        });
    };
    if edge_lines != m {
        return Err(InstanceError::Parse {
            line: 0,
            msg: format!("expected {m} edges, found {edge_lines}"),
        });
    }
    let g = WeightedGraph::new(n, &edges).map_err(|e| InstanceError::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    Ok((g, k))
}

pub fn read_instance(path: &Path) -> Result<(WeightedGraph, usize), InstanceError> {
    parse_instance(std::fs::File::open(path)?)
}

/// Writes a solution file: the objective value, then one line of edge ids per
/// tree.
pub fn write_solution(
    forest: &SpanningKForest,
    value: u64,
    path: &Path,
) -> Result<(), InstanceError> {
    let mut out = String::new();
    let _ = writeln!(out, "{value}");
    for t in forest.trees() {
        let ids: Vec<String> = t.edge_ids().iter().map(|id| id.to_string()).collect();
        let _ = writeln!(out, "{}", ids.join(" "));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a solution file back against its instance. Single-vertex trees are
/// reconstructed from the vertices left uncovered by the listed edges.
pub fn read_solution(
    g: &WeightedGraph,
    path: &Path,
) -> Result<(u64, SpanningKForest), InstanceError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let value: u64 = lines
        .next()
        .ok_or_else(|| InstanceError::Parse {
            line: 1,
            msg: "missing value line".into(),
        })?
        .trim()
        .parse()
        .map_err(|_| InstanceError::Parse {
            line: 1,
            msg: "invalid value".into(),
        })?;
    let mut trees = Vec::new();
    let mut covered = vec![false; g.n()];
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let ids: Result<Vec<usize>, _> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<usize>().map_err(|_| InstanceError::Parse {
                    line: lineno,
                    msg: format!("invalid edge id {s:?}"),
                })
            })
            .collect();
        let ids = ids?;
        if ids.is_empty() {
            trees.push(None); // singleton placeholder, resolved below
            continue;
        }
        if ids.iter().any(|&id| id >= g.m()) {
            return Err(InstanceError::Parse {
                line: lineno,
                msg: "edge id out of range".into(),
            });
        }
        let t = Tree::from_edge_ids(g, &ids).map_err(|e| InstanceError::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        for &v in t.vertices() {
            covered[v] = true;
        }
        trees.push(Some(t));
    }
    let mut uncovered: Vec<usize> = (0..g.n()).filter(|&v| !covered[v]).collect();
    let mut resolved = Vec::new();
    for t in trees {
        match t {
            Some(t) => resolved.push(t),
            None => {
                let v = uncovered.pop().ok_or_else(|| InstanceError::Parse {
                    line: 0,
                    msg: "more singleton lines than uncovered vertices".into(),
                })?;
                resolved.push(Tree::singleton(v));
            }
        }
    }
    let forest = SpanningKForest::new(g, resolved).map_err(|e| InstanceError::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    Ok((value, forest))
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn edge_count_formulas() {
        assert_eq!(InstanceSpec::new(5, 1.0, 2, 0).m(), 10);
        assert_eq!(InstanceSpec::new(30, 0.2, 2, 0).m(), 87);
        assert_eq!(InstanceSpec::new(20, 0.1, 2, 0).m(), 19);
    }

    #[test]
    fn sparse_spec_terminates_or_times_out() {
        // m = n - 1 at n = 20: connectivity rejection dominates, but the
        // generator must still come back.
        let mut spec = InstanceSpec::new(20, 0.1, 2, 7);
        spec.max_attempts = 500;
        match generate(&spec) {
            Ok((g, _)) => assert!(g.is_connected()),
            Err(InstanceError::GenerationTimeout { attempts }) => assert_eq!(attempts, 500),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn infeasible_density_detected() {
        let spec = InstanceSpec::new(6, 0.3, 2, 0); // m = 4 < 5
        assert!(matches!(
            generate(&spec),
            Err(InstanceError::InfeasibleDensity { m: 4, min: 5 })
        ));
    }

    #[test]
    fn generated_graphs_are_connected_with_exact_counts() {
        for seed in 0..30 {
            let spec = InstanceSpec::new(12, 0.4, 3, seed);
            let (g, k) = generate(&spec).unwrap();
            assert_eq!(k, 3);
            assert_eq!(g.n(), 12);
            assert_eq!(g.m(), spec.m());
            assert!(g.is_connected());
            for e in g.edges() {
                assert!((1..=100).contains(&e.w));
            }
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let spec = InstanceSpec::new(15, 0.5, 4, 0xfeed);
        let (a, _) = generate(&spec).unwrap();
        let (b, _) = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(format_instance(&a, 4), format_instance(&b, 4));
    }

    #[test]
    fn weight_histogram_is_uniform() {
        // Chi-square over the 100 weight values; critical value for
        // df = 99 at significance 0.001 is 148.23.
        let mut counts = [0u64; 100];
        let mut total = 0u64;
        let mut seed = 0u64;
        while total < 10_000 {
            let spec = InstanceSpec::new(20, 0.5, 2, 0xabc0 + seed);
            let (g, _) = generate(&spec).unwrap();
            for e in g.edges() {
                counts[(e.w - 1) as usize] += 1;
                total += 1;
            }
            seed += 1;
        }
        let expected = total as f64 / 100.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 148.23, "chi-square {chi2} too large for uniformity");
    }

    #[test]
    fn instance_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demo.bsf");
        let g = demo8();
        write_instance(&g, 2, &path).unwrap();
        let (h, k) = read_instance(&path).unwrap();
        assert_eq!(h, g);
        assert_eq!(k, 2);
    }

    #[test]
    fn parse_rejects_bad_input() {
        let bad = "3 1 1\n0 3 5\n";
        let err = parse_instance(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, InstanceError::Parse { line: 2, .. }), "{err}");

        let bad = "3 1 1\n0 1 -4\n";
        let err = parse_instance(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, InstanceError::Parse { line: 2, .. }), "{err}");

        let bad = "2 1 1\n";
        assert!(parse_instance(bad.as_bytes()).is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# demo\n\n2 1 1\n# edge\n0 1 7\n";
        let (g, k) = parse_instance(text.as_bytes()).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(k, 1);
        assert_eq!(g.edge(0).w, 7);
    }

    #[test]
    fn solution_round_trip_with_singletons() {
        let dir = tempfile::tempdir().unwrap();
        let g = demo8();
        let trees = vec![
            Tree::from_edge_ids(&g, &[0, 1, 2, 3]).unwrap(), // {0..4}
            Tree::from_edge_ids(&g, &[6]).unwrap(),          // {5,6}
            Tree::singleton(7),
        ];
        let forest = SpanningKForest::new(&g, trees).unwrap();
        let path = dir.path().join("sol.txt");
        write_solution(&forest, forest.value_minmax(), &path).unwrap();
        let (value, back) = read_solution(&g, &path).unwrap();
        assert_eq!(value, forest.value_minmax());
        assert_eq!(back, forest);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn text_round_trip_preserves_instances(seed in 0u64..1_000_000, n in 4usize..16, k in 1usize..4) {
                let spec = InstanceSpec::new(n, 0.6, k.min(n), seed);
                prop_assume!(spec.m() + 1 >= n);
                let (g, k) = generate(&spec).unwrap();
                let text = format_instance(&g, k);
                let (h, k2) = parse_instance(text.as_bytes()).unwrap();
                prop_assert_eq!(g, h);
                prop_assert_eq!(k, k2);
            }
        }
    }
}
