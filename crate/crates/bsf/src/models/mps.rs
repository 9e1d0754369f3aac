//! MPS text export for any of the built models, plus a reader for our own
//! output so round trips can be validated. Only files we wrote ourselves
//! are supported on the way back in.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::ModelError;
use crate::lp::{LinearProgram, RowSense, Sense, Variable};

/// Twelve significant digits; integers stay integer-shaped.
fn fmt_num(v: f64) -> String {
    if v == v.round() && v.abs() < 1e12 {
        format!("{}", v as i64)
    } else {
        format!("{:.11e}", v)
    }
}

/// Writes the program in MPS form with an OBJSENSE extension section and
/// INTORG/INTEND markers around integer columns.
pub fn write_mps(
    lp: &LinearProgram,
    integers: &[usize],
    name: &str,
    out: &mut impl Write,
) -> std::io::Result<()> {
    let is_int: Vec<bool> = {
        let mut v = vec![false; lp.num_vars()];
        for &j in integers {
            v[j] = true;
        }
        v
    };
    writeln!(out, "NAME          {name}")?;
    writeln!(out, "OBJSENSE")?;
    writeln!(
        out,
        "    {}",
        match lp.sense {
            Sense::Min => "MIN",
            Sense::Max => "MAX",
        }
    )?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N  COST")?;
    for i in 0..lp.num_rows() {
        let tag = match lp.rows[i].sense {
            RowSense::Le => 'L',
            RowSense::Eq => 'E',
            RowSense::Ge => 'G',
        };
        writeln!(out, " {tag}  {}", lp.row_name(i))?;
    }
    // Column-major entries.
    let mut col_entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (j, v) in lp.variables.iter().enumerate() {
        if v.objective != 0.0 {
            col_entries[j].push(("COST".into(), v.objective));
        }
    }
    for i in 0..lp.num_rows() {
        let rname = lp.row_name(i);
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, c) in &lp.rows[i].coeffs {
            *merged.entry(j).or_insert(0.0) += c;
        }
        for (j, c) in merged {
            if c != 0.0 {
                col_entries[j].push((rname.clone(), c));
            }
        }
    }
    writeln!(out, "COLUMNS")?;
    let mut marker = 0usize;
    let mut in_int = false;
    for j in 0..lp.num_vars() {
        if is_int[j] != in_int {
            let kind = if is_int[j] { "'INTORG'" } else { "'INTEND'" };
            writeln!(out, "    MARKER{marker:<24}'MARKER'                 {kind}")?;
            marker += 1;
            in_int = is_int[j];
        }
        let vname = lp.var_name(j);
        for (rname, c) in &col_entries[j] {
            writeln!(out, "    {vname:<10}{rname:<10}{}", fmt_num(*c))?;
        }
        if col_entries[j].is_empty() {
            // Keep the column visible even when empty.
            writeln!(out, "    {vname:<10}COST      0")?;
        }
    }
    if in_int {
        writeln!(out, "    MARKER{marker:<24}'MARKER'                 'INTEND'")?;
    }
    writeln!(out, "RHS")?;
    for i in 0..lp.num_rows() {
        if lp.rows[i].rhs != 0.0 {
            writeln!(out, "    RHS       {:<10}{}", lp.row_name(i), fmt_num(lp.rows[i].rhs))?;
        }
    }
    writeln!(out, "BOUNDS")?;
    for (j, v) in lp.variables.iter().enumerate() {
        let vname = lp.var_name(j);
        if v.lower == v.upper {
            writeln!(out, " FX BND       {vname:<10}{}", fmt_num(v.lower))?;
            continue;
        }
        if v.lower.is_infinite() {
            writeln!(out, " MI BND       {vname}")?;
        } else if v.lower != 0.0 {
            writeln!(out, " LO BND       {vname:<10}{}", fmt_num(v.lower))?;
        }
        if v.upper.is_finite() {
            writeln!(out, " UP BND       {vname:<10}{}", fmt_num(v.upper))?;
        }
    }
    writeln!(out, "ENDATA")?;
    Ok(())
}

/// Writes a model to `path`.
pub fn export_mps_file(
    lp: &LinearProgram,
    integers: &[usize],
    name: &str,
    path: &Path,
) -> Result<(), ModelError> {
    let mut f = std::fs::File::create(path)?;
    write_mps(lp, integers, name, &mut f)?;
    Ok(())
}

/// Reads a file produced by [`write_mps`] back into a program and its
/// integer-variable list.
pub fn read_mps(reader: impl Read) -> Result<(LinearProgram, Vec<usize>), ModelError> {
    enum Section {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Bounds,
    }
    let parse_err = |line: usize, msg: &str| ModelError::MpsParse {
        line,
        msg: msg.to_string(),
    };
    let mut lp = LinearProgram::new(Sense::Min);
    let mut section = Section::None;
    let mut row_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut var_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut integers = Vec::new();
    let mut in_int = false;

    let reader = BufReader::new(reader);
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        if !line.starts_with(' ') {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("NAME") => section = Section::None,
                Some("OBJSENSE") => section = Section::ObjSense,
                Some("ROWS") => section = Section::Rows,
                Some("COLUMNS") => section = Section::Columns,
                Some("RHS") => section = Section::Rhs,
                Some("BOUNDS") => section = Section::Bounds,
                Some("ENDATA") => break,
                _ => return Err(parse_err(lineno, "unknown section")),
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::None => {}
            Section::ObjSense => {
                lp.sense = match fields.first() {
                    Some(&"MIN") => Sense::Min,
                    Some(&"MAX") => Sense::Max,
                    _ => return Err(parse_err(lineno, "bad OBJSENSE")),
                };
            }
            Section::Rows => {
                let [tag, rname] = fields[..] else {
                    return Err(parse_err(lineno, "bad ROWS line"));
                };
                match tag {
                    "N" => {} // objective row
                    "L" | "G" | "E" => {
                        let sense = match tag {
                            "L" => RowSense::Le,
                            "G" => RowSense::Ge,
                            _ => RowSense::Eq,
                        };
                        let id = lp.rows.len();
                        lp.rows.push(crate::lp::Row {
                            coeffs: Vec::new(),
                            sense,
                            rhs: 0.0,
                            name: Some(rname.to_string()),
                        });
                        row_ids.insert(rname.to_string(), id);
                    }
                    _ => return Err(parse_err(lineno, "bad row tag")),
                }
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    in_int = fields[2] == "'INTORG'";
                    continue;
                }
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "bad COLUMNS line"));
                }
                let (vname, rname, val) = (fields[0], fields[1], fields[2]);
                let val: f64 = val
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad coefficient"))?;
                let var = *var_ids.entry(vname.to_string()).or_insert_with(|| {
                    let j = lp.variables.len();
                    lp.variables.push(Variable {
                        lower: 0.0,
                        upper: f64::INFINITY,
                        objective: 0.0,
                        name: Some(vname.to_string()),
                    });
                    if in_int {
                        integers.push(j);
                    }
                    j
                });
                if rname == "COST" {
                    lp.variables[var].objective = val;
                } else {
                    let &row = row_ids
                        .get(rname)
                        .ok_or_else(|| parse_err(lineno, "unknown row"))?;
                    if val != 0.0 {
                        lp.rows[row].coeffs.push((var, val));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "bad RHS line"));
                }
                let &row = row_ids
                    .get(fields[1])
                    .ok_or_else(|| parse_err(lineno, "unknown row"))?;
                lp.rows[row].rhs = fields[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad rhs"))?;
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(parse_err(lineno, "bad BOUNDS line"));
                }
                let &var = var_ids
                    .get(fields[2])
                    .ok_or_else(|| parse_err(lineno, "unknown variable"))?;
                let val = || -> Result<f64, ModelError> {
                    fields
                        .get(3)
                        .ok_or_else(|| parse_err(lineno, "missing bound value"))?
                        .parse()
                        .map_err(|_| parse_err(lineno, "bad bound value"))
                };
                match fields[0] {
                    "UP" => lp.variables[var].upper = val()?,
                    "LO" => lp.variables[var].lower = val()?,
                    "FX" => {
                        let v = val()?;
                        lp.variables[var].lower = v;
                        lp.variables[var].upper = v;
                    }
                    "MI" => lp.variables[var].lower = f64::NEG_INFINITY,
                    "PL" => lp.variables[var].upper = f64::INFINITY,
                    _ => return Err(parse_err(lineno, "bad bound tag")),
                }
            }
        }
    }
    Ok((lp, integers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::models::{build_cycle_minmax, build_flow_minmax, build_rmp};
    use crate::oracle::enumerate_dominant_trees;

    fn round_trip(lp: &LinearProgram, integers: &[usize]) -> (LinearProgram, Vec<usize>) {
        let mut buf = Vec::new();
        write_mps(lp, integers, "TEST", &mut buf).unwrap();
        read_mps(buf.as_slice()).unwrap()
    }

    fn assert_same_structure(a: &LinearProgram, b: &LinearProgram) {
        assert_eq!(a.sense, b.sense);
        assert_eq!(a.num_vars(), b.num_vars());
        assert_eq!(a.num_rows(), b.num_rows());
        for j in 0..a.num_vars() {
            assert_eq!(a.var_name(j), b.var_name(j));
            assert_eq!(a.variables[j].lower, b.variables[j].lower, "lower of {j}");
            assert_eq!(a.variables[j].upper, b.variables[j].upper, "upper of {j}");
            assert_eq!(a.variables[j].objective, b.variables[j].objective);
        }
        for i in 0..a.num_rows() {
            assert_eq!(a.rows[i].sense, b.rows[i].sense);
            assert_eq!(a.rows[i].rhs, b.rows[i].rhs);
            let canon = |r: &crate::lp::Row| {
                let mut m: BTreeMap<usize, f64> = BTreeMap::new();
                for &(j, c) in &r.coeffs {
                    *m.entry(j).or_insert(0.0) += c;
                }
                m.retain(|_, c| *c != 0.0);
                m
            };
            assert_eq!(canon(&a.rows[i]), canon(&b.rows[i]), "row {i}");
        }
    }

    fn path3() -> WeightedGraph {
        WeightedGraph::new(3, &[(0, 1, 2), (1, 2, 5)]).unwrap()
    }

    #[test]
    fn flow_model_round_trips() {
        let g = path3();
        let model = build_flow_minmax(&g, 2, 7).unwrap();
        let (lp2, ints2) = round_trip(&model.lp, &model.integers);
        assert_same_structure(&model.lp, &lp2);
        assert_eq!(model.integers, ints2);
    }

    #[test]
    fn cycle_model_column_count() {
        let g = path3();
        let k = 2;
        let model = build_cycle_minmax(&g, k);
        let mut buf = Vec::new();
        write_mps(&model.lp, &model.integers, "CYC", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // m*k assignment columns plus omega.
        for e in 0..g.m() {
            for i in 0..k {
                assert!(text.contains(&format!("x_{e}_{i}")));
            }
        }
        assert!(text.contains("omega"));
        let (lp2, _) = read_mps(text.as_bytes()).unwrap();
        assert_eq!(lp2.num_vars(), g.m() * k + 1);
    }

    #[test]
    fn partition_model_has_one_column_per_tree() {
        let k3 = WeightedGraph::new(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
        let pool = enumerate_dominant_trees(&k3, u64::MAX).unwrap();
        assert_eq!(pool.len(), 7);
        let model = build_rmp(&k3, &pool, 2, &[], 10);
        let mut buf = Vec::new();
        write_mps(&model.lp, &[], "RMP", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for i in 0..7 {
            assert!(text.contains(&format!("xT_{i}")));
        }
        let (lp2, _) = read_mps(text.as_bytes()).unwrap();
        assert_same_structure(&model.lp, &lp2);
    }

    #[test]
    fn fractional_values_survive() {
        // Dyadic values are exact within twelve significant digits.
        let mut lp = LinearProgram::new(Sense::Max);
        lp.add_named_variable(0.25, 1.75, 0.375, "frac");
        lp.add_row(vec![(0, 0.0625)], RowSense::Le, 0.5);
        let (lp2, _) = round_trip(&lp, &[]);
        assert_same_structure(&lp, &lp2);
    }
}
