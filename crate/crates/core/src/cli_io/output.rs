//! Diagnostics CSV, study tables and text field snapshots.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::discrete_ops::{EdgeField, NodeField};
use crate::error::{Error, Result};
use crate::grid::StaggeredGrid;
use crate::rothe::StepDiagnostics;

pub const DIAGNOSTICS_COLUMNS: [&str; 19] = [
    "step",
    "t",
    "norm_B_L2",
    "norm_curlB_L2",
    "norm_divB_L2",
    "lemma6_lhs",
    "norm_xi_L2",
    "norm_xi_L1",
    "norm_grad_xi_L2",
    "norm_xi_L4_G2",
    "norm_xi_L5_G2",
    "lemma7_lhs",
    "weighted_grad",
    "lq_1",
    "lq_1p1",
    "lq_1p2",
    "joule_total",
    "lin_iters",
    "newton_iters",
];

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Writes a header and string rows as CSV.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn diagnostics_row(d: &StepDiagnostics) -> Vec<String> {
    let mut r = vec![d.step.to_string()];
    r.extend(
        [
            d.t,
            d.norm_b_l2,
            d.norm_curl_b_l2,
            d.norm_div_b_l2,
            d.lemma6_lhs,
            d.norm_xi_l2,
            d.norm_xi_l1,
            d.norm_grad_xi_l2,
            d.norm_xi_l4_g2,
            d.norm_xi_l5_g2,
            d.lemma7_lhs,
            d.weighted_grad,
            d.lq[0],
            d.lq[1],
            d.lq[2],
            d.joule_total,
        ]
        .map(fmt_float),
    );
    r.push(d.lin_iters.to_string());
    r.push(d.newton_iters.to_string());
    r
}

pub fn write_diagnostics_csv(path: &Path, rows: &[StepDiagnostics]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows.iter().map(diagnostics_row).collect();
    write_table(path, &DIAGNOSTICS_COLUMNS, &rows)
}

pub const SNAPSHOT_ORDERING: &str = "lexicographic by direction,k,j,i";

/// Fields read back from a snapshot file.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotData {
    pub cells: [usize; 3],
    pub extents: [f64; 3],
    pub spacing: [f64; 3],
    pub t: f64,
    pub node_count: usize,
    pub edge_count: usize,
    pub b: Vec<f64>,
    pub xi: Vec<f64>,
}

fn write_values(w: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    for chunk in values.chunks(8) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Text snapshot; values use the shortest round-tripping representation.
pub fn write_snapshot(path: &Path, grid: &StaggeredGrid, b: &EdgeField, xi: &NodeField, t: f64) -> Result<()> {
    b.check(grid)?;
    xi.check(grid)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let [nx, ny, nz] = grid.cells();
    let [lx, ly, lz] = grid.extents();
    let [hx, hy, hz] = grid.spacing();
    let body = (|| -> std::io::Result<()> {
        writeln!(w, "# magheat snapshot")?;
        writeln!(w, "cells {nx} {ny} {nz}")?;
        writeln!(w, "extents {lx:e} {ly:e} {lz:e}")?;
        writeln!(w, "spacing {hx:e} {hy:e} {hz:e}")?;
        writeln!(w, "t {t:e}")?;
        writeln!(w, "node_count {}", grid.node_count())?;
        writeln!(w, "edge_count {}", grid.edge_count())?;
        writeln!(w, "ordering {SNAPSHOT_ORDERING}")?;
        writeln!(w, "field B edges {}", b.len())?;
        write_values(&mut w, b)?;
        writeln!(w, "field xi nodes {}", xi.len())?;
        write_values(&mut w, xi)?;
        w.flush()
    })();
    body.map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {msg}", path.display()))
}

fn header_line<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str, path: &Path) -> Result<Vec<String>> {
    let line = lines
        .next()
        .ok_or_else(|| parse_err(path, format!("missing '{key}' line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(parse_err(path, format!("expected '{key}', found '{line}'")));
    }
    Ok(parts.map(str::to_string).collect())
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotData> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let nums = |v: Vec<String>| -> Result<Vec<f64>> {
        v.iter()
            .map(|s| s.parse::<f64>().map_err(|e| parse_err(path, format!("{s}: {e}"))))
            .collect()
    };
    let ints = |v: Vec<String>| -> Result<Vec<usize>> {
        v.iter()
            .map(|s| s.parse::<usize>().map_err(|e| parse_err(path, format!("{s}: {e}"))))
            .collect()
    };
    let three = |v: Vec<f64>| -> Result<[f64; 3]> { v.try_into().map_err(|_| parse_err(path, "expected 3 values")) };
    let c = ints(header_line(&mut lines, "cells", path)?)?;
    let cells: [usize; 3] = c.try_into().map_err(|_| parse_err(path, "expected 3 cell counts"))?;
    let extents = three(nums(header_line(&mut lines, "extents", path)?)?)?;
    let spacing = three(nums(header_line(&mut lines, "spacing", path)?)?)?;
    let t = nums(header_line(&mut lines, "t", path)?)?
        .first()
        .copied()
        .ok_or_else(|| parse_err(path, "missing t"))?;
    let node_count = ints(header_line(&mut lines, "node_count", path)?)?
        .first()
        .copied()
        .ok_or_else(|| parse_err(path, "node_count"))?;
    let edge_count = ints(header_line(&mut lines, "edge_count", path)?)?
        .first()
        .copied()
        .ok_or_else(|| parse_err(path, "edge_count"))?;
    let ordering = header_line(&mut lines, "ordering", path)?.join(" ");
    if ordering != SNAPSHOT_ORDERING {
        return Err(parse_err(path, format!("unsupported ordering '{ordering}'")));
    }
    let mut field = |name: &str, count_expected: usize| -> Result<Vec<f64>> {
        let h = header_line(&mut lines, "field", path)?;
        if h.first().map(String::as_str) != Some(name) {
            return Err(parse_err(path, format!("expected field {name}")));
        }
        let count: usize = h
            .get(2)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(path, format!("field {name}: missing count")))?;
        if count != count_expected {
            return Err(parse_err(
                path,
                format!("field {name}: count {count} != {count_expected}"),
            ));
        }
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let line = lines
                .next()
                .ok_or_else(|| parse_err(path, format!("field {name}: truncated")))?;
            for s in line.split_whitespace() {
                out.push(s.parse::<f64>().map_err(|e| parse_err(path, format!("{s}: {e}")))?);
            }
        }
        if out.len() != count {
            return Err(parse_err(path, format!("field {name}: too many values")));
        }
        Ok(out)
    };
    let b = field("B", edge_count)?;
    let xi = field("xi", node_count)?;
    Ok(SnapshotData {
        cells,
        extents,
        spacing,
        t,
        node_count,
        edge_count,
        b,
        xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxFace;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn snapshot_round_trip_is_bitwise() {
        let dir = std::env::temp_dir().join(format!("magheat-snap-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.txt");
        let g = StaggeredGrid::build([1.0, 2.0, 0.5], [2, 3, 2], &[BoxFace::ZMinus]).unwrap();
        let b = EdgeField((0..g.edge_count()).map(|i| (i as f64).sin() / 3.0 - 1e-300).collect());
        let mut xi = NodeField((0..g.node_count()).map(|i| (i as f64 * 0.7).cos() * 1e10).collect());
        xi[0] = -0.0;
        write_snapshot(&path, &g, &b, &xi, 0.1 + 0.2).unwrap();
        let s = read_snapshot(&path).unwrap();
        assert_eq!(s.node_count, g.node_count());
        assert_eq!(s.t.to_bits(), (0.1f64 + 0.2).to_bits());
        assert!(s.b.iter().zip(b.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(s.xi.iter().zip(xi.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        fs::remove_dir_all(&dir).unwrap();
    }
}
