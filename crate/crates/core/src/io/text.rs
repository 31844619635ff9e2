//! Line-oriented text formats: PBR sequences, per-cell representations and
//! road index dumps.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geo::{GeoCoord, PixelCoord};
use crate::index::{PbrSet, RoadHashGrid};
use crate::raster::RepGrid;
use crate::roads::RoadId;

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} {tok:?}")))
}

fn finite(v: f64, line: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(line, format!("non-finite value {v}")))
    }
}

/// One sequence per line: `row col n x1 y1 ... xn yn`.
pub fn write_pbr(set: &PbrSet) -> String {
    let mut out = String::new();
    for (p, seqs) in set.iter() {
        for seq in seqs {
            let _ = write!(out, "{} {} {}", p.row, p.col, seq.len());
            for c in seq {
                let _ = write!(out, " {} {}", c.x, c.y);
            }
            out.push('\n');
        }
    }
    out
}

pub fn read_pbr(text: &str) -> Result<PbrSet> {
    let mut set = PbrSet::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let row: usize = field(toks.next(), ln, "row")?;
        let col: usize = field(toks.next(), ln, "col")?;
        let n: usize = field(toks.next(), ln, "sequence length")?;
        if n == 0 {
            return Err(Error::parse(ln, "sequence length must be at least 1"));
        }
        let mut seq = Vec::with_capacity(n);
        for _ in 0..n {
            let x = finite(field(toks.next(), ln, "x")?, ln)?;
            let y = finite(field(toks.next(), ln, "y")?, ln)?;
            seq.push(GeoCoord::new(x, y));
        }
        if toks.next().is_some() {
            return Err(Error::parse(ln, format!("more than {n} coordinate pairs")));
        }
        set.push(PixelCoord::new(row, col), seq)?;
    }
    Ok(set)
}

/// CSV with header `row,col,v1..vk`, one line per cell, row-major.
pub fn write_reps(reps: &RepGrid) -> String {
    let mut out = String::from("row,col");
    for k in 1..=reps.dim {
        let _ = write!(out, ",v{k}");
    }
    out.push('\n');
    for r in 0..reps.n_rows {
        for c in 0..reps.n_cols {
            let _ = write!(out, "{r},{c}");
            for v in reps.get(PixelCoord::new(r, c)) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

/// Reads a representation CSV. Every cell of the implied grid must appear
/// exactly once.
pub fn read_reps(text: &str) -> Result<RepGrid> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "row" || cols[1] != "col" {
        return Err(Error::parse(1, "header must be row,col,v1,..."));
    }
    let dim = cols.len() - 2;

    let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').map(str::trim).collect();
        if toks.len() != dim + 2 {
            return Err(Error::parse(ln, format!("expected {} fields, found {}", dim + 2, toks.len())));
        }
        let r: usize = field(Some(toks[0]), ln, "row")?;
        let c: usize = field(Some(toks[1]), ln, "col")?;
        let vals = toks[2..]
            .iter()
            .map(|t| field::<f64>(Some(t), ln, "value").and_then(|v| finite(v, ln)))
            .collect::<Result<Vec<_>>>()?;
        rows.push((r, c, vals));
    }
    let n_rows = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let n_cols = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let mut grid = RepGrid::zeros(n_rows, n_cols, dim);
    let mut seen = vec![false; n_rows * n_cols];
    for (r, c, vals) in rows {
        let i = r * n_cols + c;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Validation(format!("cell ({r}, {c}) appears twice")));
        }
        grid.get_mut(PixelCoord::new(r, c)).copy_from_slice(&vals);
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Validation(format!(
            "cell ({}, {}) is missing",
            i / n_cols,
            i % n_cols
        )));
    }
    Ok(grid)
}

/// Road index dump: a `rows cols` header, then `row col id...` for every
/// non-empty cell.
pub fn write_index(index: &RoadHashGrid) -> String {
    let mut out = format!("{} {}\n", index.n_rows, index.n_cols);
    for (i, list) in index.lists().iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let _ = write!(out, "{} {}", i / index.n_cols, i % index.n_cols);
        for id in list {
            let _ = write!(out, " {id}");
        }
        out.push('\n');
    }
    out
}

pub fn read_index(text: &str) -> Result<RoadHashGrid> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let mut toks = header.split_whitespace();
    let n_rows: usize = field(toks.next(), 1, "row count")?;
    let n_cols: usize = field(toks.next(), 1, "column count")?;
    if toks.next().is_some() {
        return Err(Error::parse(1, "extra tokens in header"));
    }
    let mut lists: Vec<Vec<RoadId>> = vec![Vec::new(); n_rows * n_cols];
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let r: usize = field(toks.next(), ln, "row")?;
        let c: usize = field(toks.next(), ln, "col")?;
        if r >= n_rows || c >= n_cols {
            return Err(Error::parse(ln, format!("cell ({r}, {c}) outside {n_rows}x{n_cols}")));
        }
        for t in toks {
            lists[r * n_cols + c].push(field(Some(t), ln, "road id")?);
        }
    }
    RoadHashGrid::from_lists(n_rows, n_cols, lists)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_pbr_round_trip() {
        let s = write_pbr(&PbrSet::new());
        assert!(s.is_empty());
        assert!(read_pbr(&s).unwrap().is_empty());
    }

    #[test]
    fn one_sequence_is_seven_fields() {
        let mut set = PbrSet::new();
        set.push(PixelCoord::new(3, 4), vec![GeoCoord::new(1.5, 2.0), GeoCoord::new(0.1, -7.25)])
            .unwrap();
        let s = write_pbr(&set);
        assert_eq!(s.lines().count(), 1);
        assert_eq!(s.split_whitespace().count(), 7);
        assert_eq!(read_pbr(&s).unwrap(), set);
    }

    #[test]
    fn pbr_errors_carry_line_numbers() {
        let err = read_pbr("0 0 1 1 2\n0 0 2 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = read_pbr("0 0 1 1 2 9\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        assert!(read_pbr("0 0 0\n").is_err());
    }

    #[test]
    fn reps_round_trip_and_completeness() {
        let g = RepGrid::from_values(2, 1, 2, vec![0.5, -1.0, 3.25, 1e-9]).unwrap();
        let s = write_reps(&g);
        assert_eq!(s.lines().next(), Some("row,col,v1,v2"));
        assert_eq!(read_reps(&s).unwrap(), g);
        let missing: String = s.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert!(read_reps(&missing.replace("0,0", "1,1")).is_err());
    }

    #[test]
    fn index_round_trip() {
        let h = RoadHashGrid::from_lists(2, 2, vec![vec![3, 1], vec![], vec![], vec![2]]).unwrap();
        assert_eq!(read_index(&write_index(&h)).unwrap(), h);
    }
}
