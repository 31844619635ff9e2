//! ESRI ASCII grids (`.asc`) and plain-text band manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geo::GeoTransform;
use crate::raster::{BuiltupGrid, Land, RasterGrid};

pub const DEFAULT_NODATA: f64 = -9999.0;

/// A single-band grid as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct AsciiGrid {
    pub transform: GeoTransform,
    pub values: Vec<f64>,
    pub nodata: f64,
}

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<(f64, bool)>,
    yll: Option<(f64, bool)>,
    cellsize: Option<f64>,
    nodata: Option<f64>,
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} {tok:?}")))
}

pub fn read_ascii_grid(text: &str) -> Result<AsciiGrid> {
    let mut header = Header::default();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();

    while let Some(&(ln, line)) = lines.peek() {
        let mut toks = line.split_whitespace();
        let Some(key) = toks.next() else {
            lines.next();
            continue;
        };
        let key = key.to_ascii_lowercase();
        let is_header = matches!(
            key.as_str(),
            "ncols" | "nrows" | "xllcorner" | "xllcenter" | "yllcorner" | "yllcenter" | "cellsize" | "nodata_value"
        );
        if !is_header {
            break;
        }
        let val = toks
            .next()
            .ok_or_else(|| Error::parse(ln, format!("missing value for {key}")))?;
        if toks.next().is_some() {
            return Err(Error::parse(ln, format!("extra tokens after {key}")));
        }
        match key.as_str() {
            "ncols" => header.ncols = Some(parse_num(val, ln, "ncols")?),
            "nrows" => header.nrows = Some(parse_num(val, ln, "nrows")?),
            "xllcorner" => header.xll = Some((parse_num(val, ln, "xllcorner")?, false)),
            "xllcenter" => header.xll = Some((parse_num(val, ln, "xllcenter")?, true)),
            "yllcorner" => header.yll = Some((parse_num(val, ln, "yllcorner")?, false)),
            "yllcenter" => header.yll = Some((parse_num(val, ln, "yllcenter")?, true)),
            "cellsize" => header.cellsize = Some(parse_num(val, ln, "cellsize")?),
            _ => header.nodata = Some(parse_num(val, ln, "NODATA_value")?),
        }
        lines.next();
    }

    let first_data_line = lines.peek().map(|&(ln, _)| ln).unwrap_or(1);
    let missing = |k: &str| Error::parse(first_data_line, format!("header is missing {k}"));
    let ncols = header.ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = header.nrows.ok_or_else(|| missing("nrows"))?;
    let cellsize = header.cellsize.ok_or_else(|| missing("cellsize"))?;
    let (xll, x_center) = header.xll.ok_or_else(|| missing("xllcorner"))?;
    let (yll, y_center) = header.yll.ok_or_else(|| missing("yllcorner"))?;
    let nodata = header.nodata.unwrap_or(DEFAULT_NODATA);
    let x0 = if x_center { xll - cellsize / 2.0 } else { xll };
    let y0 = if y_center { yll - cellsize / 2.0 } else { yll };
    let transform = GeoTransform::new(x0, y0 + nrows as f64 * cellsize, cellsize, cellsize, nrows, ncols)
        .map_err(|e| Error::parse(first_data_line, e.to_string()))?;

    let mut values = Vec::with_capacity(nrows * ncols);
    let mut rows_read = 0;
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if rows_read == nrows {
            return Err(Error::parse(ln, "unexpected data after the last grid row"));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(parse_num::<f64>(tok, ln, "cell value")?);
        }
        let n = values.len() - before;
        if n != ncols {
            return Err(Error::parse(ln, format!("expected {ncols} values, found {n}")));
        }
        rows_read += 1;
    }
    if rows_read != nrows {
        return Err(Error::parse(
            text.lines().count().max(1),
            format!("expected {nrows} rows, found {rows_read}"),
        ));
    }
    Ok(AsciiGrid {
        transform,
        values,
        nodata,
    })
}

pub fn write_ascii_grid(grid: &AsciiGrid) -> Result<String> {
    let t = &grid.transform;
    if t.pixel_w != t.pixel_h {
        return Err(Error::Value(format!(
            "ASCII grids need square cells, got {} x {}",
            t.pixel_w, t.pixel_h
        )));
    }
    if grid.values.len() != t.n_cells() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a {}x{} grid",
            grid.values.len(),
            t.n_rows,
            t.n_cols
        )));
    }
    let mut out = String::new();
    let yll = t.origin_y - t.n_rows as f64 * t.pixel_h;
    let _ = writeln!(out, "ncols {}", t.n_cols);
    let _ = writeln!(out, "nrows {}", t.n_rows);
    let _ = writeln!(out, "xllcorner {}", t.origin_x);
    let _ = writeln!(out, "yllcorner {yll}");
    let _ = writeln!(out, "cellsize {}", t.pixel_w);
    let _ = writeln!(out, "NODATA_value {}", grid.nodata);
    for row in grid.values.chunks(t.n_cols) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn builtup_from_ascii(grid: AsciiGrid) -> Result<BuiltupGrid> {
    let cells = grid
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v == grid.nodata {
                Ok(Land::NoData)
            } else if v == 0.0 {
                Ok(Land::NonBuiltup)
            } else if v == 1.0 {
                Ok(Land::Builtup)
            } else {
                Err(Error::Value(format!(
                    "built-up grid cell {} (row {}, col {}) is {v}, expected 0, 1 or no-data",
                    i,
                    i / grid.transform.n_cols,
                    i % grid.transform.n_cols
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    BuiltupGrid::new(grid.transform, cells)
}

pub fn builtup_to_ascii(grid: &BuiltupGrid) -> AsciiGrid {
    AsciiGrid {
        transform: grid.transform,
        values: grid
            .cells()
            .iter()
            .map(|c| match c {
                Land::NonBuiltup => 0.0,
                Land::Builtup => 1.0,
                Land::NoData => DEFAULT_NODATA,
            })
            .collect(),
        nodata: DEFAULT_NODATA,
    }
}

pub fn read_builtup(text: &str) -> Result<BuiltupGrid> {
    builtup_from_ascii(read_ascii_grid(text)?)
}

pub fn write_builtup(grid: &BuiltupGrid) -> Result<String> {
    write_ascii_grid(&builtup_to_ascii(grid))
}

pub fn read_builtup_file(path: &Path) -> Result<BuiltupGrid> {
    read_builtup(&fs::read_to_string(path)?)
}

/// Reads a manifest listing one band file per line (relative to the manifest)
/// and assembles the bands into one raster.
pub fn read_raster_manifest(path: &Path) -> Result<RasterGrid> {
    let text = fs::read_to_string(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut raster: Option<RasterGrid> = None;
    for (i, line) in text.lines().enumerate() {
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        let band = read_ascii_grid(&fs::read_to_string(dir.join(name))?)?;
        match raster.as_mut() {
            None => raster = Some(RasterGrid::new(band.transform, vec![band.values], band.nodata)?),
            Some(r) => {
                let same = r.transform.n_rows == band.transform.n_rows
                    && r.transform.n_cols == band.transform.n_cols
                    && r.transform.pixel_w == band.transform.pixel_w
                    && (r.transform.origin_x - band.transform.origin_x).abs() <= 1e-9 * r.transform.pixel_w
                    && (r.transform.origin_y - band.transform.origin_y).abs() <= 1e-9 * r.transform.pixel_h;
                if !same {
                    return Err(Error::DimensionMismatch(format!(
                        "band file {name} (manifest line {}) disagrees with the first band",
                        i + 1
                    )));
                }
                let values = band
                    .values
                    .into_iter()
                    .map(|v| if v == band.nodata { r.nodata } else { v })
                    .collect();
                r.push_band(values)?;
            }
        }
    }
    raster.ok_or_else(|| Error::parse(1, "raster manifest lists no bands"))
}

/// Writes each band as `<stem>_b<k>.asc` next to the manifest and the manifest
/// itself. Returns the band file paths.
pub fn write_raster_manifest(path: &Path, raster: &RasterGrid) -> Result<Vec<PathBuf>> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("raster");
    let mut manifest = String::new();
    let mut written = Vec::new();
    for (k, band) in raster.bands().iter().enumerate() {
        let name = format!("{stem}_b{}.asc", k + 1);
        let text = write_ascii_grid(&AsciiGrid {
            transform: raster.transform,
            values: band.clone(),
            nodata: raster.nodata,
        })?;
        let band_path = dir.join(&name);
        fs::write(&band_path, text)?;
        manifest.push_str(&name);
        manifest.push('\n');
        written.push(band_path);
    }
    fs::write(path, manifest)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_grid() {
        let text = "ncols 2\nnrows 2\nxllcorner 10\nyllcorner 20\ncellsize 0.5\nNODATA_value -9999\n0 0\n0 0\n";
        let g = read_ascii_grid(text).unwrap();
        assert_eq!(g.values, vec![0.0; 4]);
        assert_eq!(g.transform, GeoTransform::new(10.0, 21.0, 0.5, 0.5, 2, 2).unwrap());
    }

    #[test]
    fn short_row_is_parse_error() {
        let text = "ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0\n0 0 0\n";
        assert!(matches!(read_ascii_grid(text), Err(Error::Parse { line: 6, .. })));
    }

    #[test]
    fn trailing_garbage_reported_with_line() {
        let text = "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n5\n\n7\n";
        assert!(matches!(read_ascii_grid(text), Err(Error::Parse { line: 8, .. })));
        let text = "ncols 1\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n5\n";
        assert!(matches!(read_ascii_grid(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn non_binary_builtup_rejected() {
        let text = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -1\n1 2\n";
        assert!(matches!(read_builtup(text), Err(Error::Value(_))));
        let text = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -1\n1 -1\n";
        let g = read_builtup(text).unwrap();
        assert_eq!(g.cells(), &[Land::Builtup, Land::NoData]);
    }

    #[test]
    fn center_registration() {
        let text = "NCOLS 1\nNROWS 1\nXLLCENTER 0.5\nYLLCENTER 0.5\nCELLSIZE 1\n3\n";
        let g = read_ascii_grid(text).unwrap();
        assert_eq!(g.transform.origin_x, 0.0);
        assert_eq!(g.transform.origin_y, 1.0);
    }
}
