//! In-memory grids: continuous rasters, binary built-up maps and per-cell
//! representation vectors.

use crate::error::{Error, Result};
use crate::geo::{GeoTransform, PixelCoord};

/// State of one cell of a built-up map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Land {
    NonBuiltup,
    Builtup,
    NoData,
}

impl Land {
    pub fn from_bool(built: bool) -> Self {
        if built {
            Land::Builtup
        } else {
            Land::NonBuiltup
        }
    }

    pub fn is_builtup(self) -> bool {
        self == Land::Builtup
    }

    pub fn is_valid(self) -> bool {
        self != Land::NoData
    }

    /// 1 for built-up, 0 otherwise (no-data included).
    pub fn indicator(self) -> f64 {
        if self.is_builtup() {
            1.0
        } else {
            0.0
        }
    }
}

/// Binary built-up map on a georeferenced grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltupGrid {
    pub transform: GeoTransform,
    cells: Vec<Land>,
}

impl BuiltupGrid {
    pub fn new(transform: GeoTransform, cells: Vec<Land>) -> Result<Self> {
        if cells.len() != transform.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {}x{} grid",
                cells.len(),
                transform.n_rows,
                transform.n_cols
            )));
        }
        Ok(Self { transform, cells })
    }

    pub fn filled(transform: GeoTransform, state: Land) -> Self {
        Self {
            cells: vec![state; transform.n_cells()],
            transform,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.transform.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.transform.n_cols
    }

    pub fn cells(&self) -> &[Land] {
        &self.cells
    }

    pub fn get(&self, p: PixelCoord) -> Land {
        self.cells[self.transform.index(p)]
    }

    /// State at a signed offset from `p`; cells outside the grid read as
    /// no-data.
    pub fn get_offset(&self, p: PixelCoord, dr: isize, dc: isize) -> Land {
        let r = p.row as isize + dr;
        let c = p.col as isize + dc;
        if r < 0 || c < 0 || r >= self.n_rows() as isize || c >= self.n_cols() as isize {
            return Land::NoData;
        }
        self.cells[r as usize * self.n_cols() + c as usize]
    }

    pub fn set(&mut self, p: PixelCoord, state: Land) {
        let i = self.transform.index(p);
        self.cells[i] = state;
    }

    pub fn builtup_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_builtup()).count()
    }

    pub fn valid_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_valid()).count()
    }

    pub fn ensure_aligned(&self, other: &BuiltupGrid) -> Result<()> {
        ensure_same_shape(&self.transform, &other.transform)
    }
}

pub(crate) fn ensure_same_shape(a: &GeoTransform, b: &GeoTransform) -> Result<()> {
    if a.n_rows != b.n_rows || a.n_cols != b.n_cols {
        return Err(Error::DimensionMismatch(format!(
            "grid {}x{} vs {}x{}",
            a.n_rows, a.n_cols, b.n_rows, b.n_cols
        )));
    }
    Ok(())
}

/// Multi-band continuous raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub transform: GeoTransform,
    bands: Vec<Vec<f64>>,
    pub nodata: f64,
}

impl RasterGrid {
    pub fn new(transform: GeoTransform, bands: Vec<Vec<f64>>, nodata: f64) -> Result<Self> {
        let mut grid = Self {
            transform,
            bands: Vec::with_capacity(bands.len()),
            nodata,
        };
        for band in bands {
            grid.push_band(band)?;
        }
        Ok(grid)
    }

    pub fn push_band(&mut self, band: Vec<f64>) -> Result<()> {
        if band.len() != self.transform.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "band of {} values for a {}x{} grid",
                band.len(),
                self.transform.n_rows,
                self.transform.n_cols
            )));
        }
        self.bands.push(band);
        Ok(())
    }

    pub fn n_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn band(&self, i: usize) -> &[f64] {
        &self.bands[i]
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata || v.is_nan()
    }

    /// Per-band min-max scaling to [0, 1]. No-data cells and constant bands
    /// map to 0.
    pub fn normalized(&self) -> RasterGrid {
        let bands = self
            .bands
            .iter()
            .map(|band| {
                let valid = band.iter().copied().filter(|v| !self.is_nodata(*v));
                let (lo, hi) = valid.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
                let span = hi - lo;
                band.iter()
                    .map(|&v| {
                        if self.is_nodata(v) || !(span > 0.0) {
                            0.0
                        } else {
                            (v - lo) / span
                        }
                    })
                    .collect()
            })
            .collect();
        RasterGrid {
            transform: self.transform,
            bands,
            nodata: self.nodata,
        }
    }
}

/// Fixed-length vector per grid cell, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RepGrid {
    pub n_rows: usize,
    pub n_cols: usize,
    pub dim: usize,
    values: Vec<f64>,
}

impl RepGrid {
    pub fn zeros(n_rows: usize, n_cols: usize, dim: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            dim,
            values: vec![0.0; n_rows * n_cols * dim],
        }
    }

    pub fn from_values(n_rows: usize, n_cols: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {}x{} cells of dimension {}",
                values.len(),
                n_rows,
                n_cols,
                dim
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            dim,
            values,
        })
    }

    pub fn get(&self, p: PixelCoord) -> &[f64] {
        let i = (p.row * self.n_cols + p.col) * self.dim;
        &self.values[i..i + self.dim]
    }

    pub fn get_mut(&mut self, p: PixelCoord) -> &mut [f64] {
        let i = (p.row * self.n_cols + p.col) * self.dim;
        &mut self.values[i..i + self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ensure_shape(&self, t: &GeoTransform) -> Result<()> {
        if self.n_rows != t.n_rows || self.n_cols != t.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "representation grid {}x{} vs grid {}x{}",
                self.n_rows, self.n_cols, t.n_rows, t.n_cols
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_handles_constant_and_nodata() {
        let t = GeoTransform::new(0.0, 2.0, 1.0, 1.0, 2, 2).unwrap();
        let r = RasterGrid::new(t, vec![vec![2.0, 4.0, -9999.0, 6.0], vec![3.0; 4]], -9999.0).unwrap();
        let n = r.normalized();
        assert_eq!(n.band(0), &[0.0, 0.5, 0.0, 1.0]);
        assert_eq!(n.band(1), &[0.0; 4]);
    }

    #[test]
    fn offsets_outside_read_nodata() {
        let t = GeoTransform::new(0.0, 2.0, 1.0, 1.0, 2, 2).unwrap();
        let g = BuiltupGrid::filled(t, Land::Builtup);
        assert_eq!(g.get_offset(PixelCoord::new(0, 0), -1, 0), Land::NoData);
        assert_eq!(g.get_offset(PixelCoord::new(0, 0), 1, 1), Land::Builtup);
    }

    #[test]
    fn band_length_checked() {
        let t = GeoTransform::new(0.0, 2.0, 1.0, 1.0, 2, 2).unwrap();
        assert!(RasterGrid::new(t, vec![vec![0.0; 3]], -1.0).is_err());
    }
}
