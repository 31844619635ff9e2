//! Planar geometry: georeferencing, pixel traversal and polyline clipping.
//!
//! Coordinates are plain map units. Rows grow southward from the north edge of
//! the grid (north-up rasters).

mod bresenham;
mod clip;

pub use bresenham::bresenham_line;
pub use clip::{clip_polyline, clip_segment};

use crate::error::{Error, Result};

/// Tolerance used for closed-box membership tests, in map units.
pub const BOX_EPS: f64 = 1e-9;

/// A point in map units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoCoord {
    pub x: f64,
    pub y: f64,
}

impl GeoCoord {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &GeoCoord) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Rounds both axes to `decimals` decimal places.
    pub fn quantized(&self, decimals: u32) -> GeoCoord {
        let scale = 10f64.powi(decimals as i32);
        GeoCoord::new(
            (self.x * scale).round() / scale,
            (self.y * scale).round() / scale,
        )
    }
}

/// A cell address in a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
}

impl PixelCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Axis-aligned box. Membership is closed: boundary points are inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        if !(min_x <= max_x && min_y <= max_y) {
            return Err(Error::Value(format!(
                "inverted box ({min_x}, {min_y}, {max_x}, {max_y})"
            )));
        }
        Ok(Self {
            min_x,
            min_y,
            max_x,
            max_y,
        })
    }

    pub fn contains(&self, c: &GeoCoord, eps: f64) -> bool {
        c.x >= self.min_x - eps
            && c.x <= self.max_x + eps
            && c.y >= self.min_y - eps
            && c.y <= self.max_y + eps
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn center(&self) -> GeoCoord {
        GeoCoord::new(
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }
}

/// An ordered chain of at least two points with no consecutive duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<GeoCoord>,
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicate points.
    pub fn new(points: Vec<GeoCoord>) -> Result<Self> {
        if let Some(bad) = points.iter().find(|c| !c.is_finite()) {
            return Err(Error::Value(format!(
                "non-finite coordinate ({}, {})",
                bad.x, bad.y
            )));
        }
        let mut deduped: Vec<GeoCoord> = Vec::with_capacity(points.len());
        for p in points {
            if deduped.last() != Some(&p) {
                deduped.push(p);
            }
        }
        if deduped.len() < 2 {
            return Err(Error::Validation(format!(
                "polyline needs at least 2 distinct points, got {}",
                deduped.len()
            )));
        }
        Ok(Self { points: deduped })
    }

    pub fn points(&self) -> &[GeoCoord] {
        &self.points
    }

    pub fn into_points(self) -> Vec<GeoCoord> {
        self.points
    }

    pub fn segments(&self) -> impl Iterator<Item = (GeoCoord, GeoCoord)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(&b)).sum()
    }

    pub fn bbox(&self) -> BBox {
        let first = self.points[0];
        let mut b = BBox {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for p in &self.points[1..] {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        b
    }
}

/// North-up georeferencing of an `n_rows` x `n_cols` grid.
///
/// `origin_x` is the west edge and `origin_y` the north edge of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_w: f64,
    pub pixel_h: f64,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl GeoTransform {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        pixel_w: f64,
        pixel_h: f64,
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self> {
        if !(origin_x.is_finite() && origin_y.is_finite()) {
            return Err(Error::Value("non-finite grid origin".into()));
        }
        if !(pixel_w > 0.0 && pixel_h > 0.0 && pixel_w.is_finite() && pixel_h.is_finite()) {
            return Err(Error::Value(format!(
                "pixel size must be positive, got {pixel_w} x {pixel_h}"
            )));
        }
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Value(format!(
                "grid must have at least one cell, got {n_rows} x {n_cols}"
            )));
        }
        Ok(Self {
            origin_x,
            origin_y,
            pixel_w,
            pixel_h,
            n_rows,
            n_cols,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn extent(&self) -> BBox {
        BBox {
            min_x: self.origin_x,
            min_y: self.origin_y - self.n_rows as f64 * self.pixel_h,
            max_x: self.origin_x + self.n_cols as f64 * self.pixel_w,
            max_y: self.origin_y,
        }
    }

    pub fn contains_pixel(&self, p: PixelCoord) -> bool {
        p.row < self.n_rows && p.col < self.n_cols
    }

    /// Row-major linear index of `p`.
    pub fn index(&self, p: PixelCoord) -> usize {
        p.row * self.n_cols + p.col
    }

    pub fn pixel_at(&self, index: usize) -> PixelCoord {
        PixelCoord::new(index / self.n_cols, index % self.n_cols)
    }

    /// Maps a coordinate to the pixel containing it.
    ///
    /// A coordinate on an edge shared by two pixels belongs to the one with the
    /// higher index; coordinates on the south or east boundary of the grid
    /// belong to the last row or column.
    pub fn coord_to_pixel(&self, c: GeoCoord) -> Result<PixelCoord> {
        let ext = self.extent();
        if !c.is_finite() || !ext.contains(&c, 0.0) {
            return Err(Error::OutOfExtent(format!(
                "coordinate ({}, {}) outside grid extent ({}, {}, {}, {})",
                c.x, c.y, ext.min_x, ext.min_y, ext.max_x, ext.max_y
            )));
        }
        let col = ((c.x - self.origin_x) / self.pixel_w).floor() as usize;
        let row = ((self.origin_y - c.y) / self.pixel_h).floor() as usize;
        Ok(PixelCoord::new(
            row.min(self.n_rows - 1),
            col.min(self.n_cols - 1),
        ))
    }

    pub fn pixel_to_bbox(&self, p: PixelCoord) -> Result<BBox> {
        if !self.contains_pixel(p) {
            return Err(Error::OutOfExtent(format!(
                "pixel ({}, {}) outside a {}x{} grid",
                p.row, p.col, self.n_rows, self.n_cols
            )));
        }
        let min_x = self.origin_x + p.col as f64 * self.pixel_w;
        let max_y = self.origin_y - p.row as f64 * self.pixel_h;
        Ok(BBox {
            min_x,
            min_y: max_y - self.pixel_h,
            max_x: min_x + self.pixel_w,
            max_y,
        })
    }

    /// Cells of the (2r+1) x (2r+1) window around `p`, truncated at the grid
    /// border, in row-major order.
    pub fn window(&self, p: PixelCoord, radius: usize) -> impl Iterator<Item = PixelCoord> {
        let r0 = p.row.saturating_sub(radius);
        let r1 = (p.row + radius).min(self.n_rows - 1);
        let c0 = p.col.saturating_sub(radius);
        let c1 = (p.col + radius).min(self.n_cols - 1);
        (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| PixelCoord::new(r, c)))
    }

    /// Bounding box of the window around `p`, clipped to the grid extent.
    pub fn window_bbox(&self, p: PixelCoord, radius: usize) -> Result<BBox> {
        let lo = PixelCoord::new(p.row.saturating_sub(radius), p.col.saturating_sub(radius));
        let hi = PixelCoord::new(
            (p.row + radius).min(self.n_rows - 1),
            (p.col + radius).min(self.n_cols - 1),
        );
        if !self.contains_pixel(p) {
            return Err(Error::OutOfExtent(format!(
                "pixel ({}, {}) outside a {}x{} grid",
                p.row, p.col, self.n_rows, self.n_cols
            )));
        }
        Ok(self.pixel_to_bbox(lo)?.union(&self.pixel_to_bbox(hi)?))
    }
}
