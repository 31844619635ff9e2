//! Per-pixel road lookup table and position based representation (PBR)
//! extraction.
//!
//! Building the table walks every road segment with Bresenham's algorithm
//! between the pixels of its endpoints and records the road id in each visited
//! cell. The exact set of cells whose closed box the segment touches is added
//! as well, so a road is never missing from a cell it passes through. PBR
//! extraction then only clips the roads listed around each pixel instead of
//! every road in the network.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{bresenham_line, clip_polyline, GeoCoord, GeoTransform, PixelCoord, Polyline};
use crate::roads::{RoadId, RoadNetwork};

/// Default cap on PBR sequence length for a Moore neighbourhood of radius 1.
pub const DEFAULT_MAX_PBR_LEN: usize = 18;

/// How to treat road coordinates outside the grid extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtentPolicy {
    #[default]
    Error,
    /// Clip roads to the grid extent and index what remains.
    Clip,
}

/// Sorted, duplicate-free road id lists for every cell of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadHashGrid {
    pub n_rows: usize,
    pub n_cols: usize,
    lists: Vec<Vec<RoadId>>,
}

impl RoadHashGrid {
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            lists: vec![Vec::new(); n_rows * n_cols],
        }
    }

    pub fn from_lists(n_rows: usize, n_cols: usize, mut lists: Vec<Vec<RoadId>>) -> Result<Self> {
        if lists.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{} lists for a {}x{} grid",
                lists.len(),
                n_rows,
                n_cols
            )));
        }
        for l in &mut lists {
            l.sort_unstable();
            l.dedup();
        }
        Ok(Self {
            n_rows,
            n_cols,
            lists,
        })
    }

    pub fn get(&self, p: PixelCoord) -> &[RoadId] {
        &self.lists[p.row * self.n_cols + p.col]
    }

    pub fn lists(&self) -> &[Vec<RoadId>] {
        &self.lists
    }

    fn insert(&mut self, p: PixelCoord, id: RoadId) {
        let list = &mut self.lists[p.row * self.n_cols + p.col];
        if let Err(pos) = list.binary_search(&id) {
            list.insert(pos, id);
        }
    }

    /// Row-major presence mask: true where at least one road is listed.
    pub fn presence(&self) -> Vec<bool> {
        self.lists.iter().map(|l| !l.is_empty()).collect()
    }

    pub fn nonempty_count(&self) -> usize {
        self.lists.iter().filter(|l| !l.is_empty()).count()
    }
}

// Slack, in pixel units, when deciding whether a segment touches a cell.
const COVER_SLACK: f64 = 1e-7;

/// Cells whose closed box the segment `a -> b` touches.
fn segment_cover(a: GeoCoord, b: GeoCoord, gt: &GeoTransform, out: &mut Vec<PixelCoord>) {
    let (u0, v0) = ((a.x - gt.origin_x) / gt.pixel_w, (gt.origin_y - a.y) / gt.pixel_h);
    let (u1, v1) = ((b.x - gt.origin_x) / gt.pixel_w, (gt.origin_y - b.y) / gt.pixel_h);
    let (umin, umax) = (u0.min(u1), u0.max(u1));
    let last_col = gt.n_cols as f64 - 1.0;
    let last_row = gt.n_rows as f64 - 1.0;
    let c_lo = (umin - COVER_SLACK).floor().clamp(0.0, last_col) as usize;
    let c_hi = (umax + COVER_SLACK).floor().clamp(0.0, last_col) as usize;
    let du = u1 - u0;

    for col in c_lo..=c_hi {
        let (vmin, vmax) = if du.abs() < f64::EPSILON {
            (v0.min(v1), v0.max(v1))
        } else {
            let s_lo = (col as f64).max(umin);
            let s_hi = (col as f64 + 1.0).min(umax);
            let va = v0 + (s_lo - u0) / du * (v1 - v0);
            let vb = v0 + (s_hi - u0) / du * (v1 - v0);
            (va.min(vb), va.max(vb))
        };
        let r_lo = (vmin - COVER_SLACK).floor().clamp(0.0, last_row) as usize;
        let r_hi = (vmax + COVER_SLACK).floor().clamp(0.0, last_row) as usize;
        out.extend((r_lo..=r_hi).map(|row| PixelCoord::new(row, col)));
    }
}

/// Builds the per-pixel road lookup table.
pub fn build_road_index(
    roads: &RoadNetwork,
    gt: &GeoTransform,
    policy: ExtentPolicy,
) -> Result<RoadHashGrid> {
    let mut index = RoadHashGrid::empty(gt.n_rows, gt.n_cols);
    let extent = gt.extent();
    let mut cells = Vec::new();

    for road in roads.roads() {
        let pieces = match policy {
            ExtentPolicy::Error => vec![road.geometry.clone()],
            ExtentPolicy::Clip => clip_polyline(&road.geometry, &extent),
        };
        for piece in &pieces {
            for (a, b) in piece.segments() {
                let pa = gt.coord_to_pixel(a)?;
                let pb = gt.coord_to_pixel(b)?;
                cells.clear();
                cells.extend(bresenham_line(pa, pb));
                segment_cover(a, b, gt, &mut cells);
                for &p in &cells {
                    index.insert(p, road.id);
                }
            }
        }
    }
    Ok(index)
}

/// Neighbourhood settings for PBR extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PbrConfig {
    /// Moore radius of the neighbourhood.
    pub radius: usize,
    /// Sequences longer than this are truncated to their first points.
    pub max_len: usize,
}

impl Default for PbrConfig {
    fn default() -> Self {
        Self {
            radius: 1,
            max_len: DEFAULT_MAX_PBR_LEN,
        }
    }
}

/// A road piece clipped to a pixel neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub road: RoadId,
    pub points: Vec<GeoCoord>,
}

/// Coordinate sequences per pixel, ordered by pixel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PbrSet {
    records: BTreeMap<PixelCoord, Vec<Vec<GeoCoord>>>,
}

impl PbrSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sequence for `pixel`. Empty sequences are rejected.
    pub fn push(&mut self, pixel: PixelCoord, seq: Vec<GeoCoord>) -> Result<()> {
        if seq.is_empty() {
            return Err(Error::EmptySequence);
        }
        self.records.entry(pixel).or_default().push(seq);
        Ok(())
    }

    pub fn get(&self, pixel: PixelCoord) -> Option<&[Vec<GeoCoord>]> {
        self.records.get(&pixel).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (PixelCoord, &[Vec<GeoCoord>])> {
        self.records.iter().map(|(p, s)| (*p, s.as_slice()))
    }

    /// Every sequence, in pixel order.
    pub fn sequences(&self) -> impl Iterator<Item = &Vec<GeoCoord>> {
        self.records.values().flatten()
    }

    /// Number of pixels with at least one sequence.
    pub fn n_pixels(&self) -> usize {
        self.records.len()
    }

    pub fn n_sequences(&self) -> usize {
        self.records.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn pixel_fragments(
    p: PixelCoord,
    index: &RoadHashGrid,
    roads: &RoadNetwork,
    gt: &GeoTransform,
    cfg: PbrConfig,
) -> Result<Vec<Fragment>> {
    let mut ids: Vec<RoadId> = gt
        .window(p, cfg.radius)
        .flat_map(|q| index.get(q).iter().copied())
        .collect();
    if ids.is_empty() {
        return Ok(Vec::new());
    }
    ids.sort_unstable();
    ids.dedup();

    let bbox = gt.window_bbox(p, cfg.radius)?;
    let mut out = Vec::new();
    for id in ids {
        let road = roads.get(id).ok_or_else(|| {
            Error::Validation(format!("road id {id} in the index is not in the network"))
        })?;
        for piece in clip_polyline(&road.geometry, &bbox) {
            let mut points = piece.into_points();
            if points.len() > cfg.max_len {
                warn!(
                    "truncating PBR sequence of road {id} at pixel ({}, {}) from {} to {} points",
                    p.row,
                    p.col,
                    points.len(),
                    cfg.max_len
                );
                points.truncate(cfg.max_len);
            }
            out.push(Fragment { road: id, points });
        }
    }
    Ok(out)
}

/// Clipped road fragments for every pixel that has any, tagged with their
/// road id. Per pixel, fragments are ordered by road id and then along the
/// road.
pub fn generate_fragments(
    index: &RoadHashGrid,
    roads: &RoadNetwork,
    gt: &GeoTransform,
    cfg: PbrConfig,
) -> Result<BTreeMap<PixelCoord, Vec<Fragment>>> {
    if index.n_rows != gt.n_rows || index.n_cols != gt.n_cols {
        return Err(Error::DimensionMismatch(format!(
            "index {}x{} vs grid {}x{}",
            index.n_rows, index.n_cols, gt.n_rows, gt.n_cols
        )));
    }
    if cfg.max_len == 0 {
        return Err(Error::Config("maximum PBR length must be at least 1".into()));
    }
    let per_pixel: Vec<(PixelCoord, Vec<Fragment>)> = (0..gt.n_cells())
        .into_par_iter()
        .map(|i| {
            let p = gt.pixel_at(i);
            pixel_fragments(p, index, roads, gt, cfg).map(|f| (p, f))
        })
        .collect::<Result<_>>()?;
    Ok(per_pixel.into_iter().filter(|(_, f)| !f.is_empty()).collect())
}

/// Position based representation sequences for every pixel.
pub fn generate_pbr(
    index: &RoadHashGrid,
    roads: &RoadNetwork,
    gt: &GeoTransform,
    cfg: PbrConfig,
) -> Result<PbrSet> {
    let mut set = PbrSet::new();
    for (p, frags) in generate_fragments(index, roads, gt, cfg)? {
        for f in frags {
            set.push(p, f.points)?;
        }
    }
    Ok(set)
}

/// Convenience wrapper running both stages.
pub fn pbr_from_roads(
    roads: &RoadNetwork,
    gt: &GeoTransform,
    cfg: PbrConfig,
    policy: ExtentPolicy,
) -> Result<(RoadHashGrid, PbrSet)> {
    let index = build_road_index(roads, gt, policy)?;
    let pbr = generate_pbr(&index, roads, gt, cfg)?;
    Ok((index, pbr))
}

/// Returns the polyline pieces of a road inside the grid extent.
pub fn clip_to_extent(line: &Polyline, gt: &GeoTransform) -> Vec<Polyline> {
    clip_polyline(line, &gt.extent())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roads::Road;

    fn gt(n: usize) -> GeoTransform {
        GeoTransform::new(0.0, n as f64, 1.0, 1.0, n, n).unwrap()
    }

    fn line(points: &[(f64, f64)]) -> Polyline {
        Polyline::new(points.iter().map(|&(x, y)| GeoCoord::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn no_roads_gives_empty_lists() {
        let h = build_road_index(&RoadNetwork::default(), &gt(4), ExtentPolicy::Error).unwrap();
        assert_eq!(h.nonempty_count(), 0);
    }

    #[test]
    fn horizontal_road_fills_one_row() {
        // row 1 spans y in [2, 3] on a 4x4 grid with north edge y = 4
        let roads = RoadNetwork::from_polylines(vec![line(&[(0.2, 2.5), (2.7, 2.5)])]);
        let h = build_road_index(&roads, &gt(4), ExtentPolicy::Error).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expect: &[RoadId] = if r == 1 && c <= 2 { &[0] } else { &[] };
                assert_eq!(h.get(PixelCoord::new(r, c)), expect, "({r}, {c})");
            }
        }
    }

    #[test]
    fn crossing_roads_listed_once_each() {
        let roads = RoadNetwork::new(vec![
            Road { id: 7, geometry: line(&[(1.1, 1.5), (1.9, 1.5), (1.9, 1.2), (1.2, 1.2)]) },
            Road { id: 3, geometry: line(&[(1.5, 1.1), (1.5, 1.9)]) },
        ])
        .unwrap();
        let h = build_road_index(&roads, &gt(4), ExtentPolicy::Error).unwrap();
        assert_eq!(h.get(PixelCoord::new(2, 1)), &[3, 7]);
    }

    #[test]
    fn out_of_extent_policy() {
        let roads = RoadNetwork::from_polylines(vec![line(&[(-1.0, 2.5), (2.5, 2.5)])]);
        assert!(matches!(
            build_road_index(&roads, &gt(4), ExtentPolicy::Error),
            Err(Error::OutOfExtent(_))
        ));
        let h = build_road_index(&roads, &gt(4), ExtentPolicy::Clip).unwrap();
        assert_eq!(h.get(PixelCoord::new(1, 0)), &[0]);
        assert_eq!(h.get(PixelCoord::new(1, 2)), &[0]);
    }

    #[test]
    fn two_roads_give_two_sequences() {
        let roads = RoadNetwork::from_polylines(vec![
            line(&[(0.0, 2.5), (4.0, 2.5)]),
            line(&[(2.5, 0.0), (2.5, 4.0)]),
        ]);
        let (_, pbr) = pbr_from_roads(&roads, &gt(4), PbrConfig::default(), ExtentPolicy::Error).unwrap();
        assert_eq!(pbr.get(PixelCoord::new(1, 1)).unwrap().len(), 2);
    }

    #[test]
    fn straight_road_endpoints_on_neighbourhood_boundary() {
        let roads = RoadNetwork::from_polylines(vec![line(&[(0.0, 2.3), (5.0, 2.6)])]);
        let g = gt(5);
        let (_, pbr) = pbr_from_roads(&roads, &g, PbrConfig::default(), ExtentPolicy::Error).unwrap();
        let seqs = pbr.get(PixelCoord::new(2, 2)).unwrap();
        assert_eq!(seqs.len(), 1);
        let bbox = g.window_bbox(PixelCoord::new(2, 2), 1).unwrap();
        let first = seqs[0][0];
        let last = *seqs[0].last().unwrap();
        assert!((first.x - bbox.min_x).abs() < 1e-12);
        assert!((last.x - bbox.max_x).abs() < 1e-12);
    }

    #[test]
    fn long_sequences_are_truncated() {
        let pts: Vec<(f64, f64)> = (0..30).map(|i| (0.1 + i as f64 * 0.1, 1.5)).collect();
        let roads = RoadNetwork::from_polylines(vec![line(&pts)]);
        let cfg = PbrConfig { radius: 1, max_len: 5 };
        let (_, pbr) = pbr_from_roads(&roads, &gt(4), cfg, ExtentPolicy::Error).unwrap();
        assert!(pbr.sequences().all(|s| s.len() <= 5));
    }

    #[test]
    fn empty_neighbourhood_has_no_entry() {
        let roads = RoadNetwork::from_polylines(vec![line(&[(0.1, 5.9), (0.9, 5.1)])]);
        let (_, pbr) = pbr_from_roads(&roads, &gt(6), PbrConfig::default(), ExtentPolicy::Error).unwrap();
        assert!(pbr.get(PixelCoord::new(5, 5)).is_none());
        assert_eq!(pbr.n_pixels(), 4);
    }
}
