//! Seeded synthetic scenarios: a road network, three built-up epochs whose
//! growth follows the roads, and a two-band raster.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geo::{GeoCoord, GeoTransform, Polyline};
use crate::index::{build_road_index, ExtentPolicy};
use crate::io::{write_builtup, write_raster_manifest, write_roads, DEFAULT_NODATA};
use crate::nn::rng_from_seed;
use crate::raster::{BuiltupGrid, Land, RasterGrid};
use crate::roads::RoadNetwork;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_roads: usize,
    pub seed: u64,
    /// Conversion probability per sweep of a frontier cell near a road.
    pub p_near: f64,
    /// Conversion probability per sweep of any other frontier cell.
    pub p_far: f64,
    /// Chebyshev distance in cells within which a cell counts as near a road.
    pub d_road: usize,
    /// Lower bound on the fraction of cells left unchanged by the first and
    /// the second period; growth stops once the matching quota is converted.
    pub target_persistence: [f64; 2],
    /// Growth sweeps per period.
    pub sweeps_per_period: usize,
    /// Number of 3x3 built-up seed blocks placed on road cells.
    pub n_seeds: usize,
    /// Built-up fraction t0 is grown to from the seeds before the first
    /// period.
    pub t0_fraction: f64,
    /// Upper bound on the sweeps used to grow t0.
    pub max_warmup_sweeps: usize,
    /// Length scale in cells of the built-up intensity band.
    pub intensity_scale: f64,
    /// Map units per cell.
    pub cell_size: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_rows: 64,
            n_cols: 64,
            n_roads: 16,
            seed: 42,
            p_near: 0.8,
            p_far: 0.02,
            d_road: 1,
            target_persistence: [0.85, 0.90],
            sweeps_per_period: 1,
            n_seeds: 48,
            t0_fraction: 0.0,
            max_warmup_sweeps: 200,
            intensity_scale: 3.0,
            cell_size: 30.0,
            origin_x: 500_000.0,
            origin_y: 2_100_000.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.n_rows < 4 || self.n_cols < 4 {
            return err(format!("grid must be at least 4x4, got {}x{}", self.n_rows, self.n_cols));
        }
        let frozen = self.p_near == 0.0 && self.p_far == 0.0;
        if !(0.0..=1.0).contains(&self.p_near) || !(0.0..=1.0).contains(&self.p_far) {
            return err(format!("probabilities must lie in [0, 1], got {} and {}", self.p_near, self.p_far));
        }
        if !frozen && self.p_far >= self.p_near {
            return err(format!("p_far ({}) must be below p_near ({})", self.p_far, self.p_near));
        }
        if self.d_road == 0 {
            return err("d_road must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.t0_fraction) {
            return err(format!("t0 fraction {} outside [0, 1]", self.t0_fraction));
        }
        if self.target_persistence.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return err(format!("target persistence {:?} outside [0, 1]", self.target_persistence));
        }
        if !(self.intensity_scale > 0.0 && self.intensity_scale.is_finite()) {
            return err(format!("intensity scale must be positive, got {}", self.intensity_scale));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return err(format!("cell size must be positive, got {}", self.cell_size));
        }
        Ok(())
    }

    pub fn transform(&self) -> Result<GeoTransform> {
        GeoTransform::new(self.origin_x, self.origin_y, self.cell_size, self.cell_size, self.n_rows, self.n_cols)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub roads: RoadNetwork,
    pub t0: BuiltupGrid,
    pub t1: BuiltupGrid,
    pub t2: BuiltupGrid,
    pub raster: RasterGrid,
}

/// Built-up growth statistics of one period.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GrowthStats {
    pub near_candidates: usize,
    pub near_converted: usize,
    pub far_candidates: usize,
    pub far_converted: usize,
}

/// Roads stay this many cells inside the grid edge.
const EDGE: f64 = 0.01;

/// Random-walk polyline with bounded turning, kept inside `[0, w] x [0, h]`
/// (in cell units, y pointing down).
fn random_road(rng: &mut ChaCha8Rng, w: f64, h: f64) -> Vec<(f64, f64)> {
    // start on a random edge heading roughly inward
    let side = rng.gen_range(0..4);
    let t = rng.gen_range(0.1..0.9);
    let (start, inward) = match side {
        0 => ((t * w, EDGE), PI / 2.0),
        1 => ((w - EDGE, t * h), PI),
        2 => ((t * w, h - EDGE), -PI / 2.0),
        _ => ((EDGE, t * h), 0.0),
    };
    let mut heading: f64 = inward + rng.gen_range(-PI / 4.0..PI / 4.0);
    let mut pts = vec![start];
    let (mut x, mut y) = start;
    let max_turn = PI / 6.0;
    for _ in 0..200 {
        let step = rng.gen_range(2.0..5.0);
        heading += rng.gen_range(-max_turn..max_turn);
        let (nx, ny) = (x + step * heading.cos(), y + step * heading.sin());
        if nx <= EDGE || ny <= EDGE || nx >= w - EDGE || ny >= h - EDGE {
            // stop on the boundary
            let (dx, dy) = (heading.cos(), heading.sin());
            let reach = |pos: f64, d: f64, hi: f64| match d {
                d if d > 0.0 => (hi - EDGE - pos) / d,
                d if d < 0.0 => (EDGE - pos) / d,
                _ => f64::INFINITY,
            };
            let (tx, ty) = (reach(x, dx, w), reach(y, dy, h));
            let s = tx.min(ty).min(step);
            pts.push(((x + s * heading.cos()).clamp(EDGE, w - EDGE), (y + s * heading.sin()).clamp(EDGE, h - EDGE)));
            break;
        }
        x = nx;
        y = ny;
        pts.push((x, y));
    }
    pts
}

fn chebyshev_dilate(mask: &[bool], n_rows: usize, n_cols: usize, d: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for r in 0..n_rows {
        for c in 0..n_cols {
            if !mask[r * n_cols + c] {
                continue;
            }
            for rr in r.saturating_sub(d)..=(r + d).min(n_rows - 1) {
                for cc in c.saturating_sub(d)..=(c + d).min(n_cols - 1) {
                    out[rr * n_cols + cc] = true;
                }
            }
        }
    }
    out
}

fn has_builtup_neighbor(g: &[bool], n_rows: usize, n_cols: usize, i: usize) -> bool {
    let (r, c) = ((i / n_cols) as isize, (i % n_cols) as isize);
    for dr in -1..=1 {
        for dc in -1..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            let (rr, cc) = (r + dr, c + dc);
            if rr >= 0 && cc >= 0 && (rr as usize) < n_rows && (cc as usize) < n_cols && g[rr as usize * n_cols + cc as usize] {
                return true;
            }
        }
    }
    false
}

/// Grows `built` for at most `sweeps` sweeps, stopping once `quota` cells have
/// converted or no conversion is possible. Each sweep visits the
/// non-built-up cells in shuffled order; a cell with a built-up neighbour at
/// the start of the sweep converts with `p_near` or `p_far`.
fn grow(
    built: &[bool],
    near: &[bool],
    cfg: &SynthConfig,
    sweeps: usize,
    quota: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<bool>, GrowthStats) {
    let (n_rows, n_cols) = (cfg.n_rows, cfg.n_cols);
    let mut cur = built.to_vec();
    let mut stats = GrowthStats::default();
    let mut converted = 0;
    if cfg.p_near == 0.0 && cfg.p_far == 0.0 {
        return (cur, stats);
    }
    for _ in 0..sweeps {
        if converted >= quota {
            break;
        }
        let snapshot = cur.clone();
        let mut frontier: Vec<usize> = (0..cur.len())
            .filter(|&i| !snapshot[i] && has_builtup_neighbor(&snapshot, n_rows, n_cols, i))
            .collect();
        if frontier.is_empty() {
            break;
        }
        frontier.shuffle(rng);
        for i in frontier {
            if converted >= quota {
                break;
            }
            let p = if near[i] { cfg.p_near } else { cfg.p_far };
            let hit = rng.gen_bool(p);
            if near[i] {
                stats.near_candidates += 1;
                stats.near_converted += hit as usize;
            } else {
                stats.far_candidates += 1;
                stats.far_converted += hit as usize;
            }
            if hit {
                cur[i] = true;
                converted += 1;
            }
        }
    }
    (cur, stats)
}

/// Smooth noise in `[0, 1]`: bilinear interpolation of a random lattice with
/// the given spacing in cells.
fn value_noise(rng: &mut ChaCha8Rng, n_rows: usize, n_cols: usize, spacing: usize) -> Vec<f64> {
    let lr = n_rows / spacing + 2;
    let lc = n_cols / spacing + 2;
    let lattice: Vec<f64> = (0..lr * lc).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut out = Vec::with_capacity(n_rows * n_cols);
    for r in 0..n_rows {
        for c in 0..n_cols {
            let fy = r as f64 / spacing as f64;
            let fx = c as f64 / spacing as f64;
            let (y0, x0) = (fy.floor() as usize, fx.floor() as usize);
            let (ty, tx) = (fy - y0 as f64, fx - x0 as f64);
            let v = |y: usize, x: usize| lattice[y * lc + x];
            let top = v(y0, x0) * (1.0 - tx) + v(y0, x0 + 1) * tx;
            let bottom = v(y0 + 1, x0) * (1.0 - tx) + v(y0 + 1, x0 + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

/// Built-up intensity: the sum of `exp(-d / scale)` over built-up cells,
/// `d` the Euclidean cell distance, scaled so the maximum is 1 (0 everywhere
/// when nothing is built up).
fn built_intensity(built: &[bool], n_rows: usize, n_cols: usize, scale: f64) -> Vec<f64> {
    let sites: Vec<(f64, f64)> = (0..built.len())
        .filter(|&i| built[i])
        .map(|i| ((i / n_cols) as f64, (i % n_cols) as f64))
        .collect();
    let raw: Vec<f64> = (0..n_rows * n_cols)
        .map(|i| {
            let (r, c) = ((i / n_cols) as f64, (i % n_cols) as f64);
            sites
                .iter()
                .map(|&(sr, sc)| (-((sr - r).powi(2) + (sc - c).powi(2)).sqrt() / scale).exp())
                .sum::<f64>()
        })
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        raw.into_iter().map(|v| v / max).collect()
    } else {
        raw
    }
}

fn to_grid(gt: GeoTransform, cells: &[bool]) -> BuiltupGrid {
    BuiltupGrid::new(gt, cells.iter().map(|&b| Land::from_bool(b)).collect()).expect("sized to the transform")
}

/// Generates a scenario and the growth statistics of both periods.
pub fn generate_with_stats(cfg: &SynthConfig) -> Result<(Scenario, [GrowthStats; 2])> {
    cfg.validate()?;
    let gt = cfg.transform()?;
    let (n_rows, n_cols) = (cfg.n_rows, cfg.n_cols);
    let n = n_rows * n_cols;
    let mut rng = rng_from_seed(cfg.seed);

    let mut lines = Vec::with_capacity(cfg.n_roads);
    for _ in 0..cfg.n_roads {
        let pts = random_road(&mut rng, n_cols as f64, n_rows as f64);
        let coords = pts
            .into_iter()
            .map(|(u, v)| GeoCoord::new(cfg.origin_x + u * cfg.cell_size, cfg.origin_y - v * cfg.cell_size))
            .collect();
        if let Ok(line) = Polyline::new(coords) {
            lines.push(line);
        }
    }
    let roads = RoadNetwork::from_polylines(lines);
    let road_cells = build_road_index(&roads, &gt, ExtentPolicy::Clip)?.presence();
    let near = chebyshev_dilate(&road_cells, n_rows, n_cols, cfg.d_road);

    let mut t0 = vec![false; n];
    let mut on_road: Vec<usize> = (0..n).filter(|&i| road_cells[i]).collect();
    on_road.shuffle(&mut rng);
    for &i in on_road.iter().take(cfg.n_seeds) {
        let p = gt.pixel_at(i);
        for q in gt.window(p, 1) {
            t0[gt.index(q)] = true;
        }
    }

    let seeded = t0.iter().filter(|&&b| b).count();
    let warm_quota = ((cfg.t0_fraction * n as f64).round() as usize).saturating_sub(seeded);
    let (t0, _) = grow(&t0, &near, cfg, cfg.max_warmup_sweeps, warm_quota, &mut rng);

    let quota = |target: f64| ((1.0 - target) * n as f64).round() as usize;
    let (t1, s1) = grow(&t0, &near, cfg, cfg.sweeps_per_period, quota(cfg.target_persistence[0]), &mut rng);
    let (t2, s2) = grow(&t1, &near, cfg, cfg.sweeps_per_period, quota(cfg.target_persistence[1]), &mut rng);

    let band_intensity = built_intensity(&t0, n_rows, n_cols, cfg.intensity_scale);
    let band_noise = value_noise(&mut rng, n_rows, n_cols, 8);
    let raster = RasterGrid::new(gt, vec![band_intensity, band_noise], DEFAULT_NODATA)?;

    let scenario = Scenario {
        roads,
        t0: to_grid(gt, &t0),
        t1: to_grid(gt, &t1),
        t2: to_grid(gt, &t2),
        raster,
    };
    Ok((scenario, [s1, s2]))
}

pub fn generate(cfg: &SynthConfig) -> Result<Scenario> {
    Ok(generate_with_stats(cfg)?.0)
}

/// Fraction of cells valid in both grids whose state is unchanged.
pub fn persistence(a: &BuiltupGrid, b: &BuiltupGrid) -> Result<f64> {
    a.ensure_aligned(b)?;
    let (mut same, mut total) = (0usize, 0usize);
    for (x, y) in a.cells().iter().zip(b.cells()) {
        if x.is_valid() && y.is_valid() {
            total += 1;
            same += (x == y) as usize;
        }
    }
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(same as f64 / total as f64)
}

/// File names used by [`write_scenario`].
pub const ROADS_FILE: &str = "roads.geojson";
pub const T0_FILE: &str = "t0.asc";
pub const T1_FILE: &str = "t1.asc";
pub const T2_FILE: &str = "t2.asc";
pub const RASTER_MANIFEST: &str = "raster.txt";

/// Writes the scenario into `dir` and returns every written path.
pub fn write_scenario(dir: &Path, s: &Scenario) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, text)?;
        written.push(p);
        Ok(())
    };
    put(ROADS_FILE, write_roads(&s.roads))?;
    put(T0_FILE, write_builtup(&s.t0)?)?;
    put(T1_FILE, write_builtup(&s.t1)?)?;
    put(T2_FILE, write_builtup(&s.t2)?)?;
    let manifest = dir.join(RASTER_MANIFEST);
    let bands = write_raster_manifest(&manifest, &s.raster)?;
    written.push(manifest);
    written.extend(bands);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_world() {
        let cfg = SynthConfig { p_near: 0.0, p_far: 0.0, ..Default::default() };
        let s = generate(&cfg).unwrap();
        assert_eq!(s.t0, s.t1);
        assert_eq!(s.t1, s.t2);
        assert!(s.t0.builtup_count() > 0);
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig { n_rows: 32, n_cols: 32, ..Default::default() };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
    }

    #[test]
    fn monotone_growth_and_calibration() {
        let (s, stats) = generate_with_stats(&SynthConfig::default()).unwrap();
        for (a, b) in [(&s.t0, &s.t1), (&s.t1, &s.t2)] {
            for (x, y) in a.cells().iter().zip(b.cells()) {
                assert!(!x.is_builtup() || y.is_builtup());
            }
        }
        let p = persistence(&s.t0, &s.t1).unwrap();
        assert!((0.80..=0.95).contains(&p), "persistence {p}");
        for st in stats {
            let near = st.near_converted as f64 / st.near_candidates as f64;
            let far = st.far_converted as f64 / st.far_candidates.max(1) as f64;
            assert!(near > far);
        }
    }

    #[test]
    fn raster_bands_in_unit_range() {
        let s = generate(&SynthConfig { n_rows: 16, n_cols: 16, ..Default::default() }).unwrap();
        assert_eq!(s.raster.n_bands(), 2);
        assert!(s.raster.bands().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn invalid_configs() {
        assert!(generate(&SynthConfig { p_far: 0.9, ..Default::default() }).is_err());
        assert!(generate(&SynthConfig { d_road: 0, ..Default::default() }).is_err());
        assert!(generate(&SynthConfig { n_rows: 2, ..Default::default() }).is_err());
    }

    #[test]
    fn roads_stay_inside() {
        let cfg = SynthConfig::default();
        let s = generate(&cfg).unwrap();
        let ext = cfg.transform().unwrap().extent();
        assert_eq!(s.roads.len(), cfg.n_roads);
        for r in s.roads.roads() {
            assert!(r.geometry.points().iter().all(|c| ext.contains(c, 1e-6)));
        }
    }
}
