use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::PixelCoord;
use crate::raster::{BuiltupGrid, Land, RepGrid};

/// Version of the feature ordering; part of the layout hash.
pub const FEATURE_LAYOUT_VERSION: u32 = 1;

/// Cell transition between two epochs.
///
/// The declaration order is the tie-break order for votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Transition {
    NbToNb,
    BToB,
    NbToB,
    BToNb,
}

pub const N_TRANSITIONS: usize = 4;

impl Transition {
    pub const ALL: [Transition; N_TRANSITIONS] =
        [Transition::NbToNb, Transition::BToB, Transition::NbToB, Transition::BToNb];

    pub fn from_states(before: bool, after: bool) -> Self {
        match (before, after) {
            (false, false) => Transition::NbToNb,
            (true, true) => Transition::BToB,
            (false, true) => Transition::NbToB,
            (true, false) => Transition::BToNb,
        }
    }

    /// Built-up state after the transition.
    pub fn target_builtup(self) -> bool {
        matches!(self, Transition::NbToB | Transition::BToB)
    }

    pub fn source_builtup(self) -> bool {
        matches!(self, Transition::BToB | Transition::BToNb)
    }

    pub fn is_change(self) -> bool {
        matches!(self, Transition::NbToB | Transition::BToNb)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Transition::NbToNb => "NB->NB",
            Transition::BToB => "B->B",
            Transition::NbToB => "NB->B",
            Transition::BToNb => "B->NB",
        }
    }
}

/// Shape of a feature vector: own state, neighbour states, raster code, road
/// code, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureLayout {
    pub radius: usize,
    pub raster_len: usize,
    pub road_len: usize,
}

impl FeatureLayout {
    pub fn n_neighbors(&self) -> usize {
        (2 * self.radius + 1).pow(2) - 1
    }

    pub fn len(&self) -> usize {
        1 + self.n_neighbors() + self.raster_len + self.road_len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn describe(&self) -> String {
        format!(
            "v{FEATURE_LAYOUT_VERSION};self=1;neighbors={};raster={};road={}",
            self.n_neighbors(),
            self.raster_len,
            self.road_len
        )
    }

    /// 64-bit FNV-1a hash of [`FeatureLayout::describe`].
    pub fn hash(&self) -> u64 {
        self.describe().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

/// Per-cell feature assembly from a built-up map and optional code grids.
#[derive(Debug, Clone, Copy)]
pub struct FeatureSet<'a> {
    pub layout: FeatureLayout,
    raster: Option<&'a RepGrid>,
    road: Option<&'a RepGrid>,
}

impl<'a> FeatureSet<'a> {
    pub fn new(radius: usize, raster: Option<&'a RepGrid>, road: Option<&'a RepGrid>) -> Result<Self> {
        if let (Some(a), Some(b)) = (raster, road) {
            if (a.n_rows, a.n_cols) != (b.n_rows, b.n_cols) {
                return Err(Error::DimensionMismatch(format!(
                    "raster codes {}x{} vs road codes {}x{}",
                    a.n_rows, a.n_cols, b.n_rows, b.n_cols
                )));
            }
        }
        Ok(Self {
            layout: FeatureLayout {
                radius,
                raster_len: raster.map_or(0, |r| r.dim),
                road_len: road.map_or(0, |r| r.dim),
            },
            raster,
            road,
        })
    }

    pub fn check_grid(&self, grid: &BuiltupGrid) -> Result<()> {
        for reps in [self.raster, self.road].into_iter().flatten() {
            reps.ensure_shape(&grid.transform)?;
        }
        Ok(())
    }

    fn assemble_unchecked(&self, grid: &BuiltupGrid, p: PixelCoord) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.layout.len());
        x.push(grid.get(p).indicator());
        let r = self.layout.radius as isize;
        for dr in -r..=r {
            for dc in -r..=r {
                if dr != 0 || dc != 0 {
                    x.push(grid.get_offset(p, dr, dc).indicator());
                }
            }
        }
        if let Some(reps) = self.raster {
            x.extend_from_slice(reps.get(p));
        }
        if let Some(reps) = self.road {
            x.extend_from_slice(reps.get(p));
        }
        x
    }

    /// Feature vector of one cell. Neighbours outside the grid and no-data
    /// cells contribute 0.
    pub fn assemble(&self, grid: &BuiltupGrid, p: PixelCoord) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        if !grid.transform.contains_pixel(p) {
            return Err(Error::OutOfExtent(format!("pixel ({}, {})", p.row, p.col)));
        }
        Ok(self.assemble_unchecked(grid, p))
    }

    /// Feature vectors of every cell in row-major order.
    pub fn assemble_all(&self, grid: &BuiltupGrid) -> Result<Vec<Vec<f64>>> {
        self.check_grid(grid)?;
        let gt = &grid.transform;
        Ok((0..gt.n_cells())
            .into_par_iter()
            .map(|i| self.assemble_unchecked(grid, gt.pixel_at(i)))
            .collect())
    }
}

/// Moore-radius-1 feature vector of one cell.
pub fn assemble_features(
    p: PixelCoord,
    builtup: &BuiltupGrid,
    raster_reps: Option<&RepGrid>,
    road_reps: Option<&RepGrid>,
) -> Result<Vec<f64>> {
    FeatureSet::new(1, raster_reps, road_reps)?.assemble(builtup, p)
}

/// Labelled rows for fitting a transition classifier.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Transition>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn label_counts(&self) -> [usize; N_TRANSITIONS] {
        let mut c = [0; N_TRANSITIONS];
        for l in &self.y {
            c[l.index()] += 1;
        }
        c
    }

    /// Randomly subsamples each persistent class down to the number of change
    /// rows (at least one row per class is kept).
    pub fn balanced(&self, seed: u64) -> Dataset {
        use rand::seq::SliceRandom;
        let counts = self.label_counts();
        let n_change = counts[Transition::NbToB.index()] + counts[Transition::BToNb.index()];
        let cap = n_change.max(1);
        let mut rng = crate::nn::rng_from_seed(seed);
        let mut keep = vec![true; self.len()];
        for class in [Transition::NbToNb, Transition::BToB] {
            let mut rows: Vec<usize> = (0..self.len()).filter(|&i| self.y[i] == class).collect();
            if rows.len() > cap {
                rows.shuffle(&mut rng);
                for &i in &rows[cap..] {
                    keep[i] = false;
                }
            }
        }
        let mut out = Dataset::default();
        for i in (0..self.len()).filter(|&i| keep[i]) {
            out.x.push(self.x[i].clone());
            out.y.push(self.y[i]);
        }
        out
    }
}

/// One row per cell valid in both epochs, labelled by its transition.
/// `features` holds the time-`t0` feature vector of every cell in row-major
/// order.
pub fn extract_training_set(t0: &BuiltupGrid, t1: &BuiltupGrid, features: &[Vec<f64>]) -> Result<Dataset> {
    t0.ensure_aligned(t1)?;
    if features.len() != t0.transform.n_cells() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows for {} cells",
            features.len(),
            t0.transform.n_cells()
        )));
    }
    let mut ds = Dataset::default();
    for ((a, b), x) in t0.cells().iter().zip(t1.cells()).zip(features) {
        if a.is_valid() && b.is_valid() {
            ds.x.push(x.clone());
            ds.y.push(Transition::from_states(*a == Land::Builtup, *b == Land::Builtup));
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoTransform;

    fn grid(n: usize, built: &[(usize, usize)]) -> BuiltupGrid {
        let gt = GeoTransform::new(0.0, n as f64, 1.0, 1.0, n, n).unwrap();
        let mut g = BuiltupGrid::filled(gt, Land::NonBuiltup);
        for &(r, c) in built {
            g.set(PixelCoord::new(r, c), Land::Builtup);
        }
        g
    }

    #[test]
    fn isolated_builtup_without_roads() {
        let g = grid(3, &[(1, 1)]);
        let raster = RepGrid::from_values(3, 3, 2, (0..18).map(|v| v as f64).collect()).unwrap();
        let road = RepGrid::zeros(3, 3, 4);
        let x = assemble_features(PixelCoord::new(1, 1), &g, Some(&raster), Some(&road)).unwrap();
        let mut expected = vec![1.0];
        expected.extend([0.0; 8]);
        expected.extend([8.0, 9.0]);
        expected.extend([0.0; 4]);
        assert_eq!(x, expected);
    }

    #[test]
    fn border_neighbours_are_zero() {
        let g = grid(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]);
        let x = assemble_features(PixelCoord::new(0, 0), &g, None, None).unwrap();
        assert_eq!(x, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = grid(3, &[]);
        let reps = RepGrid::zeros(4, 3, 2);
        assert!(matches!(
            assemble_features(PixelCoord::new(0, 0), &g, Some(&reps), None),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn labels_follow_state_pairs() {
        let t0 = grid(2, &[(0, 0), (0, 1)]);
        let t1 = grid(2, &[(0, 0), (1, 1)]);
        let feats = FeatureSet::new(1, None, None).unwrap().assemble_all(&t0).unwrap();
        let ds = extract_training_set(&t0, &t1, &feats).unwrap();
        assert_eq!(
            ds.y,
            vec![Transition::BToB, Transition::BToNb, Transition::NbToNb, Transition::NbToB]
        );
    }

    #[test]
    fn layout_hash_depends_on_shape() {
        let a = FeatureLayout { radius: 1, raster_len: 8, road_len: 6 };
        let b = FeatureLayout { road_len: 10, ..a };
        assert_eq!(a.len(), 23);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), a.hash());
    }

    #[test]
    fn balancing_caps_persistent_classes() {
        let ds = Dataset {
            x: (0..10).map(|i| vec![i as f64]).collect(),
            y: [vec![Transition::NbToNb; 7], vec![Transition::NbToB; 2], vec![Transition::BToB]].concat(),
        };
        let b = ds.balanced(1);
        assert_eq!(b.label_counts(), [2, 1, 2, 0]);
    }
}
