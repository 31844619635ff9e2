use rayon::prelude::*;

use super::features::{FeatureSet, Transition};
use super::tree::GrowthModel;
use crate::error::{Error, Result};
use crate::geo::GeoTransform;
use crate::index::{build_road_index, ExtentPolicy};
use crate::raster::{BuiltupGrid, Land, RasterGrid};
use crate::roads::RoadNetwork;

/// Result of one synchronous update.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub builtup: BuiltupGrid,
    /// Predicted transition per cell, `None` on no-data cells.
    pub transitions: Vec<Option<Transition>>,
}

fn predict_cell(
    model: &GrowthModel,
    features: &FeatureSet<'_>,
    grid: &BuiltupGrid,
    i: usize,
) -> Result<(Land, Option<Transition>)> {
    let p = grid.transform.pixel_at(i);
    if !grid.get(p).is_valid() {
        return Ok((Land::NoData, None));
    }
    let tau = model.predict(&features.assemble(grid, p)?)?;
    Ok((Land::from_bool(tau.target_builtup()), Some(tau)))
}

fn check(model: &GrowthModel, features: &FeatureSet<'_>, grid: &BuiltupGrid) -> Result<()> {
    model.check_layout(&features.layout)?;
    features.check_grid(grid)
}

/// One synchronous CA update: every cell's features are read from `grid`,
/// and a cell is built-up afterwards iff its predicted transition ends in the
/// built-up state. No-data cells stay no-data.
pub fn simulate_step(grid: &BuiltupGrid, model: &GrowthModel, features: &FeatureSet<'_>) -> Result<Step> {
    check(model, features, grid)?;
    let out: Vec<(Land, Option<Transition>)> = (0..grid.transform.n_cells())
        .into_par_iter()
        .map(|i| predict_cell(model, features, grid, i))
        .collect::<Result<_>>()?;
    let (cells, transitions) = out.into_iter().unzip();
    Ok(Step {
        builtup: BuiltupGrid::new(grid.transform, cells)?,
        transitions,
    })
}

/// [`simulate_step`] visiting cells sequentially in the given order.
/// `order` must be a permutation of the cell indices.
pub fn simulate_step_ordered(
    grid: &BuiltupGrid,
    model: &GrowthModel,
    features: &FeatureSet<'_>,
    order: &[usize],
) -> Result<Step> {
    check(model, features, grid)?;
    let n = grid.transform.n_cells();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::Value("visitation order is not a permutation of the cells".into()));
    }
    let mut cells = vec![Land::NoData; n];
    let mut transitions = vec![None; n];
    for &i in order {
        let (l, t) = predict_cell(model, features, grid, i)?;
        cells[i] = l;
        transitions[i] = t;
    }
    Ok(Step {
        builtup: BuiltupGrid::new(grid.transform, cells)?,
        transitions,
    })
}

/// Road presence per cell: 1 where the road index lists any road.
pub fn road_presence_band(roads: &RoadNetwork, gt: &GeoTransform, policy: ExtentPolicy) -> Result<Vec<f64>> {
    let index = build_road_index(roads, gt, policy)?;
    Ok(index.presence().into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect())
}

/// Appends the road presence band as the last band of `raster`.
pub fn baseline_rasterize(roads: &RoadNetwork, raster: &mut RasterGrid, policy: ExtentPolicy) -> Result<()> {
    let band = road_presence_band(roads, &raster.transform, policy)?;
    raster.push_band(band)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{GeoCoord, Polyline};
    use crate::growth::features::FeatureLayout;
    use crate::growth::tree::{Classifier, DecisionTree, Node};

    fn grid4(built: &[usize]) -> BuiltupGrid {
        let gt = GeoTransform::new(0.0, 4.0, 1.0, 1.0, 4, 4).unwrap();
        let cells = (0..16).map(|i| Land::from_bool(built.contains(&i))).collect();
        BuiltupGrid::new(gt, cells).unwrap()
    }

    fn stump(feature: usize, threshold: f64, left: Transition, right: Transition) -> GrowthModel {
        let leaf = |t: Transition| {
            let mut counts = [0; 4];
            counts[t.index()] = 1;
            Node::Leaf { counts }
        };
        let nodes = vec![Node::Split { feature, threshold, right: 2 }, leaf(left), leaf(right)];
        let layout = FeatureLayout { radius: 1, raster_len: 0, road_len: 0 };
        GrowthModel::new(layout, Classifier::Tree(DecisionTree::from_nodes(9, nodes).unwrap())).unwrap()
    }

    #[test]
    fn persistence_model_keeps_grid() {
        let g = grid4(&[0, 5, 6, 15]);
        let model = stump(0, 0.5, Transition::NbToNb, Transition::BToB);
        let fs = FeatureSet::new(1, None, None).unwrap();
        let step = simulate_step(&g, &model, &fs).unwrap();
        assert_eq!(step.builtup, g);
        assert_eq!(simulate_step(&g, &model, &fs).unwrap(), step);
    }

    #[test]
    fn hand_applied_stump() {
        // grows a cell iff its east neighbour (feature 5) is built-up
        let g = grid4(&[5, 10]);
        let model = stump(5, 0.5, Transition::NbToNb, Transition::NbToB);
        let fs = FeatureSet::new(1, None, None).unwrap();
        let step = simulate_step(&g, &model, &fs).unwrap();
        assert_eq!(step.builtup, grid4(&[4, 9]));
        assert_eq!(step.transitions[4], Some(Transition::NbToB));
        assert_eq!(step.transitions[5], Some(Transition::NbToNb));
    }

    #[test]
    fn order_does_not_matter() {
        let g = grid4(&[1, 2, 7, 12]);
        let model = stump(5, 0.5, Transition::BToNb, Transition::NbToB);
        let fs = FeatureSet::new(1, None, None).unwrap();
        let a = simulate_step(&g, &model, &fs).unwrap();
        let rev: Vec<usize> = (0..16).rev().collect();
        assert_eq!(simulate_step_ordered(&g, &model, &fs, &rev).unwrap(), a);
        assert!(simulate_step_ordered(&g, &model, &fs, &[0; 16]).is_err());
    }

    #[test]
    fn layout_mismatch_rejected() {
        let g = grid4(&[]);
        let model = stump(0, 0.5, Transition::NbToNb, Transition::BToB);
        let reps = crate::raster::RepGrid::zeros(4, 4, 2);
        let fs = FeatureSet::new(1, Some(&reps), None).unwrap();
        assert!(simulate_step(&g, &model, &fs).is_err());
    }

    #[test]
    fn baseline_band() {
        let gt = GeoTransform::new(0.0, 4.0, 1.0, 1.0, 4, 4).unwrap();
        let mut raster = RasterGrid::new(gt, vec![vec![0.5; 16]], -9999.0).unwrap();
        baseline_rasterize(&RoadNetwork::default(), &mut raster, ExtentPolicy::Error).unwrap();
        assert_eq!(raster.n_bands(), 2);
        assert!(raster.band(1).iter().all(|&v| v == 0.0));

        let road = Polyline::new(vec![GeoCoord::new(0.2, 2.5), GeoCoord::new(2.7, 2.5)]).unwrap();
        let roads = RoadNetwork::from_polylines(vec![road]);
        baseline_rasterize(&roads, &mut raster, ExtentPolicy::Error).unwrap();
        let band = raster.band(2);
        let on: Vec<usize> = (0..16).filter(|&i| band[i] == 1.0).collect();
        assert_eq!(on, vec![4, 5, 6]);
    }
}
