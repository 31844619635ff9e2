use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use roadgrowth_core::growth::{
    baseline_rasterize, extract_training_set, fit_forest, fit_tree, simulate_step, simulate_step_ordered, Classifier,
    FeatureSet, GrowthModel, TreeConfig, Transition,
};
use roadgrowth_core::index::{build_road_index, ExtentPolicy};
use roadgrowth_core::nn::rng_from_seed;
use roadgrowth_core::{BuiltupGrid, GeoTransform, Land, RasterGrid, RepGrid};
use roadgrowth_testkit::{
    best_accuracy_at_depth, best_split_exhaustive, parse_model_trees, predict_from_text, random_road_scenario,
};

fn labels(y: &[usize]) -> Vec<Transition> {
    y.iter().map(|&k| Transition::from_index(k).unwrap()).collect()
}

/// Small-integer features so that ties and repeated values are common.
fn random_data(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(0..6) as f64 * 0.5).collect()).collect();
    let y = x
        .iter()
        .map(|r| if rng.gen_bool(0.2) { rng.gen_range(0..4) } else { ((r[0] + r[d - 1]) as usize) % 4 })
        .collect();
    (x, y)
}

#[test]
fn tree_and_forest_agree_with_text_walk() {
    let (x, y) = random_data(1, 300, 5);
    let layout = FeatureSet::new(0, None, Some(&RepGrid::zeros(1, 1, 4))).unwrap().layout;
    let tree = fit_tree(&x, &labels(&y), &TreeConfig::default()).unwrap();
    let forest = fit_forest(&x, &labels(&y), &TreeConfig { max_depth: Some(4), min_samples_leaf: 2 }, 7, 3).unwrap();
    let mut rng = rng_from_seed(2);
    for classifier in [Classifier::Tree(tree), Classifier::Forest(forest)] {
        let model = GrowthModel::new(layout, classifier).unwrap();
        let text = model.to_text();
        let trees = parse_model_trees(&text);
        let back = GrowthModel::from_text(&text).unwrap();
        for _ in 0..1000 {
            let q: Vec<f64> = (0..5).map(|_| rng.gen_range(-0.5..3.0)).collect();
            let ours = model.predict(&q).unwrap();
            assert_eq!(ours.index(), predict_from_text(&trees, &q));
            assert_eq!(back.predict(&q).unwrap(), ours);
        }
    }
}

#[test]
fn xor_is_learned_exactly_at_depth_two() {
    let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    let y = vec![0, 2, 2, 0];
    assert_eq!(best_accuracy_at_depth(&x, &y, 1), 0.5);
    assert_eq!(best_accuracy_at_depth(&x, &y, 2), 1.0);
    let tree = fit_tree(&x, &labels(&y), &TreeConfig { max_depth: Some(2), min_samples_leaf: 1 }).unwrap();
    for (row, &label) in x.iter().zip(&y) {
        assert_eq!(tree.predict(row).unwrap().index(), label);
    }
}

#[test]
fn unlimited_depth_fits_distinct_rows() {
    for seed in 0..10 {
        let mut rng = rng_from_seed(seed);
        let x: Vec<Vec<f64>> = (0..120).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<usize> = (0..120).map(|_| rng.gen_range(0..4)).collect();
        let tree = fit_tree(&x, &labels(&y), &TreeConfig { max_depth: None, min_samples_leaf: 1 }).unwrap();
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(tree.predict(row).unwrap().index(), label);
        }
    }
}

#[test]
fn root_split_is_the_exhaustive_best() {
    for seed in 0..40 {
        let (x, y) = random_data(100 + seed, 12 + seed as usize, 3);
        let tree = fit_tree(&x, &labels(&y), &TreeConfig::default()).unwrap();
        let layout = FeatureSet::new(0, None, Some(&RepGrid::zeros(1, 1, 2))).unwrap().layout;
        let text = GrowthModel::new(layout, Classifier::Tree(tree)).unwrap().to_text();
        let root = &parse_model_trees(&text)[0][0];
        match best_split_exhaustive(&x, &y) {
            Some((f, thr, _)) if y.iter().any(|&l| l != y[0]) => {
                assert_eq!(*root, roadgrowth_testkit::TextNode::Split(f, thr), "seed {seed}");
            }
            _ => assert!(matches!(root, roadgrowth_testkit::TextNode::Leaf(_))),
        }
    }
}

#[test]
fn baseline_band_marks_indexed_cells() {
    for seed in 0..20 {
        let (gt, roads) = random_road_scenario(seed, 20, 6);
        let mut raster = RasterGrid::new(gt, vec![vec![0.5; gt.n_cells()]], -9999.0).unwrap();
        baseline_rasterize(&roads, &mut raster, ExtentPolicy::Error).unwrap();
        assert_eq!(raster.n_bands(), 2);
        let index = build_road_index(&roads, &gt, ExtentPolicy::Error).unwrap();
        for (v, present) in raster.band(1).iter().zip(index.presence()) {
            assert_eq!(*v, if present { 1.0 } else { 0.0 });
        }
    }
}

fn random_grid(gt: GeoTransform, rng: &mut impl Rng, p_built: f64) -> BuiltupGrid {
    let cells = (0..gt.n_cells())
        .map(|_| {
            if rng.gen_bool(0.05) {
                Land::NoData
            } else {
                Land::from_bool(rng.gen_bool(p_built))
            }
        })
        .collect();
    BuiltupGrid::new(gt, cells).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ca_step_is_order_free_and_label_consistent(
        rows in 2usize..14, cols in 2usize..14, seed in any::<u64>(), forest in any::<bool>()
    ) {
        let mut rng = rng_from_seed(seed);
        let gt = GeoTransform::new(0.0, rows as f64, 1.0, 1.0, rows, cols).unwrap();
        let codes = RepGrid::from_values(rows, cols, 2, (0..rows * cols * 2).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let t0 = random_grid(gt, &mut rng, 0.3);
        let t1 = random_grid(gt, &mut rng, 0.5);
        let fs = FeatureSet::new(1, None, Some(&codes)).unwrap();
        let ds = extract_training_set(&t0, &t1, &fs.assemble_all(&t0).unwrap()).unwrap();
        prop_assume!(!ds.is_empty());
        let cfg = TreeConfig { max_depth: Some(6), min_samples_leaf: 1 };
        let classifier = if forest {
            Classifier::Forest(fit_forest(&ds.x, &ds.y, &cfg, 5, seed).unwrap())
        } else {
            Classifier::Tree(fit_tree(&ds.x, &ds.y, &cfg).unwrap())
        };
        let model = GrowthModel::new(fs.layout, classifier).unwrap();

        let step = simulate_step(&t1, &model, &fs).unwrap();
        let mut order: Vec<usize> = (0..gt.n_cells()).collect();
        order.shuffle(&mut rng);
        prop_assert_eq!(&simulate_step_ordered(&t1, &model, &fs, &order).unwrap(), &step);
        order.reverse();
        prop_assert_eq!(&simulate_step_ordered(&t1, &model, &fs, &order).unwrap(), &step);

        for ((before, after), tau) in t1.cells().iter().zip(step.builtup.cells()).zip(&step.transitions) {
            match tau {
                None => {
                    prop_assert_eq!(*before, Land::NoData);
                    prop_assert_eq!(*after, Land::NoData);
                }
                Some(t) => prop_assert_eq!(*after == Land::Builtup, t.target_builtup()),
            }
        }
    }
}
