//! Stage functions shared by the subcommands and the sweep.

use log::info;
use roadgrowth_core::growth::{
    baseline_rasterize, extract_training_set, fit_forest, fit_tree, simulate_step, Classifier, FeatureSet,
    GrowthModel, Mode, TreeConfig,
};
use roadgrowth_core::index::{pbr_from_roads, ExtentPolicy, PbrConfig, PbrSet};
use roadgrowth_core::metrics::{compute_areas, ChangeAreas};
use roadgrowth_core::nn::SgdConfig;
use roadgrowth_core::raster_encoder::{encode_raster, extract_patches, train_patch_ae, PatchAutoencoder};
use roadgrowth_core::road_encoder::{DrnnaeConfig, Normalizer, Sdrnnae, StreamLayout, TrainHistory};
use roadgrowth_core::{BuiltupGrid, GeoTransform, RasterGrid, RepGrid, Result, RoadNetwork};

/// Hyperparameters of one end-to-end run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Road code length, twice the LSTM width.
    pub rep_size: usize,
    pub radius: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub max_len: usize,
    pub streams: StreamLayout,
    pub raster_code_len: usize,
    pub raster_epochs: usize,
    pub tree: TreeConfig,
    /// Forest size; `None` fits a single tree.
    pub n_trees: Option<usize>,
    pub balance: bool,
    pub extent_policy: ExtentPolicy,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::RoadsRepr,
            rep_size: 6,
            radius: 1,
            epochs: 50,
            learning_rate: 0.1,
            batch_size: 64,
            seed: 42,
            max_len: roadgrowth_core::index::DEFAULT_MAX_PBR_LEN,
            streams: StreamLayout::Coupled,
            raster_code_len: roadgrowth_core::raster_encoder::DEFAULT_CODE_LEN,
            raster_epochs: 50,
            tree: TreeConfig::default(),
            n_trees: None,
            balance: false,
            extent_policy: ExtentPolicy::Error,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        use roadgrowth_core::Error;
        if self.rep_size < 2 || !self.rep_size.is_multiple_of(2) {
            return Err(Error::Config(format!("rep_size must be even and at least 2, got {}", self.rep_size)));
        }
        if self.raster_code_len == 0 {
            return Err(Error::Config("raster code length must be positive".into()));
        }
        if self.n_trees == Some(0) {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        self.sgd(self.epochs).validate()?;
        self.tree.validate()?;
        self.drnnae().validate()
    }

    pub fn sgd(&self, epochs: usize) -> SgdConfig {
        SgdConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs,
            seed: self.seed,
            clip_norm: None,
        }
    }

    pub fn drnnae(&self) -> DrnnaeConfig {
        DrnnaeConfig {
            n_hidden: self.rep_size / 2,
            max_len: self.max_len,
            streams: self.streams,
        }
    }

    pub fn pbr(&self) -> PbrConfig {
        PbrConfig {
            radius: self.radius,
            max_len: self.max_len,
        }
    }
}

pub fn extract_pbr(roads: &RoadNetwork, gt: &GeoTransform, cfg: &RunConfig) -> Result<PbrSet> {
    Ok(pbr_from_roads(roads, gt, cfg.pbr(), cfg.extent_policy)?.1)
}

/// Trains the road autoencoder pair. `after_epoch` sees each epoch's models.
pub fn train_road_encoder<E>(
    pbr: &PbrSet,
    gt: &GeoTransform,
    cfg: &RunConfig,
    after_epoch: E,
) -> Result<(Sdrnnae, TrainHistory)>
where
    E: FnMut(usize, &Sdrnnae),
{
    let mut model = Sdrnnae::new(cfg.drnnae(), Normalizer::from_transform(gt), cfg.seed)?;
    let hist = model.train_with(pbr, &cfg.sgd(cfg.epochs), after_epoch)?;
    info!(
        "road encoder: {} fragments, final loss lat {:?} lon {:?}",
        pbr.n_sequences(),
        hist.lat.last(),
        hist.lon.last()
    );
    Ok((model, hist))
}

/// Raster the encoder sees in `mode`: the input bands, plus the road
/// presence band for the baseline.
pub fn mode_raster(raster: &RasterGrid, roads: &RoadNetwork, mode: Mode, policy: ExtentPolicy) -> Result<RasterGrid> {
    let mut r = raster.clone();
    if mode == Mode::BaselineRaster {
        baseline_rasterize(roads, &mut r, policy)?;
    }
    Ok(r.normalized())
}

pub fn train_raster_encoder(raster: &RasterGrid, cfg: &RunConfig) -> Result<PatchAutoencoder> {
    let mut rng = roadgrowth_core::nn::rng_from_seed(cfg.seed);
    let mut ae = PatchAutoencoder::random(raster.n_bands(), cfg.radius, cfg.raster_code_len, &mut rng)?;
    let patches = extract_patches(raster, cfg.radius);
    let hist = train_patch_ae(&mut ae, &patches, &cfg.sgd(cfg.raster_epochs))?;
    info!("raster encoder: {} patches, final loss {:?}", patches.len(), hist.last());
    Ok(ae)
}

pub fn fit_growth_model(
    t0: &BuiltupGrid,
    t1: &BuiltupGrid,
    raster_codes: &RepGrid,
    road_codes: Option<&RepGrid>,
    cfg: &RunConfig,
) -> Result<GrowthModel> {
    let fs = FeatureSet::new(cfg.radius, Some(raster_codes), road_codes)?;
    let mut ds = extract_training_set(t0, t1, &fs.assemble_all(t0)?)?;
    if cfg.balance {
        ds = ds.balanced(cfg.seed);
    }
    let classifier = match cfg.n_trees {
        None => Classifier::Tree(fit_tree(&ds.x, &ds.y, &cfg.tree)?),
        Some(k) => Classifier::Forest(fit_forest(&ds.x, &ds.y, &cfg.tree, k, cfg.seed)?),
    };
    GrowthModel::new(fs.layout, classifier)
}

pub fn simulate(
    grid: &BuiltupGrid,
    model: &GrowthModel,
    raster_codes: &RepGrid,
    road_codes: Option<&RepGrid>,
    radius: usize,
) -> Result<BuiltupGrid> {
    let fs = FeatureSet::new(radius, Some(raster_codes), road_codes)?;
    Ok(simulate_step(grid, model, &fs)?.builtup)
}

/// Inputs of one experiment.
pub struct Scenario<'a> {
    pub roads: &'a RoadNetwork,
    pub t0: &'a BuiltupGrid,
    pub t1: &'a BuiltupGrid,
    pub t2: &'a BuiltupGrid,
    pub raster: &'a RasterGrid,
}

/// Raster codes for `mode`: the mode's raster is encoded by a freshly trained
/// patch autoencoder.
pub fn raster_codes(raster: &RasterGrid, roads: &RoadNetwork, cfg: &RunConfig) -> Result<RepGrid> {
    let r = mode_raster(raster, roads, cfg.mode, cfg.extent_policy)?;
    let ae = train_raster_encoder(&r, cfg)?;
    encode_raster(&ae, &r)
}

/// Fits on `t0 -> t1`, simulates one step from `t1` and scores against `t2`.
/// Road codes are ignored unless the mode uses them.
pub fn run_with_codes(
    s: &Scenario<'_>,
    raster_codes: &RepGrid,
    road_codes: Option<&RepGrid>,
    cfg: &RunConfig,
) -> Result<(BuiltupGrid, ChangeAreas)> {
    let road = if cfg.mode.uses_road_codes() { road_codes } else { None };
    let model = fit_growth_model(s.t0, s.t1, raster_codes, road, cfg)?;
    let pred = simulate(s.t1, &model, raster_codes, road, cfg.radius)?;
    let areas = compute_areas(s.t1, s.t2, &pred)?;
    Ok((pred, areas))
}

pub fn run_mode(s: &Scenario<'_>, road_codes: Option<&RepGrid>, cfg: &RunConfig) -> Result<(BuiltupGrid, ChangeAreas)> {
    let codes = raster_codes(s.raster, s.roads, cfg)?;
    run_with_codes(s, &codes, road_codes, cfg)
}
