//! Decision-tree cellular automaton for built-up growth.

mod ca;
mod features;
mod tree;

pub use ca::{baseline_rasterize, road_presence_band, simulate_step, simulate_step_ordered, Step};
pub use features::{
    assemble_features, extract_training_set, Dataset, FeatureLayout, FeatureSet, Transition,
    FEATURE_LAYOUT_VERSION, N_TRANSITIONS,
};
pub use tree::{
    fit_forest, fit_tree, majority, Classifier, DecisionTree, Forest, GrowthModel, Node, TreeConfig,
    MODEL_MAGIC, MODEL_VERSION,
};

use crate::error::Error;

/// Which road information the transition function sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Raster codes only.
    NoRoads,
    /// A road-presence band is appended to the raster before encoding.
    BaselineRaster,
    /// Raster codes plus learned road codes.
    RoadsRepr,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::NoRoads, Mode::BaselineRaster, Mode::RoadsRepr];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NoRoads => "no-roads",
            Mode::BaselineRaster => "baseline-raster",
            Mode::RoadsRepr => "roads-repr",
        }
    }

    pub fn uses_road_codes(self) -> bool {
        self == Mode::RoadsRepr
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}; expected no-roads, baseline-raster or roads-repr")))
    }
}
