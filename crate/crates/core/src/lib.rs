//! Road network representations for cellular-automaton urban growth.
//!
//! The crate covers the whole pipeline: geometry and raster plumbing, the
//! per-pixel road index and fragment extraction, LSTM sequence autoencoders
//! that turn road fragments into fixed-length codes, a patch autoencoder for
//! raster neighbourhoods, a decision-tree cellular automaton, land-change
//! metrics and a synthetic scenario generator.

pub mod error;
pub mod geo;
pub mod growth;
pub mod index;
pub mod io;
pub mod metrics;
pub mod nn;
pub mod raster;
pub mod raster_encoder;
pub mod road_encoder;
pub mod roads;
pub mod synth;

pub use error::{Error, Result};
pub use geo::{BBox, GeoCoord, GeoTransform, PixelCoord, Polyline};
pub use raster::{BuiltupGrid, Land, RasterGrid, RepGrid};
pub use roads::{Road, RoadId, RoadNetwork};
