//! Readers and writers for the on-disk formats.
//!
//! Every reader rejects trailing garbage and reports 1-based line numbers.
//! Floating-point values are written in shortest round-trip form, so
//! write-then-read is the identity for finite values.

mod geojson;
mod grid;
mod image;
mod text;

pub use geojson::{parse_roads, parse_roads_with, write_roads, RoadParseOptions};
pub use grid::{
    builtup_from_ascii, builtup_to_ascii, read_ascii_grid, read_builtup, read_builtup_file,
    read_raster_manifest, write_ascii_grid, write_builtup, write_raster_manifest, AsciiGrid,
    DEFAULT_NODATA,
};
pub use image::{parse_pnm, write_pgm, write_ppm};
pub use text::{read_index, read_pbr, read_reps, write_index, write_pbr, write_reps};
