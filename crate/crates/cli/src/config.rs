//! Command-line options, the key=value config file and the mapping onto
//! [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser};
use roadgrowth_core::growth::{Mode, TreeConfig};
use roadgrowth_core::index::ExtentPolicy;
use roadgrowth_core::road_encoder::StreamLayout;
use roadgrowth_core::Error;

use crate::pipeline::RunConfig;

/// Options shared by every subcommand. All are optional so that flags, the
/// config file and the built-in defaults can be layered in that order.
#[derive(Args, Debug, Clone, Default)]
pub struct Opts {
    /// Directory holding a generated scenario; supplies default input paths.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Road network (GeoJSON LineStrings).
    #[arg(long, global = true)]
    pub roads: Option<PathBuf>,
    #[arg(long = "grid-t0", global = true)]
    pub grid_t0: Option<PathBuf>,
    #[arg(long = "grid-t1", global = true)]
    pub grid_t1: Option<PathBuf>,
    #[arg(long = "grid-t2", global = true)]
    pub grid_t2: Option<PathBuf>,
    /// Text file listing one ASCII band grid per line.
    #[arg(long = "raster-manifest", global = true)]
    pub raster_manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    pub pbr: Option<PathBuf>,
    #[arg(long = "road-model", global = true)]
    pub road_model: Option<PathBuf>,
    #[arg(long = "road-codes", global = true)]
    pub road_codes: Option<PathBuf>,
    #[arg(long = "raster-model", global = true)]
    pub raster_model: Option<PathBuf>,
    #[arg(long = "raster-codes", global = true)]
    pub raster_codes: Option<PathBuf>,
    /// Fitted growth model.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Predicted built-up grid to evaluate.
    #[arg(long, global = true)]
    pub pred: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Road code length (twice the LSTM width); even, at least 2.
    #[arg(long = "rep-size", global = true)]
    pub rep_size: Option<usize>,
    /// Moore neighbourhood radius.
    #[arg(long, global = true)]
    pub radius: Option<usize>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long = "raster-epochs", global = true)]
    pub raster_epochs: Option<usize>,
    #[arg(long = "raster-code-len", global = true)]
    pub raster_code_len: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub batch: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
    /// Maximum points per PBR sequence.
    #[arg(long = "max-len", global = true)]
    pub max_len: Option<usize>,
    /// coupled or independent
    #[arg(long, global = true)]
    pub streams: Option<StreamLayout>,
    /// Fit a bagged forest of this many trees instead of one tree.
    #[arg(long, global = true)]
    pub trees: Option<usize>,
    /// Tree depth limit; 0 means unlimited.
    #[arg(long = "max-depth", global = true)]
    pub max_depth: Option<usize>,
    #[arg(long = "min-leaf", global = true)]
    pub min_leaf: Option<usize>,
    /// Subsample persistent cells to the number of change cells.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub balance: Option<bool>,
    /// Clip roads to the grid instead of rejecting out-of-extent roads.
    #[arg(long = "clip-roads", global = true, num_args = 0..=1, default_missing_value = "true")]
    pub clip_roads: Option<bool>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Comma-separated rep sizes for `sweep`.
    #[arg(long = "rep-sizes", global = true, value_delimiter = ',')]
    pub rep_sizes: Option<Vec<usize>>,
    /// Comma-separated modes for `sweep`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub modes: Option<Vec<Mode>>,
    /// Evaluate every this many road-encoder epochs in `sweep`.
    #[arg(long = "eval-every", global = true)]
    pub eval_every: Option<usize>,
    /// Scenario label in metric tables.
    #[arg(long, global = true)]
    pub name: Option<String>,

    // synthetic generator
    #[arg(long, global = true)]
    pub rows: Option<usize>,
    #[arg(long, global = true)]
    pub cols: Option<usize>,
    #[arg(long = "n-roads", global = true)]
    pub n_roads: Option<usize>,
    #[arg(long = "p-near", global = true)]
    pub p_near: Option<f64>,
    #[arg(long = "p-far", global = true)]
    pub p_far: Option<f64>,
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct FileArgs {
    #[command(flatten)]
    opts: Opts,
}

macro_rules! fill {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl Opts {
    /// Fills every unset option from `other`.
    pub fn fill_from(&mut self, other: Opts) {
        fill!(self, other;
            scenario, roads, grid_t0, grid_t1, grid_t2, raster_manifest, pbr, road_model, road_codes,
            raster_model, raster_codes, model, pred, out, rep_size, radius, epochs, raster_epochs,
            raster_code_len, lr, batch, seed, mode, max_len, streams, trees, max_depth, min_leaf, balance,
            clip_roads, workers, rep_sizes, modes, eval_every, name, rows, cols, n_roads, p_near, p_far,
        );
    }

    /// Reads a key=value config file. Keys are long flag names; `_` and `-`
    /// are interchangeable. `#` starts a comment line.
    pub fn from_config_file(path: &Path) -> Result<Opts> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut args = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key=value in {}", path.display()),
            })?;
            args.push(format!("--{}", key.trim().replace('_', "-")));
            args.push(value.trim().to_string());
        }
        let parsed = FileArgs::try_parse_from(&args)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), first_line(&e.to_string()))))?;
        Ok(parsed.opts)
    }

    fn scenario_file(&self, name: &str) -> Option<PathBuf> {
        self.scenario.as_ref().map(|d| d.join(name))
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn required(&self, v: &Option<PathBuf>, scenario_name: Option<&str>, flag: &str) -> Result<PathBuf> {
        let p = v
            .clone()
            .or_else(|| scenario_name.and_then(|n| self.scenario_file(n)))
            .ok_or_else(|| Error::Config(format!("missing --{flag}")))?;
        if !p.is_file() {
            return Err(Error::Validation(format!("--{flag}: no such file {}", p.display())).into());
        }
        Ok(p)
    }

    pub fn roads_path(&self) -> Result<PathBuf> {
        self.required(&self.roads, Some(roadgrowth_core::synth::ROADS_FILE), "roads")
    }

    pub fn grid_path(&self, epoch: usize) -> Result<PathBuf> {
        use roadgrowth_core::synth::{T0_FILE, T1_FILE, T2_FILE};
        let (v, name, flag) = match epoch {
            0 => (&self.grid_t0, T0_FILE, "grid-t0"),
            1 => (&self.grid_t1, T1_FILE, "grid-t1"),
            _ => (&self.grid_t2, T2_FILE, "grid-t2"),
        };
        self.required(v, Some(name), flag)
    }

    pub fn raster_path(&self) -> Result<PathBuf> {
        self.required(&self.raster_manifest, Some(roadgrowth_core::synth::RASTER_MANIFEST), "raster-manifest")
    }

    /// An intermediate artifact: the flag value, else the default file in the
    /// output directory.
    pub fn artifact(&self, v: &Option<PathBuf>, default: &str, flag: &str) -> Result<PathBuf> {
        let p = v.clone().unwrap_or_else(|| self.out_file(default));
        if !p.is_file() {
            return Err(Error::Validation(format!("--{flag}: no such file {}", p.display())).into());
        }
        Ok(p)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let d = RunConfig::default();
        let tree = TreeConfig {
            max_depth: match self.max_depth {
                None => d.tree.max_depth,
                Some(0) => None,
                Some(k) => Some(k),
            },
            min_samples_leaf: self.min_leaf.unwrap_or(d.tree.min_samples_leaf),
        };
        let cfg = RunConfig {
            mode: self.mode.unwrap_or(d.mode),
            rep_size: self.rep_size.unwrap_or(d.rep_size),
            radius: self.radius.unwrap_or(d.radius),
            epochs: self.epochs.unwrap_or(d.epochs),
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            batch_size: self.batch.unwrap_or(d.batch_size),
            seed: self.seed.unwrap_or(d.seed),
            max_len: self.max_len.unwrap_or(d.max_len),
            streams: self.streams.unwrap_or(d.streams),
            raster_code_len: self.raster_code_len.unwrap_or(d.raster_code_len),
            raster_epochs: self.raster_epochs.unwrap_or(d.raster_epochs),
            tree,
            n_trees: self.trees,
            balance: self.balance.unwrap_or(d.balance),
            extent_policy: if self.clip_roads.unwrap_or(false) {
                ExtentPolicy::Clip
            } else {
                ExtentPolicy::Error
            },
        };
        cfg.validate()?;
        if !(cfg.learning_rate > 0.0) {
            return Err(Error::Config(format!("--lr must be positive, got {}", cfg.learning_rate)).into());
        }
        Ok(cfg)
    }
}

/// Canonical key=value text of a run configuration, used for config hashes.
pub fn canonical(cfg: &RunConfig) -> Vec<(String, String)> {
    let policy = match cfg.extent_policy {
        ExtentPolicy::Error => "error",
        ExtentPolicy::Clip => "clip",
    };
    [
        ("mode", cfg.mode.to_string()),
        ("rep_size", cfg.rep_size.to_string()),
        ("radius", cfg.radius.to_string()),
        ("epochs", cfg.epochs.to_string()),
        ("learning_rate", cfg.learning_rate.to_string()),
        ("batch_size", cfg.batch_size.to_string()),
        ("seed", cfg.seed.to_string()),
        ("max_len", cfg.max_len.to_string()),
        ("streams", cfg.streams.as_str().to_string()),
        ("raster_code_len", cfg.raster_code_len.to_string()),
        ("raster_epochs", cfg.raster_epochs.to_string()),
        ("max_depth", cfg.tree.max_depth.map_or("none".to_string(), |d| d.to_string())),
        ("min_samples_leaf", cfg.tree.min_samples_leaf.to_string()),
        ("n_trees", cfg.n_trees.map_or("none".to_string(), |d| d.to_string())),
        ("balance", cfg.balance.to_string()),
        ("extent_policy", policy.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub fn first_line(s: &str) -> String {
    let line = s.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    line.strip_prefix("error: ").unwrap_or(line).to_string()
}
