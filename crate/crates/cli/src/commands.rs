//! Subcommand implementations. Every stage reads its inputs, writes its
//! artifacts into the output directory and finishes with a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::info;
use roadgrowth_core::growth::{GrowthModel, Mode};
use roadgrowth_core::index::{build_road_index, generate_pbr};
use roadgrowth_core::io::{
    parse_roads, read_builtup, read_pbr, read_raster_manifest, read_reps, write_builtup, write_index, write_pbr,
    write_pgm, write_ppm, write_reps,
};
use roadgrowth_core::metrics::{change_map, compute_areas, write_metrics_csv, ChangeClass, MetricsRow};
use roadgrowth_core::nn::Checkpoint;
use roadgrowth_core::raster_encoder::{encode_raster, PatchAutoencoder};
use roadgrowth_core::road_encoder::Sdrnnae;
use roadgrowth_core::synth::{self, SynthConfig};
use roadgrowth_core::{BuiltupGrid, Error, GeoTransform, RasterGrid, RepGrid, RoadNetwork};

use crate::config::{canonical, Opts};
use crate::manifest::Manifest;
use crate::pipeline::{self, RunConfig, Scenario};

pub const INDEX_FILE: &str = "index.txt";
pub const PRESENCE_FILE: &str = "road-presence.pgm";
pub const PBR_FILE: &str = "pbr.txt";
pub const ROAD_MODEL_FILE: &str = "road-encoder.ckpt";
pub const ROAD_LOSS_FILE: &str = "road-loss.csv";
pub const ROAD_CODES_FILE: &str = "road-codes.csv";
pub const RASTER_MODEL_FILE: &str = "raster-encoder.ckpt";
pub const RASTER_CODES_FILE: &str = "raster-codes.csv";
pub const MODEL_FILE: &str = "model.txt";
pub const PRED_FILE: &str = "pred.asc";
pub const PRED_IMAGE: &str = "pred.pgm";
pub const METRICS_FILE: &str = "metrics.csv";
pub const ERRORS_IMAGE: &str = "errors.ppm";
pub const ERRORS_DIR: &str = "errors";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn with_path<T>(r: roadgrowth_core::Result<T>, path: &Path) -> Result<T> {
    r.with_context(|| format!("in {}", path.display()))
}

fn load_roads(path: &Path) -> Result<RoadNetwork> {
    with_path(parse_roads(&read_text(path)?), path)
}

fn load_grid(path: &Path) -> Result<BuiltupGrid> {
    with_path(read_builtup(&read_text(path)?), path)
}

fn load_raster(path: &Path) -> Result<RasterGrid> {
    with_path(read_raster_manifest(path), path)
}

fn load_reps(path: &Path) -> Result<RepGrid> {
    with_path(read_reps(&read_text(path)?), path)
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    with_path(Checkpoint::read(&bytes), path)
}

fn write_out(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn out_dir(opts: &Opts) -> Result<PathBuf> {
    let dir = opts.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn builtup_image(dir: &Path, name: &str, grid: &BuiltupGrid) -> Result<PathBuf> {
    let values: Vec<f64> = grid.cells().iter().map(|c| c.indicator()).collect();
    let mut bytes = Vec::new();
    write_pgm(&mut bytes, grid.n_cols(), grid.n_rows(), &values)?;
    write_out(dir, name, bytes)
}

fn error_image(path: &Path, t0: &BuiltupGrid, t1: &BuiltupGrid, pred: &BuiltupGrid) -> Result<()> {
    let classes = change_map(t0, t1, pred)?;
    let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    write_ppm(BufWriter::new(file), t0.n_cols(), t0.n_rows(), &classes, ChangeClass::color)?;
    Ok(())
}

fn check_shape(reps: &RepGrid, gt: &GeoTransform, what: &str) -> Result<()> {
    reps.ensure_shape(gt).with_context(|| format!("{what} do not match the grid"))
}

pub fn synth(opts: &Opts) -> Result<()> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        seed: opts.seed.unwrap_or(d.seed),
        n_rows: opts.rows.unwrap_or(d.n_rows),
        n_cols: opts.cols.unwrap_or(d.n_cols),
        n_roads: opts.n_roads.unwrap_or(d.n_roads),
        p_near: opts.p_near.unwrap_or(d.p_near),
        p_far: opts.p_far.unwrap_or(d.p_far),
        ..d
    };
    cfg.validate()?;
    let dir = out_dir(opts)?;
    let scenario = synth::generate(&cfg)?;
    let mut outputs = synth::write_scenario(&dir, &scenario)?;
    outputs.sort();
    let config = [
        ("seed", cfg.seed.to_string()),
        ("n_rows", cfg.n_rows.to_string()),
        ("n_cols", cfg.n_cols.to_string()),
        ("n_roads", cfg.n_roads.to_string()),
        ("p_near", cfg.p_near.to_string()),
        ("p_far", cfg.p_far.to_string()),
    ];
    let mut m = Manifest::new("synth", config.into_iter().map(|(k, v)| (k.to_string(), v)).collect());
    for p in &outputs {
        m.output(p);
    }
    m.write(&dir)?;
    println!(
        "synth: {}x{} grid, {} roads, persistence t0->t1 {:.4}, t1->t2 {:.4}",
        cfg.n_rows,
        cfg.n_cols,
        scenario.roads.len(),
        synth::persistence(&scenario.t0, &scenario.t1)?,
        synth::persistence(&scenario.t1, &scenario.t2)?
    );
    Ok(())
}

pub fn index(opts: &Opts) -> Result<()> {
    let cfg = opts.run_config()?;
    let (roads_path, grid_path) = (opts.roads_path()?, opts.grid_path(0)?);
    let roads = load_roads(&roads_path)?;
    let gt = load_grid(&grid_path)?.transform;
    let dir = out_dir(opts)?;
    let index = build_road_index(&roads, &gt, cfg.extent_policy)?;
    let idx = write_out(&dir, INDEX_FILE, write_index(&index))?;
    let presence: Vec<f64> = index.presence().into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect();
    let mut img = Vec::new();
    write_pgm(&mut img, gt.n_cols, gt.n_rows, &presence)?;
    let img = write_out(&dir, PRESENCE_FILE, img)?;
    Manifest::new("index", canonical(&cfg))
        .input("roads", &roads_path)
        .input("grid", &grid_path)
        .output(&idx)
        .output(&img)
        .write(&dir)?;
    println!("index: {} of {} cells touched by roads", index.nonempty_count(), gt.n_cells());
    Ok(())
}

pub fn pbr(opts: &Opts) -> Result<()> {
    let cfg = opts.run_config()?;
    let (roads_path, grid_path) = (opts.roads_path()?, opts.grid_path(0)?);
    let roads = load_roads(&roads_path)?;
    let gt = load_grid(&grid_path)?.transform;
    let dir = out_dir(opts)?;
    let index = build_road_index(&roads, &gt, cfg.extent_policy)?;
    let set = generate_pbr(&index, &roads, &gt, cfg.pbr())?;
    let out = write_out(&dir, PBR_FILE, write_pbr(&set))?;
    Manifest::new("pbr", canonical(&cfg))
        .input("roads", &roads_path)
        .input("grid", &grid_path)
        .output(&out)
        .write(&dir)?;
    println!("pbr: {} sequences over {} pixels", set.n_sequences(), set.n_pixels());
    Ok(())
}

pub fn train_road(opts: &Opts) -> Result<()> {
    let cfg = opts.run_config()?;
    let pbr_path = opts.artifact(&opts.pbr, PBR_FILE, "pbr")?;
    let grid_path = opts.grid_path(0)?;
    let set = with_path(read_pbr(&read_text(&pbr_path)?), &pbr_path)?;
    let gt = load_grid(&grid_path)?.transform;
    let dir = out_dir(opts)?;
    let (model, hist) = pipeline::train_road_encoder(&set, &gt, &cfg, |_, _| {})?;
    let ckpt = write_out(&dir, ROAD_MODEL_FILE, model.to_checkpoint().to_bytes()?)?;
    let mut table = String::from("epoch,lat_loss,lon_loss\n");
    for (e, (a, b)) in hist.lat.iter().zip(&hist.lon).enumerate() {
        table.push_str(&format!("{},{a},{b}\n", e + 1));
    }
    let loss = write_out(&dir, ROAD_LOSS_FILE, table)?;
    Manifest::new("train-road", canonical(&cfg))
        .input("pbr", &pbr_path)
        .input("grid", &grid_path)
        .output(&ckpt)
        .output(&loss)
        .write(&dir)?;
    println!("train-road: rep size {}, {} epochs", model.rep_size(), cfg.epochs);
    Ok(())
}

pub fn encode_road(opts: &Opts) -> Result<()> {
    let cfg = opts.run_config()?;
    let pbr_path = opts.artifact(&opts.pbr, PBR_FILE, "pbr")?;
    let model_path = opts.artifact(&opts.road_model, ROAD_MODEL_FILE, "road-model")?;
    let grid_path = opts.grid_path(0)?;
    let set = with_path(read_pbr(&read_text(&pbr_path)?), &pbr_path)?;
    let model = with_path(Sdrnnae::from_checkpoint(&load_checkpoint(&model_path)?), &model_path)?;
    let gt = load_grid(&grid_path)?.transform;
    let dir = out_dir(opts)?;
    let codes = model.encode_pixels(&set, gt.n_rows, gt.n_cols)?;
    let out = write_out(&dir, ROAD_CODES_FILE, write_reps(&codes))?;
    Manifest::new("encode-road", canonical(&cfg))
        .input("pbr", &pbr_path)
        .input("road_model", &model_path)
        .input("grid", &grid_path)
        .output(&out)
        .write(&dir)?;
    println!("encode-road: {} values per cell", codes.dim);
    Ok(())
}

/// The raster as the encoder sees it in the configured mode.
fn mode_raster(opts: &Opts, cfg: &RunConfig, m: &mut Manifest) -> Result<RasterGrid> {
    let raster_path = opts.raster_path()?;
    m.input("raster", &raster_path);
    let raster = load_raster(&raster_path)?;
    let roads = if cfg.mode == Mode::BaselineRaster {
        let p = opts.roads_path()?;
        m.input("roads", &p);
        load_roads(&p)?
    } else {
        RoadNetwork::default()
    };
    Ok(pipeline::mode_raster(&raster, &roads, cfg.mode, cfg.extent_policy)?)
}

pub fn train_raster(opts: &Opts) -> Result<()> {
    let cfg = opts.run_config()?;
    let mut m = Manifest::new("train-raster", canonical(&cfg));
    let raster = mode_raster(opts, &cfg, &mut m)?;
    let dir = out_dir(opts)?;
    let ae = pipeline::train_raster_encoder(&raster, &cfg)?;
    let ckpt = ae.to_checkpoint().with_meta("mode", cfg.mode);
    let out = write_out(&dir, RASTER_MODEL_FILE, ckpt.to_bytes()?)?;
    m.output(&out).write(&dir)?;
    println!(
        "train-raster: {} bands, code length {}, mean loss {:.6}",
        raster.n_bands(),
        ae.code_len(),
        ae.mean_loss(&roadgrowth_core::raster_encoder::extract_patches(&raster, ae.radius))?
    );
    Ok(())
}

pub fn encode_raster_cmd(opts: &Opts) -> Result<()> {
    let cfg = opts.run_config()?;
    let mut m = Manifest::new("encode-raster", canonical(&cfg));
    let model_path = opts.artifact(&opts.raster_model, RASTER_MODEL_FILE, "raster-model")?;
    m.input("raster_model", &model_path);
    let ckpt = load_checkpoint(&model_path)?;
    if let Ok(mode) = ckpt.meta_value::<String>("mode") {
        if mode != cfg.mode.as_str() {
            return Err(Error::Validation(format!(
                "raster encoder was trained for mode {mode}, not {}",
                cfg.mode
            ))
            .into());
        }
    }
    let ae = with_path(PatchAutoencoder::from_checkpoint(&ckpt), &model_path)?;
    let raster = mode_raster(opts, &cfg, &mut m)?;
    let dir = out_dir(opts)?;
    let codes = encode_raster(&ae, &raster)?;
    let out = write_out(&dir, RASTER_CODES_FILE, write_reps(&codes))?;
    m.output(&out).write(&dir)?;
    println!("encode-raster: {} values per cell", codes.dim);
    Ok(())
}

/// Road codes when the mode uses them.
fn road_codes(opts: &Opts, needed: bool, gt: &GeoTransform, m: &mut Manifest) -> Result<Option<RepGrid>> {
    if !needed {
        return Ok(None);
    }
    let p = opts.artifact(&opts.road_codes, ROAD_CODES_FILE, "road-codes")?;
    m.input("road_codes", &p);
    let codes = load_reps(&p)?;
    check_shape(&codes, gt, "road codes")?;
    Ok(Some(codes))
}

fn raster_codes(opts: &Opts, gt: &GeoTransform, m: &mut Manifest) -> Result<RepGrid> {
    let p = opts.artifact(&opts.raster_codes, RASTER_CODES_FILE, "raster-codes")?;
    m.input("raster_codes", &p);
    let codes = load_reps(&p)?;
    check_shape(&codes, gt, "raster codes")?;
    Ok(codes)
}

pub fn fit(opts: &Opts) -> Result<()> {
    let cfg = opts.run_config()?;
    let mut m = Manifest::new("fit", canonical(&cfg));
    let (p0, p1) = (opts.grid_path(0)?, opts.grid_path(1)?);
    m.input("t0", &p0).input("t1", &p1);
    let (t0, t1) = (load_grid(&p0)?, load_grid(&p1)?);
    t0.ensure_aligned(&t1)?;
    let raster = raster_codes(opts, &t0.transform, &mut m)?;
    let road = road_codes(opts, cfg.mode.uses_road_codes(), &t0.transform, &mut m)?;
    let dir = out_dir(opts)?;
    let model = pipeline::fit_growth_model(&t0, &t1, &raster, road.as_ref(), &cfg)?;
    let out = write_out(&dir, MODEL_FILE, model.to_text())?;
    m.output(&out).write(&dir)?;
    println!("fit: {} features", model.layout.len());
    Ok(())
}

pub fn simulate(opts: &Opts) -> Result<()> {
    let cfg = opts.run_config()?;
    let mut m = Manifest::new("simulate", canonical(&cfg));
    let start = opts.grid_path(1)?;
    let model_path = opts.artifact(&opts.model, MODEL_FILE, "model")?;
    m.input("start", &start).input("model", &model_path);
    let grid = load_grid(&start)?;
    let model = with_path(GrowthModel::from_text(&read_text(&model_path)?), &model_path)?;
    let raster = raster_codes(opts, &grid.transform, &mut m)?;
    let road = road_codes(opts, model.layout.road_len > 0, &grid.transform, &mut m)?;
    let dir = out_dir(opts)?;
    let pred = pipeline::simulate(&grid, &model, &raster, road.as_ref(), model.layout.radius)?;
    let out = write_out(&dir, PRED_FILE, write_builtup(&pred)?)?;
    let img = builtup_image(&dir, PRED_IMAGE, &pred)?;
    m.output(&out).output(&img).write(&dir)?;
    println!(
        "simulate: {} built-up cells -> {}",
        grid.builtup_count(),
        pred.builtup_count()
    );
    Ok(())
}

pub fn evaluate(opts: &Opts) -> Result<()> {
    let cfg = opts.run_config()?;
    let mut m = Manifest::new("evaluate", canonical(&cfg));
    let (p1, p2) = (opts.grid_path(1)?, opts.grid_path(2)?);
    let pp = opts.artifact(&opts.pred, PRED_FILE, "pred")?;
    m.input("start", &p1).input("observed", &p2).input("pred", &pp);
    let (t1, t2, pred) = (load_grid(&p1)?, load_grid(&p2)?, load_grid(&pp)?);
    let areas = compute_areas(&t1, &t2, &pred)?;
    let dir = out_dir(opts)?;
    let row = MetricsRow {
        scenario: opts.name.clone().unwrap_or_else(|| "scenario".into()),
        rep_size: cfg.rep_size,
        epoch: cfg.epochs,
        method: cfg.mode.to_string(),
        scores: areas.scores(),
    };
    let csv = write_out(&dir, METRICS_FILE, write_metrics_csv(std::slice::from_ref(&row)))?;
    let img = dir.join(ERRORS_IMAGE);
    error_image(&img, &t1, &t2, &pred)?;
    m.output(&csv).output(&img).write(&dir)?;
    let f = roadgrowth_core::metrics::format_metric;
    println!(
        "evaluate: A={} B={} C={} D={} E={} FoM={} PA={} UA={} OA={}",
        areas.a,
        areas.b,
        areas.c,
        areas.d,
        areas.e,
        f(row.scores.fom),
        f(row.scores.pa),
        f(row.scores.ua),
        f(row.scores.oa)
    );
    Ok(())
}

/// Epochs at which the sweep scores the road encoder.
pub fn checkpoints(epochs: usize, every: usize) -> Vec<usize> {
    if epochs == 0 {
        return vec![0];
    }
    let every = every.max(1);
    let mut v: Vec<usize> = (every..=epochs).step_by(every).collect();
    if v.last() != Some(&epochs) {
        v.push(epochs);
    }
    v
}

pub fn sweep(opts: &Opts) -> Result<()> {
    let base = opts.run_config()?;
    let rep_sizes = opts.rep_sizes.clone().unwrap_or_else(|| vec![base.rep_size]);
    let mut modes = opts.modes.clone().unwrap_or_else(|| Mode::ALL.to_vec());
    modes.sort();
    modes.dedup();
    for &r in &rep_sizes {
        RunConfig { rep_size: r, ..base.clone() }.validate()?;
    }
    let every = opts.eval_every.unwrap_or(base.epochs);
    if every == 0 {
        return Err(Error::Config("--eval-every must be at least 1".into()).into());
    }
    let epochs = checkpoints(base.epochs, every);
    let name = opts.name.clone().unwrap_or_else(|| "scenario".into());

    let mut m = Manifest::new("sweep", {
        let mut c = canonical(&base);
        c.push(("rep_sizes".into(), format!("{rep_sizes:?}")));
        c.push(("modes".into(), modes.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(",")));
        c.push(("eval_every".into(), every.to_string()));
        c
    });
    let roads_path = opts.roads_path()?;
    let grid_paths = [opts.grid_path(0)?, opts.grid_path(1)?, opts.grid_path(2)?];
    let raster_path = opts.raster_path()?;
    m.input("roads", &roads_path)
        .input("t0", &grid_paths[0])
        .input("t1", &grid_paths[1])
        .input("t2", &grid_paths[2])
        .input("raster", &raster_path);
    let roads = load_roads(&roads_path)?;
    let [t0, t1, t2] = [0, 1, 2].map(|k| load_grid(&grid_paths[k]));
    let (t0, t1, t2) = (t0?, t1?, t2?);
    t0.ensure_aligned(&t1)?;
    t0.ensure_aligned(&t2)?;
    let raster = load_raster(&raster_path)?;
    let gt = t0.transform;
    let s = Scenario { roads: &roads, t0: &t0, t1: &t1, t2: &t2, raster: &raster };

    let dir = out_dir(opts)?;
    let err_dir = dir.join(ERRORS_DIR);
    fs::create_dir_all(&err_dir).with_context(|| format!("creating {}", err_dir.display()))?;

    // (epoch, rep_size, mode) -> (prediction, scores)
    let mut results: BTreeMap<(usize, usize, Mode), (BuiltupGrid, roadgrowth_core::metrics::Scores)> = BTreeMap::new();
    for &mode in &modes {
        let cfg = RunConfig { mode, ..base.clone() };
        let raster_codes = pipeline::raster_codes(&raster, &roads, &cfg)?;
        if !mode.uses_road_codes() {
            let (pred, areas) = pipeline::run_with_codes(&s, &raster_codes, None, &cfg)?;
            for &e in &epochs {
                for &r in &rep_sizes {
                    results.insert((e, r, mode), (pred.clone(), areas.scores()));
                }
            }
            continue;
        }
        let pbr = pipeline::extract_pbr(&roads, &gt, &cfg)?;
        for &r in &rep_sizes {
            let cfg = RunConfig { rep_size: r, ..cfg.clone() };
            let mut codes_at: Vec<(usize, roadgrowth_core::Result<RepGrid>)> = Vec::new();
            let (model, _) = pipeline::train_road_encoder(&pbr, &gt, &cfg, |e, enc| {
                if epochs.contains(&e) {
                    codes_at.push((e, enc.encode_pixels(&pbr, gt.n_rows, gt.n_cols)));
                }
            })?;
            if epochs.contains(&0) {
                codes_at.push((0, model.encode_pixels(&pbr, gt.n_rows, gt.n_cols)));
            }
            for (e, codes) in codes_at {
                let codes = codes?;
                let (pred, areas) = pipeline::run_with_codes(&s, &raster_codes, Some(&codes), &cfg)?;
                info!("sweep: rep {r} epoch {e} FoM {:?}", areas.fom());
                results.insert((e, r, mode), (pred, areas.scores()));
            }
        }
    }

    let mut rows = Vec::with_capacity(results.len());
    for ((epoch, rep_size, mode), (pred, scores)) in &results {
        let img = err_dir.join(format!("errors-r{rep_size}-e{epoch}-{mode}.ppm"));
        error_image(&img, &t1, &t2, pred)?;
        m.output(&img);
        rows.push(MetricsRow {
            scenario: name.clone(),
            rep_size: *rep_size,
            epoch: *epoch,
            method: mode.to_string(),
            scores: *scores,
        });
    }
    let csv = write_out(&dir, METRICS_FILE, write_metrics_csv(&rows))?;
    m.output(&csv).write(&dir)?;
    for row in &rows {
        println!(
            "sweep: rep {} epoch {} {} FoM {}",
            row.rep_size,
            row.epoch,
            row.method,
            roadgrowth_core::metrics::format_metric(row.scores.fom)
        );
    }
    Ok(())
}
