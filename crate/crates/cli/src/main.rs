use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use roadgrowth_cli::commands;
use roadgrowth_cli::config::{first_line, Opts};

#[derive(Parser, Debug)]
#[command(name = "roadgrowth", version, about = "Road-aware cellular-automaton urban growth pipeline")]
struct Cli {
    /// key=value file supplying defaults for any long option.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    opts: Opts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Generate a synthetic scenario (roads, three built-up epochs, raster).
    Synth,
    /// Build the per-pixel road lookup table.
    Index,
    /// Extract per-pixel road coordinate sequences.
    Pbr,
    /// Train the road sequence autoencoders.
    TrainRoad,
    /// Encode every pixel's road sequences into a fixed-length code.
    EncodeRoad,
    /// Train the raster patch autoencoder.
    TrainRaster,
    /// Encode every pixel's raster patch.
    EncodeRaster,
    /// Fit the transition classifier on t0 -> t1.
    Fit,
    /// Advance the t1 map by one step.
    Simulate,
    /// Score a prediction against the observed t2 map.
    Evaluate,
    /// Metrics over rep sizes, training epochs and modes.
    Sweep,
}

fn run(cli: Cli) -> Result<()> {
    let mut opts = cli.opts;
    if let Some(path) = &cli.config {
        opts.fill_from(Opts::from_config_file(path)?);
    }
    if let Some(n) = opts.workers {
        if n == 0 {
            return Err(roadgrowth_core::Error::Config("--workers must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Synth => commands::synth(&opts),
        Command::Index => commands::index(&opts),
        Command::Pbr => commands::pbr(&opts),
        Command::TrainRoad => commands::train_road(&opts),
        Command::EncodeRoad => commands::encode_road(&opts),
        Command::TrainRaster => commands::train_raster(&opts),
        Command::EncodeRaster => commands::encode_raster_cmd(&opts),
        Command::Fit => commands::fit(&opts),
        Command::Simulate => commands::simulate(&opts),
        Command::Evaluate => commands::evaluate(&opts),
        Command::Sweep => commands::sweep(&opts),
    }
}

/// Exit code and error kind: 2 for bad input or configuration, 1 otherwise.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<roadgrowth_core::Error>() {
            return if e.is_validation() { (2, "validation") } else { (1, "io") };
        }
    }
    (1, "runtime")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error kind=usage code=2 msg={:?}", first_line(&e.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = classify(&e);
            eprintln!("error kind={kind} code={code} msg={:?}", format!("{e:#}"));
            ExitCode::from(code)
        }
    }
}
