//! `pitchnet` command-line frontend.
//!
//! Exit codes: 0 when all requested work completed, 1 on a fatal error,
//! 2 on a usage error, 3 when some items failed (listed on stderr) but the
//! rest were processed and written.

mod commands;
mod echo;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "pitchnet", version, about = "Monophonic pitch estimation toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Root seed; every subsystem derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores). 1 runs everything sequentially and
    /// bit-reproducibly.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Progress output on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus (WAV + f0 CSV per track, manifest.json).
    Synth(SynthArgs),
    /// Add noise at a fixed SNR to every track of a corpus.
    Degrade(DegradeArgs),
    /// Train a network on one fold of a corpus.
    Train(TrainArgs),
    /// Run a trained network on a WAV file or a directory of WAV files.
    Predict(PredictArgs),
    /// Run the YIN-lite baseline on a WAV file or directory.
    PredictYin(PredictYinArgs),
    /// Score estimate CSVs against reference CSVs.
    Eval(EvalArgs),
    /// RPA@50 over the SNR ladder for each noise kind.
    Robustness(RobustnessArgs),
    /// Magnitude spectra of the first-layer filters.
    InspectFilters(InspectArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// Corpus profile JSON; the built-in sine-corpus when omitted.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Use the profile's own seed instead of --seed.
    #[arg(long)]
    pub keep_profile_seed: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DegradeArgs {
    /// Corpus directory (containing manifest.json) or manifest path.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// white, pink, brown or file:PATH
    #[arg(long, value_parser = parse_noise)]
    pub noise: String,
    /// Target SNR in dB; `inf` copies the input unchanged.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset manifest (or the directory holding it).
    #[arg(long)]
    pub data: PathBuf,
    /// Network config JSON, or one of the built-in names `toy`, `full`.
    #[arg(long, default_value = "toy")]
    pub config: String,
    /// Training profile: paper or toy.
    #[arg(long, default_value = "toy")]
    pub profile: String,
    #[arg(long, default_value_t = 0)]
    pub fold: usize,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// ADAM learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Override the profile's epoch cap.
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Output model directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// WAV file or directory of WAV files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// CSV file (for a single input) or directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Hop between frames in milliseconds.
    #[arg(long, default_value_t = 10.0)]
    pub hop: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictYinArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub hop: f64,
    /// CMNDF dip threshold.
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Directory of reference `time_sec,frequency_hz` CSVs.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Directory of estimate CSVs with matching file names.
    #[arg(long)]
    pub est: PathBuf,
    /// Comma-separated cent thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = [50.0, 25.0, 10.0])]
    pub thresholds: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RobustnessArgs {
    /// Trained model; required unless --yin.
    #[arg(long, required_unless_present = "yin")]
    pub model: Option<PathBuf>,
    /// Evaluate the YIN-lite baseline instead of a model.
    #[arg(long)]
    pub yin: bool,
    /// Clean corpus (manifest or its directory).
    #[arg(long)]
    pub data: PathBuf,
    /// Only the test split of this fold (all tracks when omitted).
    #[arg(long)]
    pub fold: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Comma-separated noise kinds.
    #[arg(long, value_delimiter = ',', value_parser = parse_noise, default_values_t = ["white".to_string(), "pink".to_string(), "brown".to_string()])]
    pub noise: Vec<String>,
    #[arg(long, default_value_t = 10.0)]
    pub hop: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_noise(s: &str) -> Result<String, String> {
    pitchnet::datagen::NoiseKind::parse(s)
        .map(|_| s.to_string())
        .map_err(|e| e.to_string())
}

/// What a command reports back to `main`.
pub enum Outcome {
    Done,
    /// Items that failed while the rest completed.
    Partial(Vec<(String, String)>),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = setup_threads(cli.global.threads) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let g = &cli.global;
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(g, a),
        Command::Degrade(a) => commands::degrade(g, a),
        Command::Train(a) => commands::train(g, a),
        Command::Predict(a) => commands::predict(g, a),
        Command::PredictYin(a) => commands::predict_yin(g, a),
        Command::Eval(a) => commands::eval(g, a),
        Command::Robustness(a) => commands::robustness(g, a),
        Command::InspectFilters(a) => commands::inspect_filters(g, a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(failed)) => {
            for (item, msg) in &failed {
                eprintln!("failed: {item}: {msg}");
            }
            eprintln!("{} item(s) failed", failed.len());
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn setup_threads(threads: usize) -> anyhow::Result<()> {
    if threads == 1 {
        pitchnet::par::set_enabled(false);
    }
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}
