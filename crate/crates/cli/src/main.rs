//! `tonal-hmm`: fit the chord and key layers, annotate and evaluate.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::InputError;

#[derive(Parser, Debug)]
#[command(
    name = "tonal-hmm",
    version,
    about = "Chord and key analysis with transposition-tied HMMs"
)]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the chord layer and decode chord tracks.
    FitChords(FitChordsArgs),
    /// Fit the key layer on decoded chord tracks.
    FitKeys(FitKeysArgs),
    /// Translate decoded labels into Roman-numeral annotations.
    Annotate(AnnotateArgs),
    /// Compare tracks and annotations with human annotations.
    Evaluate(EvaluateArgs),
    /// Corpus statistics from tracks and annotations.
    Stats(StatsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    /// Directory of work files (or a single work file).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Emit each distinct pitch class once per step instead of once per voice.
    #[arg(long)]
    pub distinct_pcs: bool,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory for every artifact.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// Random restarts.
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Convergence threshold on the largest relative parameter change.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
}

#[derive(Args, Debug)]
pub struct FitChordsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 3)]
    pub chord_types: usize,
}

#[derive(Args, Debug)]
pub struct FitKeysArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 2)]
    pub key_types: usize,
}

#[derive(Args, Debug)]
pub struct AnnotateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// 1 plain triads (raw/), 2 bass, sevenths and suspensions (standard/),
    /// 3 method 2 plus in-beat pruning (pruned/).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub method: u8,
    /// Largest key region, in chord spans, absorbed when smoothing keys.
    #[arg(long, default_value_t = 2)]
    pub region_max: usize,
    /// Progression table for method 3; built from method-2 output if absent.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// Directory of human annotations, one `<work_id>.txt` per work.
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Key-change misplacements of up to this many steps are not penalized.
    #[arg(long, default_value_t = 2)]
    pub key_slack: usize,
    #[arg(long, default_value_t = 2)]
    pub region_max: usize,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Annotations to describe; defaults to the method-2 output.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub min_chord_pct: f64,
    #[arg(long, default_value_t = 0.75)]
    pub min_trans_pct: f64,
    /// Smallest number of occurrences for a doubling row.
    #[arg(long, default_value_t = 40)]
    pub min_count: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::FitChords(a) => commands::fit_chords(&a),
        Command::FitKeys(a) => commands::fit_keys(&a),
        Command::Annotate(a) => commands::annotate(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Stats(a) => commands::stats(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
