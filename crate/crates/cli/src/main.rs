use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Bengali image captioning: fixtures, training, decoding and evaluation.
///
/// Every flag can also be set through an environment variable named
/// `CAPGEN_<FLAG>`; an explicit flag wins.
#[derive(Parser, Debug)]
#[command(name = "capgen", version)]
struct Cli {
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic feature file and caption file.
    Fixture(FixtureArgs),
    /// Train a model and write a checkpoint plus a loss/accuracy CSV.
    Train(TrainArgs),
    /// Caption one image.
    Caption(CaptionArgs),
    /// Score generated captions against references with BLEU and METEOR.
    Evaluate(EvaluateArgs),
    /// Compare backpropagated gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
struct FixtureArgs {
    /// Output directory (created if missing).
    #[arg(long, env = "CAPGEN_OUT")]
    out: PathBuf,
    #[arg(long, env = "CAPGEN_IMAGES", default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    images: u32,
    #[arg(long, env = "CAPGEN_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SplitPart {
    Train,
    Test,
    Validation,
    All,
}

impl SplitPart {
    fn name(self) -> &'static str {
        match self {
            SplitPart::Train => "train",
            SplitPart::Test => "test",
            SplitPart::Validation => "validation",
            SplitPart::All => "all",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, env = "CAPGEN_FEATURES")]
    features: PathBuf,
    #[arg(long, env = "CAPGEN_CAPTIONS")]
    captions: PathBuf,
    /// Checkpoint path; curves go next to it with a `.csv` extension.
    #[arg(long, env = "CAPGEN_OUT")]
    out: PathBuf,
    #[arg(long, env = "CAPGEN_EPOCHS", default_value_t = 100)]
    epochs: usize,
    #[arg(long, env = "CAPGEN_HIDDEN", default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    hidden: u32,
    #[arg(long, env = "CAPGEN_EMBED", default_value_t = 300, value_parser = clap::value_parser!(u32).range(1..))]
    embed: u32,
    #[arg(long, env = "CAPGEN_LR", default_value_t = 1e-3)]
    lr: f64,
    /// Seeds weight initialization and batch shuffling.
    #[arg(long, env = "CAPGEN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "CAPGEN_BATCH_SIZE", default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    batch_size: u32,
    #[arg(long, env = "CAPGEN_OPTIMIZER", value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    /// Global gradient-norm ceiling; 0 disables clipping.
    #[arg(long, env = "CAPGEN_CLIP", default_value_t = 5.0)]
    clip: f64,
    /// Longest caption in words.
    #[arg(long, env = "CAPGEN_MAX_LEN", default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    max_len: u32,
    /// Words seen fewer times become `<unk>`.
    #[arg(long, env = "CAPGEN_MIN_COUNT", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    min_count: u32,
    /// Which part of the 6:1:1 split to train on.
    #[arg(long, env = "CAPGEN_SPLIT", value_enum, default_value_t = SplitPart::Train)]
    split: SplitPart,
    #[arg(long, env = "CAPGEN_SPLIT_SEED", default_value_t = 0)]
    split_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Forward,
    Backward,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScoringArg {
    MeanLog,
    ArithMean,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    /// Beam width.
    #[arg(long, env = "CAPGEN_BEAM", default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..), conflicts_with = "greedy")]
    beam: u32,
    /// Argmax decoding instead of beam search.
    #[arg(long, env = "CAPGEN_GREEDY")]
    greedy: bool,
    #[arg(long, env = "CAPGEN_DIRECTION", value_enum, default_value_t = DirectionArg::Both)]
    direction: DirectionArg,
    /// How finished sentences are ranked.
    #[arg(long, env = "CAPGEN_SCORING", value_enum, default_value_t = ScoringArg::MeanLog)]
    scoring: ScoringArg,
}

#[derive(Args, Debug)]
struct CaptionArgs {
    #[arg(long, env = "CAPGEN_CHECKPOINT")]
    checkpoint: PathBuf,
    #[arg(long, env = "CAPGEN_FEATURES")]
    features: PathBuf,
    /// Image id as stored in the feature file.
    #[arg(long, env = "CAPGEN_ID")]
    id: String,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long, env = "CAPGEN_CHECKPOINT")]
    checkpoint: PathBuf,
    #[arg(long, env = "CAPGEN_FEATURES")]
    features: PathBuf,
    #[arg(long, env = "CAPGEN_CAPTIONS")]
    captions: PathBuf,
    #[arg(long, env = "CAPGEN_SPLIT", value_enum, default_value_t = SplitPart::Test)]
    split: SplitPart,
    /// Defaults to the split seed recorded in the checkpoint.
    #[arg(long, env = "CAPGEN_SPLIT_SEED")]
    split_seed: Option<u64>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, env = "CAPGEN_SEED", default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds to check, starting at `--seed`.
    #[arg(long, env = "CAPGEN_RUNS", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let result = match cli.command {
        Command::Fixture(a) => commands::fixture(a),
        Command::Train(a) => commands::train(a),
        Command::Caption(a) => commands::caption(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
