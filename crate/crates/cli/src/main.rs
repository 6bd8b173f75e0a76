mod commands;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "beamkit", version, about = "Band-aligned nearest-neighbour anomaly scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Run-configuration sources shared by the commands. Flags take precedence
/// over `--set`, which takes precedence over the config file.
#[derive(Args, Clone, Default)]
pub struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `key=value` override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// tmean, tmax or both.
    #[arg(long)]
    pub views: Option<String>,
    /// Comma-separated LDN neighbourhood sizes; 0 scores raw band distances.
    #[arg(long = "K", value_name = "K[,K...]")]
    pub k: Option<String>,
    /// Band window and stride as `C,s` (or just `C`).
    #[arg(long)]
    pub band: Option<String>,
    /// average, maximum or minimum.
    #[arg(long)]
    pub agg: Option<String>,
    /// mean, max, min or off.
    #[arg(long)]
    pub dmm: Option<String>,
    #[arg(long = "pauc-p")]
    pub pauc_p: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Test,
    Train,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum RegimeArg {
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SynthKind {
    Wave,
    Features,
}

#[derive(Subcommand)]
enum Command {
    /// Extract clip vectors into a feature cache (`<clip_id>.<view>.f32`).
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Build one memory bank per view from the training clips.
    BuildBank {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Score clips against the banks and write the score CSV.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Directory holding `bank.<view>.bin`.
        #[arg(long)]
        bank: PathBuf,
        /// Score CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// AUC, pAUC and official scores of one score column.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// S_glob, S_uni, S_sub, S_norm_sub or S_dmm.
        #[arg(long)]
        column: Option<String>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Variance, mean-gap and d′ diagnostics from a score CSV.
    Diagnose {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        regimes: RegimeArg,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Diagnostics and official scores across band sizes (stride = size).
    SweepBands {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Comma-separated band sizes.
        #[arg(long)]
        sizes: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        regimes: RegimeArg,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Official scores across the `--K` values.
    SweepK {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Per-clip latency of each frontend.
    Bench {
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 500)]
        bank_size: usize,
        /// Optional JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Write a deterministic synthetic corpus and its manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "wave")]
        kind: SynthKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        refs: usize,
        #[arg(long, default_value_t = 10)]
        normal: usize,
        #[arg(long, default_value_t = 10)]
        anomalous: usize,
        /// Clip length of the wave corpus.
        #[arg(long, default_value_t = 1.0)]
        seconds: f64,
        /// Feature length of the feature corpus.
        #[arg(long, default_value_t = 128)]
        dim: usize,
        /// True band count of the feature corpus.
        #[arg(long, default_value_t = 8)]
        bands: usize,
    },
}

fn run(cli: Cli) -> beamkit::Result<()> {
    beamkit::parallel::init_from_env()?;
    use commands::*;
    match cli.command {
        Command::Extract { manifest, out, cfg } => extract(&manifest, &out, &cfg),
        Command::BuildBank {
            manifest,
            features,
            out,
            cfg,
        } => build_bank(&manifest, &features, &out, &cfg),
        Command::Score {
            manifest,
            features,
            bank,
            out,
            split,
            cfg,
        } => score(&manifest, &features, &bank, &out, split, &cfg),
        Command::Eval {
            manifest,
            scores,
            out,
            column,
            cfg,
        } => eval(&manifest, &scores, &out, column.as_deref(), &cfg),
        Command::Diagnose {
            manifest,
            scores,
            out,
            regimes,
            cfg,
        } => diagnose(&manifest, &scores, &out, regimes, &cfg),
        Command::SweepBands {
            manifest,
            features,
            sizes,
            out,
            regimes,
            cfg,
        } => sweep_bands(&manifest, &features, &sizes, &out, regimes, &cfg),
        Command::SweepK {
            manifest,
            features,
            out,
            cfg,
        } => sweep_k(&manifest, &features, &out, &cfg),
        Command::Bench {
            runs,
            bank_size,
            out,
            cfg,
        } => bench(runs, bank_size, out.as_deref(), &cfg),
        Command::Synth {
            out,
            kind,
            seed,
            refs,
            normal,
            anomalous,
            seconds,
            dim,
            bands,
        } => synth(&out, kind, seed, [refs, normal, anomalous], seconds, dim, bands),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
