//! `sbkit` — train a small speech detector over embedding sequences,
//! explain it with a mask-gated sparse dictionary, and relate dictionary
//! entries to interpretable acoustic features.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use sbkit_core::CoreError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sbkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Plain-text config file with [command] sections of key = value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, repeatable: --set key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Random seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sections (1 = sequential, 0 = all cores).
    #[arg(short = 'j', long = "jobs", default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted factors.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Output directory (created; refuses to overwrite without --force).
        #[arg(long)]
        out: PathBuf,
        /// Corpus kind: embedding or wav.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        force: bool,
    },
    /// Extract the acoustic feature CSV from a wav manifest.
    ExtractFeatures {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the detection head on a manifest.
    TrainDetector {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        /// Optional held-out manifest evaluated after training.
        #[arg(long)]
        eval_manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a trained detector and export pooled vectors plus attention traces.
    ExportPooled {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the sparse dictionary on exported pooled vectors.
    TrainSae {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pooled: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Dictionary activation: mask or relu.
        #[arg(long)]
        activation: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Train the full lambda x activation x seed grid and emit the frontier CSV.
    SweepLambda {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pooled: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate dictionary activations with features and predictions.
    Correlate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sae: PathBuf,
        #[arg(long)]
        detector: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional per-subject covariate CSV (subject_id,covariate_name,value).
        #[arg(long)]
        covariate_csv: Option<PathBuf>,
    },
    /// Per-sample attention/energy cross-correlation report.
    AttentionReport {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        detector: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference check of every model gradient.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Test hook: corrupt one analytic gradient to prove detection.
        #[arg(long, hide = true)]
        inject_error: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth {
            common,
            out,
            kind,
            force,
        } => commands::synth::run(&common, &out, kind.as_deref(), force),
        Command::ExtractFeatures {
            common,
            manifest,
            out,
        } => commands::extract::run(&common, &manifest, &out),
        Command::TrainDetector {
            common,
            manifest,
            eval_manifest,
            out,
        } => commands::train_detector::run(&common, &manifest, eval_manifest.as_deref(), &out),
        Command::ExportPooled {
            common,
            checkpoint,
            manifest,
            out,
        } => commands::export_pooled::run(&common, &checkpoint, &manifest, &out),
        Command::TrainSae {
            common,
            pooled,
            out,
            activation,
            lambda,
        } => commands::train_sae::run(&common, &pooled, &out, activation.as_deref(), lambda),
        Command::SweepLambda {
            common,
            pooled,
            out,
        } => commands::sweep::run(&common, &pooled, &out),
        Command::Correlate {
            common,
            sae,
            detector,
            features,
            manifest,
            out,
            covariate_csv,
        } => commands::correlate::run(
            &common,
            &sae,
            &detector,
            &features,
            &manifest,
            &out,
            covariate_csv.as_deref(),
        ),
        Command::AttentionReport {
            common,
            detector,
            manifest,
            out,
        } => commands::attention::run(&common, &detector, &manifest, &out),
        Command::Gradcheck {
            common,
            inject_error,
        } => commands::gradcheck::run(&common, inject_error),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CoreError::Numeric(_) | CoreError::Optimizer { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
