use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use twostage::pipeline::{
    cmd_ablate, cmd_evaluate, cmd_ingest_check, cmd_predict, cmd_synthesize, cmd_train,
    PipelineConfig,
};
use twostage::Error;

#[derive(Parser)]
#[command(name = "twostage", version, about = "Two-stage traffic state estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    city: Option<String>,
    /// Output directory; for `synthesize`, the dataset directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Generate a synthetic city.
    Synthesize,
    /// Read and validate a dataset.
    IngestCheck,
    /// Train both stages and write the model bundle.
    Train,
    /// Predict the test snapshots.
    Predict,
    /// Score predictions on the held-out labels.
    Evaluate,
    /// Compare the two-stage pipeline with its ablations.
    Ablate,
}

fn run(cli: &Cli) -> Result<String, Error> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(city) = &cli.city {
        config.city = city.clone();
    }
    if let Some(out) = &cli.out {
        if cli.command == Command::Synthesize {
            config.data_dir = out.clone();
        } else {
            config.out_dir = out.clone();
        }
    }
    config.validate()?;

    Ok(match cli.command {
        Command::Synthesize => {
            let d = cmd_synthesize(&config)?;
            format!(
                "ok wrote {} train and {} test snapshots to {}",
                d.train.len(),
                d.test.len(),
                config.data_dir.display()
            )
        }
        Command::IngestCheck => cmd_ingest_check(&config)?,
        Command::Train => {
            let r = cmd_train(&config)?;
            format!("ok trained {} models into {}", r.members.len(), config.bundle_path().display())
        }
        Command::Predict => format!("ok predicted {} snapshots", cmd_predict(&config)?),
        Command::Evaluate => {
            let r = cmd_evaluate(&config)?;
            format!(
                "ok core_loss={:.6} extended_mae={:.3} slot_accuracy={:.4}",
                r.core_loss, r.extended_mae, r.stage1.slot.accuracy
            )
        }
        Command::Ablate => {
            let r = cmd_ablate(&config)?;
            format!(
                "ok predicted={:.6} nulled={:.6} true={:.6} baseline={:.6}",
                r.predicted_context.core_loss,
                r.nulled_context.core_loss,
                r.true_context.core_loss,
                r.encoding_baseline.core_loss
            )
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {message}", e.class());
            ExitCode::FAILURE
        }
    }
}
