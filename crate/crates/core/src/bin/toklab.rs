use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toklab::harness::{write_summary, ExperimentConfig, Harness, RunOptions};
use toklab::Error;

#[derive(Parser)]
#[command(
    name = "toklab",
    version,
    about = "Tokenizer comparison and cross-lingual NER transfer experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML, or JSON when the extension is .json)
    #[arg(long)]
    config: PathBuf,
    /// Overrides ner.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing outputs
    #[arg(long)]
    force: bool,
    /// Also run the character tokenizer through tagger training and evaluation
    #[arg(long)]
    include_char: bool,
    /// Allow inputs produced under a different config hash
    #[arg(long)]
    mixed: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured tokenizer
    TrainTok(Common),
    /// Intrinsic metrics for each tokenizer on each intrinsic corpus
    EvalIntrinsic(Common),
    /// Train one tagger per tokenizer on the NER source language
    NerTrain(Common),
    /// Evaluate trained taggers on every NER target language
    NerEval(Common),
    /// ner-train followed by ner-eval
    Zeroshot(Common),
    /// Write summary.md for an output directory
    Report {
        /// Take the output directory from this config
        #[arg(long, required_unless_present = "output_dir")]
        config: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        mixed: bool,
    },
}

fn harness(c: &Common) -> Result<Harness, Error> {
    let config = ExperimentConfig::load(&c.config)?;
    Harness::new(
        config,
        RunOptions {
            force: c.force,
            include_char: c.include_char,
            mixed: c.mixed,
            seed: c.seed,
        },
    )
}

fn run(command: Command) -> Result<(), Error> {
    let started = std::time::Instant::now();
    match command {
        Command::Report {
            config,
            output_dir,
            force,
            mixed,
        } => {
            let dir = match (output_dir, config) {
                (Some(d), _) => d,
                (None, Some(c)) => ExperimentConfig::load(c)?.output_dir(),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let _lock = toklab::harness::OutputLock::acquire(&dir)?;
            let path = write_summary(&dir, force, mixed)?;
            println!("{}", path.display());
        }
        Command::TrainTok(c) => {
            let h = harness(&c)?;
            let _lock = h.lock()?;
            for p in h.train_tokenizers()? {
                println!("{}", p.display());
            }
        }
        Command::EvalIntrinsic(c) => {
            let h = harness(&c)?;
            let _lock = h.lock()?;
            let reports = h.eval_intrinsic()?;
            println!(
                "{} intrinsic rows written to {}",
                reports.len(),
                h.output_dir().display()
            );
        }
        Command::NerTrain(c) => {
            let h = harness(&c)?;
            let _lock = h.lock()?;
            for p in h.ner_train()? {
                println!("{}", p.display());
            }
        }
        Command::NerEval(c) => {
            let h = harness(&c)?;
            let _lock = h.lock()?;
            print!("{}", h.ner_eval()?.to_markdown());
        }
        Command::Zeroshot(c) => {
            let h = harness(&c)?;
            let _lock = h.lock()?;
            print!("{}", h.zeroshot()?.to_markdown());
        }
    }
    log::info!("done in {:.2?}", started.elapsed());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(4),
    }
}
