//! Command-line harness: dataset generation, single runs and comparisons.
//!
//! Exit codes: 0 success, 1 internal failure, 2 configuration/data/I-O
//! error, 3 numeric failure, 4 command-line usage error.

mod config;
mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{DataConfig, ExperimentConfig, DEFAULT_SEED};
pub use output::{format_results_csv, write_outputs, PARTIAL_SUFFIX, RESULTS_HEADER};

use crate::data::{self, Sample, N_CLASSES};
use crate::error::{Error, Result};
use crate::eval::{run_strategy, MetricsReport};
use crate::strategies::{self, parse_strategy_list, StrategyKind};

pub const EXIT_USAGE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "driftcl",
    version,
    about = "Continual learning under real concept drift"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic drift dataset as CSV.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one strategy over the task stream.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train several strategies on the same stream and seed.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "naive,ewc,si,lwf,agem,gss,gdumb")]
        strategies: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Parse `args` (program name first), execute, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = match path {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn out_dir(cli: Option<PathBuf>, config: &ExperimentConfig) -> Result<PathBuf> {
    cli.or_else(|| config.out_dir.clone())
        .ok_or_else(|| Error::Config("no output directory (use --out-dir or set out_dir)".into()))
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, out, seed } => {
            let config = load_config(config.as_deref(), seed)?;
            let samples = generate(&config, &out)?;
            print!("{}", dataset_summary(&samples));
            Ok(())
        }
        Command::Run {
            config,
            out_dir: dir,
            seed,
        } => {
            let config = load_config(config.as_deref(), seed)?;
            let dir = out_dir(dir, &config)?;
            let kind = config.strategy;
            compare(&config, &[kind], &dir)
        }
        Command::Compare {
            config,
            strategies,
            out_dir: dir,
            seed,
        } => {
            let config = load_config(config.as_deref(), seed)?;
            let dir = out_dir(dir, &config)?;
            let kinds = parse_strategy_list(&strategies)?;
            compare(&config, &kinds, &dir)
        }
    }
}

/// Write the generator's raw samples (task order) to `out`.
pub fn generate(config: &ExperimentConfig, out: &Path) -> Result<Vec<Sample>> {
    if config.data.csv.is_some() {
        return Err(Error::Config(
            "generate needs generator settings, not a csv source".into(),
        ));
    }
    config.validate()?;
    let samples = data::generate_samples(&config.generator_config())?;
    let file = std::fs::File::create(out).map_err(|e| Error::io(out, e))?;
    data::write_samples(std::io::BufWriter::new(file), &samples)?;
    Ok(samples)
}

/// Per-task row counts and class histograms.
pub fn dataset_summary(samples: &[Sample]) -> String {
    let mut per_task: std::collections::BTreeMap<u32, [usize; N_CLASSES]> = Default::default();
    for s in samples {
        per_task.entry(s.task_id).or_insert([0; N_CLASSES])[s.label] += 1;
    }
    let mut text = String::new();
    for (task, hist) in per_task {
        let rows: usize = hist.iter().sum();
        let cells: Vec<String> = hist.iter().map(usize::to_string).collect();
        text.push_str(&format!(
            "task {task}: {rows} rows, classes [{}]\n",
            cells.join(" ")
        ));
    }
    text
}

/// Run every strategy in `kinds` (one worker thread each) on the same
/// stream and seed, then write combined outputs to `dir`.
///
/// If any strategy fails, the reports that did finish are written with the
/// `.partial` suffix and the first failure (in list order) is returned.
pub fn compare(config: &ExperimentConfig, kinds: &[StrategyKind], dir: &Path) -> Result<()> {
    config.validate()?;
    let stream = config.load_stream()?;
    let ctx = config.build_context();
    let model_config = ctx.model.clone();
    let digest = config.digest()?;

    let results: Vec<Result<MetricsReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = kinds
            .iter()
            .map(|&kind| {
                let (stream, ctx, model_config) = (&stream, &ctx, &model_config);
                let params = &config.params;
                let training = &config.training;
                scope.spawn(move || {
                    let mut strategy = strategies::build(kind, params, ctx)?;
                    run_strategy(stream, strategy.as_mut(), model_config, training, ctx.seed)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Internal("strategy worker panicked".into())))
            })
            .collect()
    });

    let mut reports = Vec::new();
    let mut failure = None;
    for result in results {
        match result {
            Ok(mut report) => {
                report.metadata.config_digest = Some(digest.clone());
                reports.push(report);
            }
            Err(e) => {
                if failure.is_none() {
                    failure = Some(e);
                }
            }
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let partial = failure.is_some();
    write_outputs(dir, config, &reports, partial)?;
    match failure {
        Some(e) => Err(e),
        None => {
            for r in &reports {
                if let Some(last) = r.final_metrics() {
                    println!(
                        "{:<6} avg_acc {:.4} avg_forgetting {:.4}",
                        r.strategy, last.avg_acc, last.avg_forgetting
                    );
                }
            }
            Ok(())
        }
    }
}
