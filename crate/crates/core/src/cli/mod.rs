//! Command-line experiment runner.
//!
//! Without a subcommand the binary learns a model: a single run, or a grid
//! sweep when `--sweep` is given. `eval` scores a saved model on data files.

pub mod experiment;
pub mod model_io;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::load_dataset;
use crate::error::{Error, Result};
use crate::param_learn::{FitOptions, DEFAULT_APT_CLUSTERS, DEFAULT_L2};
use crate::structure::{Heuristic, PruningConfig};

use experiment::{iteration_log_csv, run_single, run_sweep, Splits, SweepSpec};
use report::{render_table, CellResult, ExperimentReport, Split};

pub use model_io::{load_model, save_model};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::ModelFormat { .. }
        | Error::VersionMismatch { .. } => EXIT_IO,
        Error::NonFinite { .. } => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "forced-pruning",
    version,
    about = "Learn budgeted pairwise Markov networks by edge exchange",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    #[command(flatten)]
    pub learn: LearnArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the negative PLL of a saved model on one or more data files.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "data", required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Training data (comma-separated 0/1 rows).
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Dataset label for reports (defaults to the training file stem).
    #[arg(long)]
    pub name: Option<String>,
    /// Edges added to the Chow-Liu tree (m).
    #[arg(long, default_value_t = 0)]
    pub extra_edges: usize,
    /// Edges exchanged per iteration (k).
    #[arg(long, default_value_t = 0)]
    pub exchange: usize,
    /// greedy or rejection; a comma list runs both in a sweep.
    #[arg(long, default_value = "greedy")]
    pub heuristic: String,
    #[arg(long, default_value_t = DEFAULT_APT_CLUSTERS)]
    pub apt_clusters: usize,
    /// Choose the cluster count from {4, 8, 16, 32} on the validation split.
    #[arg(long)]
    pub select_clusters: bool,
    #[arg(long, default_value_t = DEFAULT_L2)]
    pub l2: f64,
    #[arg(long, default_value_t = 30)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 500)]
    pub max_optimizer_steps: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub gradient_tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub rejection_cap: usize,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Grid such as "m=0,15,30,45,60;k=0,5,10".
    #[arg(long)]
    pub sweep: Option<String>,
    /// Concurrent sweep cells.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Leave the seconds column empty so reports are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

impl LearnArgs {
    fn heuristics(&self) -> Result<Vec<Heuristic>> {
        self.heuristic.split(',').map(str::parse).collect()
    }

    pub fn config(&self) -> Result<PruningConfig> {
        let heuristics = self.heuristics()?;
        Ok(PruningConfig {
            extra_edges: self.extra_edges,
            exchange_size: self.exchange,
            heuristic: heuristics[0],
            max_iter: self.max_iter,
            seed: self.seed,
            apt_clusters: self.apt_clusters,
            fit: FitOptions {
                l2_strength: self.l2,
                max_optimizer_steps: self.max_optimizer_steps,
                gradient_tolerance: self.gradient_tolerance,
            },
            rejection_cap: self.rejection_cap,
        })
    }

    fn splits(&self) -> Result<Splits> {
        let train_path = self
            .train
            .as_ref()
            .ok_or_else(|| Error::Config("--train is required".into()))?;
        let mut train = load_dataset(train_path)?;
        if let Some(name) = &self.name {
            train = train.with_name(name.clone());
        }
        let valid = self.valid.as_ref().map(load_dataset).transpose()?;
        let test = self.test.as_ref().map(load_dataset).transpose()?;
        Splits::new(train, valid, test)
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn run_learn(args: &LearnArgs) -> Result<()> {
    let config = args.config()?;
    let splits = args.splits()?;
    create_dir(&args.out_dir)?;

    match &args.sweep {
        None => {
            if args.heuristics()?.len() != 1 {
                return Err(Error::Config(
                    "a single run takes exactly one heuristic; use --sweep for several".into(),
                ));
            }
            let rec = run_single(&splits, &config, args.select_clusters)?;
            let model_path = args.out_dir.join("model.txt");
            save_model(
                &model_path,
                &rec.outcome.model,
                Some(&rec.outcome.partition),
            )?;
            write_file(
                &args.out_dir.join("iterations.csv"),
                &iteration_log_csv(&rec.outcome),
            )?;
            let report = ExperimentReport {
                dataset: splits.name().to_string(),
                seed: config.seed,
                l2_strength: config.fit.l2_strength,
                apt_clusters: rec.apt_clusters,
                max_iter: config.max_iter,
                cells: vec![CellResult {
                    heuristic: config.heuristic,
                    extra_edges: config.extra_edges,
                    exchange_size: config.exchange_size,
                    seed: config.seed,
                    apt_clusters: rec.apt_clusters,
                    outcome: Ok(rec.scores.clone()),
                    seconds: rec.seconds,
                }],
            };
            write_file(
                &args.out_dir.join("report.csv"),
                &report.to_csv_string(!args.no_timing),
            )?;
            let (split, value) = rec.scores.headline();
            println!(
                "{} {} m={} k={}: {} negative PLL {:.4} (train {:.4}), {} edges, {} clusters, {:.2}s",
                splits.name(),
                config.heuristic,
                config.extra_edges,
                config.exchange_size,
                split.as_str(),
                value,
                rec.scores.train,
                rec.outcome.model.n_edges(),
                rec.outcome.partition.n_clusters(),
                rec.seconds
            );
            println!("model written to {}", model_path.display());
        }
        Some(grid) => {
            let mut spec: SweepSpec = grid.parse()?;
            if !grid.contains("h=") && !grid.contains("heuristic=") {
                spec.heuristics = args.heuristics()?;
            }
            let (report, outcomes) =
                run_sweep(&splits, &config, &spec, args.jobs, args.select_clusters)?;
            let models_dir = args.out_dir.join("models");
            create_dir(&models_dir)?;
            for (cell, outcome) in report.cells.iter().zip(&outcomes) {
                match (outcome, &cell.outcome) {
                    (Some(out), _) => {
                        let file = format!(
                            "{}_{}_m{}_k{}.txt",
                            report.dataset, cell.heuristic, cell.extra_edges, cell.exchange_size
                        );
                        save_model(models_dir.join(file), &out.model, Some(&out.partition))?;
                    }
                    (None, Err(msg)) => eprintln!(
                        "cell {} m={} k={} failed: {}",
                        cell.heuristic, cell.extra_edges, cell.exchange_size, msg
                    ),
                    (None, Ok(_)) => {}
                }
            }
            write_file(
                &args.out_dir.join("report.csv"),
                &report.to_csv_string(!args.no_timing),
            )?;
            let split = if splits.test.is_some() {
                Split::Test
            } else if splits.valid.is_some() {
                Split::Valid
            } else {
                Split::Train
            };
            let table = render_table(std::slice::from_ref(&report), split);
            write_file(&args.out_dir.join("table.txt"), &table)?;
            print!("{}", table);
        }
    }
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let (model, _) = load_model(&args.model)?;
    for path in &args.data {
        let ds = load_dataset(path)?;
        println!("{}\t{}", path.display(), -model.pll(&ds)?);
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Some(Command::Eval(args)) => run_eval(args),
        None => run_learn(&cli.learn),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e);
            exit_code(&e)
        }
    }
}
