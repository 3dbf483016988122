//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or
//! numerical error, 3 solver non-convergence.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use centalign::data::{load_dataset, DatasetConfig};
use centalign::theory::{concentration_trial, perturbation_check, ConcentrationConfig};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bench::{
    alignment_curve, run_genbound, run_predictor, run_stability, CurveConfig, GenBoundConfig, PerturbationConfig,
    PredictorConfig, StabilityConfig,
};
use crate::correlate::{run_correlate, CorrelateConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::{learn_full_weights, run_cv, ExperimentConfig, Method};
use crate::output::{is_csv, sibling, to_json, write_csv, write_cv_table, write_json};
use crate::stats::paired_ttest;

#[derive(Debug, Parser)]
#[command(name = "centalign", version, about = "Centered kernel alignment experiments")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; `.csv` selects CSV where a table exists.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "MKL_THREADS")]
    pub threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn mixture weights on the full dataset of an experiment config.
    Weights {
        /// Overrides the config method (`unif`, `align`, `alignf`, `lq:<q>`, ...).
        #[arg(long)]
        method: Option<Method>,
    },
    /// Run a cross-validated experiment.
    Cv,
    /// Correlate single-kernel accuracy with centered and uncentered alignment.
    Correlate,
    /// Theory bench.
    Theory {
        #[command(subcommand)]
        which: TheoryCommand,
    },
    /// Paired one-sided t-test of mean(a) > mean(b).
    Ttest {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        p_level: f64,
    },
    /// Write the dataset of a dataset config as CSV (label last).
    Export,
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// Coverage of the concentration bound over repeated samples.
    Concentration,
    /// One-point perturbation of the unnormalized alignment.
    Perturbation,
    /// Alignment-based predictors and their error bounds on a dataset.
    Predictor,
    /// Stability of the alignment QP under one-point perturbations.
    Stability,
    /// Generalization bound for two-stage KRR.
    Genbound,
    /// Population alignments on the two-point family as alpha varies.
    Curve,
}

#[derive(Debug, Deserialize)]
struct TtestConfig {
    a: Vec<f64>,
    b: Vec<f64>,
    #[serde(default = "default_p_level")]
    p_level: f64,
}

fn default_p_level() -> f64 {
    0.1
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn config_path(cli: &Cli) -> Result<&Path> {
    cli.config.as_deref().ok_or_else(|| HarnessError::usage("--config <path> is required"))
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::ConfigIo { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Config { path: path.to_owned(), source })
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn load_dataset_config<T: DeserializeOwned>(cli: &Cli, dataset: impl Fn(&mut T) -> &mut DatasetConfig) -> Result<T> {
    let path = config_path(cli)?;
    let mut cfg: T = read_config(path)?;
    dataset(&mut cfg).resolve_paths(base_dir(path));
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Weights { method } => {
            let mut cfg: ExperimentConfig = load_dataset_config(cli, |c: &mut ExperimentConfig| &mut c.dataset)?;
            if let Some(m) = method {
                cfg.method = *m;
            }
            write_json(out, &learn_full_weights(&cfg)?)
        }
        Command::Cv => {
            let mut cfg: ExperimentConfig = load_dataset_config(cli, |c: &mut ExperimentConfig| &mut c.dataset)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let outcome = run_cv(&cfg)?;
            let run = &outcome.run;
            log::info!(
                "{}: test error {:.4} ± {:.4}, training alignment {:.4} ± {:.4} ({:.2}s)",
                run.method,
                run.mean_test_error,
                run.std_test_error,
                run.mean_train_alignment,
                run.std_train_alignment,
                outcome.timing.total_secs
            );
            match out {
                Some(p) => {
                    fs::write(p, to_json(run)?)?;
                    write_cv_table(Some(&sibling(p, ".csv")), run)?;
                    fs::write(sibling(p, ".timing.json"), to_json(&outcome.timing)?)?;
                    Ok(())
                }
                None => write_json(None, run),
            }
        }
        Command::Correlate => {
            let mut cfg: CorrelateConfig = load_dataset_config(cli, |c: &mut CorrelateConfig| &mut c.dataset)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let report = run_correlate(&cfg)?;
            if is_csv(out) {
                write_csv(out, &report.kernels)
            } else {
                write_json(out, &report)
            }
        }
        Command::Theory { which } => theory(cli, which, out),
        Command::Ttest { a, b, p_level } => {
            let (a, b, p_level) = match &cli.config {
                Some(path) => {
                    let cfg: TtestConfig = read_config(path)?;
                    (cfg.a, cfg.b, cfg.p_level)
                }
                None => (a.clone(), b.clone(), *p_level),
            };
            write_json(out, &paired_ttest(&a, &b, p_level)?)
        }
        Command::Export => {
            let cfg: DatasetConfig = load_dataset_config(cli, |c: &mut DatasetConfig| c)?;
            let sample = load_dataset(&cfg)?;
            let mut rows = Vec::with_capacity(sample.len() + 1);
            let mut header: Vec<String> = (0..sample.dim()).map(|j| format!("x{j}")).collect();
            header.push("y".into());
            rows.push(header);
            for i in 0..sample.len() {
                let mut row: Vec<String> = sample.point(i).iter().map(|v| v.to_string()).collect();
                row.push(sample.labels()[i].to_string());
                rows.push(row);
            }
            write_csv(out, &rows)
        }
    }
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    spec_version: &'a str,
    #[serde(flatten)]
    report: T,
}

fn tagged<T: Serialize>(report: T) -> Tagged<'static, T> {
    Tagged { spec_version: crate::SPEC_VERSION, report }
}

fn theory(cli: &Cli, which: &TheoryCommand, out: Option<&Path>) -> Result<()> {
    match which {
        TheoryCommand::Concentration => {
            let mut cfg: ConcentrationConfig = read_config(config_path(cli)?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let report = concentration_trial(&cfg)?;
            // the coverage table is the primary output
            if out.is_none() || is_csv(out) {
                write_csv(out, &report.rows)
            } else {
                write_json(out, &tagged(report))
            }
        }
        TheoryCommand::Perturbation => {
            let mut cfg: PerturbationConfig = read_config(config_path(cli)?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let dist = cfg.dist.build()?;
            write_json(out, &tagged(perturbation_check(&dist, &cfg.kernel, cfg.m, cfg.trials, cfg.seed)?))
        }
        TheoryCommand::Predictor => {
            let cfg: PredictorConfig = load_dataset_config(cli, |c: &mut PredictorConfig| &mut c.dataset)?;
            #[derive(Serialize)]
            struct Rows {
                kernels: Vec<crate::bench::PredictorRow>,
            }
            write_json(out, &tagged(Rows { kernels: run_predictor(&cfg)? }))
        }
        TheoryCommand::Stability => {
            let mut cfg: StabilityConfig = read_config(config_path(cli)?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let report = run_stability(&cfg)?;
            if is_csv(out) {
                write_csv(out, &report.rows)
            } else {
                write_json(out, &tagged(report))
            }
        }
        TheoryCommand::Genbound => {
            let cfg: GenBoundConfig = read_config(config_path(cli)?)?;
            write_json(out, &tagged(run_genbound(&cfg)?))
        }
        TheoryCommand::Curve => {
            let cfg = match &cli.config {
                Some(p) => read_config(p)?,
                None => CurveConfig::default(),
            };
            let points = alignment_curve(&cfg)?;
            if out.is_none() || is_csv(out) {
                write_csv(out, &points)
            } else {
                write_json(out, &points)
            }
        }
    }
}
