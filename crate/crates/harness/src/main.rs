use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modal_core::env::catalogue::{self, PRESET_NAMES};
use modal_core::experiment::ExperimentConfig;
use modal_core::io::{read_points_file, read_points_or_empty, write_contamination_report, write_estimates};
use modal_core::{
    estimate_mode, estimate_p_modes, measure_robustness, private_mode, KChoice, ModalError, ModeEstimate,
    ModeEstimatorConfig, PrivacyParams,
};
use modal_harness::{output_dir, run_experiment, write_outputs, OUT_ENV};

#[derive(Parser)]
#[command(name = "modal-bandits", version, about = "k-NN mode estimation and modal bandit experiments")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct EstimatorArgs {
    /// Neighbor count: `auto` or a positive integer.
    #[arg(long, default_value = "auto")]
    k: KChoice,
    /// Confidence parameter of the level-set slack.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the mode (or the p highest modes) of a CSV point set.
    Estimate {
        input: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
        /// Number of modes to report.
        #[arg(long, default_value_t = 1)]
        p: usize,
        /// Slack constant for multimodal search; defaults to 0.5 when p > 1
        /// and 100 otherwise.
        #[arg(long)]
        beta_coefficient: Option<f64>,
        /// Release a differentially private estimate.
        #[arg(long)]
        private: bool,
        #[arg(long, requires = "private")]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 1e-5, requires = "private")]
        dp_delta: f64,
        /// Noise scale; derived from epsilon and dp-delta when absent.
        #[arg(long, requires = "private")]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the estimate before and after adding adversarial points.
    Robustness {
        input: PathBuf,
        adversary: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
    },
    /// Run a multi-seed experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; results do not depend on this.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory (overrides MODAL_BANDITS_OUT and the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the presets, or print one as a TOML config.
    Catalogue { name: Option<String> },
}

/// Exit 2 for bad input, 1 for failures while running.
enum Failure {
    Input(ModalError),
    Runtime(ModalError),
}

fn input(e: ModalError) -> Failure {
    match e {
        ModalError::Io(_) => Failure::Runtime(e),
        other => Failure::Input(other),
    }
}

fn runtime(e: impl Into<ModalError>) -> Failure {
    Failure::Runtime(e.into())
}

fn estimator(est: &EstimatorArgs) -> ModeEstimatorConfig {
    ModeEstimatorConfig {
        k: est.k,
        delta: est.delta,
        ..ModeEstimatorConfig::default()
    }
}

/// Prefixes the message with the offending file.
fn in_file(path: &Path, e: ModalError) -> ModalError {
    let p = path.display();
    match e {
        ModalError::Data(m) => ModalError::Data(format!("{p}: {m}")),
        ModalError::Config(m) => ModalError::Config(format!("{p}: {m}")),
        other => ModalError::Data(format!("{p}: {other}")),
    }
}

fn read_input(path: &Path) -> Result<modal_core::SampleSet64, Failure> {
    read_points_file(path).map_err(|e| Failure::Input(in_file(path, e)))
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    path: &Path,
    est: &EstimatorArgs,
    p: usize,
    beta: Option<f64>,
    private: bool,
    epsilon: Option<f64>,
    dp_delta: f64,
    sigma: Option<f64>,
    seed: u64,
) -> Result<(), Failure> {
    let samples = read_input(path)?;
    let mut cfg = estimator(est);
    cfg.p = p;
    cfg.beta_coefficient = beta.unwrap_or(if p > 1 { 0.5 } else { cfg.beta_coefficient });
    cfg.validate().map_err(input)?;
    let rows: Vec<ModeEstimate<f64>> = if private {
        let epsilon = epsilon.ok_or_else(|| Failure::Input(ModalError::Parameter("--private needs --epsilon".into())))?;
        let mut privacy = PrivacyParams::new(epsilon, dp_delta);
        privacy.sigma = sigma;
        let clean = estimate_mode(&samples, &cfg).map_err(input)?;
        let location = private_mode(&samples, &cfg, &privacy, seed).map_err(input)?;
        vec![ModeEstimate {
            location,
            density_value: f64::NAN,
            ..clean
        }]
    } else if p > 1 {
        estimate_p_modes(&samples, &cfg).map_err(input)?
    } else {
        vec![estimate_mode(&samples, &cfg).map_err(input)?]
    };
    write_estimates(io::stdout().lock(), &rows).map_err(runtime)
}

fn robustness(path: &Path, adversary: &Path, est: &EstimatorArgs) -> Result<(), Failure> {
    let samples = read_input(path)?;
    let file = fs::File::open(adversary).map_err(|e| Failure::Input(in_file(adversary, e.into())))?;
    let adv = read_points_or_empty(file, samples.dim()).map_err(|e| Failure::Input(in_file(adversary, e)))?;
    let report = measure_robustness(&samples, &adv, &estimator(est)).map_err(input)?;
    write_contamination_report(io::stdout().lock(), &report).map_err(runtime)
}

fn run(config: &Path, jobs: usize, out: Option<&Path>) -> Result<(), Failure> {
    let text = fs::read_to_string(config)
        .map_err(|e| Failure::Input(ModalError::Config(format!("{}: {e}", config.display()))))?;
    let cfg = ExperimentConfig::from_toml(&text).map_err(|e| Failure::Input(in_file(config, e)))?;
    let name = cfg.name.clone().unwrap_or_else(|| cfg.strategy.name().to_owned());
    let env = std::env::var(OUT_ENV).ok();
    let dir = output_dir(out, env.as_deref(), cfg.output_dir.as_deref(), &name);
    let result = run_experiment(&cfg, jobs.max(1)).map_err(runtime)?;
    let files = write_outputs(&result, &dir).map_err(runtime)?;
    let mut stdout = io::stdout().lock();
    for f in files {
        writeln!(stdout, "{}", f.display()).map_err(runtime)?;
    }
    Ok(())
}

fn catalogue(name: Option<&str>) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    match name {
        None => {
            for n in PRESET_NAMES {
                let cfg = catalogue::preset(n).map_err(input)?;
                writeln!(stdout, "{n}\t{}\tn={}\tseeds={}", cfg.strategy.name(), cfg.horizon, cfg.seeds.count)
                    .map_err(runtime)?;
            }
        }
        Some(n) => {
            let cfg = catalogue::preset(n).map_err(input)?;
            stdout.write_all(cfg.to_toml().map_err(runtime)?.as_bytes()).map_err(runtime)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match &cli.command {
        Command::Estimate {
            input,
            est,
            p,
            beta_coefficient,
            private,
            epsilon,
            dp_delta,
            sigma,
            seed,
        } => estimate(input, est, *p, *beta_coefficient, *private, *epsilon, *dp_delta, *sigma, *seed),
        Command::Robustness { input, adversary, est } => robustness(input, adversary, est),
        Command::Run { config, jobs, out } => run(config, *jobs, out.as_deref()),
        Command::Catalogue { name } => catalogue(name.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
