use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hetnet_ee::channel_model::{generate_topology, realize_channels, ScenarioConfig};
use hetnet_ee::error::Error;
use hetnet_ee::power_allocator::GabsSettings;
use hetnet_ee::sim_harness::{
    convergence_trace, emit_results, results_to_csv, results_to_json, run_experiment, Algorithm,
    ExperimentSpec, ExperimentSpecFile, OutputFormat, SweepVariable,
};
use hetnet_ee::solvers::{
    equal_power_baseline, exhaustive_oracle, fixed_beta_solve, iterative_solve,
    random_beta_baseline, OracleGrid, SolverResult, DEFAULT_MAX_OUTER, DEFAULT_REL_TOL,
};
use hetnet_ee::SolveStatus;

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(
    name = "hetnet-ee",
    version,
    about = "Energy-efficient power and backhaul bandwidth allocation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Iterative,
    FixedBeta,
    EqualPower,
    RandomBeta,
    Oracle,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Algorithm {
        match a {
            AlgoArg::Iterative => Algorithm::Iterative,
            AlgoArg::FixedBeta => Algorithm::FixedBeta,
            AlgoArg::EqualPower => Algorithm::EqualPower,
            AlgoArg::RandomBeta => Algorithm::RandomBeta,
            AlgoArg::Oracle => Algorithm::Oracle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariableArg {
    UsersPerCell,
    NumSmallCells,
    MaxUserPower,
    QosRate,
}

impl From<VariableArg> for SweepVariable {
    fn from(v: VariableArg) -> SweepVariable {
        match v {
            VariableArg::UsersPerCell => SweepVariable::UsersPerCell,
            VariableArg::NumSmallCells => SweepVariable::NumSmallCells,
            VariableArg::MaxUserPower => SweepVariable::MaxUserPower,
            VariableArg::QosRate => SweepVariable::QosRate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> OutputFormat {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel realization and print the result as JSON.
    Solve {
        /// Scenario config file (JSON, powers in dBm).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Strategy to run (oracle has its own subcommand).
        #[arg(long, value_enum, default_value = "iterative")]
        algo: AlgoArg,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment spec file and emit aggregated results.
    Simulate {
        /// Experiment spec file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the spec's base_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the spec's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the spec's algorithm list (comma separated).
        #[arg(long, value_enum, value_delimiter = ',')]
        algo: Option<Vec<AlgoArg>>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one scenario variable with inline flags.
    Sweep {
        /// Scenario config file used as the sweep base.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        variable: VariableArg,
        /// Sweep values, comma separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["iterative", "fixed-beta"])]
        algo: Vec<AlgoArg>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Base seed (defaults to the config's rng_seed).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive grid reference on a small instance.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Power grid step in watts (default Pmax/100).
        #[arg(long)]
        power_step: Option<f64>,
        /// Bandwidth-fraction grid step (default 0.01).
        #[arg(long)]
        beta_step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-iteration EE trace of the iterative solver for one trial.
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Infeasible(_) | Error::InfeasibleUser { .. } => EXIT_INFEASIBLE,
                Error::BudgetExceeded { .. } => EXIT_BUDGET,
                Error::NonConvergence(_) | Error::InfeasibleRate { .. } => 1,
                _ => EXIT_CONFIG,
            })
        }
    }
}

fn write_output(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::from_json_file(path)?;
    if let Some(seed) = seed {
        cfg.rng_seed = seed;
    }
    Ok(cfg)
}

fn realize(
    cfg: &ScenarioConfig,
) -> Result<(ChaCha8Rng, hetnet_ee::channel_model::ChannelRealization), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let topo = generate_topology(cfg, &mut rng)?;
    let chan = realize_channels(cfg, &topo, &mut rng);
    Ok((rng, chan))
}

fn print_result(result: &SolverResult, out: Option<&Path>) -> Result<ExitCode, Error> {
    let mut text = serde_json::to_string_pretty(result).expect("result serializes");
    text.push('\n');
    write_output(&text, out)?;
    Ok(if result.status == SolveStatus::Infeasible {
        ExitCode::from(EXIT_INFEASIBLE)
    } else {
        ExitCode::SUCCESS
    })
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Solve {
            config,
            seed,
            algo,
            out,
        } => {
            let cfg = load_scenario(&config, seed)?;
            let (mut rng, chan) = realize(&cfg)?;
            let settings = GabsSettings::default();
            let result = match Algorithm::from(algo) {
                Algorithm::Iterative => {
                    iterative_solve(&cfg, &chan, &settings, DEFAULT_MAX_OUTER, DEFAULT_REL_TOL)?
                }
                Algorithm::FixedBeta => fixed_beta_solve(&cfg, &chan, &settings)?,
                Algorithm::EqualPower => equal_power_baseline(&cfg, &chan)?,
                Algorithm::RandomBeta => random_beta_baseline(&cfg, &chan, &mut rng)?,
                Algorithm::Oracle => exhaustive_oracle(&cfg, &chan, &OracleGrid::for_config(&cfg))?,
            };
            print_result(&result, out.as_deref())
        }
        Command::Simulate {
            config,
            seed,
            trials,
            algo,
            format,
            out,
        } => {
            let mut spec = ExperimentSpecFile::from_json_file(&config)?.into_spec();
            if let Some(seed) = seed {
                spec.base_seed = seed;
            }
            if let Some(trials) = trials {
                spec.trials = trials;
            }
            if let Some(algos) = algo {
                spec.algorithms = algos.into_iter().map(Algorithm::from).collect();
            }
            emit_rows(&spec, format.into(), out.as_deref())
        }
        Command::Sweep {
            config,
            variable,
            values,
            algo,
            trials,
            seed,
            format,
            out,
        } => {
            let base = load_scenario(&config, None)?;
            let spec = ExperimentSpec {
                base_seed: seed.unwrap_or(base.rng_seed),
                base,
                sweep_variable: variable.into(),
                sweep_values: values,
                algorithms: algo.into_iter().map(Algorithm::from).collect(),
                trials,
            };
            emit_rows(&spec, format.into(), out.as_deref())
        }
        Command::Oracle {
            config,
            seed,
            power_step,
            beta_step,
            out,
        } => {
            let cfg = load_scenario(&config, seed)?;
            let (_, chan) = realize(&cfg)?;
            let defaults = OracleGrid::for_config(&cfg);
            let grid = OracleGrid::new(
                power_step.unwrap_or(defaults.power_step),
                beta_step.unwrap_or(defaults.beta_step),
            )?;
            let result = exhaustive_oracle(&cfg, &chan, &grid)?;
            print_result(&result, out.as_deref())
        }
        Command::Trace {
            config,
            seed,
            format,
            out,
        } => {
            let cfg = load_scenario(&config, seed)?;
            let trace = convergence_trace(&cfg, cfg.rng_seed)?;
            let text = match OutputFormat::from(format) {
                OutputFormat::Csv => {
                    let mut s = String::from("iteration,total_ee\n");
                    for (i, ee) in trace.iter().enumerate() {
                        s.push_str(&format!("{},{}\n", i + 1, ee));
                    }
                    s
                }
                OutputFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&trace).expect("floats serialize");
                    s.push('\n');
                    s
                }
            };
            write_output(&text, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit_rows(
    spec: &ExperimentSpec,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let rows = run_experiment(spec)?;
    match out {
        Some(path) => emit_results(&rows, format, path)?,
        None => {
            let text = match format {
                OutputFormat::Csv => results_to_csv(&rows),
                OutputFormat::Json => results_to_json(&rows),
            };
            print!("{text}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
