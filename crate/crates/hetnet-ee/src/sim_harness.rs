//! Monte-Carlo experiment driver.
//!
//! An [`ExperimentSpec`] sweeps one scenario parameter over a list of
//! values, runs `trials` seeded channel realizations per value, executes the
//! requested algorithms on the *same* realization (paired comparison), and
//! aggregates per-(value, algorithm) means into [`AggregateRow`]s that can
//! be emitted as CSV or JSON.
//!
//! Reproducibility: the per-trial seed is
//! `mix(mix(mix(base_seed) ^ sweep_index) ^ trial)` where `mix` is the
//! SplitMix64 finalizer (see [`derive_trial_seed`]), and every algorithm is
//! deterministic given that seed, so the whole experiment is a pure function
//! of its spec.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel_model::{
    dbm_to_watts, generate_topology, realize_channels, ScenarioConfig, ScenarioConfigFile,
};
use crate::error::Error;
use crate::power_allocator::GabsSettings;
use crate::solvers::{
    equal_power_baseline, exhaustive_oracle, fixed_beta_solve, iterative_solve,
    random_beta_baseline, OracleGrid, SolveStatus, DEFAULT_MAX_OUTER, DEFAULT_REL_TOL,
};

/// Largest J*K for which the grid oracle may be requested in an experiment.
const ORACLE_MAX_USERS: usize = 8;

/// The scenario parameter a sweep varies. `max_user_power` sweep values are
/// in dBm (the config-boundary unit); the count variables take positive
/// integers; `qos_rate` is in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    UsersPerCell,
    NumSmallCells,
    MaxUserPower,
    QosRate,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::UsersPerCell => "users_per_cell",
            SweepVariable::NumSmallCells => "num_small_cells",
            SweepVariable::MaxUserPower => "max_user_power",
            SweepVariable::QosRate => "qos_rate",
        }
    }
}

/// The allocation strategies the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Iterative,
    FixedBeta,
    EqualPower,
    RandomBeta,
    Oracle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Iterative => "iterative",
            Algorithm::FixedBeta => "fixed_beta",
            Algorithm::EqualPower => "equal_power",
            Algorithm::RandomBeta => "random_beta",
            Algorithm::Oracle => "oracle",
        }
    }
}

/// Canonical execution/report order.
pub const ALGORITHM_ORDER: [Algorithm; 5] = [
    Algorithm::Iterative,
    Algorithm::FixedBeta,
    Algorithm::EqualPower,
    Algorithm::RandomBeta,
    Algorithm::Oracle,
];

/// A full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base: ScenarioConfig,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub base_seed: u64,
}

/// On-disk form of [`ExperimentSpec`] with the scenario in its dBm file
/// schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpecFile {
    pub base: ScenarioConfigFile,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub base_seed: u64,
}

impl ExperimentSpecFile {
    pub fn into_spec(self) -> ExperimentSpec {
        ExperimentSpec {
            base: self.base.into_config(),
            sweep_variable: self.sweep_variable,
            sweep_values: self.sweep_values,
            algorithms: self.algorithms,
            trials: self.trials,
            base_seed: self.base_seed,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::Config("sweep_values must be nonempty".into()));
        }
        if !self.sweep_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "sweep_values must be strictly increasing".into(),
            ));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithms must be nonempty".into()));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(Error::Config(format!("duplicate algorithm {}", a.name())));
            }
        }
        for &value in &self.sweep_values {
            let cfg = apply_sweep(&self.base, self.sweep_variable, value)?;
            cfg.validate()?;
            if self.algorithms.contains(&Algorithm::Oracle)
                && cfg.num_small_cells * cfg.users_per_cell > ORACLE_MAX_USERS
            {
                return Err(Error::Config(format!(
                    "oracle requested but J*K = {} exceeds {} at sweep value {}",
                    cfg.num_small_cells * cfg.users_per_cell,
                    ORACLE_MAX_USERS,
                    value
                )));
            }
        }
        Ok(())
    }
}

/// Build the per-sweep-point scenario.
pub fn apply_sweep(
    base: &ScenarioConfig,
    variable: SweepVariable,
    value: f64,
) -> Result<ScenarioConfig, Error> {
    let mut cfg = base.clone();
    let as_count = |value: f64, what: &str| -> Result<usize, Error> {
        if value.fract() != 0.0 || !(1.0..=1e6).contains(&value) {
            return Err(Error::Config(format!(
                "{what} sweep value must be a positive integer, got {value}"
            )));
        }
        Ok(value as usize)
    };
    match variable {
        SweepVariable::UsersPerCell => cfg.users_per_cell = as_count(value, "users_per_cell")?,
        SweepVariable::NumSmallCells => cfg.num_small_cells = as_count(value, "num_small_cells")?,
        SweepVariable::MaxUserPower => {
            if !value.is_finite() {
                return Err(Error::Config(format!("bad max_user_power dBm: {value}")));
            }
            cfg.max_user_power = dbm_to_watts(value);
        }
        SweepVariable::QosRate => {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Config(format!("bad qos_rate: {value}")));
            }
            cfg.qos_rate = value;
        }
    }
    Ok(cfg)
}

/// SplitMix64 finalizer.
fn splitmix64_mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-trial seed derivation:
/// `mix(mix(mix(base_seed) ^ sweep_index) ^ trial)` with `mix` the
/// SplitMix64 finalizer (golden-ratio increment, two xor-multiply rounds).
pub fn derive_trial_seed(base_seed: u64, sweep_index: usize, trial: usize) -> u64 {
    let a = splitmix64_mix(base_seed);
    let b = splitmix64_mix(a ^ sweep_index as u64);
    splitmix64_mix(b ^ trial as u64)
}

/// Aggregated outcome of one (sweep value, algorithm) pair. Means are over
/// feasible trials only (zero when no trial was feasible).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub sweep_variable: SweepVariable,
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub mean_total_ee: f64,
    pub mean_total_capacity: f64,
    pub feasibility_rate: f64,
    pub mean_iterations: f64,
    pub trials_used: usize,
}

#[derive(Default, Clone, Copy)]
struct Accumulator {
    ee: f64,
    capacity: f64,
    iterations: f64,
    used: usize,
}

/// Run the whole experiment. Within a trial, every requested algorithm sees
/// the same topology and channels; only `random_beta` consumes additional
/// randomness from the trial stream. `BudgetExceeded` from the oracle
/// aborts the run; infeasible trials are recorded in `feasibility_rate`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<AggregateRow>, Error> {
    spec.validate()?;
    let gabs = GabsSettings::default();
    let mut rows = Vec::new();

    for (sweep_index, &value) in spec.sweep_values.iter().enumerate() {
        let cfg = apply_sweep(&spec.base, spec.sweep_variable, value)?;
        let requested: Vec<Algorithm> = ALGORITHM_ORDER
            .iter()
            .copied()
            .filter(|a| spec.algorithms.contains(a))
            .collect();
        let mut accs = vec![Accumulator::default(); requested.len()];

        for trial in 0..spec.trials {
            let seed = derive_trial_seed(spec.base_seed, sweep_index, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let topo = match generate_topology(&cfg, &mut rng) {
                Ok(t) => t,
                // An unplaceable draw counts against feasibility.
                Err(Error::PlacementFailure { .. }) => continue,
                Err(e) => return Err(e),
            };
            let chan = realize_channels(&cfg, &topo, &mut rng);

            for (algo, acc) in requested.iter().zip(accs.iter_mut()) {
                let result = match algo {
                    Algorithm::Iterative => {
                        iterative_solve(&cfg, &chan, &gabs, DEFAULT_MAX_OUTER, DEFAULT_REL_TOL)?
                    }
                    Algorithm::FixedBeta => fixed_beta_solve(&cfg, &chan, &gabs)?,
                    Algorithm::EqualPower => equal_power_baseline(&cfg, &chan)?,
                    Algorithm::RandomBeta => random_beta_baseline(&cfg, &chan, &mut rng)?,
                    Algorithm::Oracle => {
                        exhaustive_oracle(&cfg, &chan, &OracleGrid::for_config(&cfg))?
                    }
                };
                if result.status != SolveStatus::Infeasible {
                    acc.ee += result.total_ee;
                    acc.capacity += result.total_capacity;
                    acc.iterations += result.iterations as f64;
                    acc.used += 1;
                }
            }
        }

        for (algo, acc) in requested.iter().zip(accs.iter()) {
            let used = acc.used;
            let mean = |sum: f64| if used > 0 { sum / used as f64 } else { 0.0 };
            rows.push(AggregateRow {
                sweep_variable: spec.sweep_variable,
                sweep_value: value,
                algorithm: *algo,
                mean_total_ee: mean(acc.ee),
                mean_total_capacity: mean(acc.capacity),
                feasibility_rate: used as f64 / spec.trials as f64,
                mean_iterations: mean(acc.iterations),
                trials_used: used,
            });
        }
    }
    Ok(rows)
}

/// One trial's per-iteration EE trace from the iterative solver.
pub fn convergence_trace(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<f64>, Error> {
    convergence_trace_with(
        cfg,
        seed,
        &GabsSettings::default(),
        DEFAULT_MAX_OUTER,
        DEFAULT_REL_TOL,
    )
}

/// [`convergence_trace`] with explicit solver knobs.
pub fn convergence_trace_with(
    cfg: &ScenarioConfig,
    seed: u64,
    settings: &GabsSettings,
    max_outer: usize,
    rel_tol: f64,
) -> Result<Vec<f64>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topo = generate_topology(cfg, &mut rng)?;
    let chan = realize_channels(cfg, &topo, &mut rng);
    let result = iterative_solve(cfg, &chan, settings, max_outer, rel_tol)?;
    if result.status == SolveStatus::Infeasible {
        return Err(Error::Infeasible(
            "QoS floor not supportable on this realization".into(),
        ));
    }
    Ok(result.ee_trace)
}

/// Output shape for [`emit_results`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// The canonical 10-significant-digit rendering of a float.
fn fmt_sig10(x: f64) -> String {
    format!("{x:.9e}")
}

/// Round to the value the 10-significant-digit rendering denotes, so CSV
/// text and JSON numbers agree exactly.
fn round_sig10(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    fmt_sig10(x).parse().expect("formatted float reparses")
}

fn rounded(row: &AggregateRow) -> AggregateRow {
    AggregateRow {
        sweep_value: round_sig10(row.sweep_value),
        mean_total_ee: round_sig10(row.mean_total_ee),
        mean_total_capacity: round_sig10(row.mean_total_capacity),
        feasibility_rate: round_sig10(row.feasibility_rate),
        mean_iterations: round_sig10(row.mean_iterations),
        ..row.clone()
    }
}

/// Header plus one line per row.
pub fn results_to_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(
        "sweep_variable,sweep_value,algorithm,mean_total_ee,mean_total_capacity,\
         feasibility_rate,mean_iterations,trials_used\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.sweep_variable.name(),
            fmt_sig10(row.sweep_value),
            row.algorithm.name(),
            fmt_sig10(row.mean_total_ee),
            fmt_sig10(row.mean_total_capacity),
            fmt_sig10(row.feasibility_rate),
            fmt_sig10(row.mean_iterations),
            row.trials_used
        ));
    }
    out
}

/// Pretty-printed JSON array mirroring the CSV field names.
pub fn results_to_json(rows: &[AggregateRow]) -> String {
    let rounded: Vec<AggregateRow> = rows.iter().map(rounded).collect();
    let mut text = serde_json::to_string_pretty(&rounded).expect("rows serialize");
    text.push('\n');
    text
}

/// Render `rows` in `format` and write them to `path`. Refuses empty input
/// before creating the file.
pub fn emit_results(
    rows: &[AggregateRow],
    format: OutputFormat,
    path: impl AsRef<Path>,
) -> Result<(), Error> {
    let path = path.as_ref();
    if rows.is_empty() {
        return Err(Error::Config("no rows to emit".into()));
    }
    let text = match format {
        OutputFormat::Csv => results_to_csv(rows),
        OutputFormat::Json => results_to_json(rows),
    };
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}
