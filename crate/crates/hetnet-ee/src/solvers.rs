//! Top-level allocation strategies.
//!
//! * [`iterative_solve`] — alternate the closed-form bandwidth split and the
//!   per-user power search until the total EE stabilizes.
//! * [`fixed_beta_solve`] — compute the split once from the equal-power
//!   matrix, then run the power search once (no outer iteration).
//! * [`equal_power_baseline`] — every user at `Pmax` (clamped into its
//!   feasible interval), split from that matrix.
//! * [`random_beta_baseline`] — uniformly drawn split (resampled until every
//!   user is feasible), then the power search.
//! * [`exhaustive_oracle`] — grid search over `(beta, P)` keeping the best
//!   point that satisfies C1-C4 exactly.
//!
//! Every reported allocation satisfies C1-C4. Iterates are tracked as pairs
//! `(P, beta_optimal(P))`: at such pairs the binding cell's backhaul holds
//! with equality, and because the per-user cap forces `phi_j(P_next) <=
//! beta_current`, the beta sequence is non-increasing — which in turn keeps
//! every user's rate at or above the QoS floor established by the previous
//! power floor. The best iterate seen is returned, so the EE trace is
//! non-decreasing and the iterative result can never fall below the
//! fixed-split result on the same channels.

use rand::Rng;
use serde::Serialize;

use crate::bandwidth_allocator::{beta_optimal, qos_feasibility};
use crate::channel_model::{backhaul_snrs, ChannelRealization, ScenarioConfig};
use crate::ee_model::{cell_throughput, rate_matrix, total_ee, BandwidthFactor, PowerMatrix};
use crate::error::Error;
use crate::power_allocator::{clamp_power, gabs_search, power_bounds, GabsSettings};

/// Default relative EE change below which the outer loop stops.
pub const DEFAULT_REL_TOL: f64 = 1e-4;
/// Default cap on outer iterations.
pub const DEFAULT_MAX_OUTER: usize = 50;

/// Evaluation budget for [`exhaustive_oracle`] (per-cell enumeration cost).
const ORACLE_BUDGET: f64 = 1e8;

/// Extra alternation rounds after EE convergence that drive `(beta, P)` to
/// its numerical fixed point (cheap: the gradient roots are reused).
const POLISH_MAX_ROUNDS: usize = 500;
const POLISH_BETA_TOL: f64 = 1e-13;

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Infeasible,
}

/// A bandwidth split paired with a power matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub beta: BandwidthFactor,
    pub power: PowerMatrix,
}

/// Outcome of one solve on one channel realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub allocation: Allocation,
    /// Total EE at the reported allocation, bits/Hz/J.
    pub total_ee: f64,
    /// Sum of all user rates, bits/s/Hz.
    pub total_capacity: f64,
    pub per_user_rates: Vec<Vec<f64>>,
    /// Outer iterations executed (1 for the one-shot strategies).
    pub iterations: usize,
    /// Best-so-far total EE after each outer iteration; non-decreasing.
    pub ee_trace: Vec<f64>,
    pub status: SolveStatus,
}

impl SolverResult {
    pub fn is_feasible(&self) -> bool {
        self.status != SolveStatus::Infeasible
    }

    fn infeasible(cfg: &ScenarioConfig) -> Self {
        SolverResult {
            allocation: Allocation {
                beta: BandwidthFactor::new(0.0).expect("0 is in domain"),
                power: PowerMatrix::zeros(cfg.num_small_cells, cfg.users_per_cell),
            },
            total_ee: 0.0,
            total_capacity: 0.0,
            per_user_rates: vec![vec![0.0; cfg.users_per_cell]; cfg.num_small_cells],
            iterations: 0,
            ee_trace: Vec::new(),
            status: SolveStatus::Infeasible,
        }
    }

    fn at_allocation(
        cfg: &ScenarioConfig,
        chan: &ChannelRealization,
        beta: f64,
        power: PowerMatrix,
        iterations: usize,
        ee_trace: Vec<f64>,
        status: SolveStatus,
    ) -> Self {
        let rates = rate_matrix(beta, &power, chan, cfg);
        let capacity = rates.iter().map(|row| cell_throughput(row)).sum();
        let ee = total_ee(beta, &power, chan, cfg);
        SolverResult {
            allocation: Allocation {
                beta: BandwidthFactor::new(beta).expect("solver betas lie in [0,1)"),
                power,
            },
            total_ee: ee,
            total_capacity: capacity,
            per_user_rates: rates,
            iterations,
            ee_trace,
            status,
        }
    }
}

/// The common initialization: every small cell gives each user the same
/// power, `Pmax/2`.
fn equal_power_init(cfg: &ScenarioConfig) -> PowerMatrix {
    PowerMatrix::uniform(
        cfg.num_small_cells,
        cfg.users_per_cell,
        cfg.max_user_power / 2.0,
    )
}

/// Unconstrained EE-optimal power of every user. The gradient numerator
/// scales linearly in the bandwidth weight, so its root does not depend on
/// `beta`; these roots are computed once and clamped at whatever split the
/// caller is iterating on.
fn unconstrained_roots(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    settings: &GabsSettings,
) -> Result<Vec<Vec<f64>>, Error> {
    let weight = 1.0 / cfg.users_per_cell as f64;
    let init = cfg.max_user_power / 2.0;
    (0..cfg.num_small_cells)
        .map(|j| {
            (0..cfg.users_per_cell)
                .map(|k| {
                    gabs_search(
                        chan.eff_gain(cfg, j, k),
                        weight,
                        cfg.circuit_power,
                        init,
                        settings,
                    )
                })
                .collect()
        })
        .collect()
}

/// Clamp every root into its feasible interval at `beta`.
/// `None` when some user has an empty interval (floor above cap).
fn clamp_all(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    gammas: &[f64],
    beta: f64,
    roots: &[Vec<f64>],
) -> Option<PowerMatrix> {
    let mut power = PowerMatrix::zeros(cfg.num_small_cells, cfg.users_per_cell);
    for (j, &gamma) in gammas.iter().enumerate() {
        for (k, &root) in roots[j].iter().enumerate() {
            let bounds = power_bounds(beta, cfg, chan, j, k, gamma);
            if !bounds.feasible {
                return None;
            }
            power.set(j, k, clamp_power(root, &bounds));
        }
    }
    Some(power)
}

/// Alternate bandwidth and power updates until the total EE changes by at
/// most `rel_tol` between consecutive outer iterations, or `max_outer` is
/// hit. The reported allocation is the best `(P, beta_optimal(P))` iterate
/// seen, refined to the alternation's fixed point.
pub fn iterative_solve(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    settings: &GabsSettings,
    max_outer: usize,
    rel_tol: f64,
) -> Result<SolverResult, Error> {
    let gammas = backhaul_snrs(cfg, chan);
    let init = equal_power_init(cfg);
    if !qos_feasibility(&init, chan, cfg, &gammas).feasible {
        return Ok(SolverResult::infeasible(cfg));
    }

    let roots = unconstrained_roots(cfg, chan, settings)?;
    let mut beta = beta_optimal(&init, chan, cfg, &gammas).beta;

    let mut best: Option<(f64, f64, PowerMatrix)> = None;
    let mut trace: Vec<f64> = Vec::new();
    let mut prev_raw_ee: Option<f64> = None;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;

    for outer in 1..=max_outer {
        iterations = outer;
        let power = match clamp_all(cfg, chan, &gammas, beta, &roots) {
            Some(p) => p,
            None => return Ok(SolverResult::infeasible(cfg)),
        };
        beta = beta_optimal(&power, chan, cfg, &gammas).beta;
        let ee = total_ee(beta, &power, chan, cfg);

        if best.as_ref().is_none_or(|(b, _, _)| ee > *b) {
            best = Some((ee, beta, power));
        }
        let best_ee = best.as_ref().map(|(b, _, _)| *b).unwrap();
        trace.push(best_ee);

        if let Some(prev) = prev_raw_ee {
            let raw_converged = (ee - prev).abs() <= rel_tol * ee.abs();
            let n = trace.len();
            let trace_converged =
                (trace[n - 1] - trace[n - 2]).abs() <= rel_tol * trace[n - 1].abs();
            if raw_converged && trace_converged {
                status = SolveStatus::Converged;
                break;
            }
        }
        prev_raw_ee = Some(ee);
    }

    // Polish to the fixed point so the binding-cell equality and the QoS
    // floor hold at full precision at the reported pair.
    for _ in 0..POLISH_MAX_ROUNDS {
        let power = match clamp_all(cfg, chan, &gammas, beta, &roots) {
            Some(p) => p,
            None => return Ok(SolverResult::infeasible(cfg)),
        };
        let new_beta = beta_optimal(&power, chan, cfg, &gammas).beta;
        let ee = total_ee(new_beta, &power, chan, cfg);
        if best.as_ref().is_none_or(|(b, _, _)| ee > *b) {
            best = Some((ee, new_beta, power));
        }
        let delta = (new_beta - beta).abs();
        beta = new_beta;
        if delta <= POLISH_BETA_TOL * beta.max(1.0) {
            break;
        }
    }

    let (_, best_beta, best_power) = best.expect("at least one iterate ran");
    Ok(SolverResult::at_allocation(
        cfg, chan, best_beta, best_power, iterations, trace, status,
    ))
}

/// Run the per-user power search at a caller-fixed bandwidth split.
/// Infeasible when some user's floor exceeds its cap at this split.
pub fn solve_at_beta(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    beta: f64,
    settings: &GabsSettings,
) -> Result<SolverResult, Error> {
    let gammas = backhaul_snrs(cfg, chan);
    let roots = unconstrained_roots(cfg, chan, settings)?;
    let power = match clamp_all(cfg, chan, &gammas, beta, &roots) {
        Some(p) => p,
        None => return Ok(SolverResult::infeasible(cfg)),
    };
    let ee = total_ee(beta, &power, chan, cfg);
    Ok(SolverResult::at_allocation(
        cfg,
        chan,
        beta,
        power,
        1,
        vec![ee],
        SolveStatus::Converged,
    ))
}

/// The low-complexity strategy: bandwidth split computed once from the
/// equal-power matrix, broadcast, then one power pass. `iterations` is 1.
pub fn fixed_beta_solve(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    settings: &GabsSettings,
) -> Result<SolverResult, Error> {
    let gammas = backhaul_snrs(cfg, chan);
    let init = equal_power_init(cfg);
    if !qos_feasibility(&init, chan, cfg, &gammas).feasible {
        return Ok(SolverResult::infeasible(cfg));
    }
    let beta = beta_optimal(&init, chan, cfg, &gammas).beta;
    solve_at_beta(cfg, chan, beta, settings)
}

/// Equal-power reference: every user at `Pmax`, split from that matrix, then
/// powers clamped into the feasible intervals the split induces.
pub fn equal_power_baseline(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
) -> Result<SolverResult, Error> {
    let gammas = backhaul_snrs(cfg, chan);
    let full = PowerMatrix::uniform(cfg.num_small_cells, cfg.users_per_cell, cfg.max_user_power);
    if !qos_feasibility(&full, chan, cfg, &gammas).feasible {
        return Ok(SolverResult::infeasible(cfg));
    }
    let beta = beta_optimal(&full, chan, cfg, &gammas).beta;

    let mut power = full;
    for (j, &gamma) in gammas.iter().enumerate() {
        for k in 0..cfg.users_per_cell {
            let bounds = power_bounds(beta, cfg, chan, j, k, gamma);
            if !bounds.feasible {
                return Ok(SolverResult::infeasible(cfg));
            }
            power.set(j, k, clamp_power(power.get(j, k), &bounds));
        }
    }
    let ee = total_ee(beta, &power, chan, cfg);
    Ok(SolverResult::at_allocation(
        cfg,
        chan,
        beta,
        power,
        1,
        vec![ee],
        SolveStatus::Converged,
    ))
}

/// How many uniform draws [`random_beta_baseline`] tries before declaring
/// the trial infeasible.
const RANDOM_BETA_DRAWS: usize = 100;

/// Random-split reference: `beta ~ U(0,1)` resampled until every user's
/// interval is non-empty, then the usual power search.
pub fn random_beta_baseline<R: Rng>(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    rng: &mut R,
) -> Result<SolverResult, Error> {
    let gammas = backhaul_snrs(cfg, chan);
    for _ in 0..RANDOM_BETA_DRAWS {
        let beta: f64 = rng.gen();
        let all_feasible = (0..cfg.num_small_cells).all(|j| {
            (0..cfg.users_per_cell).all(|k| power_bounds(beta, cfg, chan, j, k, gammas[j]).feasible)
        });
        if all_feasible {
            return solve_at_beta(cfg, chan, beta, &GabsSettings::default());
        }
    }
    Ok(SolverResult::infeasible(cfg))
}

/// Grid steps for the exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    /// Power step `a`, watts.
    pub power_step: f64,
    /// Bandwidth-fraction step `b`.
    pub beta_step: f64,
}

impl OracleGrid {
    pub fn new(power_step: f64, beta_step: f64) -> Result<Self, Error> {
        if !power_step.is_finite() || power_step <= 0.0 {
            return Err(Error::Config(format!(
                "oracle power step must be positive, got {power_step}"
            )));
        }
        if !(beta_step > 0.0 && beta_step < 1.0) {
            return Err(Error::Config(format!(
                "oracle beta step must lie in (0, 1), got {beta_step}"
            )));
        }
        Ok(OracleGrid {
            power_step,
            beta_step,
        })
    }

    /// The conventional resolution: `Pmax/100` power steps, `1/100` beta steps.
    pub fn for_config(cfg: &ScenarioConfig) -> Self {
        OracleGrid {
            power_step: cfg.max_user_power / 100.0,
            beta_step: 0.01,
        }
    }
}

/// Exhaustive reference: evaluate the EE objective over the full grid
/// `{0, a, 2a, ..., Pmax}^(J x K) x {b, 2b, ..., 1-b}` keeping the best
/// point that satisfies C1-C4 exactly; ties go to the lexicographically
/// smallest `(beta, P)`.
///
/// The objective is a per-user sum and C2 couples users only within a cell,
/// so at fixed `beta` the power grid is enumerated cell by cell — the same
/// optimum as the full product scan at `(1/b) * J * (Pmax/a + 1)^K` cost.
/// Instances above [`ORACLE_BUDGET`] enumerated points are refused.
pub fn exhaustive_oracle(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    grid: &OracleGrid,
) -> Result<SolverResult, Error> {
    let gammas = backhaul_snrs(cfg, chan);
    let j_cells = cfg.num_small_cells;
    let k_users = cfg.users_per_cell;

    let mut power_grid: Vec<f64> = Vec::new();
    let mut step = 0usize;
    loop {
        let p = step as f64 * grid.power_step;
        if p > cfg.max_user_power * (1.0 + 1e-12) {
            break;
        }
        power_grid.push(p.min(cfg.max_user_power));
        step += 1;
    }
    if *power_grid.last().unwrap() < cfg.max_user_power * (1.0 - 1e-12) {
        power_grid.push(cfg.max_user_power);
    }

    let beta_count = ((1.0 - grid.beta_step) / grid.beta_step).round() as usize;
    let beta_grid: Vec<f64> = (1..=beta_count)
        .map(|i| i as f64 * grid.beta_step)
        .filter(|&b| b < 1.0)
        .collect();

    let evaluations =
        beta_grid.len() as f64 * j_cells as f64 * (power_grid.len() as f64).powi(k_users as i32);
    if evaluations > ORACLE_BUDGET {
        return Err(Error::BudgetExceeded {
            evaluations,
            budget: ORACLE_BUDGET,
        });
    }

    // Per-user tables over the power grid: the rate log term l = log2(1+a*p)
    // and the beta-independent EE kernel l/(Pc+p). Total EE at (beta, P) is
    // ((1-beta)/K) * sum of kernels.
    let mut log_terms = vec![vec![vec![0.0; power_grid.len()]; k_users]; j_cells];
    let mut kernels = vec![vec![vec![0.0; power_grid.len()]; k_users]; j_cells];
    for j in 0..j_cells {
        for k in 0..k_users {
            let a = chan.eff_gain(cfg, j, k);
            for (i, &p) in power_grid.iter().enumerate() {
                let l = (a * p).ln_1p() / std::f64::consts::LN_2;
                log_terms[j][k][i] = l;
                kernels[j][k][i] = l / (cfg.circuit_power + p);
            }
        }
    }
    let backhaul_terms: Vec<f64> = gammas
        .iter()
        .map(|&g| crate::ee_model::backhaul_log_term(cfg, g))
        .collect();

    let mut best: Option<(f64, f64, Vec<Vec<usize>>)> = None;
    let mut cell_choice: Vec<Vec<usize>> = vec![vec![0; k_users]; j_cells];

    for &beta in &beta_grid {
        // C3 as a floor on l, C2 as a cap on sum(l), both rescaled by the
        // bandwidth weight w = (1-beta)/K.
        let weight = (1.0 - beta) / k_users as f64;
        let min_log = cfg.qos_rate / weight;

        let mut total_kernel = 0.0;
        let mut feasible = true;
        for j in 0..j_cells {
            let log_cap = beta * backhaul_terms[j] / weight;
            let cell_best = best_cell_tuple(
                &log_terms[j],
                &kernels[j],
                min_log,
                log_cap,
                &mut cell_choice[j],
            );
            match cell_best {
                Some(kernel_sum) => total_kernel += kernel_sum,
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if !feasible {
            continue;
        }
        let ee = weight * total_kernel;
        if best.as_ref().is_none_or(|(b, _, _)| ee > *b) {
            best = Some((ee, beta, cell_choice.clone()));
        }
    }

    let (_, beta, choice) = match best {
        Some(b) => b,
        None => return Ok(SolverResult::infeasible(cfg)),
    };
    let mut power = PowerMatrix::zeros(j_cells, k_users);
    for j in 0..j_cells {
        for k in 0..k_users {
            power.set(j, k, power_grid[choice[j][k]]);
        }
    }
    let ee = total_ee(beta, &power, chan, cfg);
    Ok(SolverResult::at_allocation(
        cfg,
        chan,
        beta,
        power,
        1,
        vec![ee],
        SolveStatus::Converged,
    ))
}

/// Enumerate one cell's K-tuples over the power grid, maximizing the kernel
/// sum subject to the per-user log floor and the cell's log cap. Ascending
/// odometer order with strict-improvement updates makes ties resolve to the
/// lexicographically smallest tuple. Returns the best sum, writing the
/// winning grid indices into `choice`; `None` when no tuple is feasible.
fn best_cell_tuple(
    log_terms: &[Vec<f64>],
    kernels: &[Vec<f64>],
    min_log: f64,
    log_cap: f64,
    choice: &mut [usize],
) -> Option<f64> {
    let k_users = log_terms.len();
    let grid_len = log_terms[0].len();
    let mut indices = vec![0usize; k_users];
    let mut best: Option<f64> = None;

    // First grid index per user meeting the QoS floor; tuples below it can
    // be skipped wholesale.
    let mut start = vec![0usize; k_users];
    for (k, first) in start.iter_mut().enumerate() {
        *first = log_terms[k].iter().position(|&l| l >= min_log)?;
    }
    indices.copy_from_slice(&start);

    'outer: loop {
        let mut log_sum = 0.0;
        let mut kernel_sum = 0.0;
        for k in 0..k_users {
            log_sum += log_terms[k][indices[k]];
            kernel_sum += kernels[k][indices[k]];
        }
        if log_sum <= log_cap && best.is_none_or(|b| kernel_sum > b) {
            best = Some(kernel_sum);
            choice.copy_from_slice(&indices);
        }

        // Odometer increment, least-significant digit last, so visits are
        // lexicographic in (p_1, ..., p_K). Digits reset to their QoS-floor
        // start index.
        let mut k = k_users;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            if indices[k] + 1 < grid_len {
                indices[k] += 1;
                indices[k + 1..].copy_from_slice(&start[k + 1..]);
                break;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandwidth_allocator::beta_lower_bound;
    use crate::channel_model::{generate_topology, realize_channels};
    use crate::constraints::check_constraints;
    use crate::ee_model::user_ee;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trial(cfg: &ScenarioConfig, seed: u64) -> ChannelRealization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = generate_topology(cfg, &mut rng).unwrap();
        realize_channels(cfg, &topo, &mut rng)
    }

    #[test]
    fn iterative_converges_on_baseline_scenario() {
        let cfg = ScenarioConfig::default();
        let chan = trial(&cfg, 42);
        let settings = GabsSettings::default();
        let result =
            iterative_solve(&cfg, &chan, &settings, DEFAULT_MAX_OUTER, DEFAULT_REL_TOL).unwrap();
        assert_eq!(result.status, SolveStatus::Converged);
        assert!(
            result.iterations <= 30,
            "took {} iterations",
            result.iterations
        );
        for w in result.ee_trace.windows(2) {
            assert!(w[1] >= w[0], "trace decreased: {:?}", result.ee_trace);
        }
        let n = result.ee_trace.len();
        assert!(
            (result.ee_trace[n - 1] - result.ee_trace[n - 2]).abs()
                <= DEFAULT_REL_TOL * result.ee_trace[n - 1].abs(),
            "converged status but trace still moving"
        );
        assert!(result.total_ee > 0.0);
        // Capacity field equals the rate sum.
        let sum: f64 = result.per_user_rates.iter().flatten().sum();
        assert!((sum - result.total_capacity).abs() < 1e-9);
    }

    #[test]
    fn iterative_single_user_matches_hand_fixed_point() {
        // J = K = 1, Rt = 0, unit access gain, Pc = 1: the unconstrained
        // optimum is e-1; the hand-run alternation (grid-scanned optimum,
        // closed-form cap) must agree with the solver.
        let mut cfg = ScenarioConfig::default();
        cfg.num_small_cells = 1;
        cfg.users_per_cell = 1;
        cfg.antenna_array = 2;
        cfg.beamforming_group = 1;
        cfg.noise_power = 1.0;
        cfg.per_antenna_power = 4.0;
        cfg.circuit_power = 1.0;
        cfg.max_user_power = 10.0;
        cfg.qos_rate = 0.0;
        let chan = ChannelRealization {
            access_gain: vec![vec![1.0]],
            macro_user_gain: vec![vec![0.0]],
            backhaul_gain: vec![1.0],
            interference: vec![vec![0.0]],
        };
        let gamma = 4.0; // P0 * G / sigma^2
        let backhaul_term = (1.0f64 + 2.0 * gamma).log2();

        // Independent optimum by grid scan of U(p) = log2(1+p)/(1+p).
        let mut p_hat = 0.0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=1_000_000u32 {
            let p = i as f64 * 1e-5;
            let u = user_ee(0.0, p, 1.0, 1, 1.0);
            if u > best {
                best = u;
                p_hat = p;
            }
        }

        // Hand-run alternation at 1e-6.
        let mut p = cfg.max_user_power / 2.0;
        let mut beta = 0.0;
        for _ in 0..10_000 {
            beta = {
                let access = (1.0f64 + p).log2();
                access / (backhaul_term + access)
            };
            let cap_exp = beta / (1.0 - beta) * backhaul_term;
            let cap = (2f64.powf(cap_exp) - 1.0).min(cfg.max_user_power);
            let next = p_hat.min(cap);
            if (next - p).abs() <= 1e-9 {
                p = next;
                break;
            }
            p = next;
        }

        let result = iterative_solve(&cfg, &chan, &GabsSettings::default(), 50, 1e-6).unwrap();
        assert_eq!(result.status, SolveStatus::Converged);
        assert!(
            (result.allocation.power.get(0, 0) - p).abs() < 1e-5,
            "solver power {} vs hand {}",
            result.allocation.power.get(0, 0),
            p
        );
        assert!(
            (result.allocation.beta.value() - beta).abs() < 1e-6,
            "solver beta {} vs hand {}",
            result.allocation.beta.value(),
            beta
        );
        // The final beta is the lower bound at the final power.
        let phi = beta_lower_bound(result.allocation.power.row(0), &chan, &cfg, 0, gamma);
        assert!((result.allocation.beta.value() - phi).abs() < 1e-12);
    }

    #[test]
    fn oversized_qos_floor_is_infeasible() {
        let mut cfg = ScenarioConfig::default();
        cfg.qos_rate = 100.0;
        let chan = trial(&cfg, 3);
        let result = iterative_solve(&cfg, &chan, &GabsSettings::default(), 50, 1e-4).unwrap();
        assert_eq!(result.status, SolveStatus::Infeasible);
        assert_eq!(result.total_ee, 0.0);
    }

    #[test]
    fn fixed_beta_never_beats_iterative() {
        let cfg = ScenarioConfig::default();
        let settings = GabsSettings::default();
        for seed in 0..30 {
            let chan = trial(&cfg, seed);
            let iter = iterative_solve(&cfg, &chan, &settings, 50, 1e-4).unwrap();
            let fixed = fixed_beta_solve(&cfg, &chan, &settings).unwrap();
            if !iter.is_feasible() || !fixed.is_feasible() {
                continue;
            }
            assert!(
                fixed.total_ee <= iter.total_ee + 1e-9,
                "seed {seed}: fixed {} > iterative {}",
                fixed.total_ee,
                iter.total_ee
            );
        }
    }

    #[test]
    fn fixed_beta_is_fixed_point_for_single_user_with_high_circuit_power() {
        // With Pc large the unconstrained optimum sits above Pmax/2, and for
        // a single user the cap reproduces the initial power, so the
        // equal-power split is already the fixed point: both strategies
        // return identical allocations.
        let mut cfg = ScenarioConfig::default();
        cfg.num_small_cells = 1;
        cfg.users_per_cell = 1;
        cfg.antenna_array = 2;
        cfg.beamforming_group = 1;
        cfg.noise_power = 1.0;
        cfg.per_antenna_power = 4.0;
        cfg.circuit_power = 10.0;
        cfg.max_user_power = 0.1;
        cfg.qos_rate = 0.0;
        let chan = ChannelRealization {
            access_gain: vec![vec![1.0]],
            macro_user_gain: vec![vec![0.0]],
            backhaul_gain: vec![1.0],
            interference: vec![vec![0.0]],
        };
        let settings = GabsSettings::default();
        let fixed = fixed_beta_solve(&cfg, &chan, &settings).unwrap();
        let iter = iterative_solve(&cfg, &chan, &settings, 50, 1e-4).unwrap();
        assert_eq!(fixed.allocation, iter.allocation);
        assert!((fixed.total_ee - iter.total_ee).abs() < 1e-12);
    }

    #[test]
    fn fixed_beta_deterministic() {
        let cfg = ScenarioConfig::default();
        let chan = trial(&cfg, 9);
        let a = fixed_beta_solve(&cfg, &chan, &GabsSettings::default()).unwrap();
        let b = fixed_beta_solve(&cfg, &chan, &GabsSettings::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equal_power_symmetric_channels_give_equal_rates() {
        let mut cfg = ScenarioConfig::default();
        cfg.num_small_cells = 2;
        cfg.users_per_cell = 3;
        let chan = ChannelRealization {
            access_gain: vec![vec![2e-7; 3]; 2],
            macro_user_gain: vec![vec![1e-9; 3]; 2],
            backhaul_gain: vec![1e-9; 2],
            interference: vec![vec![cfg.per_antenna_power * 1e-9; 3]; 2],
        };
        let result = equal_power_baseline(&cfg, &chan).unwrap();
        let r0 = result.per_user_rates[0][0];
        for row in &result.per_user_rates {
            for &r in row {
                assert!((r - r0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equal_power_trails_iterative_on_average() {
        let cfg = ScenarioConfig::default();
        let settings = GabsSettings::default();
        let mut iter_sum = 0.0;
        let mut equal_sum = 0.0;
        let mut n = 0;
        for seed in 100..150 {
            let chan = trial(&cfg, seed);
            let iter = iterative_solve(&cfg, &chan, &settings, 50, 1e-4).unwrap();
            let equal = equal_power_baseline(&cfg, &chan).unwrap();
            if !iter.is_feasible() || !equal.is_feasible() {
                continue;
            }
            iter_sum += iter.total_ee;
            equal_sum += equal.total_ee;
            n += 1;
        }
        assert!(n >= 40, "only {n} feasible trials");
        assert!(
            equal_sum < iter_sum,
            "equal power {} should trail iterative {}",
            equal_sum,
            iter_sum
        );
    }

    #[test]
    fn vanishing_power_cap_kills_ee() {
        let mut cfg = ScenarioConfig::default();
        cfg.qos_rate = 0.0;
        let chan = trial(&cfg, 5);
        let nominal = equal_power_baseline(&cfg, &chan).unwrap();
        cfg.max_user_power = 1e-12;
        let tiny = equal_power_baseline(&cfg, &chan).unwrap();
        assert!(tiny.total_ee < 1e-3 * nominal.total_ee);
    }

    #[test]
    fn random_beta_deterministic_and_hookable() {
        let cfg = ScenarioConfig::default();
        let chan = trial(&cfg, 13);
        let a = random_beta_baseline(&cfg, &chan, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = random_beta_baseline(&cfg, &chan, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, b);

        // Drawing exactly the fixed-split beta reproduces that solver.
        let settings = GabsSettings::default();
        let fixed = fixed_beta_solve(&cfg, &chan, &settings).unwrap();
        let forced = solve_at_beta(&cfg, &chan, fixed.allocation.beta.value(), &settings).unwrap();
        assert_eq!(forced.allocation, fixed.allocation);
        assert_eq!(forced.total_ee, fixed.total_ee);
    }

    #[test]
    fn random_beta_trails_fixed_beta_on_average() {
        let cfg = ScenarioConfig::default();
        let settings = GabsSettings::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0xabcd);
        let mut fixed_sum = 0.0;
        let mut random_sum = 0.0;
        let mut n = 0;
        for seed in 200..320 {
            let chan = trial(&cfg, seed);
            let fixed = fixed_beta_solve(&cfg, &chan, &settings).unwrap();
            let random = random_beta_baseline(&cfg, &chan, &mut rng).unwrap();
            if !fixed.is_feasible() || !random.is_feasible() {
                continue;
            }
            fixed_sum += fixed.total_ee;
            random_sum += random.total_ee;
            n += 1;
        }
        assert!(n >= 100, "only {n} feasible trials");
        assert!(random_sum < fixed_sum);
    }

    #[test]
    fn oracle_agrees_with_iterative_on_singleton() {
        // Circuit power low enough that the single user's optimum is
        // interior; the remaining gap is the decomposition's approximation.
        let mut cfg = ScenarioConfig::default();
        cfg.num_small_cells = 1;
        cfg.users_per_cell = 1;
        cfg.circuit_power = 0.1;
        let chan = trial(&cfg, 0);
        let grid = OracleGrid {
            power_step: cfg.max_user_power / 400.0,
            beta_step: 1.0 / 400.0,
        };
        let oracle = exhaustive_oracle(&cfg, &chan, &grid).unwrap();
        let iter = iterative_solve(&cfg, &chan, &GabsSettings::default(), 50, 1e-6).unwrap();
        assert!(oracle.is_feasible() && iter.is_feasible());
        let gap = (oracle.total_ee - iter.total_ee).abs() / iter.total_ee;
        assert!(
            gap < 0.02,
            "oracle {} vs iterative {}",
            oracle.total_ee,
            iter.total_ee
        );
    }

    #[test]
    fn oracle_dominates_iterative_on_small_instances() {
        let mut cfg = ScenarioConfig::default();
        cfg.num_small_cells = 3;
        cfg.users_per_cell = 2;
        for seed in 0..10 {
            let chan = trial(&cfg, seed);
            let oracle = exhaustive_oracle(&cfg, &chan, &OracleGrid::for_config(&cfg)).unwrap();
            let iter = iterative_solve(&cfg, &chan, &GabsSettings::default(), 50, 1e-4).unwrap();
            if !oracle.is_feasible() || !iter.is_feasible() {
                continue;
            }
            assert!(
                oracle.total_ee >= 0.97 * iter.total_ee,
                "seed {seed}: oracle {} far below iterative {}",
                oracle.total_ee,
                iter.total_ee
            );
        }
    }

    #[test]
    fn oracle_reports_infeasible_and_budget() {
        let mut cfg = ScenarioConfig::default();
        cfg.num_small_cells = 1;
        cfg.users_per_cell = 1;
        cfg.qos_rate = 1000.0;
        let chan = trial(&cfg, 2);
        let result = exhaustive_oracle(&cfg, &chan, &OracleGrid::for_config(&cfg)).unwrap();
        assert_eq!(result.status, SolveStatus::Infeasible);

        let mut big = ScenarioConfig::default();
        big.num_small_cells = 2;
        big.users_per_cell = 5;
        let chan = trial(&big, 2);
        match exhaustive_oracle(&big, &chan, &OracleGrid::for_config(&big)) {
            Err(Error::BudgetExceeded { .. }) => {}
            other => panic!("expected BudgetExceeded, got {other:?}"),
        }
    }

    #[test]
    fn all_reported_allocations_certify() {
        let cfg = ScenarioConfig::default();
        let settings = GabsSettings::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for seed in 0..25 {
            let chan = trial(&cfg, seed);
            let results = [
                iterative_solve(&cfg, &chan, &settings, 50, 1e-4).unwrap(),
                fixed_beta_solve(&cfg, &chan, &settings).unwrap(),
                equal_power_baseline(&cfg, &chan).unwrap(),
                random_beta_baseline(&cfg, &chan, &mut rng).unwrap(),
            ];
            for (i, result) in results.iter().enumerate() {
                if !result.is_feasible() {
                    continue;
                }
                let report = check_constraints(
                    &cfg,
                    &chan,
                    result.allocation.beta.value(),
                    &result.allocation.power,
                );
                assert!(
                    report.satisfied(1e-9),
                    "seed {seed} solver {i}: violation {:e}",
                    report.max_violation()
                );
            }
        }
    }

    #[test]
    fn trace_cap_behaviour() {
        let cfg = ScenarioConfig::default();
        // First feasible realization.
        let chan = (0..)
            .map(|seed| trial(&cfg, seed))
            .find(|chan| {
                iterative_solve(&cfg, chan, &GabsSettings::default(), 50, 1e-4)
                    .unwrap()
                    .is_feasible()
            })
            .unwrap();
        let result = iterative_solve(&cfg, &chan, &GabsSettings::default(), 5, 0.0).unwrap();
        assert_eq!(result.status, SolveStatus::MaxIterations);
        assert_eq!(result.iterations, 5);
        assert_eq!(result.ee_trace.len(), 5);
    }
}
