//! Rates, backhaul capacity, and the energy-efficiency utility.
//!
//! With a fraction `beta` of bandwidth reserved for backhaul and the rest
//! split evenly across a cell's `K` users, user `(j,k)` transmitting at `p`
//! watts achieves
//!
//! ```text
//! r(p) = ((1 - beta)/K) * log2(1 + a*p),     a = g / (sigma^2 + I)
//! ```
//!
//! and its energy efficiency is `U(p) = r(p) / (Pc + p)` in bits/Hz/J. The
//! cell's wireless backhaul carries at most
//! `C_j = beta * log2(1 + ((N-B+1)/B) * gamma_j)`.
//!
//! `U` is strictly quasiconcave in `p`: it rises to a unique stationary
//! point and falls thereafter. The sign of its derivative equals the sign of
//!
//! ```text
//! f(p) = (Pc + p) * r'(p) - r(p)
//! ```
//!
//! which is strictly decreasing, positive at `p = 0`, and negative for large
//! `p`; [`ee_gradient_numerator`] computes it and the power optimizer
//! bisects it.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::channel_model::{ChannelRealization, ScenarioConfig};
use crate::error::Error;

/// Largest base-2 exponent [`power_for_rate`] accepts before reporting the
/// rate as infeasible (2^1024 overflows an f64).
const MAX_RATE_EXPONENT: f64 = 1024.0;

/// J x K matrix of transmit powers in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerMatrix {
    rows: Vec<Vec<f64>>,
}

impl PowerMatrix {
    /// All-equal matrix: every user gets `p` watts.
    pub fn uniform(cells: usize, users: usize, p: f64) -> Self {
        PowerMatrix {
            rows: vec![vec![p; users]; cells],
        }
    }

    pub fn zeros(cells: usize, users: usize) -> Self {
        Self::uniform(cells, users, 0.0)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        PowerMatrix { rows }
    }

    pub fn cells(&self) -> usize {
        self.rows.len()
    }

    pub fn users(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.rows[j][k]
    }

    pub fn set(&mut self, j: usize, k: usize, p: f64) {
        self.rows[j][k] = p;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// True when every entry is finite and non-negative.
    pub fn is_valid(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .all(|p| p.is_finite() && *p >= 0.0)
    }
}

/// Fraction of system bandwidth reserved for wireless backhaul.
///
/// The domain is `[0, 1)`: at `beta = 1` every access rate is zero, so it is
/// never optimal, and excluding it removes the `1/(1-beta)` singularity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandwidthFactor(f64);

impl BandwidthFactor {
    pub fn new(value: f64) -> Result<Self, Error> {
        if !(0.0..1.0).contains(&value) {
            return Err(Error::Config(format!(
                "bandwidth factor must lie in [0, 1), got {value}"
            )));
        }
        Ok(BandwidthFactor(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Per-user constants the optimizer evaluates thousands of times: the
/// effective per-watt gain `a = g/(sigma^2+I)` and the bandwidth weight
/// `w = (1-beta)/K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCoefficients {
    pub eff_gain: f64,
    pub weight: f64,
}

impl LinkCoefficients {
    pub fn new(eff_gain: f64, weight: f64) -> Self {
        debug_assert!(eff_gain > 0.0);
        debug_assert!(weight > 0.0);
        LinkCoefficients { eff_gain, weight }
    }

    pub fn for_user(
        cfg: &ScenarioConfig,
        chan: &ChannelRealization,
        beta: f64,
        j: usize,
        k: usize,
    ) -> Self {
        LinkCoefficients {
            eff_gain: chan.eff_gain(cfg, j, k),
            weight: rate_weight(beta, cfg.users_per_cell),
        }
    }
}

/// Per-user bandwidth weight `(1 - beta)/K`.
pub fn rate_weight(beta: f64, users_per_cell: usize) -> f64 {
    (1.0 - beta) / users_per_cell as f64
}

/// Achievable rate `((1-beta)/K) * log2(1 + a*p)` in bits/s/Hz.
/// Exactly zero at `p = 0`.
pub fn user_rate(beta: f64, p: f64, eff_gain: f64, users_per_cell: usize) -> f64 {
    debug_assert!(p >= 0.0);
    rate_weight(beta, users_per_cell) * (eff_gain * p).ln_1p() / LN_2
}

/// Derivative of [`user_rate`] in `p`: `w * a / (ln2 * (1 + a*p))`.
pub fn rate_derivative(beta: f64, p: f64, eff_gain: f64, users_per_cell: usize) -> f64 {
    rate_weight(beta, users_per_cell) * eff_gain / (LN_2 * (1.0 + eff_gain * p))
}

/// Power needed to reach `rate`: `(2^(K*rate/(1-beta)) - 1) / a`, the exact
/// inverse of [`user_rate`]. Reports [`Error::InfeasibleRate`] when the
/// exponent exceeds double-precision range.
pub fn power_for_rate(
    rate: f64,
    beta: f64,
    eff_gain: f64,
    users_per_cell: usize,
) -> Result<f64, Error> {
    debug_assert!(rate >= 0.0);
    let exponent = users_per_cell as f64 * rate / (1.0 - beta);
    if exponent > MAX_RATE_EXPONENT {
        return Err(Error::InfeasibleRate {
            rate,
            exponent,
            max: MAX_RATE_EXPONENT,
        });
    }
    Ok((exponent * LN_2).exp_m1() / eff_gain)
}

/// Wireless backhaul capacity of a cell with SNR `gamma`:
/// `beta * log2(1 + ((N-B+1)/B) * gamma)` in bits/s/Hz.
pub fn backhaul_capacity(beta: f64, cfg: &ScenarioConfig, backhaul_snr: f64) -> f64 {
    beta * backhaul_log_term(cfg, backhaul_snr)
}

/// The beta-independent part of the backhaul capacity,
/// `log2(1 + ((N-B+1)/B) * gamma)`.
pub fn backhaul_log_term(cfg: &ScenarioConfig, backhaul_snr: f64) -> f64 {
    let array_gain =
        (cfg.antenna_array - cfg.beamforming_group + 1) as f64 / cfg.beamforming_group as f64;
    (array_gain * backhaul_snr).ln_1p() / LN_2
}

/// Cell throughput: the sum of its users' rates.
pub fn cell_throughput(rates: &[f64]) -> f64 {
    rates.iter().sum()
}

/// Energy efficiency of one user: `rate / (Pc + p)` in bits/Hz/J.
pub fn user_ee(beta: f64, p: f64, eff_gain: f64, users_per_cell: usize, circuit_power: f64) -> f64 {
    debug_assert!(circuit_power > 0.0);
    user_rate(beta, p, eff_gain, users_per_cell) / (circuit_power + p)
}

/// Total energy efficiency of all small-cell users at `(beta, P)`.
pub fn total_ee(
    beta: f64,
    power: &PowerMatrix,
    chan: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> f64 {
    debug_assert_eq!(power.cells(), cfg.num_small_cells);
    debug_assert_eq!(power.users(), cfg.users_per_cell);
    let mut sum = 0.0;
    for j in 0..power.cells() {
        for k in 0..power.users() {
            sum += user_ee(
                beta,
                power.get(j, k),
                chan.eff_gain(cfg, j, k),
                cfg.users_per_cell,
                cfg.circuit_power,
            );
        }
    }
    sum
}

/// Per-user rate matrix at `(beta, P)`.
pub fn rate_matrix(
    beta: f64,
    power: &PowerMatrix,
    chan: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Vec<Vec<f64>> {
    (0..power.cells())
        .map(|j| {
            (0..power.users())
                .map(|k| {
                    user_rate(
                        beta,
                        power.get(j, k),
                        chan.eff_gain(cfg, j, k),
                        cfg.users_per_cell,
                    )
                })
                .collect()
        })
        .collect()
}

/// The sign-carrying numerator of `dU/dp`:
/// `f(p) = (Pc + p) * r'(p) - r(p)` with `r'(p) = w*a/(ln2*(1+a*p))`.
///
/// `f` is strictly decreasing with `f(0) = w*Pc*a/ln2 > 0` and
/// `f(p) -> -inf`, so its unique root is the unconstrained EE-optimal power.
pub fn ee_gradient_numerator(p: f64, eff_gain: f64, weight: f64, circuit_power: f64) -> f64 {
    debug_assert!(p >= 0.0);
    let derivative = weight * eff_gain / (LN_2 * (1.0 + eff_gain * p));
    let rate = weight * (eff_gain * p).ln_1p() / LN_2;
    (circuit_power + p) * derivative - rate
}
