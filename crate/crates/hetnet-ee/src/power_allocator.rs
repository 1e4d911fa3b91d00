//! Per-user energy-efficient power allocation.
//!
//! Given the bandwidth split `beta`, each user's admissible power interval is
//!
//! ```text
//! L = ((sigma^2+I)/g) * (2^(K*Rt/(1-beta)) - 1)          (QoS floor)
//! H = min(((sigma^2+I)/g) * (2^((beta/(1-beta))*T) - 1), Pmax)
//! ```
//!
//! where `T` is the backhaul log term; the `H` term caps each user's rate at
//! a 1/K share of the cell's backhaul capacity. The user is feasible only if
//! `L <= H`.
//!
//! Inside the interval, the EE utility is strictly quasiconcave, so the
//! optimum is the unique root of the gradient numerator `f` clamped into
//! `[L, H]`. [`gabs_search`] finds that root by gradient-assisted binary
//! search: expand a bracket geometrically (factor `c`) in the direction the
//! gradient points, then bisect on the sign of `f`.

use crate::channel_model::{ChannelRealization, ScenarioConfig};
use crate::ee_model::{backhaul_log_term, ee_gradient_numerator, LinkCoefficients};
use crate::error::Error;
use std::f64::consts::LN_2;

/// Feasible per-user power interval at a given bandwidth split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBounds {
    /// Smallest power meeting the QoS rate floor, watts.
    pub lower: f64,
    /// Largest power allowed by the backhaul share and the power cap, watts.
    pub upper: f64,
    /// `lower <= upper`.
    pub feasible: bool,
}

/// Knobs for [`gabs_search`]. Defaults: doubling bracket (`c = 2`), 1e-8
/// relative width tolerance, 200 expansions and 200 bisections — about 500
/// gradient evaluations per user worst case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GabsSettings {
    /// Geometric bracket growth factor, > 1.
    pub expansion_factor: f64,
    /// Relative width at which bisection stops.
    pub tolerance: f64,
    pub max_expansions: usize,
    pub max_bisections: usize,
}

impl Default for GabsSettings {
    fn default() -> Self {
        GabsSettings {
            expansion_factor: 2.0,
            tolerance: 1e-8,
            max_expansions: 200,
            max_bisections: 200,
        }
    }
}

/// Compute the feasible power interval of user `(j,k)` at `beta`.
/// Infeasibility (`L > H`) is a returned flag, not an error; callers decide
/// the policy.
pub fn power_bounds(
    beta: f64,
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    j: usize,
    k: usize,
    backhaul_snr: f64,
) -> PowerBounds {
    debug_assert!((0.0..1.0).contains(&beta));
    let inv_gain = (cfg.noise_power + chan.interference[j][k]) / chan.access_gain[j][k];
    let k_users = cfg.users_per_cell as f64;

    let floor_exp = k_users * cfg.qos_rate / (1.0 - beta);
    let lower = inv_gain * (floor_exp * LN_2).exp_m1();

    let cap_exp = beta / (1.0 - beta) * backhaul_log_term(cfg, backhaul_snr);
    let upper = (inv_gain * (cap_exp * LN_2).exp_m1()).min(cfg.max_user_power);

    PowerBounds {
        lower,
        upper,
        feasible: lower <= upper,
    }
}

/// Gradient-assisted binary search for the unconstrained EE-optimal power.
///
/// Starting from `init_p`, the bracket is shrunk (`p/c`) while the gradient
/// is negative or grown (`p*c`) while it is positive, then bisected until
/// the bracket `[p1, p2]` with `f(p1) >= 0 >= f(p2)` is narrower than
/// `tolerance * max(1, p1)`. Returns the bracket midpoint; by strict
/// quasiconcavity this is the unique stationary point regardless of
/// `init_p`.
pub fn gabs_search(
    eff_gain: f64,
    weight: f64,
    circuit_power: f64,
    init_p: f64,
    settings: &GabsSettings,
) -> Result<f64, Error> {
    if !(eff_gain > 0.0 && eff_gain.is_finite()) {
        return Err(Error::NonConvergence("effective gain must be positive"));
    }
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::NonConvergence("rate weight must be positive"));
    }
    if !(circuit_power > 0.0 && circuit_power.is_finite()) {
        return Err(Error::NonConvergence("circuit power must be positive"));
    }
    if !(init_p > 0.0 && init_p.is_finite()) {
        return Err(Error::NonConvergence("initial power must be positive"));
    }
    debug_assert!(settings.expansion_factor > 1.0);
    debug_assert!(settings.tolerance > 0.0);

    let f = |p: f64| ee_gradient_numerator(p, eff_gain, weight, circuit_power);
    let c = settings.expansion_factor;

    let mut p1 = init_p;
    let mut p2;
    if f(p1) < 0.0 {
        // Optimum lies below: shrink until the gradient turns non-negative.
        // f(0) > 0, so this terminates once p1 underflows toward zero.
        let mut expansions = 0;
        loop {
            p2 = p1;
            p1 /= c;
            if f(p1) >= 0.0 {
                break;
            }
            expansions += 1;
            if expansions >= settings.max_expansions {
                return Err(Error::NonConvergence("bracket shrink budget exhausted"));
            }
        }
    } else {
        // Optimum lies above: grow until the gradient turns non-positive.
        p2 = p1 * c;
        let mut expansions = 0;
        while f(p2) > 0.0 {
            p1 = p2;
            p2 *= c;
            expansions += 1;
            if expansions >= settings.max_expansions || !p2.is_finite() {
                return Err(Error::NonConvergence("bracket growth budget exhausted"));
            }
        }
    }

    // Bisection on the sign of f over [p1, p2].
    let mut bisections = 0;
    while p2 - p1 > settings.tolerance * p1.max(1.0) {
        let mid = 0.5 * (p1 + p2);
        if f(mid) > 0.0 {
            p1 = mid;
        } else {
            p2 = mid;
        }
        bisections += 1;
        if bisections >= settings.max_bisections {
            return Err(Error::NonConvergence("bisection budget exhausted"));
        }
    }
    Ok(0.5 * (p1 + p2))
}

/// Clamp the unconstrained optimum into `[L, H]`; by unimodality the result
/// maximizes the utility over the interval.
pub fn clamp_power(p_hat: f64, bounds: &PowerBounds) -> f64 {
    p_hat.clamp(bounds.lower, bounds.upper)
}

/// Solve one user's power allocation at `beta`: GABS from `Pmax/2`, then
/// clamp into the feasible interval. Reports [`Error::InfeasibleUser`] when
/// the QoS floor exceeds the backhaul/power cap.
pub fn allocate_power(
    beta: f64,
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    j: usize,
    k: usize,
    backhaul_snr: f64,
    settings: &GabsSettings,
) -> Result<f64, Error> {
    let bounds = power_bounds(beta, cfg, chan, j, k, backhaul_snr);
    if !bounds.feasible {
        return Err(Error::InfeasibleUser {
            cell: j,
            user: k,
            lower: bounds.lower,
            upper: bounds.upper,
        });
    }
    let coeffs = LinkCoefficients::for_user(cfg, chan, beta, j, k);
    let p_hat = gabs_search(
        coeffs.eff_gain,
        coeffs.weight,
        cfg.circuit_power,
        cfg.max_user_power / 2.0,
        settings,
    )?;
    Ok(clamp_power(p_hat, &bounds))
}
