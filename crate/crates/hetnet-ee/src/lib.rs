//! Energy-efficient power and wireless-backhaul bandwidth allocation for
//! OFDMA heterogeneous small-cell downlinks.
//!
//! A macro base station feeds `J` small cells over a beamformed wireless
//! backhaul that takes a fraction `beta` of the system bandwidth; each small
//! cell splits the remaining `1 - beta` evenly across its `K` users. The
//! crate maximizes the bits-per-Hertz-per-Joule delivered to all users by
//! jointly choosing `beta` and the per-user transmit powers, subject to a
//! per-user power cap, per-cell backhaul capacity, and a per-user QoS rate
//! floor.
//!
//! Module map:
//! - [`channel_model`] — topology generation, path loss / shadowing /
//!   Rayleigh channel realization, SNR/SINR.
//! - [`ee_model`] — rates, backhaul capacity, the EE utility and its
//!   gradient machinery.
//! - [`power_allocator`] — per-user gradient-assisted binary search plus
//!   closed-form feasible intervals.
//! - [`bandwidth_allocator`] — the closed-form smallest feasible `beta` and
//!   the QoS admissibility gate.
//! - [`solvers`] — the iterative and fixed-split algorithms, two reference
//!   baselines, and an exhaustive grid oracle.
//! - [`constraints`] — an independent checker that re-verifies every
//!   reported allocation.
//! - [`sim_harness`] — seeded Monte-Carlo sweeps with CSV/JSON emission.

pub mod bandwidth_allocator;
pub mod channel_model;
pub mod constraints;
pub mod ee_model;
pub mod error;
pub mod power_allocator;
pub mod sim_harness;
pub mod solvers;

pub use channel_model::{ScenarioConfig, ScenarioConfigFile};
pub use error::Error;
pub use solvers::{SolveStatus, SolverResult};
