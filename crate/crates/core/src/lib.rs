//! Optimal allocation of campaigning resources over time and node-degree
//! classes for maximizing information spread in social networks.
//!
//! Information diffusion is modeled as a degree-based mean-field SI epidemic
//! on a configuration-model network. Each degree class `k` receives a
//! time-varying recruitment control `u_k(t)`; the solvers in this crate find
//! controls (and optionally seeds) maximizing the net reward
//! `Σ p_k i_k(T) − ∫ Σ g_k(u_k) dt`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! thread-pool execution live in the `epicampaign` companion crate.
//!
//! Module map:
//!
//! - [`network`]: degree distributions (truncated Poisson, power law,
//!   empirical) and their excess/neighbor distributions.
//! - [`scenario`]: horizon, time grid, spreading/effectiveness profiles,
//!   cost model, seeds and problem variant.
//! - [`dynamics`]: RK4 integration of the controlled state equations.
//! - [`pmp`]: adjoint equations, Hamiltonian maximization, the
//!   forward-backward sweep, rewards and the analytic convergence/uniqueness
//!   bounds.
//! - [`budget`]: fixed-budget problem via bisection on the multiplier.
//! - [`joint`]: joint seed + control optimization on the weighted simplex.
//! - [`heuristics`]: best static and two-stage baseline controls.
//! - [`simulator`]: agent-based SI simulation on configuration-model graphs.
//! - [`structure`]: checks for the structural properties of optimal controls.

#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod budget;
pub mod dynamics;
mod error;
pub mod exec;
pub mod heuristics;
pub mod joint;
pub mod network;
pub mod pmp;
pub mod quadrature;
pub mod scenario;
pub mod simulator;
pub mod structure;

/// Version of this crate, recorded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use budget::{budget_solve, BudgetOptions, BudgetReport};
pub use dynamics::{aggregate, integrate_state, AggregateSeries, Trajectory};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use heuristics::{best_static, best_two_stage, fixed_budget_heuristics, HeuristicKind, HeuristicResult};
pub use joint::{joint_solve, project_to_seed_simplex, JointOptions, JointReport, SeedVector};
pub use network::DegreeDistribution;
pub use pmp::{
    check_convergence_bound, check_uniqueness, evaluate_reward, fbs_solve, integrate_adjoint,
    maximize_hamiltonian, normalized_resource, AdjointTrajectory, BoundCheck, Reward, SolveReport,
};
pub use scenario::{CostModel, Scenario, SeedSpec, SweepSettings, TimeGrid, TimeProfile, Variant};
pub use simulator::{simulate_si, Graph, SeedRule, SimOutcome};
