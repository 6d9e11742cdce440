//! Simulated-annealing policies for discrete stochastic optimization and
//! multi-armed bandits on arm graphs.
//!
//! The crate has three layers:
//!
//! - **Exact machinery** ([`graph`], [`kernels`], [`schedules`]): arm graphs
//!   with symmetric proposal weights, Metropolis-style transition kernels,
//!   Gibbs quasi-stationary distributions, ergodicity coefficients, and exact
//!   distribution propagation. These are the oracles everything else is
//!   checked against.
//! - **Runnable policies** ([`instances`], [`policies`]): noiseless simulated
//!   annealing, noisy simulated annealing on graphs with an exploration
//!   floor, an annealing-style bandit policy for the fully connected case,
//!   and the classic baselines (epsilon-greedy, UCB, softmax).
//! - **Analysis and benchmarking** ([`bounds`], [`harness`]): closed-form
//!   evaluators for the regret and suboptimality bounds the policies satisfy,
//!   and a seeded, reproducible Monte Carlo experiment runner.

pub mod bounds;
pub mod graph;
pub mod harness;
pub mod instances;
pub mod kernels;
pub mod policies;
pub mod schedules;

pub use graph::{ArmGraph, Landscape};
pub use instances::{BanditInstance, RngStream};
pub use kernels::{Distribution, Kernel};
pub use schedules::{CoolingSchedule, ExplorationSchedule};
