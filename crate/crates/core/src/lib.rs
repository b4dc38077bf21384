//! Activated random walk on `Z` in the sitewise representation.
//!
//! - [`instructions`]: counter-based bi-infinite instruction stacks.
//! - [`configuration`]: particle configurations and initial-condition samplers.
//! - [`stabilize`]: legal topplings, stabilization under several schedules,
//!   and the mass-balance equation.
//! - [`extended`]: extended odometers, the minimal odometer, enumeration of
//!   stable extended odometers, greedy constructions and infection paths.
//! - [`experiments`]: Monte Carlo suites over seeded replicas.
//! - [`cli`]: the `arw` command-line front end.

pub mod cli;
pub mod configuration;
pub mod experiments;
pub mod extended;
pub mod instructions;
pub mod rng;
pub mod stabilize;
pub mod stats;

pub use configuration::{
    sample_bernoulli_config, sample_uniform_k_particle_config, Configuration, Interval,
};
pub use extended::{
    enumerate_stable_extended, estimate_chat, greedy_stable_odometer, minimal_odometer,
    to_infection_path, ExtendedOdometer, InfectionPath,
};
pub use instructions::{FixtureStacks, HashedStacks, Instruction, JumpCounts, Stacks};
pub use stabilize::{
    is_stable_on, legal_topple, mass_balance_residual, stabilize, Odometer, Policy,
    StabilizationResult,
};
