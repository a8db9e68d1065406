//! Switching non-stationary Markov decision processes.
//!
//! The environment selects one of several MDPs at every step through a
//! hidden Markov chain. This crate provides the data model and file format,
//! stationary-distribution tools, exact solvers for the environment-averaged
//! value and Q functions, a seeded simulator that keeps the environment
//! hidden, TD(0) and Q-learning, and a builder for an adaptive-modulation
//! link model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use nalgebra;

pub mod error;
pub mod io;
pub mod learners;
mod linalg;
pub mod markov;
pub mod model;
pub mod sim;
pub mod solvers;
pub mod wireless;

pub use error::{Error, Result, ValidationReport, Violation};
pub use io::{load_model, parse_model, save_model};
pub use learners::{
    q_learn, q_step, td_evaluate, td_step, Checkpoint, LearnerConfig, LearnerTrace, StepClock,
    StepSchedule,
};
pub use markov::{check_irreducible_aperiodic, stationary_distribution, Distribution};
pub use model::{validate_mdp, EnvChain, JointValue, Policy, QTable, SnsMdp, SnsMrp, ValueVector};
pub use sim::{InitialEnv, Observation, Simulator, TransitionSample, GENERATOR_ID};
pub use solvers::{
    apply_optimality_operator, averaged_dynamics, greedy_policy, induce_mrp, joint_value_oracle,
    optimal_q_value_iteration, policy_iteration, policy_iteration_unchecked, sns_q_from_value,
    sns_value_closed_form, AveragedDynamics, PolicyIterationResult,
};
pub use wireless::{build_wireless_mdp, default_wireless_config, WirelessConfig};
