//! Shared building blocks for the simplified action decoder experiments.
//!
//! * [`env`]: turn-based Dec-POMDP interface, trajectories and returns.
//! * [`rng`]: reproducible, splittable random streams.
//! * [`matrix_game`]: the two-player, two-step communication game and its exhaustive solver.
//! * [`belief`]: exact Bayesian belief updates under epsilon-greedy teammates and
//!   under greedy-action observation.
//! * [`tabular`]: tabular independent Q-learning with and without the greedy-action channel.

pub mod belief;
pub mod env;
pub mod matrix_game;
pub mod rng;
pub mod tabular;

pub use env::{discounted_return, Action, AgentId, EnvError, Step, Trajectory, TurnBasedEnv};
pub use rng::RngStream;
