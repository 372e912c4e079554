//! Laboratory for Model RB random constraint satisfaction.
//!
//! Instances are generated deterministically from [`Params`], solved or
//! counted exactly by [`solver`], rewired by the [`symmetry`] mapping,
//! studied statistically by [`experiments`] and exported to CNF by
//! [`encoder`]. The `rblab` binary wraps all of it in [`cli`].

pub mod cli;
pub mod encoder;
pub mod error;
pub mod experiments;
pub mod generator;
pub mod instance;
pub mod model;
pub mod seed;
pub mod solver;
pub mod symmetry;

pub use error::{Error, Result};
pub use generator::{generate_instance, generate_instance_symmetric};
pub use instance::{Assignment, Constraint, Instance, Relation};
pub use model::{calibrate_r, derive_dimensions, expected_solution_count, Dimensions, Params};
pub use solver::{count_solutions_exhaustive, evaluate, restrict, solve_backtracking, SolveResult, SolverConfig};
