//! Benchmarking stochastic gradient optimizers by the distribution of the
//! models they produce rather than by a single converged model.
//!
//! The crate is organised around two registries of interchangeable parts:
//! synthetic [`landscapes`] (selected by name from a [`landscapes::LandscapeCatalog`])
//! and [`optimizers`] (trait objects selected by name from an
//! [`optimizers::OptimizerRegistry`]). [`experiments`] fans trajectories out
//! over seeded restarts and aggregates endpoints into basin histograms or
//! SetA/SetB model populations, which [`stats`] compares.

pub mod error;
pub mod experiments;
pub mod gradcheck;
pub mod landscapes;
pub mod objective;
pub mod optimizers;
pub mod params;
pub mod seeding;
pub mod stats;
pub mod toytask;

pub use error::{Error, Result};
pub use objective::{Evaluation, Objective, Task};
pub use params::ParamVector;
