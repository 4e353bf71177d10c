//! Coupled agricultural-household and schistosomiasis-ecology simulator.
//!
//! A seven-population disease ecology (aquatic vegetation, snails, larval
//! stages and humans) is integrated daily and coupled once a year to a
//! household that chooses labor, fertilizer and consumption. Infections are
//! realized stochastically each year and whole trajectories are replicated
//! to build percentile bands.
//!
//! Modules:
//! - [`ecology`]: right-hand sides, RK4 integration, runoff, steady state
//! - [`household`]: production and utility primitives, the optimizer and its
//!   KKT check
//! - [`coupling`]: the annual loop and trajectories
//! - [`experiments`]: Monte Carlo, percentile summaries, scenario suite and
//!   sweeps
//! - [`config`], [`output`], [`plot`], [`cli`]: files and the command line

pub mod cli;
pub mod config;
pub mod coupling;
pub mod ecology;
pub mod error;
pub mod experiments;
pub mod household;
pub mod output;
pub mod plot;

pub use error::{Error, Result};
