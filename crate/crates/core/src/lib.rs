//! Simulation and analysis of toxicity spread on directed social graphs.
//!
//! Users transform the average toxicity they receive from their
//! in-neighbours by applying a category- and input-dependent shift before
//! forwarding it. The crate provides:
//!
//! - [`graph`]: immutable directed graphs, Erdős–Rényi generation, edge lists
//! - [`behavior`]: user categories, category transitions, shift distributions
//! - [`engine`]: hop-by-hop propagation and weekly metrics
//! - [`intervention`]: peace-bot deployment and reduction measurement
//! - [`analytics`]: shift extraction, IQR categorization, homophily,
//!   Kruskal–Wallis, transition estimation
//! - [`harness`]: experiment sweeps, config files, reports and plots

pub mod analytics;
pub mod behavior;
pub mod engine;
pub mod error;
pub mod graph;
pub mod harness;
pub mod intervention;
pub mod rng;

pub use error::{Error, Result};
