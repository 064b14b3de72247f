//! Dependency and conflict network analysis for Debian-style package archives.
//!
//! The pipeline: parse `Packages` indices ([`control`]), build the directed
//! two-relation graph ([`graph`]), characterise degree distributions
//! ([`degree_stats`]), detect modules with Louvain ([`community`]), compare
//! against degree-preserving rewired ensembles ([`null_model`]), simulate
//! random local installation ([`install`]) and summarise trends across
//! releases ([`evolution`]).

pub mod cli;
pub mod community;
pub mod config;
pub mod control;
pub mod degree_stats;
pub mod evolution;
pub mod graph;
pub mod install;
pub mod null_model;
pub mod output;
pub mod seed;

mod error;

pub use error::{Error, Result};
