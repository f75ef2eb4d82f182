//! Slotted simulator of multi-radio multi-channel wireless mesh networks in
//! which every node runs a learning automaton over channel sets.
//!
//! The crate is organised bottom-up:
//!
//! - [`automaton`]: probability vectors and linear reinforcement schemes.
//! - [`topology`]: nodes, links, interference sets, flows and routing.
//! - [`assignment`]: channel-set catalogs, link channels, metrics and the
//!   channel-state feedback value.
//! - [`engine`]: the per-slot pipeline and whole runs.
//! - [`analysis`]: convergence diagnostics, summaries, a brute-force oracle
//!   and a repeated identical-payoff game.
//! - [`config`], [`output`] and [`cli`]: scenario files, CSV/JSON export
//!   and the command-line front end.

pub mod analysis;
pub mod assignment;
pub mod automaton;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod output;
pub mod topology;

pub use error::{Error, Result};
