//! Cost-minimizing placement of streaming servers over a hybrid telco cloud:
//! primary sites, the secondary sites attached to them, and a public cloud.
//!
//! The placement problem is an integer program (see [`builder`]) solved
//! exactly by [`solver`]; [`scenarios`] runs the canned comparisons and
//! sweeps, [`autosim`] replays demand traces through a reactive scaling
//! loop, and [`cli_io`] holds the command-line front end and file formats.

pub mod autosim;
pub mod builder;
pub mod cli_io;
pub mod error;
pub mod milp;
pub mod netmodel;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
