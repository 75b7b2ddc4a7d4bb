//! Command-line front end: experiment configs, batch runs over seeds and
//! methods, and CSV / JSON emission.

pub mod cli;
pub mod config;
pub mod emit;
pub mod experiment;
