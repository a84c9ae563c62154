//! Configuration-driven command-line front end: builds measures from a JSON
//! config, runs chains and exact checks, and writes transcripts, reports and
//! plot-ready CSV files.

pub mod commands;
pub mod config;
pub mod error;
pub mod kernel_file;
pub mod transcript;
