//! Batch front end over `qgnlo-core`: single runs, angle sweeps, Monte
//! Carlo ensembles, and method benchmarks, with JSON/CSV output.

pub mod bench;
pub mod config;
pub mod mc;
pub mod output;
pub mod runner;
pub mod sweep;
