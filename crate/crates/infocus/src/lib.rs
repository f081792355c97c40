//! File formats, configuration, the on-disk validity ledger, a synthetic data
//! generator and the `infocus` command line, on top of [`infocus_core`].

pub mod cli;
pub mod config;
pub mod ingest;
pub mod ledger;
pub mod synth;

pub use infocus_core as core;
