//! Regenerates `data/synthetic50.json`:
//! `cargo run -p infocus --example gen_synthetic > crates/infocus/data/synthetic50.json`

use std::io::Write;

use infocus::ingest::write_project;
use infocus::synth::{synthetic_project, SynthParams};

fn main() {
    let p = synthetic_project(&SynthParams::default());
    std::io::stdout().write_all(&write_project(&p)).unwrap();
}
