// SPDX-License-Identifier: Apache-2.0

//! Evaluates a corpus of (generated, target) pairs and prints per-tag
//! completion ratios.
//!
//! `cargo run --example corpus_report [corpus.json] [--csv]`
//!
//! Defaults to `fixtures/corpus/synthetic.json`, a seeded set of perturbed
//! sample pipelines.

use std::path::PathBuf;

use pipeforge::corpus::{evaluate_corpus, load_corpus};
use pipeforge::metric::MetricOptions;
use pipeforge::Registry;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let csv = args.iter().any(|a| a == "--csv");
    let path = args
        .iter()
        .find(|a| !a.starts_with("--"))
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus/synthetic.json"));

    let reg = Registry::canonical();
    let corpus = load_corpus(&path)?;
    let report = evaluate_corpus(&corpus, &reg, MetricOptions::default())?;
    if csv {
        print!("{}", report.pairs_csv());
    } else {
        println!("{} pairs from {}\n", corpus.len(), path.display());
        print!("{}", report.table());
    }
    Ok(())
}
