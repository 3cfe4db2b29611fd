// SPDX-License-Identifier: Apache-2.0

//! Compares the size of each bundled sample as pseudocode and as pipeline
//! JSON, using the crate's token counter.
//!
//! `cargo run --example token_efficiency`

use pipeforge::corpus::SAMPLE_PIPELINES;
use pipeforge::dsl::{parse, print, token_count};
use pipeforge::graph::to_json;
use pipeforge::Registry;

fn main() {
    let reg = Registry::canonical();
    println!("{:<24} {:>6} {:>6} {:>7}", "pipeline", "dsl", "json", "ratio");
    for sample in &SAMPLE_PIPELINES {
        // Canonical text: comments and blank lines removed.
        let program = parse(sample.source).expect("sample parses").program;
        let dsl = token_count(&print(&program).expect("sample prints"));
        let json = token_count(&to_json(&sample.graph(&reg)));
        println!(
            "{:<24} {:>6} {:>6} {:>6.1}%",
            sample.name,
            dsl,
            json,
            100.0 * dsl as f64 / json as f64
        );
    }
}
