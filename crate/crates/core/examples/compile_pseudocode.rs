// SPDX-License-Identifier: Apache-2.0

//! Parses pseudocode, prints its canonical form, and compiles it into a
//! laid-out graph. Unknown node types are dropped and reported.
//!
//! `cargo run --example compile_pseudocode [file.ipc]`

use pipeforge::dsl::{parse, print};
use pipeforge::graph::{compile, to_json, InterpretOptions};
use pipeforge::layout::optimize_layout;
use pipeforge::Registry;

const DEFAULT_SOURCE: &str = "\
input:
input_image_1: input_image()
input_text_1: input_text(text=\"What is in this picture?\")

process:
pali_1_out = pali_1: pali(image=input_image_1, prompt=input_text_1)
super_resolution_1_out = super_resolution_1: super_resolution(image=input_image_1)

output:
markdown_viewer_1: markdown_viewer(markdown=pali_1_out)
";

fn main() -> anyhow::Result<()> {
    let source = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEFAULT_SOURCE.to_string(),
    };
    let reg = Registry::canonical();

    let parsed = parse(&source)?;
    for d in &parsed.diagnostics {
        eprintln!("parse: {d:?}");
    }
    println!("canonical form:\n{}", print(&parsed.program)?);

    let report = compile(&source, &reg, InterpretOptions::default());
    for dropped in &report.dropped_lines {
        println!("dropped line {} ({}): {}", dropped.line, dropped.node_id, dropped.reason);
    }
    for dangling in &report.dangling_args {
        println!("dangling {}.{} -> {}", dangling.node_id, dangling.arg, dangling.variable);
    }
    let graph = optimize_layout(&report.graph)?;
    println!("{}", to_json(&graph));
    Ok(())
}
