// SPDX-License-Identifier: Apache-2.0

//! Runs the two-stage generator (node selector, then code writer) against
//! the recorded replies in `fixtures/replay`, so no network is needed.
//!
//! `cargo run --example generate_replay [sample_name]`
//!
//! Set `PIPEFORGE_LLM_BACKEND=http` and `PIPEFORGE_LLM_URL` to hit a live
//! chat-completions endpoint instead.

use std::path::Path;
use std::sync::Arc;

use pipeforge::corpus::sample_pipeline;
use pipeforge::llm::{backend_from_env, Generator};
use pipeforge::Registry;

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let name = std::env::args().nth(1).unwrap_or_else(|| "sunglasses_tryon".into());
    let sample = sample_pipeline(&name).ok_or_else(|| anyhow::anyhow!("unknown sample {name}"))?;
    let replay_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/replay");
    let backend = backend_from_env(None, Some(replay_dir))?;

    let generator = Generator::new(Arc::new(Registry::canonical()), backend);
    println!("backend: {}", generator.backend_identity());
    println!("instruction: {}", sample.instruction);
    let result = generator.generate(sample.instruction, sample.tag)?;

    println!("selected: {}", result.selected_nodes.join(", "));
    println!("pseudocode:\n{}", result.pseudocode);
    println!(
        "graph: {} nodes, {} edges, {} dropped lines",
        result.graph.nodes.len(),
        result.graph.edge_count(),
        result.report.dropped_lines.len()
    );
    println!(
        "timings: selector {:?}, writer {:?}",
        result.timings.selector, result.timings.writer
    );
    Ok(())
}
