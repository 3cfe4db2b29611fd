// SPDX-License-Identifier: Apache-2.0

//! Scrambles the positions of a sample pipeline and lays it out again,
//! printing the column and row of each node.
//!
//! `cargo run --example layout_graph [sample_name]`

use pipeforge::corpus::{sample_pipeline, SAMPLE_PIPELINES};
use pipeforge::layout::{columns, optimize_layout, COLUMN_PITCH, ROW_PITCH};
use pipeforge::Registry;

fn main() -> anyhow::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "news_summary".into());
    let Some(sample) = sample_pipeline(&name) else {
        let names: Vec<&str> = SAMPLE_PIPELINES.iter().map(|s| s.name).collect();
        anyhow::bail!("unknown sample {name}; try one of {}", names.join(", "));
    };
    let reg = Registry::canonical();
    let mut graph = sample.graph(&reg);
    for (i, node) in graph.nodes.iter_mut().enumerate() {
        node.position.x = (i * 37 % 11) as f64 * 13.0;
        node.position.y = (i * 53 % 7) as f64 * -29.0;
    }

    let laid = optimize_layout(&graph)?;
    let cols = columns(&laid)?;
    println!("{name}: {} nodes, {} edges", laid.nodes.len(), laid.edge_count());
    for (node, col) in laid.nodes.iter().zip(cols) {
        println!(
            "  col {col} row {}  ({:>5}, {:>5})  {}",
            (node.position.y / ROW_PITCH).round(),
            node.position.x,
            node.position.y,
            node.id
        );
    }
    assert!(laid.nodes.iter().all(|n| n.position.x % COLUMN_PITCH == 0.0));
    Ok(())
}
