// SPDX-License-Identifier: Apache-2.0

//! Counts the minimal user interactions that turn a generated pipeline into
//! the target, and prints the edit script.
//!
//! `cargo run --example evaluate_pair [generated.json target.json]`
//!
//! Without arguments, the target is the depth photo sample and the generated
//! graph is the same pipeline missing its depth-map converter.

use pipeforge::corpus::sample_pipeline;
use pipeforge::graph::from_json;
use pipeforge::metric::{interactions_with, EditOp, MetricOptions};
use pipeforge::{Registry, SerializedGraph};

fn main() -> anyhow::Result<()> {
    let reg = Registry::canonical();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (generated, target) = match args.as_slice() {
        [g, t] => (
            from_json(&std::fs::read_to_string(g)?)?,
            from_json(&std::fs::read_to_string(t)?)?,
        ),
        _ => {
            let target = sample_pipeline("depth_3d_photo").unwrap().graph(&reg);
            (without(&target, "tensor_to_depthmap_1"), target)
        }
    };

    for cascade in [true, false] {
        let options = MetricOptions { cascade, ..MetricOptions::default() };
        let report = interactions_with(&generated, &target, &reg, options)?;
        println!(
            "cascade={cascade}: {} interactions of {} from scratch ({:.1}%)",
            report.count,
            report.from_scratch,
            report.ratio * 100.0
        );
        for op in &report.script {
            println!("  {}", describe(op));
        }
    }
    Ok(())
}

fn without(graph: &SerializedGraph, id: &str) -> SerializedGraph {
    let mut g = graph.clone();
    g.nodes.retain(|n| n.id != id);
    for n in &mut g.nodes {
        n.incoming_edges.retain(|_, e| e.iter().all(|e| e.source_node_id != id));
    }
    g
}

fn describe(op: &EditOp) -> String {
    match op {
        EditOp::AddNode { node_id, node_spec_id } => format!("add node {node_id} ({node_spec_id})"),
        EditOp::DeleteNode { node_id } => format!("delete node {node_id}"),
        EditOp::AddEdge { source, output, target, input } => {
            format!("connect {source}.{output} -> {target}.{input}")
        }
        EditOp::DeleteEdge { source, output, target, input } => {
            format!("disconnect {source}.{output} -> {target}.{input}")
        }
    }
}
