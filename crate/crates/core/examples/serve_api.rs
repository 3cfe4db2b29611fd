// SPDX-License-Identifier: Apache-2.0

//! Starts the HTTP API on an ephemeral port, calls each endpoint once, and
//! shuts down.
//!
//! `cargo run --example serve_api`

use std::path::Path;
use std::sync::Arc;

use pipeforge::corpus::sample_pipeline;
use pipeforge::llm::{Generator, ReplayBackend};
use pipeforge::service::{spawn_background, ServiceConfig};
use pipeforge::Registry;
use serde_json::{json, Value};

fn main() -> anyhow::Result<()> {
    let replay = ReplayBackend::new(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/replay"));
    let generator = Generator::new(Arc::new(Registry::canonical()), Arc::new(replay));
    let server = spawn_background("127.0.0.1:0", ServiceConfig::new(generator))?;
    println!("listening on {}", server.url(""));
    let client = reqwest::blocking::Client::new();

    let nodes: Value = client.get(server.url("/api/nodes")).send()?.json()?;
    println!("GET /api/nodes: {} nodes", nodes["nodes"].as_array().map_or(0, Vec::len));

    let sample = sample_pipeline("news_summary").unwrap();
    let generated: Value = client
        .post(server.url("/api/generate"))
        .json(&json!({"instruction": sample.instruction, "tag": "language"}))
        .send()?
        .json()?;
    println!("POST /api/generate: selected {}", generated["selectedNodes"]);

    let compiled: Value = client
        .post(server.url("/api/compile"))
        .json(&json!({"pseudocode": generated["pseudocode"]}))
        .send()?
        .json()?;
    println!("POST /api/compile: {} nodes", compiled["graph"]["nodes"].as_array().map_or(0, Vec::len));

    let laid: Value = client.post(server.url("/api/layout")).json(&compiled["graph"]).send()?.json()?;
    println!("POST /api/layout: {} nodes placed", laid["nodes"].as_array().map_or(0, Vec::len));

    let score: Value = client
        .post(server.url("/api/evaluate"))
        .json(&json!({"generated": {"nodes": []}, "target": generated["graph"]}))
        .send()?
        .json()?;
    println!("POST /api/evaluate (empty vs generated): {} interactions, ratio {}", score["count"], score["ratio"]);

    server.shutdown()?;
    Ok(())
}
