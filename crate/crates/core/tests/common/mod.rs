// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

pub mod programs;

use std::collections::HashMap;
use std::path::PathBuf;

use pipeforge::graph::{from_json, SerializedGraph, SerializedNode};
use pipeforge::Registry;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(path)
}

pub fn golden(name: &str) -> SerializedGraph {
    let text = std::fs::read_to_string(fixture(&format!("pipelines/{name}.json"))).unwrap();
    from_json(&text).unwrap()
}

pub fn pseudocode(name: &str) -> String {
    std::fs::read_to_string(fixture(&format!("pipelines/{name}.ipc"))).unwrap()
}

pub const FIXTURE_NAMES: [&str; 13] = [
    "image_question",
    "news_summary",
    "sunglasses_tryon",
    "sheet_summary",
    "web_page_viewer",
    "chat_with_context",
    "body_segmentation_mask",
    "depth_3d_photo",
    "camera_segmentation",
    "image_blend",
    "image_caption",
    "text_to_image",
    "ocr_translate",
];

/// A few spec types, so random pairs share types and mappings matter.
pub const SMALL_PALETTE: [&str; 10] = [
    "input_text",
    "input_image",
    "image_processor",
    "text_processor",
    "palm_textgen",
    "pali",
    "body_segmentation",
    "mask_visualizer",
    "image_viewer",
    "markdown_viewer",
];

/// A random valid DAG with `n` nodes drawn from `palette` (the whole
/// registry when empty). Edges only join type-compatible sockets. Node order
/// is shuffled, so edges may point backwards in insertion order.
pub fn random_dag(rng: &mut ChaCha8Rng, reg: &Registry, n: usize, palette: &[&str], edge_p: f64) -> SerializedGraph {
    let all: Vec<&str> = reg.specs().map(|s| s.node_spec_id.as_str()).collect();
    let palette = if palette.is_empty() { &all[..] } else { palette };
    let mut counters: HashMap<&str, usize> = HashMap::new();
    let mut nodes: Vec<SerializedNode> = Vec::with_capacity(n);
    for _ in 0..n {
        let spec_id = *palette.choose(rng).unwrap();
        let spec = reg.get_spec(spec_id).unwrap();
        let k = counters.entry(spec_id).or_insert(0);
        *k += 1;
        let mut node = SerializedNode::new(&format!("{spec_id}_{k}"), spec_id);
        for input in &spec.input_specs {
            if !rng.random_bool(edge_p) {
                continue;
            }
            let sources: Vec<(String, String)> = nodes
                .iter()
                .flat_map(|src| {
                    let src_spec = reg.get_spec(&src.node_spec_id).unwrap();
                    src_spec
                        .output_specs
                        .iter()
                        .filter(|out| input.accepts_any_of(out))
                        .map(|out| (src.id.clone(), out.socket_id.clone()))
                        .collect::<Vec<_>>()
                })
                .collect();
            if let Some((src, out)) = sources.choose(rng) {
                node.connect(&input.socket_id, src, out);
            }
        }
        nodes.push(node);
    }
    nodes.shuffle(rng);
    SerializedGraph { nodes }
}
