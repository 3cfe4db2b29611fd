// SPDX-License-Identifier: Apache-2.0

//! Regenerates the test fixtures:
//!
//! * `fixtures/replay/<sha256>.txt`: canned selector and writer replies for
//!   the two demo instructions,
//! * `fixtures/pipelines/<name>.json`: compiled, laid-out golden graphs for
//!   every `.ipc` sample,
//! * `fixtures/corpus/synthetic.json`: the seeded synthetic corpus.
//!
//! Run from the crate directory: `cargo run --example record_replay`.

use std::path::Path;

use pipeforge::corpus::{sample_pipeline, synthetic_corpus, SAMPLE_PIPELINES, SYNTHETIC_SEED};
use pipeforge::graph::{compile, to_json, InterpretOptions};
use pipeforge::layout::optimize_layout;
use pipeforge::llm::{
    build_selector_prompt, build_writer_prompt, parse_selector_output, FewShotStore, ReplayBackend,
};
use pipeforge::Registry;

/// (sample name, canned selector reply)
const SCRIPTS: [(&str, &str); 2] = [
    (
        "news_summary",
        "input_text, google_search, string_picker, url_to_html, text_processor, palm_textgen, markdown_viewer",
    ),
    (
        "sunglasses_tryon",
        "live_camera, input_text, keywords_to_image, face_landmark, virtual_sticker, image_viewer",
    ),
];

fn main() -> anyhow::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let reg = Registry::canonical();
    let fewshot = FewShotStore::canonical();

    let replay = root.join("replay");
    for (name, selector_reply) in SCRIPTS {
        let sample = sample_pipeline(name).expect("known sample");
        let selector = build_selector_prompt(sample.instruction, sample.tag, &reg, &fewshot);
        ReplayBackend::record(&replay, &selector.text, selector_reply)?;
        let selected = parse_selector_output(selector_reply, &reg);
        let writer = build_writer_prompt(sample.instruction, sample.tag, &selected, &reg, &fewshot)?;
        // Replies arrive fenced, like most chat models answer.
        let reply = format!("```\n{}```\n", sample.source);
        let path = ReplayBackend::record(&replay, &writer.text, &reply)?;
        println!("{name}: writer reply {}", path.display());
    }

    for sample in &SAMPLE_PIPELINES {
        write_golden(&root, sample.name, sample.source, &reg)?;
    }
    let image_question = std::fs::read_to_string(root.join("pipelines/image_question.ipc"))?;
    write_golden(&root, "image_question", &image_question, &reg)?;

    let corpus = synthetic_corpus(&reg, SYNTHETIC_SEED, true);
    let path = root.join("corpus/synthetic.json");
    std::fs::write(&path, serde_json::to_string_pretty(&corpus)? + "\n")?;
    println!("corpus: {}", path.display());
    Ok(())
}

fn write_golden(root: &Path, name: &str, source: &str, reg: &Registry) -> anyhow::Result<()> {
    let report = compile(source, reg, InterpretOptions::default());
    anyhow::ensure!(report.dropped_lines.is_empty(), "{name} drops lines");
    let graph = optimize_layout(&report.graph)?;
    let path = root.join(format!("pipelines/{name}.json"));
    std::fs::write(&path, to_json(&graph) + "\n")?;
    println!("golden: {} ({} nodes, {} edges)", path.display(), graph.nodes.len(), graph.edge_count());
    Ok(())
}
