// SPDX-License-Identifier: Apache-2.0

mod common;

use std::sync::Arc;

use pipeforge::corpus::sample_pipeline;
use pipeforge::graph::validate;
use pipeforge::layout::optimize_layout;
use pipeforge::llm::{
    build_selector_prompt, build_writer_prompt, parse_selector_output, FewShotStore, Generator, LlmBackend,
    PipelineTag, ReplayBackend,
};
use pipeforge::Registry;

fn replay() -> Arc<dyn LlmBackend> {
    Arc::new(ReplayBackend::new(common::fixture("replay")))
}

fn generator() -> Generator {
    Generator::new(Arc::new(Registry::canonical()), replay())
}

#[test]
fn sunglasses_matches_golden() {
    let s = sample_pipeline("sunglasses_tryon").unwrap();
    let r = generator().generate(s.instruction, PipelineTag::Multimodal).unwrap();
    assert_eq!(r.graph, common::golden("sunglasses_tryon"));
    assert_eq!((r.graph.nodes.len(), r.graph.edge_count()), (6, 6));
    assert!(r.report.dropped_lines.is_empty());
    assert_eq!(r.graph, optimize_layout(&r.report.graph).unwrap());
}

#[test]
fn news_matches_golden() {
    let s = sample_pipeline("news_summary").unwrap();
    let r = generator().generate(s.instruction, PipelineTag::Language).unwrap();
    assert_eq!(r.graph, common::golden("news_summary"));
    assert_eq!((r.graph.nodes.len(), r.graph.edge_count()), (8, 7));
}

#[test]
fn replayed_runs_serialize_identically() {
    let s = sample_pipeline("sunglasses_tryon").unwrap();
    let a = generator().generate(s.instruction, s.tag).unwrap();
    let b = generator().generate(s.instruction, s.tag).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn hallucinated_writer_line_is_dropped() {
    let reg = Registry::canonical();
    let fewshot = FewShotStore::canonical();
    let instruction = "describe my photo and show it";
    let tag = PipelineTag::Multimodal;
    let selector_reply = "input_image, input_text, pali, markdown_viewer";
    let writer_reply = "\
input_image_1: input_image()
input_text_1: input_text(text=\"describe this photo\")
pali_1_out = pali_1: pali(image=input_image_1, prompt=input_text_1)
super_resolution_1_out = super_resolution_1: super_resolution(image=input_image_1)
markdown_viewer_1: markdown_viewer(markdown=pali_1_out)
image_viewer_1: image_viewer(image=input_image_1)
";
    let backend = ReplayBackend::in_memory();
    let selector = build_selector_prompt(instruction, tag, &reg, &fewshot);
    backend.insert(&selector.text, selector_reply);
    let selected = parse_selector_output(selector_reply, &reg);
    let writer = build_writer_prompt(instruction, tag, &selected, &reg, &fewshot).unwrap();
    backend.insert(&writer.text, writer_reply);

    let r = Generator::new(Arc::new(reg.clone()), Arc::new(backend))
        .generate(instruction, tag)
        .unwrap();
    assert_eq!(r.report.dropped_lines.len(), 1);
    assert_eq!(r.report.dropped_lines[0].node_id, "super_resolution_1");
    assert_eq!(r.report.dropped_lines[0].reason, "unknown node type super_resolution");
    assert_eq!(r.graph.nodes.len(), 5);
    assert!(validate(&r.graph, &reg).is_empty());
}

#[test]
fn unknown_instruction_has_no_fixture() {
    let err = generator()
        .generate("something nobody recorded", PipelineTag::Visual)
        .unwrap_err();
    assert_eq!(err.stage().map(|s| s.to_string()).as_deref(), Some("selector"));
}
