// SPDX-License-Identifier: Apache-2.0

//! Prompt rendering for the node selector and the code writer, and parsing
//! of their replies. Rendering is pure: the same inputs give the same bytes.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use super::fewshot::FewShotStore;
use super::{PipelineTag, Stage};
use crate::registry::{Category, NodeSpec, Registry, SocketSpec};

/// Start of the sentence that lists the nodes the writer may use.
pub const ALLOW_LIST_PREFIX: &str = "The following is a full list of";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptBundle {
    pub stage: Stage,
    pub text: String,
    pub tag: PipelineTag,
    /// Nodes whose configuration the prompt embeds (writer only).
    pub selected_nodes: Vec<String>,
    pub fewshot_ids: Vec<String>,
    /// The writer fell back to tag-affinity nodes because the selection was
    /// empty.
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("selected node `{0}` is not in the registry")]
    UnknownNode(String),
}

const SELECTOR_INTRO: &str = "\
You are helping a user build a machine learning pipeline in a node-based visual programming editor.
Your task is to pick the nodes the pipeline needs from the node library below.

Guidelines:
- Only pick nodes that appear in the node library.
- Include the input nodes and output nodes the pipeline needs, not just processors.
- Nodes that are usually selected together often belong in the same pipeline.
- Answer with a comma-separated list of node types and nothing else.
";

const WRITER_INTRO: &str = "\
You are writing pseudocode for a machine learning pipeline in a node-based visual programming editor.
Each line of pseudocode declares one node:
  <output variable> = <node id>: <node type>(<input socket>=<variable>, ...)
Input nodes and output nodes have no output variable; other lines refer to an input node by its node id.

Guidelines:
- Node ids are the node type followed by _1, _2 and so on.
- Only use variables declared on earlier lines.
- Group lines under the headers input:, processor: and output:.
- The only literal argument is the text of input_text, written as text=\"...\".
- Reply with pseudocode only.
";

/// Nodes used when the selector returns nothing.
pub fn tag_affinity_nodes(tag: PipelineTag, reg: &Registry) -> Vec<String> {
    reg.specs()
        .filter(|s| match tag {
            PipelineTag::Language => s.touches_textual(),
            PipelineTag::Visual => s.touches_visual(),
            PipelineTag::Multimodal => true,
        })
        .map(|s| s.node_spec_id.clone())
        .collect()
}

fn describe_short(spec: &NodeSpec) -> String {
    if spec.recommended_nodes.is_empty() {
        format!("{}: {}.", spec.node_spec_id, spec.short_description)
    } else {
        format!(
            "{}: {}; usually selected with {}.",
            spec.node_spec_id,
            spec.short_description,
            spec.recommended_nodes.join(", ")
        )
    }
}

pub fn build_selector_prompt(
    instruction: &str,
    tag: PipelineTag,
    reg: &Registry,
    fewshot: &FewShotStore,
) -> PromptBundle {
    let mut text = String::from(SELECTOR_INTRO);
    text.push_str("\nNode library:\n");
    for spec in reg.specs() {
        text.push_str(&describe_short(spec));
        text.push('\n');
    }
    let _ = writeln!(text, "\nPipeline tag: {tag}\n");
    let examples = fewshot.selector_examples(tag);
    for ex in examples {
        let _ = writeln!(text, "Q: {}\nA: {}\n", ex.instruction, ex.nodes.join(", "));
    }
    let _ = write!(text, "Q: {}\nA:", instruction.trim());
    PromptBundle {
        stage: Stage::Selector,
        text,
        tag,
        selected_nodes: Vec::new(),
        fewshot_ids: examples.iter().map(|e| e.id.clone()).collect(),
        fallback_used: false,
    }
}

static IDENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").unwrap());

/// Pulls registry node ids out of a selector reply. Anything else (prose,
/// brackets, unknown names) is ignored; unknown names are logged.
pub fn parse_selector_output(raw: &str, reg: &Registry) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for m in IDENT.find_iter(raw) {
        let word = m.as_str();
        if reg.contains(word) {
            if seen.insert(word) {
                out.push(word.to_string());
            }
        } else if word.contains('_') {
            // Bare words are usually prose; only snake_case looks like an
            // attempted node id.
            log::warn!("selector named unknown node `{word}`; discarded");
        }
    }
    out
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct NodeConfig<'a> {
    node_spec_id: &'a str,
    description: &'a str,
    category: Category,
    input_specs: &'a [SocketSpec],
    output_specs: &'a [SocketSpec],
    examples: &'a [String],
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    recommended_nodes: &'a [String],
}

fn config_json(spec: &NodeSpec) -> String {
    let config = NodeConfig {
        node_spec_id: &spec.node_spec_id,
        description: &spec.description,
        category: spec.category,
        input_specs: &spec.input_specs,
        output_specs: &spec.output_specs,
        examples: &spec.examples,
        recommended_nodes: &spec.recommended_nodes,
    };
    serde_json::to_string_pretty(&config).expect("node config serializes")
}

pub fn build_writer_prompt(
    instruction: &str,
    tag: PipelineTag,
    selected: &[String],
    reg: &Registry,
    fewshot: &FewShotStore,
) -> Result<PromptBundle, PromptError> {
    if let Some(bad) = selected.iter().find(|id| !reg.contains(id)) {
        return Err(PromptError::UnknownNode(bad.clone()));
    }
    let fallback_used = selected.is_empty();
    let nodes: Vec<String> = if fallback_used {
        let nodes = tag_affinity_nodes(tag, reg);
        log::warn!("empty node selection; falling back to {} {tag} nodes", nodes.len());
        nodes
    } else {
        selected.to_vec()
    };

    let mut text = String::from(WRITER_INTRO);
    text.push_str("\nNode configurations:\n");
    for id in &nodes {
        let spec = reg.get_spec(id).expect("checked above");
        text.push_str(&config_json(spec));
        text.push('\n');
    }
    let _ = writeln!(
        text,
        "\n{ALLOW_LIST_PREFIX} the nodes you can use: {}. Do not use any other node.",
        nodes.join(", ")
    );
    let _ = writeln!(text, "\nPipeline tag: {tag}\n");
    let examples = fewshot.writer_examples(tag);
    for ex in examples {
        let _ = writeln!(text, "Q: {}\nA:\n{}", ex.instruction, ex.pseudocode.trim_end());
        text.push('\n');
    }
    let _ = write!(text, "Q: {}\nA:\n", instruction.trim());
    Ok(PromptBundle {
        stage: Stage::Writer,
        text,
        tag,
        selected_nodes: nodes,
        fewshot_ids: examples.iter().map(|e| e.id.clone()).collect(),
        fallback_used,
    })
}

/// Strips code fences and a leading `A:` from a writer reply.
pub fn extract_pseudocode(raw: &str) -> String {
    let mut body = raw;
    if let Some(start) = raw.find("```") {
        let after = &raw[start + 3..];
        // Skip an info string such as ```text.
        let after = after.split_once('\n').map_or("", |(_, rest)| rest);
        body = after.find("```").map_or(after, |end| &after[..end]);
    }
    let body = body.trim();
    let body = body.strip_prefix("A:").map_or(body, str::trim_start);
    if body.is_empty() {
        String::new()
    } else {
        format!("{body}\n")
    }
}
