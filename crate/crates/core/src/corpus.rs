// SPDX-License-Identifier: Apache-2.0

//! Corpus evaluation: the interaction metric over many (generated, target)
//! pairs, aggregated per pipeline tag as mean ± standard deviation.
//!
//! Also ships the bundled sample pipelines and a synthetic corpus built by
//! perturbing them with a seeded RNG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{compile, InterpretOptions, SerializedGraph, SerializedNode};
use crate::layout::optimize_layout;
use crate::llm::PipelineTag;
use crate::metric::{interactions_with, MetricError, MetricOptions};
use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub instruction: String,
    pub tag: PipelineTag,
    pub target: SerializedGraph,
    pub generated: SerializedGraph,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid corpus JSON at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("pair {index} ({instruction}): {source}")]
    Pair {
        index: usize,
        instruction: String,
        #[source]
        source: MetricError,
    },
}

impl CorpusError {
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            CorpusError::Pair {
                source: MetricError::BudgetExceeded(_),
                ..
            }
        )
    }
}

pub fn corpus_from_json(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CorpusError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>, CorpusError> {
    corpus_from_json(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PairResult {
    pub index: usize,
    pub instruction: String,
    pub tag: PipelineTag,
    pub count: usize,
    pub from_scratch: usize,
    pub ratio: f64,
}

/// Mean and sample standard deviation (n - 1; 0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Aggregate {
    pub n: usize,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub mean_count: f64,
    pub std_count: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl Aggregate {
    pub fn of(pairs: &[&PairResult]) -> Aggregate {
        let ratios: Vec<f64> = pairs.iter().map(|p| p.ratio).collect();
        let counts: Vec<f64> = pairs.iter().map(|p| p.count as f64).collect();
        let (mean_ratio, std_ratio) = mean_std(&ratios);
        let (mean_count, std_count) = mean_std(&counts);
        Aggregate {
            n: pairs.len(),
            mean_ratio,
            std_ratio,
            mean_count,
            std_count,
        }
    }

    /// `12.3% ± 4.5%`
    pub fn ratio_cell(&self) -> String {
        format!("{:.1}% ± {:.1}%", self.mean_ratio * 100.0, self.std_ratio * 100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusReport {
    pub cascade: bool,
    pub pairs: Vec<PairResult>,
    pub per_tag: BTreeMap<PipelineTag, Aggregate>,
    pub overall: Aggregate,
}

impl CorpusReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per pair.
    pub fn pairs_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "tag", "instruction", "count", "from_scratch", "ratio"])
            .expect("in-memory write");
        for p in &self.pairs {
            w.write_record([
                p.index.to_string(),
                p.tag.to_string(),
                p.instruction.clone(),
                p.count.to_string(),
                p.from_scratch.to_string(),
                format!("{:.4}", p.ratio),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// One row per tag plus `all`.
    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["tag", "n", "mean_ratio", "std_ratio", "mean_count", "std_count"])
            .expect("in-memory write");
        let rows = self
            .per_tag
            .iter()
            .map(|(t, a)| (t.to_string(), a))
            .chain(std::iter::once(("all".to_string(), &self.overall)));
        for (tag, a) in rows {
            w.write_record([
                tag,
                a.n.to_string(),
                format!("{:.4}", a.mean_ratio),
                format!("{:.4}", a.std_ratio),
                format!("{:.2}", a.mean_count),
                format!("{:.2}", a.std_count),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// Human-readable table: one line per tag, then the overall mean.
    pub fn table(&self) -> String {
        let mut out = String::from("tag          n  interaction ratio\n");
        for (tag, a) in &self.per_tag {
            let _ = writeln!(out, "{:<11} {:>2}  {}", tag.as_str(), a.n, a.ratio_cell());
        }
        let _ = writeln!(out, "{:<11} {:>2}  {}", "all", self.overall.n, self.overall.ratio_cell());
        out
    }
}

pub fn evaluate_corpus(
    entries: &[CorpusEntry],
    reg: &Registry,
    options: MetricOptions,
) -> Result<CorpusReport, CorpusError> {
    let mut pairs = Vec::with_capacity(entries.len());
    for (index, e) in entries.iter().enumerate() {
        let r = interactions_with(&e.generated, &e.target, reg, options).map_err(|source| CorpusError::Pair {
            index,
            instruction: e.instruction.clone(),
            source,
        })?;
        pairs.push(PairResult {
            index,
            instruction: e.instruction.clone(),
            tag: e.tag,
            count: r.count,
            from_scratch: r.from_scratch,
            ratio: r.ratio,
        });
    }
    let mut per_tag = BTreeMap::new();
    for tag in PipelineTag::ALL {
        let members: Vec<&PairResult> = pairs.iter().filter(|p| p.tag == tag).collect();
        if !members.is_empty() {
            per_tag.insert(tag, Aggregate::of(&members));
        }
    }
    let overall = Aggregate::of(&pairs.iter().collect::<Vec<_>>());
    Ok(CorpusReport {
        cascade: options.cascade,
        pairs,
        per_tag,
        overall,
    })
}

/// A bundled pipeline in pseudocode form.
#[derive(Debug, Clone, Copy)]
pub struct SamplePipeline {
    pub name: &'static str,
    pub tag: PipelineTag,
    pub instruction: &'static str,
    pub source: &'static str,
}

macro_rules! sample {
    ($name:literal, $tag:ident, $instruction:literal) => {
        SamplePipeline {
            name: $name,
            tag: PipelineTag::$tag,
            instruction: $instruction,
            source: include_str!(concat!("../fixtures/pipelines/", $name, ".ipc")),
        }
    };
}

/// Four pipelines per tag, in a fixed order.
pub const SAMPLE_PIPELINES: [SamplePipeline; 12] = [
    sample!(
        "news_summary",
        Language,
        "get the latest news about New York using Google Search and compile a high-level summary of one of the results."
    ),
    sample!("sheet_summary", Language, "pick a product from my spreadsheet and write a tweet about it"),
    sample!("web_page_viewer", Language, "show me the web page at a URL"),
    sample!("chat_with_context", Language, "answer my question using the context I provide"),
    sample!("body_segmentation_mask", Visual, "highlight the people in a photo"),
    sample!("depth_3d_photo", Visual, "show the depth map of a portrait and turn it into a 3D photo"),
    sample!("camera_segmentation", Visual, "highlight people in my webcam stream"),
    sample!("image_blend", Visual, "blend two photos together"),
    sample!(
        "sunglasses_tryon",
        Multimodal,
        "create a virtual sunglasses try-on experience using your web camera"
    ),
    sample!("image_caption", Multimodal, "describe a photo in detail"),
    sample!("text_to_image", Multimodal, "turn my idea into an illustration"),
    sample!("ocr_translate", Multimodal, "read the text in a photo and translate it to French"),
];

pub fn sample_pipeline(name: &str) -> Option<&'static SamplePipeline> {
    SAMPLE_PIPELINES.iter().find(|s| s.name == name)
}

impl SamplePipeline {
    /// Compiled and laid-out graph.
    pub fn graph(&self, reg: &Registry) -> SerializedGraph {
        let report = compile(self.source, reg, InterpretOptions::default());
        optimize_layout(&report.graph).expect("sample pipelines are acyclic")
    }
}

fn remove_node(graph: &mut SerializedGraph, index: usize) {
    let id = graph.nodes.remove(index).id;
    for node in &mut graph.nodes {
        for sources in node.incoming_edges.values_mut() {
            sources.retain(|e| e.source_node_id != id);
        }
        node.incoming_edges.retain(|_, sources| !sources.is_empty());
    }
}

fn remove_random_edge(graph: &mut SerializedGraph, rng: &mut ChaCha8Rng) -> bool {
    let edges = graph.edges();
    let Some(edge) = edges.choose(rng) else {
        return false;
    };
    let node = graph.node_mut(&edge.target).expect("edge target exists");
    let sources = node.incoming_edges.get_mut(&edge.input).expect("edge socket exists");
    sources.retain(|e| !(e.source_node_id == edge.source && e.output_id == edge.output));
    if sources.is_empty() {
        node.incoming_edges.remove(&edge.input);
    }
    true
}

fn add_distractor(graph: &mut SerializedGraph, reg: &Registry, rng: &mut ChaCha8Rng) {
    let specs: Vec<_> = reg.specs().collect();
    let spec = specs.choose(rng).expect("registry is not empty");
    let mut n = 1;
    while graph.node(&format!("{}_{n}", spec.node_spec_id)).is_some() {
        n += 1;
    }
    let mut node = SerializedNode::new(&format!("{}_{n}", spec.node_spec_id), &spec.node_spec_id);
    node.params = spec.default_params.clone();
    graph.nodes.push(node);
}

/// Applies 1 to 3 random edits (delete a node, delete an edge, add an
/// unconnected node). The result is always a valid graph.
pub fn perturb(graph: &SerializedGraph, reg: &Registry, rng: &mut ChaCha8Rng) -> SerializedGraph {
    let mut g = graph.clone();
    let edits = rng.random_range(1..=3);
    for _ in 0..edits {
        match rng.random_range(0..3) {
            0 if g.nodes.len() > 1 => {
                let i = rng.random_range(0..g.nodes.len());
                remove_node(&mut g, i);
            }
            1 if remove_random_edge(&mut g, rng) => {}
            _ => add_distractor(&mut g, reg, rng),
        }
    }
    optimize_layout(&g).expect("edits keep the graph acyclic")
}

pub const SYNTHETIC_SEED: u64 = 0x5eed_2024;

/// Twelve pairs, one per sample pipeline. With `perturbed` false every
/// generation equals its target.
pub fn synthetic_corpus(reg: &Registry, seed: u64, perturbed: bool) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SAMPLE_PIPELINES
        .iter()
        .map(|s| {
            let target = s.graph(reg);
            let generated = if perturbed {
                perturb(&target, reg, &mut rng)
            } else {
                target.clone()
            };
            CorpusEntry {
                instruction: s.instruction.to_string(),
                tag: s.tag,
                target,
                generated,
            }
        })
        .collect()
}
