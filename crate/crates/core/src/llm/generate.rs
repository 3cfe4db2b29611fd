// SPDX-License-Identifier: Apache-2.0

//! The full instruction-to-graph run: select, write, compile, lay out.

use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use super::backend::{BackendError, CompletionParams, LlmBackend};
use super::fewshot::FewShotStore;
use super::prompt::{
    build_selector_prompt, build_writer_prompt, extract_pseudocode, parse_selector_output, PromptBundle,
    PromptError,
};
use super::{PipelineTag, Stage};
use crate::graph::{compile, CompileReport, InterpretOptions, SerializedGraph};
use crate::layout::optimize_layout;
use crate::registry::Registry;

pub const DEFAULT_STAGE_TIMEOUT: Duration = Duration::from_secs(60);
pub const MAX_INSTRUCTION_CHARS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    /// Per-stage wall-clock limit. `None` waits forever.
    pub stage_timeout: Option<Duration>,
    /// On an empty selection, let the writer see the tag-affinity nodes
    /// instead of failing.
    pub selector_fallback: bool,
    pub temperature: f64,
    pub interpret: InterpretOptions,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            stage_timeout: Some(DEFAULT_STAGE_TIMEOUT),
            selector_fallback: true,
            temperature: 0.0,
            interpret: InterpretOptions::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("instruction must be 1 to {MAX_INSTRUCTION_CHARS} characters, got {0}")]
    InvalidInstruction(usize),
    #[error("{stage} stage failed: {error}")]
    Backend { stage: Stage, error: BackendError },
    #[error("{stage} stage timed out after {after:?}")]
    Timeout { stage: Stage, after: Duration },
    #[error("selector produced no nodes")]
    NoSelection,
    #[error("no pseudocode produced")]
    NoPseudocode,
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

impl GenerateError {
    /// The stage that failed, if the failure belongs to one.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            GenerateError::InvalidInstruction(_) => None,
            GenerateError::Backend { stage, .. } | GenerateError::Timeout { stage, .. } => Some(*stage),
            GenerateError::NoSelection => Some(Stage::Selector),
            GenerateError::NoPseudocode | GenerateError::Prompt(_) => Some(Stage::Writer),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageTimings {
    pub selector: Duration,
    pub writer: Duration,
    pub compile: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GenerationResult {
    pub instruction: String,
    pub tag: PipelineTag,
    pub selector_prompt: PromptBundle,
    pub selector_output: String,
    pub selected_nodes: Vec<String>,
    pub writer_prompt: PromptBundle,
    pub writer_output: String,
    pub pseudocode: String,
    pub report: CompileReport,
    /// `report.graph` after layout.
    pub graph: SerializedGraph,
    /// Wall-clock per stage; left out of serialized output so replayed runs
    /// are byte-identical.
    #[serde(skip)]
    pub timings: StageTimings,
}

#[derive(Clone)]
pub struct Generator {
    registry: Arc<Registry>,
    fewshot: Arc<FewShotStore>,
    backend: Arc<dyn LlmBackend>,
    options: GenerateOptions,
}

impl Generator {
    pub fn new(registry: Arc<Registry>, backend: Arc<dyn LlmBackend>) -> Generator {
        Generator {
            registry,
            fewshot: Arc::new(FewShotStore::canonical()),
            backend,
            options: GenerateOptions::default(),
        }
    }

    pub fn with_fewshot(mut self, fewshot: Arc<FewShotStore>) -> Generator {
        self.fewshot = fewshot;
        self
    }

    pub fn with_options(mut self, options: GenerateOptions) -> Generator {
        self.options = options;
        self
    }

    pub fn options(&self) -> &GenerateOptions {
        &self.options
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn backend_identity(&self) -> String {
        self.backend.identity()
    }

    fn run_stage(&self, stage: Stage, prompt: &str) -> Result<String, GenerateError> {
        let params = CompletionParams {
            temperature: self.options.temperature,
            ..CompletionParams::for_stage(stage)
        };
        let Some(limit) = self.options.stage_timeout else {
            return self
                .backend
                .complete(prompt, &params)
                .map_err(|error| GenerateError::Backend { stage, error });
        };
        let (tx, rx) = mpsc::channel();
        let backend = Arc::clone(&self.backend);
        let prompt = prompt.to_string();
        // The worker is detached on timeout; its late reply is discarded.
        thread::Builder::new()
            .name(format!("llm-{stage}"))
            .spawn(move || {
                let _ = tx.send(backend.complete(&prompt, &params));
            })
            .map_err(|e| GenerateError::Backend {
                stage,
                error: BackendError::Http(format!("cannot spawn worker: {e}")),
            })?;
        match rx.recv_timeout(limit) {
            Ok(reply) => reply.map_err(|error| GenerateError::Backend { stage, error }),
            Err(mpsc::RecvTimeoutError::Timeout) => Err(GenerateError::Timeout { stage, after: limit }),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(GenerateError::Backend {
                stage,
                error: BackendError::Http("backend worker panicked".into()),
            }),
        }
    }

    pub fn generate(&self, instruction: &str, tag: PipelineTag) -> Result<GenerationResult, GenerateError> {
        let chars = instruction.trim().chars().count();
        if chars == 0 || instruction.chars().count() > MAX_INSTRUCTION_CHARS {
            return Err(GenerateError::InvalidInstruction(instruction.chars().count()));
        }
        let reg = &*self.registry;

        let started = Instant::now();
        let selector_prompt = build_selector_prompt(instruction, tag, reg, &self.fewshot);
        let selector_output = self.run_stage(Stage::Selector, &selector_prompt.text)?;
        let selected = parse_selector_output(&selector_output, reg);
        log::info!("selector picked {} nodes: {}", selected.len(), selected.join(", "));
        if selected.is_empty() && !self.options.selector_fallback {
            return Err(GenerateError::NoSelection);
        }
        let selector_time = started.elapsed();

        let started = Instant::now();
        let writer_prompt = build_writer_prompt(instruction, tag, &selected, reg, &self.fewshot)?;
        let writer_output = self.run_stage(Stage::Writer, &writer_prompt.text)?;
        let pseudocode = extract_pseudocode(&writer_output);
        if pseudocode.is_empty() {
            return Err(GenerateError::NoPseudocode);
        }
        let writer_time = started.elapsed();

        let started = Instant::now();
        let report = compile(&pseudocode, reg, self.options.interpret);
        for dropped in &report.dropped_lines {
            log::warn!("dropped line {} ({}): {}", dropped.line, dropped.node_id, dropped.reason);
        }
        let graph = optimize_layout(&report.graph).expect("interpreter output is acyclic");
        let compile_time = started.elapsed();

        Ok(GenerationResult {
            instruction: instruction.to_string(),
            tag,
            selected_nodes: writer_prompt.selected_nodes.clone(),
            selector_prompt,
            selector_output,
            writer_prompt,
            writer_output,
            pseudocode,
            report,
            graph,
            timings: StageTimings {
                selector: selector_time,
                writer: writer_time,
                compile: compile_time,
            },
        })
    }
}

/// One-shot generation with the bundled few-shot set and default options.
pub fn generate(
    instruction: &str,
    tag: PipelineTag,
    backend: Arc<dyn LlmBackend>,
    reg: &Registry,
) -> Result<GenerationResult, GenerateError> {
    Generator::new(Arc::new(reg.clone()), backend).generate(instruction, tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ReplayBackend;

    struct Scripted {
        selector: String,
        writer: String,
        delay: Duration,
    }

    impl LlmBackend for Scripted {
        fn complete(&self, _prompt: &str, params: &CompletionParams) -> Result<String, BackendError> {
            thread::sleep(self.delay);
            Ok(match params.stage {
                Stage::Selector => self.selector.clone(),
                Stage::Writer => self.writer.clone(),
            })
        }

        fn identity(&self) -> String {
            "scripted".into()
        }
    }

    fn scripted(selector: &str, writer: &str) -> Arc<dyn LlmBackend> {
        Arc::new(Scripted {
            selector: selector.into(),
            writer: writer.into(),
            delay: Duration::ZERO,
        })
    }

    const IMAGE_QUESTION: &str = "input_image_1: input_image()\n\
        input_text_1: input_text(text=\"caption this image in detail\")\n\
        pali_1_out = pali_1: pali(image=input_image_1, prompt=input_text_1)\n";

    #[test]
    fn end_to_end_with_hallucinated_line() {
        let reg = Registry::canonical();
        let writer = format!("```\n{IMAGE_QUESTION}super_resolution_1_out = super_resolution_1: super_resolution(image=pali_1_out)\n```");
        let r = generate("caption a photo", PipelineTag::Multimodal, scripted("input_image, input_text, pali", &writer), &reg)
            .unwrap();
        assert_eq!(r.selected_nodes, ["input_image", "input_text", "pali"]);
        assert_eq!(r.report.dropped_lines.len(), 1);
        assert_eq!(r.graph.nodes.len(), 3);
        assert_eq!(r.graph, optimize_layout(&r.report.graph).unwrap());
        assert!(crate::graph::validate(&r.graph, &reg).is_empty());
    }

    #[test]
    fn empty_selection_is_staged() {
        let reg = Arc::new(Registry::canonical());
        let strict = Generator::new(reg.clone(), scripted("", IMAGE_QUESTION)).with_options(GenerateOptions {
            selector_fallback: false,
            ..GenerateOptions::default()
        });
        let err = strict.generate("x", PipelineTag::Visual).unwrap_err();
        assert_eq!(err.to_string(), "selector produced no nodes");
        assert_eq!(err.stage(), Some(Stage::Selector));

        let lenient = Generator::new(reg, scripted("", IMAGE_QUESTION));
        let r = lenient.generate("x", PipelineTag::Visual).unwrap();
        assert!(r.writer_prompt.fallback_used);
        assert_eq!(r.graph.nodes.len(), 3);
    }

    #[test]
    fn empty_writer_output() {
        let err = generate("x", PipelineTag::Visual, scripted("pali", "```\n```"), &Registry::canonical()).unwrap_err();
        assert_eq!(err.to_string(), "no pseudocode produced");
        assert_eq!(err.stage(), Some(Stage::Writer));
    }

    #[test]
    fn timeout_names_the_stage() {
        let backend: Arc<dyn LlmBackend> = Arc::new(Scripted {
            selector: "pali".into(),
            writer: IMAGE_QUESTION.into(),
            delay: Duration::from_millis(300),
        });
        let g = Generator::new(Arc::new(Registry::canonical()), backend).with_options(GenerateOptions {
            stage_timeout: Some(Duration::from_millis(20)),
            ..GenerateOptions::default()
        });
        let err = g.generate("x", PipelineTag::Visual).unwrap_err();
        assert!(matches!(err, GenerateError::Timeout { stage: Stage::Selector, .. }));
    }

    #[test]
    fn missing_replay_fixture_is_a_selector_failure() {
        let backend: Arc<dyn LlmBackend> = Arc::new(ReplayBackend::in_memory());
        let err = generate("x", PipelineTag::Visual, backend, &Registry::canonical()).unwrap_err();
        assert!(matches!(err, GenerateError::Backend { stage: Stage::Selector, .. }));
    }

    #[test]
    fn instruction_bounds() {
        let reg = Registry::canonical();
        for bad in ["", "   ", &"a".repeat(MAX_INSTRUCTION_CHARS + 1)] {
            let err = generate(bad, PipelineTag::Visual, scripted("pali", IMAGE_QUESTION), &reg).unwrap_err();
            assert!(matches!(err, GenerateError::InvalidInstruction(_)));
        }
    }
}
