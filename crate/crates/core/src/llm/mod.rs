// SPDX-License-Identifier: Apache-2.0

//! Two-stage LLM orchestration: a node selector narrows the library from
//! short descriptions, then a code writer emits pseudocode from detailed
//! configurations of the selected nodes. The pseudocode is compiled and laid
//! out.

mod backend;
mod fewshot;
mod generate;
mod prompt;

pub use backend::{
    backend_from_env, prompt_hash, BackendError, BackendKind, CompletionParams, HttpBackend, HttpConfig,
    LlmBackend, ReplayBackend,
};
pub use fewshot::{FewShotError, FewShotStore, SelectorExample, WriterExample};
pub use generate::{generate, GenerateError, GenerateOptions, GenerationResult, Generator, StageTimings};
pub use prompt::{
    build_selector_prompt, build_writer_prompt, extract_pseudocode, parse_selector_output, tag_affinity_nodes,
    PromptBundle, PromptError, ALLOW_LIST_PREFIX,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The user-chosen pipeline category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineTag {
    Language,
    Visual,
    Multimodal,
}

impl PipelineTag {
    pub const ALL: [PipelineTag; 3] = [PipelineTag::Language, PipelineTag::Visual, PipelineTag::Multimodal];

    pub fn as_str(self) -> &'static str {
        match self {
            PipelineTag::Language => "language",
            PipelineTag::Visual => "visual",
            PipelineTag::Multimodal => "multimodal",
        }
    }
}

impl fmt::Display for PipelineTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown pipeline tag `{0}` (expected language, visual or multimodal)")]
pub struct UnknownTag(pub String);

impl FromStr for PipelineTag {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "language" => Ok(PipelineTag::Language),
            "visual" => Ok(PipelineTag::Visual),
            "multimodal" => Ok(PipelineTag::Multimodal),
            other => Err(UnknownTag(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Selector,
    Writer,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Selector => "selector",
            Stage::Writer => "writer",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_parse_exactly() {
        for tag in PipelineTag::ALL {
            assert_eq!(tag.as_str().parse::<PipelineTag>().unwrap(), tag);
        }
        assert!("audio".parse::<PipelineTag>().is_err());
        assert!("Visual".parse::<PipelineTag>().is_err());
    }
}
