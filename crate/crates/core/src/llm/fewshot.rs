// SPDX-License-Identifier: Apache-2.0

//! Few-shot examples for the two prompts, loaded from a JSON data file so the
//! set can be swapped without touching code.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::PipelineTag;
use crate::registry::Registry;

const CANONICAL: &str = include_str!("../../data/fewshot.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorExample {
    pub id: String,
    pub instruction: String,
    pub nodes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WriterExample {
    pub id: String,
    pub instruction: String,
    pub pseudocode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotStore {
    pub version: u32,
    #[serde(default)]
    pub source: String,
    pub selector: BTreeMap<PipelineTag, Vec<SelectorExample>>,
    pub writer: BTreeMap<PipelineTag, Vec<WriterExample>>,
}

#[derive(Debug, Error)]
pub enum FewShotError {
    #[error("cannot read few-shot file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid few-shot JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("few-shot example {id}: {message}")]
    Invalid { id: String, message: String },
}

impl FewShotStore {
    /// The bundled example set.
    pub fn canonical() -> FewShotStore {
        serde_json::from_str(CANONICAL).expect("bundled few-shot file is valid")
    }

    pub fn from_json(text: &str) -> Result<FewShotStore, FewShotError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<FewShotStore, FewShotError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn selector_examples(&self, tag: PipelineTag) -> &[SelectorExample] {
        self.selector.get(&tag).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn writer_examples(&self, tag: PipelineTag) -> &[WriterExample] {
        self.writer.get(&tag).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Checks that selector answers name registry nodes and that writer
    /// pseudocode compiles without drops.
    pub fn check(&self, reg: &Registry) -> Result<(), FewShotError> {
        for ex in self.selector.values().flatten() {
            if let Some(bad) = ex.nodes.iter().find(|n| !reg.contains(n)) {
                return Err(FewShotError::Invalid {
                    id: ex.id.clone(),
                    message: format!("unknown node `{bad}`"),
                });
            }
        }
        for ex in self.writer.values().flatten() {
            let report = crate::graph::compile(&ex.pseudocode, reg, Default::default());
            if !report.dropped_lines.is_empty() || !report.diagnostics.is_empty() {
                return Err(FewShotError::Invalid {
                    id: ex.id.clone(),
                    message: "pseudocode does not compile cleanly".into(),
                });
            }
        }
        Ok(())
    }
}
