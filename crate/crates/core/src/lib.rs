// SPDX-License-Identifier: Apache-2.0

//! Turn natural-language instructions into visual-programming ML pipelines.
//!
//! The crate is organised along the generation flow:
//!
//! * [`registry`]: the library of primitive nodes and their typed sockets.
//! * [`dsl`]: the compact pseudocode language an LLM writes pipelines in.
//! * [`graph`]: the serialized pipeline graph, validation and the
//!   interpreter from pseudocode to graph.
//! * [`layout`]: left-to-right placement of the compiled graph.
//! * [`llm`]: node-selector and code-writer prompts, LLM backends and the
//!   two-stage generation driver.
//! * [`metric`]: the exact minimal-user-interactions edit metric.
//! * [`corpus`]: corpus evaluation reports.
//! * [`service`]: the HTTP API.

pub mod corpus;
pub mod dsl;
pub mod graph;
pub mod layout;
pub mod llm;
pub mod metric;
pub mod registry;
pub mod service;

pub use graph::{CompileReport, SerializedGraph, SerializedNode};
pub use registry::{NodeSpec, Registry};
