// SPDX-License-Identifier: Apache-2.0

//! Minimal number of user interactions needed to turn a generated pipeline
//! into a target pipeline.
//!
//! An interaction is adding or deleting a node, or adding or deleting an
//! edge. Parameter edits are free. By default deleting a node also removes
//! its incident edges in the same interaction ("cascade"); with cascade off
//! every removed edge is charged separately.
//!
//! The count is the minimum, over every injective partial mapping of
//! generated nodes onto target nodes of the same node spec, of
//!
//! ```text
//! unmapped generated nodes + unmapped target nodes
//!   + generated edges with no image in the target
//!   + target edges with no preimage in the generated graph
//! ```
//!
//! where an edge is identified by (source, output socket, target, input
//! socket). [`interactions`] finds the optimum with branch-and-bound;
//! [`oracle_interactions`] enumerates every mapping and is kept as an
//! independent check.

mod oracle;
mod script;
mod search;

pub use oracle::{oracle_interactions, ORACLE_MAX_NODES};
pub use script::{apply_script, verify_report, ScriptError};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{validate, SerializedGraph, Violation};
use crate::registry::Registry;

/// Graphs above this size are refused instead of searched.
pub const DEFAULT_MAX_NODES: usize = 15;
pub const DEFAULT_MAX_EXPANSIONS: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditOp {
    AddNode {
        node_id: String,
        node_spec_id: String,
    },
    DeleteNode {
        node_id: String,
    },
    AddEdge {
        source: String,
        output: String,
        target: String,
        input: String,
    },
    DeleteEdge {
        source: String,
        output: String,
        target: String,
        input: String,
    },
}

/// A node of the edited graph and the target node it stands for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMatch {
    pub node: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InteractionReport {
    pub count: usize,
    /// `count / from_scratch`. Not clamped: a generation that is worse
    /// than an empty canvas scores above 1.
    pub ratio: f64,
    /// Interactions needed from an empty canvas: target nodes + edges.
    pub from_scratch: usize,
    pub cascade: bool,
    pub script: Vec<EditOp>,
    /// Correspondence between the nodes of the edited graph (generated ids
    /// plus ids of added nodes) and the target nodes.
    pub mapping: Vec<NodeMatch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphRole {
    Generated,
    Target,
}

impl std::fmt::Display for GraphRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GraphRole::Generated => "generated",
            GraphRole::Target => "target",
        })
    }
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("{role} graph is invalid: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidGraph {
        role: GraphRole,
        violations: Vec<Violation>,
    },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricOptions {
    pub cascade: bool,
    pub max_nodes: usize,
    pub max_expansions: u64,
    pub time_limit: Option<Duration>,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            cascade: true,
            max_nodes: DEFAULT_MAX_NODES,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
            time_limit: None,
        }
    }
}

/// Completion ratio as reported per pipeline. An empty target scores 0 when
/// nothing needs to change and 1 otherwise.
pub fn completion_ratio(count: usize, from_scratch: usize) -> f64 {
    if from_scratch == 0 {
        if count == 0 {
            0.0
        } else {
            1.0
        }
    } else {
        count as f64 / from_scratch as f64
    }
}

pub fn interactions(
    generated: &SerializedGraph,
    target: &SerializedGraph,
    reg: &Registry,
) -> Result<InteractionReport, MetricError> {
    interactions_with(generated, target, reg, MetricOptions::default())
}

pub fn interactions_with(
    generated: &SerializedGraph,
    target: &SerializedGraph,
    reg: &Registry,
    options: MetricOptions,
) -> Result<InteractionReport, MetricError> {
    for (role, graph) in [(GraphRole::Generated, generated), (GraphRole::Target, target)] {
        let violations = validate(graph, reg);
        if !violations.is_empty() {
            return Err(MetricError::InvalidGraph { role, violations });
        }
        if graph.nodes.len() > options.max_nodes {
            return Err(MetricError::BudgetExceeded(format!(
                "{role} graph has {} nodes; the exact search is limited to {}",
                graph.nodes.len(),
                options.max_nodes
            )));
        }
    }
    let best = search::best_mapping(generated, target, &options)?;
    let (script, mapping) = script::build_script(generated, target, &best.mapping, options.cascade);
    debug_assert_eq!(script.len(), best.cost);
    let from_scratch = target.nodes.len() + target.edge_count();
    Ok(InteractionReport {
        count: script.len(),
        ratio: completion_ratio(script.len(), from_scratch),
        from_scratch,
        cascade: options.cascade,
        script,
        mapping,
    })
}
