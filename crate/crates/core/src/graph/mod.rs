// SPDX-License-Identifier: Apache-2.0

//! The serialized pipeline graph, its JSON wire format, validation and the
//! pseudocode interpreter.

mod interpret;
mod validate;

pub use interpret::{compile, interpret, interpret_with, CompileReport, DanglingArg, DroppedLine, InterpretOptions};
pub use validate::{validate, Violation};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::ParamValue;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IncomingEdge {
    pub source_node_id: String,
    pub output_id: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SerializedNode {
    pub id: String,
    pub node_spec_id: String,
    /// Input socket id to the edges feeding it.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub incoming_edges: BTreeMap<String, Vec<IncomingEdge>>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub position: Position,
}

impl SerializedNode {
    pub fn new(id: &str, node_spec_id: &str) -> SerializedNode {
        SerializedNode {
            id: id.to_string(),
            node_spec_id: node_spec_id.to_string(),
            incoming_edges: BTreeMap::new(),
            params: BTreeMap::new(),
            position: Position::default(),
        }
    }

    pub fn connect(&mut self, input: &str, source: &str, output: &str) {
        self.incoming_edges
            .entry(input.to_string())
            .or_default()
            .push(IncomingEdge {
                source_node_id: source.to_string(),
                output_id: output.to_string(),
            });
    }
}

/// A directed edge in flat form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Edge {
    pub source: String,
    pub output: String,
    pub target: String,
    pub input: String,
}

/// An ordered list of nodes. Order is insertion (pseudocode) order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SerializedGraph {
    pub nodes: Vec<SerializedNode>,
}

impl SerializedGraph {
    pub fn node(&self, id: &str) -> Option<&SerializedNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut SerializedNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// All edges, grouped by target node in node order.
    pub fn edges(&self) -> Vec<Edge> {
        self.nodes
            .iter()
            .flat_map(|node| {
                node.incoming_edges.iter().flat_map(move |(input, edges)| {
                    edges.iter().map(move |e| Edge {
                        source: e.source_node_id.clone(),
                        output: e.output_id.clone(),
                        target: node.id.clone(),
                        input: input.clone(),
                    })
                })
            })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.incoming_edges.values().map(Vec::len).sum::<usize>())
            .sum()
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

#[derive(Debug, Error)]
pub enum GraphJsonError {
    #[error("invalid pipeline JSON at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid pipeline at `{path}`: {message}")]
    Invalid { path: String, message: String },
}

impl GraphJsonError {
    pub fn path(&self) -> &str {
        match self {
            GraphJsonError::Parse { path, .. } | GraphJsonError::Invalid { path, .. } => path,
        }
    }
}

/// Pretty-printed pipeline JSON.
pub fn to_json(graph: &SerializedGraph) -> String {
    serde_json::to_string_pretty(graph).expect("graph serializes")
}

/// Parses pipeline JSON and checks the registry-independent structure:
/// non-empty ids, unique node ids.
pub fn from_json(text: &str) -> Result<SerializedGraph, GraphJsonError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let graph: SerializedGraph = serde_path_to_error::deserialize(de).map_err(|e| GraphJsonError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    check_structure(&graph)?;
    Ok(graph)
}

pub fn from_value(value: serde_json::Value) -> Result<SerializedGraph, GraphJsonError> {
    let graph: SerializedGraph = serde_path_to_error::deserialize(value).map_err(|e| GraphJsonError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    check_structure(&graph)?;
    Ok(graph)
}

fn check_structure(graph: &SerializedGraph) -> Result<(), GraphJsonError> {
    let mut seen = std::collections::HashSet::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        let invalid = |path: String, message: &str| GraphJsonError::Invalid {
            path,
            message: message.to_string(),
        };
        if node.id.is_empty() {
            return Err(invalid(format!("nodes[{i}].id"), "empty node id"));
        }
        if node.node_spec_id.is_empty() {
            return Err(invalid(format!("nodes[{i}].nodeSpecId"), "empty node spec id"));
        }
        if !seen.insert(node.id.as_str()) {
            return Err(invalid(format!("nodes[{i}].id"), "duplicate node id"));
        }
        for (input, edges) in &node.incoming_edges {
            for (j, edge) in edges.iter().enumerate() {
                if edge.source_node_id.is_empty() {
                    return Err(invalid(
                        format!("nodes[{i}].incomingEdges.{input}[{j}].sourceNodeId"),
                        "empty source node id",
                    ));
                }
                if edge.output_id.is_empty() {
                    return Err(invalid(
                        format!("nodes[{i}].incomingEdges.{input}[{j}].outputId"),
                        "empty output id",
                    ));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_node_json_shape() {
        let graph = SerializedGraph {
            nodes: vec![SerializedNode::new("pali_1", "pali")],
        };
        let value: serde_json::Value = serde_json::from_str(&to_json(&graph)).unwrap();
        assert_eq!(value["nodes"][0]["nodeSpecId"], "pali");
        assert_eq!(value["nodes"][0]["position"]["x"], 0.0);
        assert!(value["nodes"][0].get("incomingEdges").is_none());
    }

    #[test]
    fn edge_json_field_names() {
        let mut node = SerializedNode::new("b_1", "b");
        node.connect("image", "a_1", "image");
        let graph = SerializedGraph {
            nodes: vec![SerializedNode::new("a_1", "a"), node],
        };
        let value: serde_json::Value = serde_json::from_str(&graph.to_json()).unwrap();
        assert_eq!(
            value["nodes"][1]["incomingEdges"]["image"][0],
            serde_json::json!({"sourceNodeId": "a_1", "outputId": "image"})
        );
        assert_eq!(from_json(&graph.to_json()).unwrap(), graph);
    }

    #[test]
    fn parse_errors_carry_a_path() {
        let err = from_json(r#"{"nodes": [{"id": "a", "nodeSpecId": 3}]}"#).unwrap_err();
        assert_eq!(err.path(), "nodes[0].nodeSpecId");
        let err = from_json(
            r#"{"nodes": [{"id": "a", "nodeSpecId": "x"}, {"id": "a", "nodeSpecId": "y"}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.path(), "nodes[1].id");
        let err = from_json(
            r#"{"nodes": [{"id": "a", "nodeSpecId": "x", "incomingEdges": {"in": [{"sourceNodeId": "", "outputId": "o"}]}}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.path(), "nodes[0].incomingEdges.in[0].sourceNodeId");
    }

    #[test]
    fn edges_are_flattened_in_node_order() {
        let mut b = SerializedNode::new("b_1", "b");
        b.connect("y", "a_1", "o");
        b.connect("x", "a_1", "o");
        let graph = SerializedGraph {
            nodes: vec![SerializedNode::new("a_1", "a"), b],
        };
        let inputs: Vec<_> = graph.edges().into_iter().map(|e| e.input).collect();
        assert_eq!(inputs, vec!["x", "y"]);
        assert_eq!(graph.edge_count(), 2);
    }
}
