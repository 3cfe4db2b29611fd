// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use super::{EditOp, InteractionReport, NodeMatch};
use crate::graph::{Edge, SerializedGraph, SerializedNode};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("edit #{index} cannot be applied: {message}")]
pub struct ScriptError {
    pub index: usize,
    pub message: String,
}

/// Turns an optimal mapping into an edit script: edge deletions, node
/// deletions, node additions, edge additions, in that order.
pub(super) fn build_script(
    generated: &SerializedGraph,
    target: &SerializedGraph,
    mapping: &[Option<usize>],
    cascade: bool,
) -> (Vec<EditOp>, Vec<NodeMatch>) {
    let mut script = Vec::new();
    // target index -> id of the node standing for it in the edited graph
    let mut stand_in: HashMap<usize, String> = HashMap::new();
    for (g, t) in mapping.iter().enumerate() {
        if let Some(t) = t {
            stand_in.insert(*t, generated.nodes[g].id.clone());
        }
    }
    let gen_to_tgt: HashMap<&str, &str> = mapping
        .iter()
        .enumerate()
        .filter_map(|(g, t)| t.map(|t| (generated.nodes[g].id.as_str(), target.nodes[t].id.as_str())))
        .collect();

    let target_edges: HashSet<Edge> = target.edges().into_iter().collect();
    let image = |e: &Edge| -> Option<Edge> {
        Some(Edge {
            source: gen_to_tgt.get(e.source.as_str())?.to_string(),
            output: e.output.clone(),
            target: gen_to_tgt.get(e.target.as_str())?.to_string(),
            input: e.input.clone(),
        })
    };

    let mut preserved = HashSet::new();
    for e in generated.edges() {
        match image(&e) {
            Some(img) if target_edges.contains(&img) => {
                preserved.insert(img);
            }
            Some(_) => script.push(delete_edge(&e)),
            None if !cascade => script.push(delete_edge(&e)),
            None => {}
        }
    }
    for (g, t) in mapping.iter().enumerate() {
        if t.is_none() {
            script.push(EditOp::DeleteNode {
                node_id: generated.nodes[g].id.clone(),
            });
        }
    }

    let mut taken: HashSet<String> = mapping
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_some())
        .map(|(g, _)| generated.nodes[g].id.clone())
        .collect();
    for (t, node) in target.nodes.iter().enumerate() {
        if stand_in.contains_key(&t) {
            continue;
        }
        let mut id = node.id.clone();
        let mut k = 1;
        while taken.contains(&id) {
            id = if k == 1 {
                format!("{}_added", node.id)
            } else {
                format!("{}_added{k}", node.id)
            };
            k += 1;
        }
        taken.insert(id.clone());
        script.push(EditOp::AddNode {
            node_id: id.clone(),
            node_spec_id: node.node_spec_id.clone(),
        });
        stand_in.insert(t, id);
    }

    let tgt_index: HashMap<&str, usize> = target
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    for e in target.edges() {
        if preserved.contains(&e) {
            continue;
        }
        script.push(EditOp::AddEdge {
            source: stand_in[&tgt_index[e.source.as_str()]].clone(),
            output: e.output.clone(),
            target: stand_in[&tgt_index[e.target.as_str()]].clone(),
            input: e.input.clone(),
        });
    }

    let correspondence = (0..target.nodes.len())
        .map(|t| NodeMatch {
            node: stand_in[&t].clone(),
            target: target.nodes[t].id.clone(),
        })
        .collect::<Vec<_>>();
    // Report in edited-graph order: surviving generated nodes first.
    let order: HashMap<&str, usize> = generated
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let mut correspondence = correspondence;
    correspondence.sort_by_key(|m| order.get(m.node.as_str()).copied().unwrap_or(usize::MAX));
    (script, correspondence)
}

fn delete_edge(e: &Edge) -> EditOp {
    EditOp::DeleteEdge {
        source: e.source.clone(),
        output: e.output.clone(),
        target: e.target.clone(),
        input: e.input.clone(),
    }
}

/// Applies edits in order. Deleting a node also removes its incident edges.
/// Added nodes carry no parameters.
pub fn apply_script(graph: &SerializedGraph, script: &[EditOp]) -> Result<SerializedGraph, ScriptError> {
    let mut g = graph.clone();
    for (index, op) in script.iter().enumerate() {
        let fail = |message: String| ScriptError { index, message };
        match op {
            EditOp::AddNode { node_id, node_spec_id } => {
                if g.node(node_id).is_some() {
                    return Err(fail(format!("node `{node_id}` already exists")));
                }
                g.nodes.push(SerializedNode::new(node_id, node_spec_id));
            }
            EditOp::DeleteNode { node_id } => {
                let Some(pos) = g.index_of(node_id) else {
                    return Err(fail(format!("node `{node_id}` does not exist")));
                };
                g.nodes.remove(pos);
                for node in &mut g.nodes {
                    for edges in node.incoming_edges.values_mut() {
                        edges.retain(|e| e.source_node_id != *node_id);
                    }
                    node.incoming_edges.retain(|_, edges| !edges.is_empty());
                }
            }
            EditOp::AddEdge {
                source,
                output,
                target,
                input,
            } => {
                if g.node(source).is_none() {
                    return Err(fail(format!("source node `{source}` does not exist")));
                }
                let Some(node) = g.node_mut(target) else {
                    return Err(fail(format!("target node `{target}` does not exist")));
                };
                let exists = node
                    .incoming_edges
                    .get(input)
                    .is_some_and(|es| es.iter().any(|e| e.source_node_id == *source && e.output_id == *output));
                if exists {
                    return Err(fail("edge already exists".to_string()));
                }
                node.connect(input, source, output);
            }
            EditOp::DeleteEdge {
                source,
                output,
                target,
                input,
            } => {
                let Some(node) = g.node_mut(target) else {
                    return Err(fail(format!("target node `{target}` does not exist")));
                };
                let edges = node.incoming_edges.get_mut(input);
                let Some(edges) = edges else {
                    return Err(fail("edge does not exist".to_string()));
                };
                let Some(pos) = edges
                    .iter()
                    .position(|e| e.source_node_id == *source && e.output_id == *output)
                else {
                    return Err(fail("edge does not exist".to_string()));
                };
                edges.remove(pos);
                if edges.is_empty() {
                    node.incoming_edges.remove(input);
                }
            }
        }
    }
    Ok(g)
}

/// Applies the report's script to `generated` and checks that the result is
/// isomorphic to `target` under the report's mapping, and that the script
/// length matches the reported count under the report's cascade mode.
pub fn verify_report(
    generated: &SerializedGraph,
    target: &SerializedGraph,
    report: &InteractionReport,
) -> Result<(), String> {
    if report.count != report.script.len() {
        return Err(format!("count {} != script length {}", report.count, report.script.len()));
    }
    let edited = apply_script(generated, &report.script).map_err(|e| e.to_string())?;
    if !report.cascade {
        let generated_edges: HashSet<Edge> = generated.edges().into_iter().collect();
        let deleted: BTreeSet<&str> = report
            .script
            .iter()
            .filter_map(|op| match op {
                EditOp::DeleteNode { node_id } => Some(node_id.as_str()),
                _ => None,
            })
            .collect();
        let explicitly_removed: HashSet<Edge> = report
            .script
            .iter()
            .filter_map(|op| match op {
                EditOp::DeleteEdge {
                    source,
                    output,
                    target,
                    input,
                } => Some(Edge {
                    source: source.clone(),
                    output: output.clone(),
                    target: target.clone(),
                    input: input.clone(),
                }),
                _ => None,
            })
            .collect();
        for e in &generated_edges {
            let touches_deleted = deleted.contains(e.source.as_str()) || deleted.contains(e.target.as_str());
            if touches_deleted && !explicitly_removed.contains(e) {
                return Err(format!("edge {e:?} removed by a node deletion without its own edit"));
            }
        }
    }

    let map: HashMap<&str, &str> = report
        .mapping
        .iter()
        .map(|m| (m.node.as_str(), m.target.as_str()))
        .collect();
    if map.len() != edited.nodes.len() || edited.nodes.len() != target.nodes.len() {
        return Err(format!(
            "edited graph has {} nodes, mapping {} pairs, target {} nodes",
            edited.nodes.len(),
            map.len(),
            target.nodes.len()
        ));
    }
    let images: BTreeSet<&str> = map.values().copied().collect();
    if images.len() != target.nodes.len() {
        return Err("mapping is not injective".to_string());
    }
    for node in &edited.nodes {
        let Some(t) = map.get(node.id.as_str()) else {
            return Err(format!("node `{}` is not mapped", node.id));
        };
        let Some(tn) = target.node(t) else {
            return Err(format!("mapped target `{t}` does not exist"));
        };
        if tn.node_spec_id != node.node_spec_id {
            return Err(format!("`{}` ({}) mapped to `{t}` ({})", node.id, node.node_spec_id, tn.node_spec_id));
        }
    }
    let mapped_edges: BTreeSet<Edge> = edited
        .edges()
        .into_iter()
        .map(|e| Edge {
            source: map[e.source.as_str()].to_string(),
            output: e.output,
            target: map[e.target.as_str()].to_string(),
            input: e.input,
        })
        .collect();
    let target_edges: BTreeSet<Edge> = target.edges().into_iter().collect();
    if mapped_edges != target_edges {
        return Err("edge sets differ under the mapping".to_string());
    }
    if edited.edge_count() != target.edge_count() {
        return Err("edited graph has duplicate edges".to_string());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_edge_graph() -> SerializedGraph {
        let mut viewer = SerializedNode::new("v_1", "image_mixer");
        viewer.connect("image1", "a_1", "image");
        viewer.connect("image2", "a_1", "image");
        let mut out = SerializedNode::new("o_1", "image_viewer");
        out.connect("image", "v_1", "image");
        SerializedGraph {
            nodes: vec![SerializedNode::new("a_1", "input_image"), viewer, out],
        }
    }

    #[test]
    fn empty_script_is_identity() {
        let g = two_edge_graph();
        assert_eq!(apply_script(&g, &[]).unwrap(), g);
    }

    #[test]
    fn delete_node_cascades() {
        let g = two_edge_graph();
        let out = apply_script(
            &g,
            &[EditOp::DeleteNode {
                node_id: "a_1".into(),
            }],
        )
        .unwrap();
        assert_eq!(out.nodes.len(), 2);
        assert_eq!(out.edge_count(), 1);
        assert!(out.node("v_1").unwrap().incoming_edges.is_empty());
    }

    #[test]
    fn inapplicable_ops_name_their_index() {
        let g = two_edge_graph();
        let script = [
            EditOp::DeleteNode {
                node_id: "o_1".into(),
            },
            EditOp::DeleteNode {
                node_id: "o_1".into(),
            },
        ];
        assert_eq!(apply_script(&g, &script).unwrap_err().index, 1);
        let dup = [EditOp::AddNode {
            node_id: "a_1".into(),
            node_spec_id: "input_image".into(),
        }];
        assert_eq!(apply_script(&g, &dup).unwrap_err().index, 0);
        let missing_edge = [EditOp::DeleteEdge {
            source: "a_1".into(),
            output: "image".into(),
            target: "o_1".into(),
            input: "image".into(),
        }];
        assert!(apply_script(&g, &missing_edge).is_err());
        let existing_edge = [EditOp::AddEdge {
            source: "v_1".into(),
            output: "image".into(),
            target: "o_1".into(),
            input: "image".into(),
        }];
        assert!(apply_script(&g, &existing_edge).is_err());
    }
}
