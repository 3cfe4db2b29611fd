// SPDX-License-Identifier: Apache-2.0

//! Exhaustive reference for the interaction count. Deliberately naive: it
//! enumerates every injective, spec-preserving partial mapping and scores
//! each from scratch with string-keyed sets. No pruning, no shared code with
//! the branch-and-bound search.

use std::collections::{HashMap, HashSet};

use super::MetricError;
use crate::graph::SerializedGraph;

pub const ORACLE_MAX_NODES: usize = 8;

type EdgeTuple = (String, String, String, String);

fn edge_tuples(g: &SerializedGraph) -> HashSet<EdgeTuple> {
    let mut set = HashSet::new();
    for node in &g.nodes {
        for (input, edges) in &node.incoming_edges {
            for e in edges {
                set.insert((
                    e.source_node_id.clone(),
                    e.output_id.clone(),
                    node.id.clone(),
                    input.clone(),
                ));
            }
        }
    }
    set
}

fn score(
    mapping: &HashMap<String, String>,
    generated: &SerializedGraph,
    target: &SerializedGraph,
    gen_edges: &HashSet<EdgeTuple>,
    tgt_edges: &HashSet<EdgeTuple>,
    cascade: bool,
) -> usize {
    let mut cost = (generated.nodes.len() - mapping.len()) + (target.nodes.len() - mapping.len());
    let mut kept: HashSet<EdgeTuple> = HashSet::new();
    for (s, o, t, i) in gen_edges {
        match (mapping.get(s), mapping.get(t)) {
            (Some(ms), Some(mt)) => {
                let image = (ms.clone(), o.clone(), mt.clone(), i.clone());
                if tgt_edges.contains(&image) {
                    kept.insert(image);
                } else {
                    cost += 1;
                }
            }
            _ => {
                if !cascade {
                    cost += 1;
                }
            }
        }
    }
    cost + tgt_edges.iter().filter(|e| !kept.contains(*e)).count()
}

/// Minimum interaction count by brute force. Both graphs must have at most
/// [`ORACLE_MAX_NODES`] nodes.
pub fn oracle_interactions(
    generated: &SerializedGraph,
    target: &SerializedGraph,
    cascade: bool,
) -> Result<usize, MetricError> {
    if generated.nodes.len() > ORACLE_MAX_NODES || target.nodes.len() > ORACLE_MAX_NODES {
        return Err(MetricError::BudgetExceeded(format!(
            "oracle is limited to {ORACLE_MAX_NODES} nodes per graph"
        )));
    }
    let gen_edges = edge_tuples(generated);
    let tgt_edges = edge_tuples(target);
    let mut best = usize::MAX;
    let mut mapping = HashMap::new();
    let mut used = HashSet::new();
    enumerate(
        0,
        generated,
        target,
        &mut mapping,
        &mut used,
        &mut |m: &HashMap<String, String>| {
            best = best.min(score(m, generated, target, &gen_edges, &tgt_edges, cascade));
        },
    );
    Ok(best)
}

fn enumerate(
    i: usize,
    generated: &SerializedGraph,
    target: &SerializedGraph,
    mapping: &mut HashMap<String, String>,
    used: &mut HashSet<String>,
    visit: &mut dyn FnMut(&HashMap<String, String>),
) {
    if i == generated.nodes.len() {
        visit(mapping);
        return;
    }
    let g = &generated.nodes[i];
    enumerate(i + 1, generated, target, mapping, used, visit);
    for t in &target.nodes {
        if t.node_spec_id == g.node_spec_id && !used.contains(&t.id) {
            used.insert(t.id.clone());
            mapping.insert(g.id.clone(), t.id.clone());
            enumerate(i + 1, generated, target, mapping, used, visit);
            mapping.remove(&g.id);
            used.remove(&t.id);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SerializedNode;

    #[test]
    fn single_node_pairs() {
        let a = SerializedGraph {
            nodes: vec![SerializedNode::new("pali_1", "pali")],
        };
        let b = SerializedGraph {
            nodes: vec![SerializedNode::new("imagen_1", "imagen")],
        };
        assert_eq!(oracle_interactions(&a, &a, true).unwrap(), 0);
        assert_eq!(oracle_interactions(&a, &b, true).unwrap(), 2);
    }

    #[test]
    fn refuses_large_graphs() {
        let big = SerializedGraph {
            nodes: (1..=9).map(|i| SerializedNode::new(&format!("pali_{i}"), "pali")).collect(),
        };
        assert!(oracle_interactions(&big, &SerializedGraph::default(), true).is_err());
    }
}
