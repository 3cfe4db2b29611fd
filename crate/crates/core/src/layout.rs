// SPDX-License-Identifier: Apache-2.0

//! Left-to-right layered layout.
//!
//! Each node is placed in the column given by the longest path from any
//! source node, so every edge points strictly to the right. Within a column
//! nodes keep graph insertion order. No crossing minimization is attempted.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::graph::{Position, SerializedGraph};

/// Node box width in pixels.
pub const NODE_WIDTH: f64 = 280.0;
/// Node box height in pixels.
pub const NODE_HEIGHT: f64 = 160.0;
/// Horizontal gap between columns.
pub const COLUMN_GAP: f64 = 80.0;
/// Vertical gap between rows.
pub const ROW_GAP: f64 = 40.0;

pub const COLUMN_PITCH: f64 = NODE_WIDTH + COLUMN_GAP;
pub const ROW_PITCH: f64 = NODE_HEIGHT + ROW_GAP;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("graph has a cycle (back edge {source_node} -> {target_node})")]
    Cycle { source_node: String, target_node: String },
}

/// Column index of every node, in node order. Edges from unknown source
/// nodes are ignored.
pub fn columns(graph: &SerializedGraph) -> Result<Vec<usize>, LayoutError> {
    let n = graph.nodes.len();
    let index: HashMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| (node.id.as_str(), i))
        .collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for edge in graph.edges() {
        if let (Some(&s), Some(&t)) = (index.get(edge.source.as_str()), index.get(edge.target.as_str())) {
            succ[s].push(t);
            indegree[t] += 1;
        }
    }

    // BFS over a topological order, relaxing each column to the longest path.
    let mut column = vec![0usize; n];
    let mut remaining = indegree.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut visited = 0;
    while let Some(v) = queue.pop_front() {
        visited += 1;
        for &w in &succ[v] {
            column[w] = column[w].max(column[v] + 1);
            remaining[w] -= 1;
            if remaining[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    if visited < n {
        let (s, t) = find_back_edge(&succ, &remaining);
        return Err(LayoutError::Cycle {
            source_node: graph.nodes[s].id.clone(),
            target_node: graph.nodes[t].id.clone(),
        });
    }
    Ok(column)
}

/// DFS restricted to the nodes Kahn's algorithm could not remove; all of them
/// reach a cycle, so a gray-node hit is guaranteed.
fn find_back_edge(succ: &[Vec<usize>], remaining: &[usize]) -> (usize, usize) {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Gray,
        Black,
    }
    let n = succ.len();
    let stuck: Vec<bool> = remaining.iter().map(|&d| d > 0).collect();
    let mut mark = vec![Mark::White; n];
    for root in (0..n).filter(|&i| stuck[i]) {
        if mark[root] != Mark::White {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Gray;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = succ[v].get(*next) {
                *next += 1;
                if !stuck[w] {
                    continue;
                }
                match mark[w] {
                    Mark::Gray => return (v, w),
                    Mark::White => {
                        mark[w] = Mark::Gray;
                        stack.push((w, 0));
                    }
                    Mark::Black => {}
                }
            } else {
                mark[v] = Mark::Black;
                stack.pop();
            }
        }
    }
    unreachable!("nodes left by Kahn's algorithm always contain a cycle")
}

/// Assigns positions; everything except `position` is left untouched.
pub fn optimize_layout(graph: &SerializedGraph) -> Result<SerializedGraph, LayoutError> {
    let column = columns(graph)?;
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut out = graph.clone();
    for (node, &col) in out.nodes.iter_mut().zip(&column) {
        let row = rows.entry(col).or_insert(0);
        node.position = Position {
            x: col as f64 * COLUMN_PITCH,
            y: *row as f64 * ROW_PITCH,
        };
        *row += 1;
    }
    Ok(out)
}
