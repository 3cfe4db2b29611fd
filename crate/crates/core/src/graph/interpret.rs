// SPDX-License-Identifier: Apache-2.0

//! The code interpreter: turns a parsed program into a serialized graph,
//! one node per statement in statement order.

use std::collections::HashMap;

use serde::Serialize;

use super::{Position, SerializedGraph, SerializedNode};
use crate::dsl::{self, node_id_type, ArgValue, PseudoProgram, Statement};
use crate::layout::COLUMN_PITCH;
use crate::registry::{ParamValue, Registry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DroppedLine {
    pub line: usize,
    pub node_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DanglingArg {
    pub node_id: String,
    pub arg: String,
    pub variable: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompileReport {
    pub graph: SerializedGraph,
    /// Statements that produced no node.
    pub dropped_lines: Vec<DroppedLine>,
    /// Variable references that did not resolve; the node was kept.
    pub dangling_args: Vec<DanglingArg>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InterpretOptions {
    /// Drop a whole statement when any of its references dangles, instead of
    /// dropping only the edge.
    pub strict: bool,
}

pub fn interpret(program: &PseudoProgram, reg: &Registry) -> CompileReport {
    interpret_with(program, reg, InterpretOptions::default())
}

pub fn interpret_with(program: &PseudoProgram, reg: &Registry, options: InterpretOptions) -> CompileReport {
    let mut report = CompileReport {
        graph: SerializedGraph::default(),
        dropped_lines: Vec::new(),
        dangling_args: Vec::new(),
        diagnostics: Vec::new(),
    };
    // variable name -> node id
    let mut bindings: HashMap<String, String> = HashMap::new();

    for stmt in &program.statements {
        match build_node(stmt, reg, &bindings, options, &mut report) {
            Ok(node) => {
                bindings.insert(stmt.node_id.clone(), stmt.node_id.clone());
                if let Some(var) = &stmt.output_var {
                    bindings.insert(var.clone(), stmt.node_id.clone());
                }
                report.graph.nodes.push(node);
            }
            Err(reason) => report.dropped_lines.push(DroppedLine {
                line: stmt.line,
                node_id: stmt.node_id.clone(),
                reason,
            }),
        }
    }
    report
}

fn build_node(
    stmt: &Statement,
    reg: &Registry,
    bindings: &HashMap<String, String>,
    options: InterpretOptions,
    report: &mut CompileReport,
) -> Result<SerializedNode, String> {
    let spec = reg
        .get_spec(&stmt.node_type)
        .ok_or_else(|| format!("unknown node type {}", stmt.node_type))?;
    if node_id_type(&stmt.node_id) != Some(stmt.node_type.as_str()) {
        return Err(format!(
            "node id {} does not match node type {}",
            stmt.node_id, stmt.node_type
        ));
    }
    if report.graph.node(&stmt.node_id).is_some() {
        return Err(format!("duplicate node id {}", stmt.node_id));
    }
    if let Some(var) = &stmt.output_var {
        if bindings.contains_key(var) {
            return Err(format!("variable {var} is already defined"));
        }
    }

    let mut node = SerializedNode::new(&stmt.node_id, &spec.node_spec_id);
    node.params = spec.default_params.clone();
    let mut dangling = Vec::new();
    let mut notes = Vec::new();
    for arg in &stmt.args {
        match &arg.value {
            ArgValue::Literal(text) => {
                if spec.default_params.contains_key(&arg.name) {
                    node.params.insert(arg.name.clone(), ParamValue::Text(text.clone()));
                } else {
                    notes.push(format!(
                        "{}: `{}` is not a parameter of {}; literal ignored",
                        stmt.node_id, arg.name, spec.node_spec_id
                    ));
                }
            }
            ArgValue::Var(var) => {
                let Some(input) = spec.input(&arg.name) else {
                    notes.push(format!(
                        "{}: {} has no input `{}`; argument ignored",
                        stmt.node_id, spec.node_spec_id, arg.name
                    ));
                    continue;
                };
                let Some(source_id) = bindings.get(var) else {
                    dangling.push(DanglingArg {
                        node_id: stmt.node_id.clone(),
                        arg: arg.name.clone(),
                        variable: var.clone(),
                    });
                    continue;
                };
                let source = report
                    .graph
                    .node(source_id)
                    .and_then(|n| reg.get_spec(&n.node_spec_id))
                    .expect("bound variables name existing nodes");
                let Some(output) = source.default_output() else {
                    notes.push(format!(
                        "{}: {} has no output to feed `{}`; argument ignored",
                        stmt.node_id, source_id, arg.name
                    ));
                    continue;
                };
                if !input.accepts_any_of(output) {
                    notes.push(format!(
                        "{}: type mismatch, {}.{} cannot feed `{}`; argument ignored",
                        stmt.node_id, source_id, output.socket_id, arg.name
                    ));
                    continue;
                }
                node.connect(&arg.name, source_id, &output.socket_id);
            }
        }
    }

    if options.strict {
        if let Some(first) = dangling.first() {
            return Err(format!("references undefined variable {}", first.variable));
        }
    }
    report.dangling_args.extend(dangling);
    report.diagnostics.extend(notes);
    // Provisional placement: one row in statement order.
    let index = report.graph.nodes.len() as f64;
    node.position = Position {
        x: index * COLUMN_PITCH,
        y: 0.0,
    };
    Ok(node)
}

/// Parses and interprets pseudocode text in one step. Parse diagnostics are
/// folded into the report's diagnostics; compilation never fails.
pub fn compile(source: &str, reg: &Registry, options: InterpretOptions) -> CompileReport {
    match dsl::parse(source) {
        Ok(outcome) => {
            let mut report = interpret_with(&outcome.program, reg, options);
            let mut diagnostics: Vec<String> = outcome.diagnostics.iter().map(ToString::to_string).collect();
            diagnostics.append(&mut report.diagnostics);
            report.diagnostics = diagnostics;
            report
        }
        Err(err) => CompileReport {
            graph: SerializedGraph::default(),
            dropped_lines: Vec::new(),
            dangling_args: Vec::new(),
            diagnostics: vec![err.to_string()],
        },
    }
}
