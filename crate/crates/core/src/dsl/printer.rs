// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::fmt::Write;

use thiserror::Error;

use super::{is_ident, node_id_type, ArgValue, PseudoProgram, Statement, MAX_LINE_CHARS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrintError {
    #[error("statement {index}: {message}")]
    Statement { index: usize, message: String },
    #[error("section {index}: {message}")]
    Section { index: usize, message: String },
}

/// Canonical text for a program: section headers where recorded, one
/// statement per line, `, ` between arguments, LF line endings.
pub fn print(program: &PseudoProgram) -> Result<String, PrintError> {
    let mut last_start = 0;
    for (index, section) in program.sections.iter().enumerate() {
        let bad = |message: &str| PrintError::Section {
            index,
            message: message.to_string(),
        };
        if !is_ident(&section.label) {
            return Err(bad("label is not an identifier"));
        }
        if section.start < last_start || section.start > program.statements.len() {
            return Err(bad("section start out of order"));
        }
        last_start = section.start;
    }

    let mut out = String::new();
    let mut sections = program.sections.iter().peekable();
    for (index, stmt) in program.statements.iter().enumerate() {
        while let Some(section) = sections.next_if(|s| s.start == index) {
            writeln!(out, "{}:", section.label).unwrap();
        }
        let line = print_statement(stmt).map_err(|message| PrintError::Statement { index, message })?;
        out.push_str(&line);
        out.push('\n');
    }
    for section in sections {
        writeln!(out, "{}:", section.label).unwrap();
    }
    Ok(out)
}

fn check_statement(stmt: &Statement) -> Result<(), String> {
    for (what, ident) in [("node id", &stmt.node_id), ("node type", &stmt.node_type)] {
        if !is_ident(ident) {
            return Err(format!("{what} `{ident}` is not an identifier"));
        }
    }
    if let Some(var) = &stmt.output_var {
        if !is_ident(var) {
            return Err(format!("output variable `{var}` is not an identifier"));
        }
    }
    if node_id_type(&stmt.node_id) != Some(stmt.node_type.as_str()) {
        return Err(format!(
            "node id `{}` is not `{}_<n>`",
            stmt.node_id, stmt.node_type
        ));
    }
    let mut names = HashSet::new();
    for arg in &stmt.args {
        if !is_ident(&arg.name) {
            return Err(format!("argument name `{}` is not an identifier", arg.name));
        }
        if !names.insert(arg.name.as_str()) {
            return Err(format!("duplicate argument `{}`", arg.name));
        }
        match &arg.value {
            ArgValue::Var(v) if !is_ident(v) => {
                return Err(format!("argument `{}` references non-identifier `{v}`", arg.name))
            }
            ArgValue::Literal(s) if s.contains(['\n', '\r']) => {
                return Err(format!("literal for `{}` contains a line break", arg.name))
            }
            _ => {}
        }
    }
    Ok(())
}

fn print_statement(stmt: &Statement) -> Result<String, String> {
    check_statement(stmt)?;
    let mut line = String::new();
    if let Some(var) = &stmt.output_var {
        write!(line, "{var} = ").unwrap();
    }
    write!(line, "{}: {}(", stmt.node_id, stmt.node_type).unwrap();
    for (i, arg) in stmt.args.iter().enumerate() {
        if i > 0 {
            line.push_str(", ");
        }
        write!(line, "{}=", arg.name).unwrap();
        match &arg.value {
            ArgValue::Var(v) => line.push_str(v),
            ArgValue::Literal(s) => {
                line.push('"');
                for c in s.chars() {
                    if matches!(c, '"' | '\\') {
                        line.push('\\');
                    }
                    line.push(c);
                }
                line.push('"');
            }
        }
    }
    line.push(')');
    if line.chars().count() > MAX_LINE_CHARS {
        return Err(format!("printed line exceeds {MAX_LINE_CHARS} characters"));
    }
    Ok(line)
}
