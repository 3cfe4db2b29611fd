// SPDX-License-Identifier: Apache-2.0

//! The pipeline pseudocode language.
//!
//! One statement per node:
//!
//! ```text
//! input:
//! input_image_1: input_image()
//! input_text_1: input_text(text="caption this image in detail")
//! processor:
//! pali_1_out = pali_1: pali(image=input_image_1, prompt=input_text_1)
//! ```
//!
//! Grammar:
//!
//! ```text
//! statement := [ident "="] ident ":" ident "(" [arg ("," arg)*] ")"
//! arg       := ident "=" (ident | string)
//! header    := ident ":"
//! ```
//!
//! `//` starts a comment. String literals support `\"` and `\\` escapes only.
//! The parser is permissive: it checks syntax only and leaves name
//! resolution and node-id conventions to the interpreter.

mod lexer;
mod printer;
mod tokens;

pub use lexer::is_ident;
pub use printer::{print, PrintError};
pub use tokens::token_count;

use lexer::{lex_line, Spanned, Token};
use serde::Serialize;
use thiserror::Error;

/// Lines longer than this (in characters) are rejected.
pub const MAX_LINE_CHARS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum ArgValue {
    /// Reference to a variable declared by an earlier statement.
    Var(String),
    /// Literal node parameter, e.g. the text of an `input_text` node.
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Arg {
    pub name: String,
    pub value: ArgValue,
}

impl Arg {
    pub fn var(name: &str, var: &str) -> Arg {
        Arg {
            name: name.to_string(),
            value: ArgValue::Var(var.to_string()),
        }
    }

    pub fn literal(name: &str, text: &str) -> Arg {
        Arg {
            name: name.to_string(),
            value: ArgValue::Literal(text.to_string()),
        }
    }
}

/// One line of pseudocode. Equality ignores `line`.
#[derive(Debug, Clone, Eq, Serialize)]
pub struct Statement {
    pub output_var: Option<String>,
    pub node_id: String,
    pub node_type: String,
    pub args: Vec<Arg>,
    /// 1-based source line; 0 for statements built in code.
    pub line: usize,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.output_var == other.output_var
            && self.node_id == other.node_id
            && self.node_type == other.node_type
            && self.args == other.args
    }
}

impl Statement {
    pub fn new(output_var: Option<&str>, node_id: &str, node_type: &str, args: Vec<Arg>) -> Statement {
        Statement {
            output_var: output_var.map(str::to_string),
            node_id: node_id.to_string(),
            node_type: node_type.to_string(),
            args,
            line: 0,
        }
    }

    /// The name other statements use to refer to this node's output.
    pub fn binding(&self) -> &str {
        self.output_var.as_deref().unwrap_or(&self.node_id)
    }
}

/// `node_id` with its trailing `_<positive int>` removed, if it has one.
pub fn node_id_type(node_id: &str) -> Option<&str> {
    let (head, suffix) = node_id.rsplit_once('_')?;
    let valid_suffix = !suffix.is_empty()
        && suffix.bytes().all(|b| b.is_ascii_digit())
        && !suffix.starts_with('0');
    (valid_suffix && !head.is_empty()).then_some(head)
}

/// A section header (`input:`) and the index of the first statement after it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Section {
    pub label: String,
    pub start: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PseudoProgram {
    pub statements: Vec<Statement>,
    pub sections: Vec<Section>,
}

impl PseudoProgram {
    pub fn new(statements: Vec<Statement>) -> PseudoProgram {
        PseudoProgram {
            statements,
            sections: Vec::new(),
        }
    }
}

/// A line that could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}:{}: {}", self.line, self.column, self.message)
    }
}

/// How each source line was classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Blank,
    Comment,
    Header,
    Statement,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOutcome {
    pub program: PseudoProgram,
    pub diagnostics: Vec<Diagnostic>,
    /// One entry per source line.
    pub lines: Vec<LineKind>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no pseudocode to parse")]
    Empty,
}

/// Parses pseudocode. Unparseable lines are reported as diagnostics and the
/// remaining lines are still returned.
pub fn parse(source: &str) -> Result<ParseOutcome, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut out = ParseOutcome {
        program: PseudoProgram::default(),
        diagnostics: Vec::new(),
        lines: Vec::new(),
    };
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let kind = parse_line(raw, line_no, &mut out);
        out.lines.push(kind);
    }
    Ok(out)
}

fn parse_line(raw: &str, line_no: usize, out: &mut ParseOutcome) -> LineKind {
    fn fail(out: &mut ParseOutcome, line: usize, column: usize, message: String) -> LineKind {
        out.diagnostics.push(Diagnostic {
            line,
            column,
            message,
        });
        LineKind::Invalid
    }
    if raw.trim().is_empty() {
        return LineKind::Blank;
    }
    if raw.chars().count() > MAX_LINE_CHARS {
        return fail(out, line_no, 1, format!("line exceeds {MAX_LINE_CHARS} characters"));
    }
    let tokens = match lex_line(raw) {
        Ok(t) => t,
        Err(e) => return fail(out, line_no, e.column, e.message),
    };
    match tokens.as_slice() {
        [] => LineKind::Comment,
        [Spanned {
            token: Token::Ident(label),
            ..
        }, Spanned {
            token: Token::Colon,
            ..
        }] => {
            let start = out.program.statements.len();
            out.program.sections.push(Section {
                label: label.clone(),
                start,
            });
            LineKind::Header
        }
        _ => match parse_statement(&tokens) {
            Ok(mut stmt) => {
                stmt.line = line_no;
                out.program.statements.push(stmt);
                LineKind::Statement
            }
            Err((column, message)) => fail(out, line_no, column, message),
        },
    }
}

struct Cursor<'a> {
    tokens: &'a [Spanned],
    pos: usize,
}

type StmtError = (usize, String);

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos).map(|s| &s.token)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or(self.tokens.last())
            .map_or(1, |s| s.column)
    }

    fn unexpected(&self, wanted: &str) -> StmtError {
        let found = self
            .peek()
            .map_or_else(|| "end of line".to_string(), Token::describe);
        (self.column(), format!("expected {wanted}, found {found}"))
    }

    fn ident(&mut self, what: &str) -> Result<String, StmtError> {
        match self.peek() {
            Some(Token::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect(&mut self, token: Token) -> Result<(), StmtError> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&token.describe()))
        }
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == Some(token) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
}

fn parse_statement(tokens: &[Spanned]) -> Result<Statement, StmtError> {
    let mut cur = Cursor { tokens, pos: 0 };
    let first = cur.ident("an identifier")?;
    let (output_var, node_id) = if cur.eat(&Token::Eq) {
        (Some(first), cur.ident("a node id")?)
    } else {
        (None, first)
    };
    cur.expect(Token::Colon)?;
    let node_type = cur.ident("a node type")?;
    cur.expect(Token::LParen)?;
    let mut args: Vec<Arg> = Vec::new();
    if !cur.eat(&Token::RParen) {
        loop {
            let column = cur.column();
            let name = cur.ident("an argument name")?;
            cur.expect(Token::Eq)?;
            let value = match cur.peek() {
                Some(Token::Ident(v)) => ArgValue::Var(v.clone()),
                Some(Token::Str(v)) => ArgValue::Literal(v.clone()),
                _ => return Err(cur.unexpected("a variable or string literal")),
            };
            cur.pos += 1;
            if args.iter().any(|a| a.name == name) {
                return Err((column, format!("duplicate argument `{name}`")));
            }
            args.push(Arg { name, value });
            if cur.eat(&Token::RParen) {
                break;
            }
            cur.expect(Token::Comma)?;
        }
    }
    if cur.peek().is_some() {
        return Err(cur.unexpected("end of line"));
    }
    Ok(Statement {
        output_var,
        node_id,
        node_type,
        args,
        line: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_processor_statement() {
        let out = parse("pali_1_out = pali_1: pali(image=input_image_1, prompt=input_text_1)").unwrap();
        assert!(out.diagnostics.is_empty());
        assert_eq!(
            out.program.statements,
            vec![Statement::new(
                Some("pali_1_out"),
                "pali_1",
                "pali",
                vec![Arg::var("image", "input_image_1"), Arg::var("prompt", "input_text_1")]
            )]
        );
        assert_eq!(out.program.statements[0].line, 1);
    }

    #[test]
    fn parses_input_statement_with_literal() {
        let out = parse("input_text_1: input_text(text=\"caption this image in detail\")").unwrap();
        let stmt = &out.program.statements[0];
        assert_eq!(stmt.output_var, None);
        assert_eq!(stmt.node_id, "input_text_1");
        assert_eq!(stmt.node_type, "input_text");
        assert_eq!(stmt.args, vec![Arg::literal("text", "caption this image in detail")]);
        assert_eq!(stmt.binding(), "input_text_1");
    }

    #[test]
    fn malformed_line_gives_diagnostic() {
        let out = parse("= : ()").unwrap();
        assert!(out.program.statements.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.diagnostics[0].line, 1);
        assert_eq!(out.lines, vec![LineKind::Invalid]);
    }

    #[test]
    fn empty_input_fails() {
        assert_eq!(parse(""), Err(ParseError::Empty));
        assert_eq!(parse("  \n\t\n"), Err(ParseError::Empty));
    }

    #[test]
    fn every_line_is_classified() {
        let src = "input:\n\n// note\ninput_image_1: input_image()\nbroken(\nprocessor:\n";
        let out = parse(src).unwrap();
        assert_eq!(
            out.lines,
            vec![
                LineKind::Header,
                LineKind::Blank,
                LineKind::Comment,
                LineKind::Statement,
                LineKind::Invalid,
                LineKind::Header
            ]
        );
        assert_eq!(
            out.program.sections,
            vec![
                Section {
                    label: "input".into(),
                    start: 0
                },
                Section {
                    label: "processor".into(),
                    start: 1
                }
            ]
        );
    }

    #[test]
    fn partial_parse_keeps_good_lines() {
        let src = "a_1: a()\nnot a statement\nb_1_out = b_1: b(x=a_1)\n";
        let out = parse(src).unwrap();
        assert_eq!(out.program.statements.len(), 2);
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.diagnostics[0].line, 2);
        assert_eq!(out.program.statements[1].line, 3);
    }

    #[test]
    fn rejects_duplicate_args_and_trailing_tokens() {
        let out = parse("a_1: a(x=b, x=c)\nb_1: b() extra\nc_1: c(x=)\nd_1: d(x=y,)").unwrap();
        assert!(out.program.statements.is_empty());
        assert_eq!(out.diagnostics.len(), 4);
        assert!(out.diagnostics[0].message.contains("duplicate argument `x`"));
    }

    #[test]
    fn rejects_overlong_line() {
        let long = format!("a_1: a(x=\"{}\")", "y".repeat(MAX_LINE_CHARS));
        let out = parse(&long).unwrap();
        assert!(out.program.statements.is_empty());
        assert!(out.diagnostics[0].message.contains("exceeds"));
    }

    #[test]
    fn node_id_suffix() {
        assert_eq!(node_id_type("pali_1"), Some("pali"));
        assert_eq!(node_id_type("input_text_12"), Some("input_text"));
        assert_eq!(node_id_type("pali"), None);
        assert_eq!(node_id_type("pali_0"), None);
        assert_eq!(node_id_type("pali_01"), None);
        assert_eq!(node_id_type("_1"), None);
    }
}
