//! The `.ptss` file format: parsing with spanned diagnostics, and
//! deterministic rendering.

mod lexer;
mod parser;
mod render;

use serde::Serialize;

use crate::rules::Ptss;
use crate::strata::Stratification;
use crate::universe::UniverseSpec;

pub use parser::{is_dist_var_name, parse_dist_term, parse_literal, parse_term};
pub use render::{render, render_dist, render_fdist, render_literal, render_poslit, render_premise, render_rule, render_term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(src: &str, start: usize, end: usize) -> Span {
        let start = start.min(src.len());
        let before = &src[..start];
        let line = before.matches('\n').count() + 1;
        let col = before.rfind('\n').map(|i| start - i).unwrap_or(start + 1);
        Span { start, end: end.max(start).min(src.len()), line, col }
    }

    pub fn join(self, other: Span) -> Span {
        Span { end: other.end.max(self.end), ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A located message. `code` names the error class (`syntax`, `arity`,
/// `kind`, `undeclared-label`, ...); `tag` carries a format-condition tag such
/// as `ntmuftheta.cond5` when the diagnostic comes from format checking.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub code: String,
    pub message: String,
    pub tag: Option<String>,
}

impl Diagnostic {
    pub fn error(code: &str, span: Span, msg: &str) -> Diagnostic {
        Diagnostic { severity: Severity::Error, span, code: code.into(), message: msg.into(), tag: None }
    }

    pub fn warning(code: &str, span: Span, msg: &str) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, span, code: code.into(), message: msg.into(), tag: None }
    }

    /// `file:line:col: error[code]: message`
    pub fn display(&self, file: &str) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!("{file}:{}:{}: {sev}[{}]: {}", self.span.line, self.span.col, self.code, self.message)
    }
}

/// A parsed specification file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpecFile {
    pub ptss: Ptss,
    pub strata: Vec<Stratification>,
    pub universe: Option<UniverseSpec>,
}

pub fn parse(text: &str) -> Result<SpecFile, Vec<Diagnostic>> {
    parser::parse_spec(text)
}
