//! S-expression reader with byte-offset and line/column spans.
//!
//! The reader is iterative (no recursion), so arbitrarily nested input can
//! not overflow the stack, and it never panics: malformed input comes back
//! as a diagnostic.

use super::{Diagnostic, ErrorKind, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn merge(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: self.line.min(other.line),
            col: if other.line < self.line {
                other.col
            } else {
                self.col
            },
        }
    }
}

#[derive(Debug, Clone)]
pub enum Sexp {
    Atom { text: String, span: Span },
    List { items: Vec<Sexp>, span: Span },
}

// The derived drop would recurse once per nesting level; pathological
// inputs nest deeply enough to overflow the stack, so drain iteratively.
impl Drop for Sexp {
    fn drop(&mut self) {
        if let Sexp::List { items, .. } = self {
            let mut stack: Vec<Sexp> = std::mem::take(items);
            while let Some(mut node) = stack.pop() {
                if let Sexp::List { items, .. } = &mut node {
                    stack.append(items);
                }
            }
        }
    }
}

impl Sexp {
    pub fn span(&self) -> Span {
        match self {
            Sexp::Atom { span, .. } | Sexp::List { span, .. } => *span,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }
}

fn error(span: Span, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        severity: Severity::Error,
        kind: ErrorKind::Syntax,
        span,
        message: message.into(),
    }
}

/// Reads every top-level form of `input`. Comments run from `;` to the end
/// of the line.
pub fn read_all(input: &str) -> Result<Vec<Sexp>, Diagnostic> {
    let mut top = Vec::new();
    // Stack of open lists: (children so far, opening-paren span).
    let mut stack: Vec<(Vec<Sexp>, Span)> = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = input.char_indices().peekable();
    while let Some((offset, ch)) = chars.next() {
        let span_here = Span {
            start: offset,
            end: offset + ch.len_utf8(),
            line,
            col,
        };
        match ch {
            '\n' => {
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            ';' => {
                for (_, c) in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        col = 0; // incremented below
                        break;
                    }
                }
            }
            '(' => stack.push((Vec::new(), span_here)),
            ')' => match stack.pop() {
                Some((items, open)) => {
                    let sexp = Sexp::List {
                        items,
                        span: open.merge(span_here),
                    };
                    match stack.last_mut() {
                        Some((parent, _)) => parent.push(sexp),
                        None => top.push(sexp),
                    }
                }
                None => return Err(error(span_here, "unmatched `)`")),
            },
            _ => {
                let start = offset;
                let start_col = col;
                let mut end = offset + ch.len_utf8();
                while let Some(&(o, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    end = o + c.len_utf8();
                    chars.next();
                    col += 1;
                }
                let span = Span {
                    start,
                    end,
                    line,
                    col: start_col,
                };
                let sexp = Sexp::Atom {
                    text: input[start..end].to_string(),
                    span,
                };
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(sexp),
                    None => top.push(sexp),
                }
            }
        }
        col += 1;
    }
    if let Some((_, open)) = stack.pop() {
        return Err(error(open, "unclosed `(`"));
    }
    Ok(top)
}
