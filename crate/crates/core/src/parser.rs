//! Function definitions and call edges from solution source text.
//!
//! The accepted grammar is a small, line-oriented subset of Python:
//!
//! * a definition header is `def <identifier>(<comma-separated identifiers>):`,
//!   optionally followed by a trailing `#` comment;
//! * the body is every following line indented deeper than the header
//!   (blank and comment-only lines never end a body, and neither do lines
//!   continuing an open bracket);
//! * `#` starts a comment that runs to end of line;
//! * string literals are delimited by `'` or `"` and close on the same line.
//!
//! A call is an identifier followed by `(` outside strings and comments.
//! Keywords, definition headers and attribute-qualified calls (`obj.name(`)
//! are not calls. Nested definitions are flattened into their own
//! [`FunctionDef`]; calls inside a nested body belong to the nested function.

use std::collections::{BTreeSet, HashSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusEntry, IoSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

/// One function definition found in a source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    /// 1-based line of the header.
    pub line: usize,
    /// Byte range of the whole definition (header and body).
    pub span: Range<usize>,
    /// Byte range of the body, i.e. the lines after the header.
    pub body_span: Range<usize>,
    /// Verbatim body text (`source[body_span]`).
    pub body_text: String,
    /// Verbatim definition text (`source[span]`).
    pub code: String,
    /// Every called identifier in the body, first-occurrence order, no
    /// duplicates. Includes calls to names defined nowhere (builtins).
    pub calls: Vec<String>,
}

/// The parsed form of one corpus entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFragment {
    pub entry_id: String,
    pub functions: Vec<FunctionDef>,
    pub call_edges: Vec<(String, String)>,
    pub io_spec: IoSpec,
}

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

pub(crate) fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

pub(crate) fn is_identifier(word: &str) -> bool {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if c == '_' || c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c == '_' || c.is_ascii_alphanumeric())
}

#[derive(Debug)]
struct LineInfo {
    /// Byte offset of the first character of the line.
    start: usize,
    /// Byte offset one past the last character (excluding the newline).
    end: usize,
    indent: usize,
    /// Only whitespace and/or a comment.
    blank: bool,
    /// The line begins inside an open bracket from a previous line.
    continuation: bool,
}

#[derive(Debug)]
struct CallToken {
    offset: usize,
    name: String,
}

/// Single tokenizer pass: line table plus every call token outside strings
/// and comments.
fn scan(source: &str) -> Result<(Vec<LineInfo>, Vec<CallToken>), ParseError> {
    let bytes = source.as_bytes();
    let mut lines = Vec::new();
    let mut calls = Vec::new();
    let mut depth: usize = 0;
    let mut line_no = 0;
    let mut start = 0;

    while start < bytes.len() {
        line_no += 1;
        let end = source[start..].find('\n').map_or(bytes.len(), |i| start + i);
        let text = &source[start..end];
        let text = text.strip_suffix('\r').unwrap_or(text);
        let line_end = start + text.len();
        let continuation = depth > 0;
        let indent = text.len() - text.trim_start_matches([' ', '\t']).len();
        let trimmed = text.trim();
        let blank = trimmed.is_empty() || trimmed.starts_with('#');

        let mut i = 0;
        let tb = text.as_bytes();
        // Last significant token, to recognise `def name(` and `.name(`.
        let mut prev_word: Option<&str> = None;
        let mut prev_dot = false;
        while i < tb.len() {
            let c = tb[i];
            match c {
                b'#' => break,
                b'"' | b'\'' => {
                    let mut j = i + 1;
                    loop {
                        if j >= tb.len() {
                            return Err(ParseError::new(line_no, i + 1, "unterminated string literal"));
                        }
                        if tb[j] == b'\\' {
                            j += 2;
                            continue;
                        }
                        if tb[j] == c {
                            break;
                        }
                        j += 1;
                    }
                    i = j + 1;
                    prev_word = None;
                    prev_dot = false;
                }
                b'(' | b'[' | b'{' => {
                    depth += 1;
                    i += 1;
                    prev_word = None;
                    prev_dot = false;
                }
                b')' | b']' | b'}' => {
                    depth = depth.saturating_sub(1);
                    i += 1;
                    prev_word = None;
                    prev_dot = false;
                }
                b'.' => {
                    prev_dot = true;
                    prev_word = None;
                    i += 1;
                }
                c if c == b'_' || c.is_ascii_alphabetic() => {
                    let s = i;
                    while i < tb.len() && (tb[i] == b'_' || tb[i].is_ascii_alphanumeric()) {
                        i += 1;
                    }
                    let word = &text[s..i];
                    let mut k = i;
                    while k < tb.len() && (tb[k] == b' ' || tb[k] == b'\t') {
                        k += 1;
                    }
                    let followed_by_paren = k < tb.len() && tb[k] == b'(';
                    if followed_by_paren
                        && !prev_dot
                        && prev_word != Some("def")
                        && prev_word != Some("class")
                        && !is_keyword(word)
                    {
                        calls.push(CallToken {
                            offset: start + s,
                            name: word.to_owned(),
                        });
                    }
                    prev_word = Some(word);
                    prev_dot = false;
                }
                c if c.is_ascii_digit() => {
                    // Numeric literals, including forms like `1e5` or `0x1f`.
                    while i < tb.len() && (tb[i] == b'_' || tb[i].is_ascii_alphanumeric()) {
                        i += 1;
                    }
                    prev_word = None;
                    prev_dot = false;
                }
                b' ' | b'\t' => i += 1,
                _ => {
                    i += 1;
                    prev_word = None;
                    prev_dot = false;
                }
            }
        }

        lines.push(LineInfo {
            start,
            end: line_end,
            indent,
            blank,
            continuation,
        });
        if end >= bytes.len() {
            break;
        }
        start = end + 1;
    }
    Ok((lines, calls))
}

struct Header {
    name: String,
    params: Vec<String>,
}

/// Parses a line whose first token is `def`. `Ok(None)` when the line is not
/// a definition at all.
fn parse_header(text: &str, line_no: usize, indent: usize) -> Result<Option<Header>, ParseError> {
    let rest = &text[indent..];
    let Some(after_def) = rest.strip_prefix("def") else {
        return Ok(None);
    };
    if !after_def.starts_with([' ', '\t']) {
        return Ok(None);
    }
    let bad = |msg: &str| ParseError::new(line_no, indent + 1, format!("bad definition header: {msg}"));
    let after_def = after_def.trim_start();
    let open = after_def.find('(').ok_or_else(|| bad("missing '('"))?;
    let name = after_def[..open].trim_end();
    if !is_identifier(name) || is_keyword(name) {
        return Err(bad("invalid function name"));
    }
    let close = after_def.find(')').ok_or_else(|| bad("missing ')'"))?;
    if close < open {
        return Err(bad("unbalanced parentheses"));
    }
    let params_text = after_def[open + 1..close].trim();
    let mut params = Vec::new();
    if !params_text.is_empty() {
        for p in params_text.split(',') {
            let p = p.trim();
            if !is_identifier(p) || is_keyword(p) {
                return Err(bad("parameters must be plain identifiers"));
            }
            params.push(p.to_owned());
        }
    }
    let tail = after_def[close + 1..].trim_start();
    let Some(tail) = tail.strip_prefix(':') else {
        return Err(bad("missing ':'"));
    };
    let tail = tail.trim();
    if !(tail.is_empty() || tail.starts_with('#')) {
        return Err(bad("single-line bodies are not supported"));
    }
    Ok(Some(Header {
        name: name.to_owned(),
        params,
    }))
}

/// All function definitions in `source`, in source order of their headers.
pub fn extract_functions(source: &str) -> Result<Vec<FunctionDef>, ParseError> {
    let (lines, tokens) = scan(source)?;

    struct Raw {
        header: Header,
        line_idx: usize,
        last_body_line: usize,
    }

    let mut raws: Vec<Raw> = Vec::new();
    for (idx, info) in lines.iter().enumerate() {
        if info.continuation || info.blank {
            continue;
        }
        let text = &source[info.start..info.end];
        let Some(header) = parse_header(text, idx + 1, info.indent)? else {
            continue;
        };
        let mut last_body_line = None;
        for (j, next) in lines.iter().enumerate().skip(idx + 1) {
            if next.blank || next.continuation {
                if next.continuation {
                    last_body_line = Some(j);
                }
                continue;
            }
            if next.indent > info.indent {
                last_body_line = Some(j);
            } else {
                break;
            }
        }
        let Some(last_body_line) = last_body_line else {
            return Err(ParseError::new(
                idx + 1,
                info.indent + 1,
                format!("unterminated definition of `{}`: no indented body", header.name),
            ));
        };
        raws.push(Raw {
            header,
            line_idx: idx,
            last_body_line,
        });
    }

    let spans: Vec<Range<usize>> = raws
        .iter()
        .map(|r| lines[r.line_idx].start..lines[r.last_body_line].end)
        .collect();

    let mut defs = Vec::with_capacity(raws.len());
    for (i, raw) in raws.into_iter().enumerate() {
        let span = spans[i].clone();
        let body_start = (lines[raw.line_idx].end + 1).min(span.end);
        let body_span = body_start..span.end;
        // Spans of definitions nested directly or transitively in this one.
        let nested: Vec<&Range<usize>> = spans
            .iter()
            .enumerate()
            .filter(|(j, s)| *j != i && s.start >= body_span.start && s.end <= body_span.end)
            .map(|(_, s)| s)
            .collect();
        let mut seen = HashSet::new();
        let mut calls = Vec::new();
        for tok in &tokens {
            if tok.offset < body_span.start || tok.offset >= body_span.end {
                continue;
            }
            if nested.iter().any(|s| s.contains(&tok.offset)) {
                continue;
            }
            if seen.insert(tok.name.as_str()) {
                calls.push(tok.name.clone());
            }
        }
        defs.push(FunctionDef {
            name: raw.header.name,
            params: raw.header.params,
            line: raw.line_idx + 1,
            body_text: source[body_span.clone()].to_owned(),
            code: source[span.clone()].to_owned(),
            span,
            body_span,
            calls,
        });
    }
    Ok(defs)
}

/// `function.calls` restricted to `defined_names`, order preserved.
pub fn extract_calls(function: &FunctionDef, defined_names: &BTreeSet<String>) -> Vec<String> {
    function
        .calls
        .iter()
        .filter(|c| defined_names.contains(*c))
        .cloned()
        .collect()
}

/// Parses an entry and records the caller/callee pairs among its own
/// definitions.
pub fn build_trace_fragment(entry: &CorpusEntry) -> Result<TraceFragment, ParseError> {
    let functions = extract_functions(&entry.source_text)?;
    let defined: BTreeSet<String> = functions.iter().map(|f| f.name.clone()).collect();
    let mut call_edges = Vec::new();
    let mut seen = HashSet::new();
    for f in &functions {
        for callee in extract_calls(f, &defined) {
            if seen.insert((f.name.clone(), callee.clone())) {
                call_edges.push((f.name.clone(), callee));
            }
        }
    }
    Ok(TraceFragment {
        entry_id: entry.entry_id.clone(),
        functions,
        call_edges,
        io_spec: entry.io_spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(defs: &[FunctionDef]) -> Vec<&str> {
        defs.iter().map(|d| d.name.as_str()).collect()
    }

    #[test]
    fn two_defs_with_call() {
        let src = "def a():\n    return 1\n\ndef b():\n    return a()\n";
        let defs = extract_functions(src).unwrap();
        assert_eq!(names(&defs), ["a", "b"]);
        assert!(defs[0].calls.is_empty());
        assert_eq!(defs[1].calls, ["a"]);
        assert_eq!(defs[1].code, "def b():\n    return a()");
        assert_eq!(defs[1].body_text, "    return a()");
    }

    #[test]
    fn empty_source() {
        assert!(extract_functions("").unwrap().is_empty());
        assert!(extract_functions("\n\n# only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn dedup_calls_in_first_occurrence_order() {
        let src = "def helper(y):\n    return y\n\ndef f(y, z):\n    x = helper(y); helper(z)\n    other(x)\n";
        let defs = extract_functions(src).unwrap();
        assert_eq!(defs[1].calls, ["helper", "other"]);
        let defined: BTreeSet<String> = ["helper".to_owned()].into();
        assert_eq!(extract_calls(&defs[1], &defined), ["helper"]);
    }

    #[test]
    fn builtins_are_filtered_by_defined_names() {
        let src = "def f(xs):\n    return len(xs) + sum(xs)\n";
        let defs = extract_functions(src).unwrap();
        assert_eq!(defs[0].calls, ["len", "sum"]);
        assert!(extract_calls(&defs[0], &BTreeSet::new()).is_empty());
    }

    #[test]
    fn strings_comments_keywords_and_attributes_are_not_calls() {
        let src = concat!(
            "def f(x):\n",
            "    s = \"g(x)\" + 'h(x)'  # k(x)\n",
            "    if (x):\n",
            "        return not (x)\n",
            "    return obj.method(x) + real(x)\n",
        );
        let defs = extract_functions(src).unwrap();
        assert_eq!(defs[0].calls, ["real"]);
    }

    #[test]
    fn self_call_only_when_recursive() {
        let src = "def fact(n):\n    if n == 0:\n        return 1\n    return n * fact(n - 1)\n\ndef g():\n    return 0\n";
        let defs = extract_functions(src).unwrap();
        assert_eq!(defs[0].calls, ["fact"]);
        assert!(defs[1].calls.is_empty());
    }

    #[test]
    fn nested_defs_are_flattened() {
        let src = concat!(
            "def outer(x):\n",
            "    def inner(y):\n",
            "        return leaf(y)\n",
            "    return inner(x)\n",
            "\n",
            "def quiet(x):\n",
            "    def unused(y):\n",
            "        return y\n",
            "    return x\n",
        );
        let defs = extract_functions(src).unwrap();
        assert_eq!(names(&defs), ["outer", "inner", "quiet", "unused"]);
        assert_eq!(defs[0].calls, ["inner"]);
        assert_eq!(defs[1].calls, ["leaf"]);
        assert!(defs[2].calls.is_empty());
    }

    #[test]
    fn bracket_continuation_does_not_end_body() {
        let src = "def f(x):\n    return g(\nx,\n    1)\ndef g(a, b):\n    return a\n";
        let defs = extract_functions(src).unwrap();
        assert_eq!(names(&defs), ["f", "g"]);
        assert_eq!(defs[0].code, "def f(x):\n    return g(\nx,\n    1)");
        assert_eq!(defs[0].calls, ["g"]);
    }

    #[test]
    fn blank_and_comment_lines_inside_body() {
        let src = "def f():\n    a()\n\n# note\n    b()\n\n\nc()\n";
        let defs = extract_functions(src).unwrap();
        assert_eq!(defs[0].calls, ["a", "b"]);
        assert!(defs[0].code.ends_with("    b()"));
    }

    #[test]
    fn header_comment_and_params() {
        let src = "def f(a, b ,c):  # doc\n    pass\n";
        let defs = extract_functions(src).unwrap();
        assert_eq!(defs[0].params, ["a", "b", "c"]);
    }

    #[test]
    fn bad_headers() {
        for src in [
            "def (x):\n    pass\n",
            "def f(x)\n    pass\n",
            "def f(x=1):\n    pass\n",
            "def f(x: pass\n",
            "def f(x): return x\n",
        ] {
            let err = extract_functions(src).unwrap_err();
            assert_eq!(err.line, 1, "{src:?}");
            assert!(err.message.contains("bad definition header"), "{err}");
        }
    }

    #[test]
    fn unterminated_definition() {
        let err = extract_functions("x = 1\ndef f():\n\ny = 2\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 1));
        assert!(err.message.contains("unterminated definition"));
        assert!(extract_functions("def f():").is_err());
    }

    #[test]
    fn unterminated_string() {
        let err = extract_functions("def f():\n    return 'abc\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 12));
    }

    #[test]
    fn spans_are_exact_substrings() {
        let src = "import x\r\n\r\ndef f(a):\r\n    return g(a)\r\n";
        let defs = extract_functions(src).unwrap();
        assert_eq!(&src[defs[0].span.clone()], defs[0].code);
        assert_eq!(&src[defs[0].body_span.clone()], defs[0].body_text);
        assert_eq!(defs[0].calls, ["g"]);
    }

    #[test]
    fn fragment_chain() {
        let entry = CorpusEntry::for_test(
            "e",
            "def a():\n    return b()\n\ndef b():\n    return c()\n\ndef c():\n    return 1\n",
        );
        let frag = build_trace_fragment(&entry).unwrap();
        assert_eq!(frag.functions.len(), 3);
        assert_eq!(
            frag.call_edges,
            [("a".to_owned(), "b".to_owned()), ("b".to_owned(), "c".to_owned())]
        );

        let single = CorpusEntry::for_test("s", "def only():\n    return len([])\n");
        let frag = build_trace_fragment(&single).unwrap();
        assert_eq!(frag.functions.len(), 1);
        assert!(frag.call_edges.is_empty());
    }
}
