//! Plain-text DAG language.
//!
//! ```text
//! # passive voice and missing associations
//! passive [treatment, binary]
//! asc_missing [outcome, count, range:0..12]
//! skill [group]
//! passive -> asc_missing; skill -> asc_missing
//! ```
//!
//! Statements are separated by `;` or newlines and `#` starts a comment.
//! Node tags: `treatment`, `outcome`, `group`, `continuous`, `count`,
//! `binary`, `ordinal:k`, `range:lo..hi` and a quoted annotation. Edges may
//! be chained (`a -> b -> c`); a single edge may carry a quoted annotation
//! in brackets.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{HypothesisDag, Role, VariableDecl, VariableKind};
use crate::error::{Error, Result};

pub(crate) fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.' || (!c.is_ascii() && !c.is_whitespace())
}

pub(crate) fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(is_name_char)
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        })
    }

    /// Skips spaces, tabs and comments, but not newlines.
    fn skip_inline_space(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c != '\n' && c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn name(&mut self) -> Result<String> {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if is_name_char(c) {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if out.is_empty() {
            return match self.peek() {
                Some(c) => self.error(format!("expected a node name, found '{c}'")),
                None => self.error("expected a node name, found end of input"),
            };
        }
        Ok(out)
    }

    fn quoted(&mut self) -> Result<String> {
        debug_assert_eq!(self.peek(), Some('"'));
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some(c) => out.push(c),
                    None => return self.error("unterminated string"),
                },
                Some(c) => out.push(c),
                None => return self.error("unterminated string"),
            }
        }
    }

    /// Reads a bare tag word up to `,` or `]`.
    fn tag_word(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c == ',' || c == ']' || c == '\n' || c == '#' {
                break;
            }
            out.push(c);
            self.bump();
        }
        out.trim().to_string()
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => self.error(format!("expected '{want}', found '{c}'")),
            None => self.error(format!("expected '{want}', found end of input")),
        }
    }
}

enum Tag {
    Role(Role),
    Kind(VariableKind),
    Range(f64, f64),
    Note(String),
}

fn parse_tag(cur: &mut Cursor<'_>) -> Result<Tag> {
    cur.skip_inline_space();
    if cur.peek() == Some('"') {
        return cur.quoted().map(Tag::Note);
    }
    let (line, column) = (cur.line, cur.column);
    let word = cur.tag_word();
    let fail = |message: String| Error::Syntax {
        line,
        column,
        message,
    };
    let tag = match word.as_str() {
        "treatment" => Tag::Role(Role::Treatment),
        "outcome" => Tag::Role(Role::Outcome),
        "group" => Tag::Role(Role::Group),
        "continuous" => Tag::Kind(VariableKind::Continuous),
        "count" => Tag::Kind(VariableKind::Count),
        "binary" => Tag::Kind(VariableKind::Binary),
        _ => {
            if let Some(levels) = word.strip_prefix("ordinal:") {
                let levels = levels
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| fail(format!("invalid ordinal level count in '{word}'")))?;
                Tag::Kind(VariableKind::Ordinal { levels })
            } else if let Some(range) = word.strip_prefix("range:") {
                let (lo, hi) = range
                    .split_once("..")
                    .ok_or_else(|| fail(format!("expected range:lo..hi, found '{word}'")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| fail(format!("invalid number '{s}' in range")))
                };
                Tag::Range(parse(lo)?, parse(hi)?)
            } else if word.is_empty() {
                return Err(fail("empty tag".into()));
            } else {
                return Err(fail(format!("unknown tag '{word}'")));
            }
        }
    };
    Ok(tag)
}

fn parse_tags(cur: &mut Cursor<'_>) -> Result<Vec<Tag>> {
    cur.expect('[')?;
    let mut tags = vec![parse_tag(cur)?];
    loop {
        cur.skip_inline_space();
        match cur.peek() {
            Some(',') => {
                cur.bump();
                tags.push(parse_tag(cur)?);
            }
            Some(']') => {
                cur.bump();
                return Ok(tags);
            }
            Some(c) => return cur.error(format!("expected ',' or ']', found '{c}'")),
            None => return cur.error("unterminated tag list"),
        }
    }
}

pub(crate) fn parse_dag(id: String, text: &str) -> Result<HypothesisDag> {
    let mut cur = Cursor::new(text);
    let mut nodes: Vec<VariableDecl> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut annotations = BTreeMap::new();

    loop {
        cur.skip_inline_space();
        match cur.peek() {
            None => break,
            Some(';') | Some('\n') => {
                cur.bump();
                continue;
            }
            _ => {}
        }
        let (line, column) = (cur.line, cur.column);
        let first = cur.name()?;
        cur.skip_inline_space();

        if cur.peek() == Some('-') {
            let mut chain = vec![first];
            while cur.peek() == Some('-') {
                cur.bump();
                cur.expect('>')?;
                cur.skip_inline_space();
                chain.push(cur.name()?);
                cur.skip_inline_space();
            }
            let mut note = None;
            if cur.peek() == Some('[') {
                let tags = parse_tags(&mut cur)?;
                if chain.len() != 2 {
                    return cur.error("annotations are only allowed on single edges");
                }
                for tag in tags {
                    match tag {
                        Tag::Note(text) => note = Some(text),
                        _ => return cur.error("edges accept only a quoted annotation"),
                    }
                }
            }
            for pair in chain.windows(2) {
                edges.push((pair[0].clone(), pair[1].clone()));
            }
            if let Some(text) = note {
                annotations.insert(format!("{}->{}", chain[0], chain[1]), text);
            }
        } else {
            let mut decl = VariableDecl::new(first, Role::Covariate);
            let (mut role_set, mut kind_set) = (false, false);
            if cur.peek() == Some('[') {
                for tag in parse_tags(&mut cur)? {
                    match tag {
                        Tag::Role(role) => {
                            if role_set {
                                return Err(Error::Syntax {
                                    line,
                                    column,
                                    message: format!("node '{}' has more than one role", decl.name),
                                });
                            }
                            role_set = true;
                            decl.role = role;
                        }
                        Tag::Kind(kind) => {
                            if kind_set {
                                return Err(Error::Syntax {
                                    line,
                                    column,
                                    message: format!("node '{}' has more than one kind", decl.name),
                                });
                            }
                            kind_set = true;
                            decl.kind = kind;
                        }
                        Tag::Range(lo, hi) => decl.bounds = Some((lo, hi)),
                        Tag::Note(text) => {
                            annotations.insert(decl.name.clone(), text);
                        }
                    }
                }
            }
            if nodes.iter().any(|n| n.name == decl.name) {
                return Err(Error::Syntax {
                    line,
                    column,
                    message: format!("node '{}' declared twice", decl.name),
                });
            }
            nodes.push(decl);
        }

        cur.skip_inline_space();
        match cur.peek() {
            None | Some(';') | Some('\n') => {}
            Some(c) => return cur.error(format!("expected ';' or newline, found '{c}'")),
        }
    }

    for (from, to) in &edges {
        for end in [from, to] {
            if !nodes.iter().any(|n| &n.name == end) {
                return Err(Error::InvalidDag(format!(
                    "edge {from} -> {to} references undeclared node '{end}'"
                )));
            }
        }
    }
    HypothesisDag::new(id, nodes, edges, annotations)
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn serialize_dag(dag: &HypothesisDag) -> String {
    let mut out = String::new();
    for node in dag.nodes() {
        let mut tags = Vec::new();
        match node.role {
            Role::Treatment => tags.push("treatment".to_string()),
            Role::Outcome => tags.push("outcome".to_string()),
            Role::Group => tags.push("group".to_string()),
            Role::Covariate => {}
        }
        match node.kind {
            VariableKind::Continuous => {}
            VariableKind::Count => tags.push("count".into()),
            VariableKind::Binary => tags.push("binary".into()),
            VariableKind::Ordinal { levels } => tags.push(format!("ordinal:{levels}")),
        }
        if let Some((lo, hi)) = node.bounds {
            tags.push(format!("range:{lo:?}..{hi:?}"));
        }
        if let Some(note) = dag.annotations().get(&node.name) {
            tags.push(quote(note));
        }
        out.push_str(&node.name);
        if !tags.is_empty() {
            let _ = write!(out, " [{}]", tags.join(", "));
        }
        out.push('\n');
    }
    for (from, to) in dag.edges() {
        let _ = write!(out, "{from} -> {to}");
        if let Some(note) = dag.annotations().get(&format!("{from}->{to}")) {
            let _ = write!(out, " [{}]", quote(note));
        }
        out.push('\n');
    }
    out
}
