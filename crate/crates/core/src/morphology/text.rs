//! Nested plain-text form of module trees.
//!
//! ```text
//! tree    := module
//! module  := KIND '(' DEGREES [ ';' FREQ ',' OFFSET ',' AMPLITUDE ] ')' [ '[' [ entry { ',' entry } ] ']' ]
//! entry   := SLOT ':' module
//! KIND    := 'Core' | 'Brick' | 'Joint'
//! DEGREES := '0' | '90'
//! ```
//!
//! Whitespace between tokens is ignored. Children are written in slot order
//! and the bracket list is omitted for leaves, e.g.
//! `Core(0)[0: Brick(90), 2: Joint(0; 1.5, 0, 0.5)[0: Brick(0)]]`.
//! The oscillator triple is only written for joints of a tree genotype;
//! plain bodies never carry it.

use std::fmt::Write as _;

use super::{AttachError, BodyGraph, ModuleKind, NodeId, Rotation};

#[derive(Debug, Clone, PartialEq)]
pub struct TextNode {
    pub kind: ModuleKind,
    pub rotation: Rotation,
    pub params: Option<[f64; 3]>,
    pub children: Vec<(u8, TextNode)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected end of input, expected {0}")]
    Eof(&'static str),
    #[error("at byte {pos}: expected {expected}")]
    Expected { pos: usize, expected: &'static str },
    #[error("at byte {pos}: unknown module kind `{found}`")]
    UnknownKind { pos: usize, found: String },
    #[error("at byte {pos}: rotation must be 0 or 90, got {found}")]
    BadRotation { pos: usize, found: String },
    #[error("at byte {pos}: bad number `{found}`")]
    BadNumber { pos: usize, found: String },
    #[error("trailing input at byte {0}")]
    Trailing(usize),
    #[error("root module must be a Core")]
    RootNotCore,
    #[error(transparent)]
    Attach(#[from] AttachError),
}

impl TextNode {
    pub fn write_to(&self, out: &mut String) {
        let _ = write!(out, "{}({}", self.kind.name(), self.rotation.degrees());
        if let Some([f, o, a]) = self.params {
            let _ = write!(out, "; {f}, {o}, {a}");
        }
        out.push(')');
        if !self.children.is_empty() {
            out.push('[');
            for (i, (slot, child)) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{slot}: ");
                child.write_to(out);
            }
            out.push(']');
        }
    }
}

impl std::fmt::Display for TextNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        self.write_to(&mut s);
        f.write_str(&s)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char, what: &'static str) -> Result<(), ParseError> {
        match self.peek() {
            Some(found) if found == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(_) => Err(ParseError::Expected { pos: self.pos, expected: what }),
            None => Err(ParseError::Eof(what)),
        }
    }

    fn token(&mut self, accept: impl Fn(char) -> bool) -> (usize, &'a str) {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !accept(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        (start, &self.src[start..self.pos])
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let (pos, tok) = self.token(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+'));
        if tok.is_empty() {
            return Err(ParseError::Expected { pos, expected: "number" });
        }
        tok.parse().map_err(|_| ParseError::BadNumber { pos, found: tok.to_string() })
    }

    fn module(&mut self) -> Result<TextNode, ParseError> {
        let (pos, word) = self.token(|c| c.is_ascii_alphabetic());
        let kind = match word {
            "Core" => ModuleKind::Core,
            "Brick" => ModuleKind::Brick,
            "Joint" => ModuleKind::Joint,
            "" if self.pos >= self.src.len() => return Err(ParseError::Eof("module kind")),
            other => return Err(ParseError::UnknownKind { pos, found: other.to_string() }),
        };
        self.expect('(', "'('")?;
        let (pos, deg) = self.token(|c| c.is_ascii_digit());
        let rotation = deg
            .parse()
            .ok()
            .and_then(Rotation::from_degrees)
            .ok_or_else(|| ParseError::BadRotation { pos, found: deg.to_string() })?;
        let mut params = None;
        if self.peek() == Some(';') {
            self.pos += 1;
            let f = self.number()?;
            self.expect(',', "','")?;
            let o = self.number()?;
            self.expect(',', "','")?;
            let a = self.number()?;
            params = Some([f, o, a]);
        }
        self.expect(')', "')'")?;
        let mut children = Vec::new();
        if self.peek() == Some('[') {
            self.pos += 1;
            if self.peek() == Some(']') {
                self.pos += 1;
            } else {
                loop {
                    let (pos, slot) = self.token(|c| c.is_ascii_digit());
                    let slot: u8 = slot.parse().map_err(|_| ParseError::Expected { pos, expected: "slot index" })?;
                    self.expect(':', "':'")?;
                    children.push((slot, self.module()?));
                    match self.peek() {
                        Some(',') => self.pos += 1,
                        Some(']') => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => return Err(ParseError::Expected { pos: self.pos, expected: "',' or ']'" }),
                        None => return Err(ParseError::Eof("']'")),
                    }
                }
            }
        }
        Ok(TextNode { kind, rotation, params, children })
    }
}

pub fn parse(src: &str) -> Result<TextNode, ParseError> {
    let mut p = Parser { src, pos: 0 };
    let node = p.module()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(ParseError::Trailing(p.pos));
    }
    Ok(node)
}

pub fn body_to_text(body: &BodyGraph) -> String {
    fn node(body: &BodyGraph, id: NodeId) -> TextNode {
        let m = body.module(id);
        TextNode {
            kind: m.kind,
            rotation: m.rotation,
            params: None,
            children: body.children(id).map(|(s, c)| (s, node(body, c))).collect(),
        }
    }
    let mut out = String::new();
    if !body.is_empty() {
        node(body, NodeId::ROOT).write_to(&mut out);
    }
    out
}

/// Parses a body. Oscillator triples, if present, are ignored. Slot range and
/// occupancy are enforced; cap and joint rules are left to `validate`.
pub fn body_from_text(src: &str) -> Result<BodyGraph, ParseError> {
    let root = parse(src)?;
    if root.kind != ModuleKind::Core {
        return Err(ParseError::RootNotCore);
    }
    let mut body = BodyGraph::core_only();
    // preorder keeps parents ahead of children
    let mut stack: Vec<(NodeId, &TextNode)> = vec![(NodeId::ROOT, &root)];
    while let Some((id, node)) = stack.pop() {
        let mut added = Vec::with_capacity(node.children.len());
        for (slot, child) in &node.children {
            let cid = body.attach(id, *slot, child.kind, child.rotation)?;
            added.push((cid, child));
        }
        stack.extend(added.into_iter().rev());
    }
    Ok(body)
}
