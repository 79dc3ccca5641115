//! Indirect encoding: a context-free L-system whose expanded sentence is read
//! by a cursor that mounts and walks modules.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::controller::{build_cpg_topology, CpgNetwork, DEFAULT_COUPLING_DISTANCE};
use crate::cppn::{query_weights, CppnError, CppnGenome, SubstrateCoords};
use crate::morphology::{
    embed, BodyGraph, BodyLimits, ModuleKind, NodeId, Rotation, SLOT_FRONT, SLOT_LEFT, SLOT_RIGHT,
};

use super::prune_unembedded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    CoreSym,
    BrickSym,
    VerticalJointSym,
    HorizontalJointSym,
    AddLeft,
    AddFront,
    AddRight,
    MoveBack,
    MoveRight,
    MoveFront,
    MoveLeft,
}

impl Symbol {
    pub const ALL: [Symbol; 11] = [
        Symbol::CoreSym,
        Symbol::BrickSym,
        Symbol::VerticalJointSym,
        Symbol::HorizontalJointSym,
        Symbol::AddLeft,
        Symbol::AddFront,
        Symbol::AddRight,
        Symbol::MoveBack,
        Symbol::MoveRight,
        Symbol::MoveFront,
        Symbol::MoveLeft,
    ];

    /// Symbols that can appear in randomly drawn rule bodies.
    pub const DRAWABLE: [Symbol; 10] = [
        Symbol::BrickSym,
        Symbol::VerticalJointSym,
        Symbol::HorizontalJointSym,
        Symbol::AddLeft,
        Symbol::AddFront,
        Symbol::AddRight,
        Symbol::MoveBack,
        Symbol::MoveRight,
        Symbol::MoveFront,
        Symbol::MoveLeft,
    ];

    pub const MODULES: [Symbol; 4] =
        [Symbol::CoreSym, Symbol::BrickSym, Symbol::VerticalJointSym, Symbol::HorizontalJointSym];

    pub fn name(self) -> &'static str {
        match self {
            Symbol::CoreSym => "CoreSym",
            Symbol::BrickSym => "BrickSym",
            Symbol::VerticalJointSym => "VerticalJointSym",
            Symbol::HorizontalJointSym => "HorizontalJointSym",
            Symbol::AddLeft => "add_left",
            Symbol::AddFront => "add_front",
            Symbol::AddRight => "add_right",
            Symbol::MoveBack => "move_back",
            Symbol::MoveRight => "move_right",
            Symbol::MoveFront => "move_front",
            Symbol::MoveLeft => "move_left",
        }
    }

    /// Index into the rule table for module symbols.
    pub fn module_index(self) -> Option<usize> {
        Symbol::MODULES.iter().position(|&s| s == self)
    }

    /// Module kind and rotation a module symbol stands for.
    pub fn module(self) -> Option<(ModuleKind, Rotation)> {
        match self {
            Symbol::CoreSym => Some((ModuleKind::Core, Rotation::Deg0)),
            Symbol::BrickSym => Some((ModuleKind::Brick, Rotation::Deg0)),
            Symbol::VerticalJointSym => Some((ModuleKind::Joint, Rotation::Deg90)),
            Symbol::HorizontalJointSym => Some((ModuleKind::Joint, Rotation::Deg0)),
            _ => None,
        }
    }

    fn mount_slot(self) -> Option<u8> {
        match self {
            Symbol::AddFront => Some(SLOT_FRONT),
            Symbol::AddLeft => Some(SLOT_LEFT),
            Symbol::AddRight => Some(SLOT_RIGHT),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarParseError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("line {0}: expected `<module symbol> -> <symbols>`")]
    BadLine(usize),
    #[error("rule for {0} given twice")]
    DuplicateRule(Symbol),
    #[error("no rule for {0}")]
    MissingRule(Symbol),
    #[error("the core rule must be non-empty and start with CoreSym")]
    CoreRule,
    #[error("rule for {0} is empty")]
    EmptyRule(Symbol),
}

impl FromStr for Symbol {
    type Err = GrammarParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Symbol::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| GrammarParseError::UnknownSymbol(s.into()))
    }
}

pub type Sentence = Vec<Symbol>;

/// Axiom is always `[CoreSym]`; one non-empty rule per module symbol, in
/// [`Symbol::MODULES`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub rules: [Vec<Symbol>; 4],
}

impl Grammar {
    pub const AXIOM: [Symbol; 1] = [Symbol::CoreSym];

    pub fn rule(&self, module: Symbol) -> &[Symbol] {
        &self.rules[module.module_index().expect("module symbol")]
    }

    pub fn is_well_formed(&self) -> bool {
        self.rules[0].first() == Some(&Symbol::CoreSym) && self.rules.iter().all(|r| !r.is_empty())
    }

    /// One line per rule: `CoreSym -> CoreSym add_front BrickSym`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, rule) in Symbol::MODULES.iter().zip(&self.rules) {
            out.push_str(m.name());
            out.push_str(" ->");
            for s in rule {
                out.push(' ');
                out.push_str(s.name());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GrammarParseError> {
        let mut rules: [Option<Vec<Symbol>>; 4] = Default::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, body) = line.split_once("->").ok_or(GrammarParseError::BadLine(i + 1))?;
            let head: Symbol = head.trim().parse()?;
            let idx = head.module_index().ok_or(GrammarParseError::BadLine(i + 1))?;
            if rules[idx].is_some() {
                return Err(GrammarParseError::DuplicateRule(head));
            }
            rules[idx] = Some(body.split_whitespace().map(str::parse).collect::<Result<_, _>>()?);
        }
        let mut out: [Vec<Symbol>; 4] = Default::default();
        for (k, r) in rules.into_iter().enumerate() {
            let m = Symbol::MODULES[k];
            let r = r.ok_or(GrammarParseError::MissingRule(m))?;
            if r.is_empty() {
                return Err(if k == 0 { GrammarParseError::CoreRule } else { GrammarParseError::EmptyRule(m) });
            }
            out[k] = r;
        }
        if out[0][0] != Symbol::CoreSym {
            return Err(GrammarParseError::CoreRule);
        }
        Ok(Grammar { rules: out })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LSystemLimits {
    pub body: BodyLimits,
    pub iterations: usize,
    pub max_sentence: usize,
    /// Upper bound on the length of randomly drawn rules.
    pub max_rule_len: usize,
    /// Mutation never grows a rule beyond this.
    pub max_mutated_rule_len: usize,
    pub coupling_distance: i32,
}

impl Default for LSystemLimits {
    fn default() -> Self {
        LSystemLimits {
            body: BodyLimits::default(),
            iterations: 3,
            max_sentence: 300,
            max_rule_len: 8,
            max_mutated_rule_len: 32,
            coupling_distance: DEFAULT_COUPLING_DISTANCE,
        }
    }
}

/// Parallel rewriting of the axiom, truncated to `max_len` symbols after
/// every iteration.
pub fn expand(g: &Grammar, iterations: usize, max_len: usize) -> Sentence {
    let mut s: Sentence = Grammar::AXIOM.to_vec();
    for _ in 0..iterations {
        let mut next = Vec::with_capacity(s.len() * 2);
        for &sym in &s {
            match sym.module_index() {
                Some(i) => next.extend_from_slice(&g.rules[i]),
                None => next.push(sym),
            }
            if next.len() >= max_len {
                break;
            }
        }
        next.truncate(max_len);
        s = next;
    }
    s
}

/// Reads the sentence with a cursor starting at the core.
///
/// A mounting command takes the next symbol with it: if that is a module
/// symbol it is attached to the cursor's commanded slot unless the slot is
/// taken, the cap is reached or a joint would sit on a joint. Either way both
/// symbols are consumed. Anything else after a mounting command is read on
/// its own. Moves go to the parent or to the child on the named slot, and do
/// nothing if there is none. The cursor stays put after a mount.
pub fn decode_sentence(s: &[Symbol], limits: &BodyLimits) -> BodyGraph {
    let mut body = BodyGraph::core_only();
    let mut cursor = NodeId::ROOT;
    let mut i = usize::from(s.first() == Some(&Symbol::CoreSym));
    while i < s.len() {
        let sym = s[i];
        i += 1;
        if let Some(slot) = sym.mount_slot() {
            let Some((kind, rotation)) = s.get(i).and_then(|n| n.module()) else { continue };
            i += 1;
            let host = body.kind(cursor);
            let blocked = kind == ModuleKind::Core
                || body.len() >= limits.max_modules
                || (limits.forbid_joint_on_joint && host == ModuleKind::Joint && kind == ModuleKind::Joint)
                || slot as usize >= host.arity()
                || body.child(cursor, slot).is_some();
            if !blocked {
                body.attach(cursor, slot, kind, rotation).expect("checked slot");
            }
            continue;
        }
        let target = match sym {
            Symbol::MoveBack => body.parent(cursor),
            Symbol::MoveFront => body.child(cursor, SLOT_FRONT),
            Symbol::MoveLeft => body.child(cursor, SLOT_LEFT),
            Symbol::MoveRight => body.child(cursor, SLOT_RIGHT),
            _ => None,
        };
        if let Some(t) = target {
            cursor = t;
        }
    }
    body
}

const MOUNTS: [Symbol; 3] = [Symbol::AddLeft, Symbol::AddFront, Symbol::AddRight];
const MOVES: [Symbol; 4] = [Symbol::MoveBack, Symbol::MoveRight, Symbol::MoveFront, Symbol::MoveLeft];
const PLACEABLE: [Symbol; 3] = [Symbol::BrickSym, Symbol::VerticalJointSym, Symbol::HorizontalJointSym];

/// Exactly `len` symbols built from units: a mounting command with its
/// module symbol (two thirds of the time) or a single move. A unit that does
/// not fit is replaced by one drawable symbol.
fn random_rule<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Symbol> {
    let pick = |rng: &mut R, set: &[Symbol]| *set.choose(rng).expect("non-empty");
    let mut rule = Vec::with_capacity(len);
    while rule.len() < len {
        if len - rule.len() == 1 {
            rule.push(pick(rng, &Symbol::DRAWABLE));
        } else if rng.random_bool(2.0 / 3.0) {
            rule.push(pick(rng, &MOUNTS));
            rule.push(pick(rng, &PLACEABLE));
        } else {
            rule.push(pick(rng, &MOVES));
        }
    }
    rule
}

pub fn random_grammar<R: Rng + ?Sized>(rng: &mut R, limits: &LSystemLimits) -> Grammar {
    let max = limits.max_rule_len.max(1);
    let mut rules: [Vec<Symbol>; 4] = Default::default();
    for (k, rule) in rules.iter_mut().enumerate() {
        let len = rng.random_range(1..=max);
        *rule = if k == 0 {
            let mut r = vec![Symbol::CoreSym];
            r.extend(random_rule(len - 1, rng));
            r
        } else {
            random_rule(len, rng)
        };
    }
    Grammar { rules }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrammarOp {
    Insert,
    Delete,
    Replace,
}

/// The operator that fired, if any, and whether the grammar changed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GrammarMutationReport {
    pub op: Option<GrammarOp>,
    pub changed: bool,
}

/// With probability `rate`, applies one uniformly chosen operator to one
/// uniformly chosen rule. The leading `CoreSym` of the core rule and the last
/// symbol of any rule are never removed.
pub fn mutate_grammar<R: Rng + ?Sized>(
    g: &Grammar,
    rng: &mut R,
    rate: f64,
    limits: &LSystemLimits,
) -> (Grammar, GrammarMutationReport) {
    let mut child = g.clone();
    let mut report = GrammarMutationReport::default();
    if rate <= 0.0 || !rng.random_bool(rate.min(1.0)) {
        return (child, report);
    }
    let op = *[GrammarOp::Insert, GrammarOp::Delete, GrammarOp::Replace].choose(rng).expect("non-empty");
    report.op = Some(op);
    let k = rng.random_range(0..4);
    let first = usize::from(k == 0);
    let rule = &mut child.rules[k];
    match op {
        GrammarOp::Insert => {
            if rule.len() < limits.max_mutated_rule_len {
                let at = rng.random_range(first..=rule.len());
                rule.insert(at, *Symbol::DRAWABLE.choose(rng).expect("non-empty"));
            }
        }
        GrammarOp::Delete => {
            if rule.len() > 1 && rule.len() > first {
                let at = rng.random_range(first..rule.len());
                rule.remove(at);
            }
        }
        GrammarOp::Replace => {
            if rule.len() > first {
                let at = rng.random_range(first..rule.len());
                rule[at] = *Symbol::DRAWABLE.choose(rng).expect("non-empty");
            }
        }
    }
    report.changed = child != *g;
    (child, report)
}

/// Each rule from either parent with equal odds.
pub fn crossover_grammar<R: Rng + ?Sized>(a: &Grammar, b: &Grammar, rng: &mut R) -> Grammar {
    let mut child = a.clone();
    for (c, r) in child.rules.iter_mut().zip(&b.rules) {
        if rng.random_bool(0.5) {
            c.clone_from(r);
        }
    }
    child
}

/// Expands and decodes the grammar, drops modules that could not be placed,
/// then wires the CPG and paints its weights with the CPPN.
pub fn decode_lsystem(
    g: &Grammar,
    cppn: &CppnGenome,
    limits: &LSystemLimits,
) -> Result<(BodyGraph, CpgNetwork), CppnError> {
    let sentence = expand(g, limits.iterations, limits.max_sentence);
    let raw = decode_sentence(&sentence, &limits.body);
    let (body, _) = prune_unembedded(&raw);
    let e = embed(&body);
    let mut net = build_cpg_topology(&body, &e, limits.coupling_distance);
    let coords = SubstrateCoords::from_network(&net, &e);
    query_weights(cppn, &mut net, &coords)?;
    Ok((body, net))
}
