//! Direct encoding: the genotype is the module tree, with oscillator
//! parameters stored on every joint.

use std::collections::VecDeque;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::controller::{OscillatorParams, OscillatorRanges, SineOscillator, SineOscillatorBrain};
use crate::morphology::text::{parse, ParseError, TextNode};
use crate::morphology::{BodyGraph, BodyLimits, ModuleKind, NodeId, Rotation};

const RESAMPLE_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub kind: ModuleKind,
    pub rotation: Rotation,
    /// Present exactly on joints.
    pub params: Option<OscillatorParams>,
    /// One entry per slot of `kind`.
    pub children: Vec<Option<TreeNode>>,
}

/// Slot indices from the root down to a node.
pub type Path = Vec<u8>;

impl TreeNode {
    pub fn new(kind: ModuleKind, rotation: Rotation, params: Option<OscillatorParams>) -> Self {
        TreeNode { kind, rotation, params, children: vec![None; kind.arity()] }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().flatten().map(TreeNode::size).sum::<usize>()
    }

    fn collect_paths(&self, prefix: &mut Path, out: &mut Vec<Path>) {
        out.push(prefix.clone());
        for (slot, child) in self.children.iter().enumerate() {
            if let Some(c) = child {
                prefix.push(slot as u8);
                c.collect_paths(prefix, out);
                prefix.pop();
            }
        }
    }

    /// Every node's path in preorder; the root's path is empty.
    pub fn paths(&self) -> Vec<Path> {
        let mut out = Vec::new();
        self.collect_paths(&mut Vec::new(), &mut out);
        out
    }

    pub fn get(&self, path: &[u8]) -> Option<&TreeNode> {
        path.iter().try_fold(self, |n, &s| n.children.get(s as usize)?.as_ref())
    }

    pub fn get_mut(&mut self, path: &[u8]) -> Option<&mut TreeNode> {
        path.iter().try_fold(self, |n, &s| n.children.get_mut(s as usize)?.as_mut())
    }

    /// Detaches the subtree at a non-empty path.
    pub fn take(&mut self, path: &[u8]) -> Option<TreeNode> {
        let (&last, parent) = path.split_last()?;
        self.get_mut(parent)?.children.get_mut(last as usize)?.take()
    }

    /// `(parent path, slot)` for every empty slot.
    pub fn open_slots(&self) -> Vec<(Path, u8)> {
        let mut out = Vec::new();
        for p in self.paths() {
            let node = self.get(&p).expect("listed path");
            for (slot, child) in node.children.iter().enumerate() {
                if child.is_none() {
                    out.push((p.clone(), slot as u8));
                }
            }
        }
        out
    }

    /// Keeps the first `keep` nodes in breadth-first (slot) order.
    pub fn truncate_breadth_first(&mut self, keep: usize) {
        let mut order: Vec<Path> = Vec::new();
        let mut queue = VecDeque::from([Vec::new()]);
        while let Some(p) = queue.pop_front() {
            let node = self.get(&p).expect("queued path");
            for (slot, child) in node.children.iter().enumerate() {
                if child.is_some() {
                    let mut cp = p.clone();
                    cp.push(slot as u8);
                    queue.push_back(cp);
                }
            }
            order.push(p);
        }
        // dropping deepest-first keeps earlier paths valid
        for p in order.iter().skip(keep.max(1)).rev() {
            self.take(p);
        }
    }

    /// Paths of all joints in preorder.
    pub fn joint_paths(&self) -> Vec<Path> {
        self.paths().into_iter().filter(|p| self.get(p).is_some_and(|n| n.params.is_some())).collect()
    }

    fn to_text_node(&self) -> TextNode {
        TextNode {
            kind: self.kind,
            rotation: self.rotation,
            params: self.params.map(|p| [p.frequency, p.offset, p.amplitude]),
            children: self
                .children
                .iter()
                .enumerate()
                .filter_map(|(s, c)| c.as_ref().map(|c| (s as u8, c.to_text_node())))
                .collect(),
        }
    }

    fn from_text_node(t: &TextNode) -> Result<Self, TreeTextError> {
        let params = match (t.kind, t.params) {
            (ModuleKind::Joint, Some([frequency, offset, amplitude])) => {
                Some(OscillatorParams { frequency, offset, amplitude })
            }
            (ModuleKind::Joint, None) => return Err(TreeTextError::MissingParams),
            (_, Some(_)) => return Err(TreeTextError::UnexpectedParams),
            (_, None) => None,
        };
        let mut node = TreeNode::new(t.kind, t.rotation, params);
        for (slot, child) in &t.children {
            let entry =
                node.children.get_mut(*slot as usize).ok_or(TreeTextError::Slot { slot: *slot, kind: t.kind })?;
            if entry.is_some() {
                return Err(TreeTextError::Slot { slot: *slot, kind: t.kind });
            }
            if child.kind == ModuleKind::Core {
                return Err(TreeTextError::NestedCore);
            }
            *entry = Some(TreeNode::from_text_node(child)?);
        }
        Ok(node)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeTextError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("joint without oscillator parameters")]
    MissingParams,
    #[error("only joints carry oscillator parameters")]
    UnexpectedParams,
    #[error("bad or repeated slot {slot} on {kind:?}")]
    Slot { slot: u8, kind: ModuleKind },
    #[error("core must be the root and appear once")]
    NestedCore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeGenotype {
    pub root: TreeNode,
}

impl TreeGenotype {
    pub fn core_only() -> Self {
        TreeGenotype { root: TreeNode::new(ModuleKind::Core, Rotation::Deg0, None) }
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    /// Nested body text with `Joint(rot; frequency, offset, amplitude)`.
    pub fn to_text(&self) -> String {
        self.root.to_text_node().to_string()
    }

    pub fn from_text(src: &str) -> Result<Self, TreeTextError> {
        let t = parse(src)?;
        if t.kind != ModuleKind::Core {
            return Err(TreeTextError::NestedCore);
        }
        Ok(TreeGenotype { root: TreeNode::from_text_node(&t)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeLimits {
    pub body: BodyLimits,
    /// Upper bound of the uniform size drawn for a random genotype.
    pub init_max_modules: usize,
    pub max_init_depth: usize,
    pub ranges: OscillatorRanges,
}

impl Default for TreeLimits {
    fn default() -> Self {
        TreeLimits {
            body: BodyLimits::default(),
            init_max_modules: 15,
            max_init_depth: 6,
            ranges: OscillatorRanges::default(),
        }
    }
}

/// Per-operator firing probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeRates {
    pub add: f64,
    pub delete: f64,
    pub duplicate: f64,
    pub swap: f64,
    /// Per joint.
    pub params: f64,
    /// Gaussian step as a fraction of each parameter's range.
    pub param_sigma: f64,
}

impl TreeRates {
    /// Four body operators at a common rate so that at least one fires with
    /// probability `aggregate`.
    pub fn with_aggregate(aggregate: f64) -> Self {
        let r = 1.0 - (1.0 - aggregate.clamp(0.0, 1.0)).powf(0.25);
        TreeRates { add: r, delete: r, duplicate: r, swap: r, params: 0.2, param_sigma: 0.1 }
    }

    pub fn none() -> Self {
        TreeRates { add: 0.0, delete: 0.0, duplicate: 0.0, swap: 0.0, params: 0.0, param_sigma: 0.0 }
    }
}

impl Default for TreeRates {
    fn default() -> Self {
        Self::with_aggregate(0.59)
    }
}

/// Which operators fired, and whether the genotype actually changed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeMutationReport {
    pub add: bool,
    pub delete: bool,
    pub duplicate: bool,
    pub swap: bool,
    pub params: usize,
    pub changed: bool,
}

impl TreeMutationReport {
    pub fn body_mutation(&self) -> bool {
        self.add || self.delete || self.duplicate || self.swap
    }
}

fn random_params<R: Rng + ?Sized>(ranges: &OscillatorRanges, rng: &mut R) -> OscillatorParams {
    OscillatorParams {
        frequency: rng.random_range(ranges.frequency.0..=ranges.frequency.1),
        offset: rng.random_range(ranges.offset.0..=ranges.offset.1),
        amplitude: rng.random_range(ranges.amplitude.0..=ranges.amplitude.1),
    }
}

fn allowed_kinds(parent: ModuleKind, limits: &BodyLimits) -> &'static [ModuleKind] {
    if parent == ModuleKind::Joint && limits.forbid_joint_on_joint {
        &[ModuleKind::Brick]
    } else {
        &[ModuleKind::Brick, ModuleKind::Joint]
    }
}

fn random_module<R: Rng + ?Sized>(parent: ModuleKind, limits: &TreeLimits, rng: &mut R) -> TreeNode {
    let kind = *allowed_kinds(parent, &limits.body).choose(rng).expect("non-empty");
    let rotation = if rng.random_bool(0.5) { Rotation::Deg90 } else { Rotation::Deg0 };
    let params = (kind == ModuleKind::Joint).then(|| random_params(&limits.ranges, rng));
    TreeNode::new(kind, rotation, params)
}

fn fits_under(parent: ModuleKind, child: ModuleKind, limits: &BodyLimits) -> bool {
    !(limits.forbid_joint_on_joint && parent == ModuleKind::Joint && child == ModuleKind::Joint)
}

pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, limits: &TreeLimits) -> TreeGenotype {
    let mut g = TreeGenotype::core_only();
    let upper = limits.init_max_modules.min(limits.body.max_modules).max(1);
    let target = rng.random_range(1..=upper);
    while g.size() < target {
        let slots: Vec<(Path, u8)> =
            g.root.open_slots().into_iter().filter(|(p, _)| p.len() < limits.max_init_depth).collect();
        let Some((path, slot)) = slots.choose(rng).cloned() else { break };
        let parent = g.root.get_mut(&path).expect("open slot parent");
        parent.children[slot as usize] = Some(random_module(parent.kind, limits, rng));
    }
    g
}

fn is_prefix(a: &[u8], b: &[u8]) -> bool {
    a.len() <= b.len() && b[..a.len()] == *a
}

fn parent_kind(root: &TreeNode, path: &[u8]) -> ModuleKind {
    root.get(&path[..path.len() - 1]).expect("non-root path has a parent").kind
}

pub fn mutate_tree<R: Rng + ?Sized>(
    g: &TreeGenotype,
    rng: &mut R,
    rates: &TreeRates,
    limits: &TreeLimits,
) -> (TreeGenotype, TreeMutationReport) {
    let mut child = g.clone();
    let mut report = TreeMutationReport::default();
    let cap = limits.body.max_modules;
    let fire = |rng: &mut R, p: f64| p > 0.0 && rng.random_bool(p.min(1.0));

    if fire(rng, rates.add) {
        report.add = true;
        if child.size() < cap {
            let slots = child.root.open_slots();
            if let Some((path, slot)) = slots.choose(rng).cloned() {
                let parent = child.root.get_mut(&path).expect("open slot parent");
                parent.children[slot as usize] = Some(random_module(parent.kind, limits, rng));
            }
        }
    }

    if fire(rng, rates.delete) {
        report.delete = true;
        let paths: Vec<Path> = child.root.paths().into_iter().skip(1).collect();
        if let Some(p) = paths.choose(rng) {
            child.root.take(p);
        }
    }

    if fire(rng, rates.duplicate) {
        report.duplicate = true;
        let budget = cap.saturating_sub(child.size());
        let paths: Vec<Path> = child.root.paths().into_iter().skip(1).collect();
        if budget > 0 && !paths.is_empty() {
            let slots = child.root.open_slots();
            for _ in 0..RESAMPLE_ATTEMPTS {
                let (Some(src), Some((dst, slot))) = (paths.choose(rng), slots.choose(rng)) else { break };
                let mut copy = child.root.get(src).expect("listed").clone();
                let host = child.root.get_mut(dst).expect("listed");
                if !fits_under(host.kind, copy.kind, &limits.body) {
                    continue;
                }
                copy.truncate_breadth_first(budget);
                host.children[*slot as usize] = Some(copy);
                break;
            }
        }
    }

    if fire(rng, rates.swap) {
        report.swap = true;
        let paths: Vec<Path> = child.root.paths().into_iter().skip(1).collect();
        if paths.len() >= 2 {
            for _ in 0..RESAMPLE_ATTEMPTS {
                let a = paths.choose(rng).expect("non-empty").clone();
                let b = paths.choose(rng).expect("non-empty").clone();
                if is_prefix(&a, &b) || is_prefix(&b, &a) {
                    continue;
                }
                let (ka, kb) = (child.root.get(&a).expect("listed").kind, child.root.get(&b).expect("listed").kind);
                if !fits_under(parent_kind(&child.root, &b), ka, &limits.body)
                    || !fits_under(parent_kind(&child.root, &a), kb, &limits.body)
                {
                    continue;
                }
                let sa = child.root.take(&a).expect("listed");
                let sb = child.root.take(&b).expect("listed");
                let (pa, sla) = a.split_last().map(|(s, p)| (p.to_vec(), *s)).expect("non-root");
                let (pb, slb) = b.split_last().map(|(s, p)| (p.to_vec(), *s)).expect("non-root");
                child.root.get_mut(&pa).expect("parent kept").children[sla as usize] = Some(sb);
                child.root.get_mut(&pb).expect("parent kept").children[slb as usize] = Some(sa);
                break;
            }
        }
    }

    if rates.params > 0.0 && rates.param_sigma > 0.0 {
        let r = &limits.ranges;
        for path in child.root.joint_paths() {
            if !rng.random_bool(rates.params.min(1.0)) {
                continue;
            }
            let p = child.root.get_mut(&path).and_then(|n| n.params.as_mut()).expect("joint path");
            let step = |rng: &mut R, v: f64, (lo, hi): (f64, f64)| {
                let n = Normal::new(0.0, rates.param_sigma * (hi - lo)).expect("positive sigma");
                (v + n.sample(rng)).clamp(lo, hi)
            };
            p.frequency = step(rng, p.frequency, r.frequency);
            p.offset = step(rng, p.offset, r.offset);
            p.amplitude = step(rng, p.amplitude, r.amplitude);
            report.params += 1;
        }
    }

    if child.size() > cap {
        child.root.truncate_breadth_first(cap);
    }
    report.changed = child != *g;
    (child, report)
}

/// Grafts a random non-root subtree of `b` over a random non-root subtree of
/// `a`, at the same slot. The graft is cut breadth-first to respect the cap.
pub fn crossover_tree<R: Rng + ?Sized>(
    a: &TreeGenotype,
    b: &TreeGenotype,
    rng: &mut R,
    limits: &TreeLimits,
) -> TreeGenotype {
    let mut child = a.clone();
    let targets: Vec<Path> = a.root.paths().into_iter().skip(1).collect();
    let donors: Vec<Path> = b.root.paths().into_iter().skip(1).collect();
    if targets.is_empty() || donors.is_empty() {
        return child;
    }
    for _ in 0..RESAMPLE_ATTEMPTS {
        let target = targets.choose(rng).expect("non-empty");
        let donor = donors.choose(rng).expect("non-empty");
        let mut graft = b.root.get(donor).expect("listed").clone();
        if !fits_under(parent_kind(&a.root, target), graft.kind, &limits.body) {
            continue;
        }
        let replaced = child.root.take(target).expect("listed").size();
        let budget = limits.body.max_modules.saturating_sub(a.size() - replaced).max(1);
        graft.truncate_breadth_first(budget);
        let (slot, parent) = target.split_last().expect("non-root");
        child.root.get_mut(parent).expect("parent kept").children[*slot as usize] = Some(graft);
        break;
    }
    child
}

/// Body in preorder and one oscillator per joint.
pub fn decode_tree(g: &TreeGenotype) -> (BodyGraph, SineOscillatorBrain) {
    fn walk(node: &TreeNode, id: NodeId, body: &mut BodyGraph, brain: &mut SineOscillatorBrain) {
        if let Some(params) = node.params {
            brain.oscillators.push(SineOscillator { joint: id, params });
        }
        for (slot, child) in node.children.iter().enumerate() {
            if let Some(c) = child {
                let cid = body.attach(id, slot as u8, c.kind, c.rotation).expect("tree slots are free");
                walk(c, cid, body, brain);
            }
        }
    }
    let mut body = BodyGraph::core_only();
    let mut brain = SineOscillatorBrain::default();
    walk(&g.root, NodeId::ROOT, &mut body, &mut brain);
    (body, brain)
}
