//! Compositional pattern-producing networks that paint CPG weights onto a
//! substrate, with NEAT-style variation operators (no speciation).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::controller::CpgNetwork;
use crate::morphology::{Cell, GridEmbedding};

/// Substrate coordinates of the two neurons being connected.
pub const INPUT_COUNT: usize = 8;
pub const BIAS_ID: u32 = INPUT_COUNT as u32;
pub const OUTPUT_ID: u32 = BIAS_ID + 1;
pub const OUTPUT_LIMIT: f64 = 3.0;
const WEIGHT_LIMIT: f64 = 5.0;
const RESAMPLE_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Sigmoid,
    Gaussian,
    Sine,
}

impl Activation {
    pub const ALL: [Activation; 4] =
        [Activation::Identity, Activation::Sigmoid, Activation::Gaussian, Activation::Sine];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Gaussian => (-x * x).exp(),
            Activation::Sine => x.sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
            Activation::Gaussian => "gaussian",
            Activation::Sine => "sine",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Activation::ALL.into_iter().find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Input(u8),
    Bias,
    Output,
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGene {
    pub id: u32,
    pub role: NodeRole,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionGene {
    pub innovation: u64,
    pub source: u32,
    pub target: u32,
    pub weight: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CppnError {
    #[error("genome contains a directed cycle")]
    Cyclic,
    #[error("connection {innovation} references unknown node {node}")]
    DanglingConnection { innovation: u64, node: u32 },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Run-wide registry of structural innovations.
///
/// The same `(source, target)` pair always receives the same innovation id,
/// and splitting the same connection yields the same hidden node id, so
/// genomes of one run stay aligned for crossover. Counters only grow.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationTracker {
    next_innovation: u64,
    next_node: u32,
    connections: BTreeMap<(u32, u32), u64>,
    splits: BTreeMap<u64, u32>,
}

impl Default for InnovationTracker {
    fn default() -> Self {
        let mut t = InnovationTracker {
            next_innovation: 0,
            next_node: OUTPUT_ID + 1,
            connections: BTreeMap::new(),
            splits: BTreeMap::new(),
        };
        for src in 0..=BIAS_ID {
            t.connection(src, OUTPUT_ID);
        }
        t
    }
}

impl InnovationTracker {
    pub fn connection(&mut self, source: u32, target: u32) -> u64 {
        let next = &mut self.next_innovation;
        *self.connections.entry((source, target)).or_insert_with(|| {
            *next += 1;
            *next - 1
        })
    }

    fn split_node(&mut self, innovation: u64) -> u32 {
        let next = &mut self.next_node;
        *self.splits.entry(innovation).or_insert_with(|| {
            *next += 1;
            *next - 1
        })
    }

    fn fresh_node(&mut self) -> u32 {
        self.next_node += 1;
        self.next_node - 1
    }

    pub fn innovations_issued(&self) -> u64 {
        self.next_innovation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CppnGenome {
    /// Sorted by id.
    pub nodes: Vec<NodeGene>,
    /// Sorted by innovation.
    pub connections: Vec<ConnectionGene>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CppnRates {
    /// Probability that weights get perturbed at all.
    pub perturb_weights: f64,
    /// Per-connection probability once perturbation fires.
    pub perturb_each: f64,
    pub perturb_sigma: f64,
    pub add_connection: f64,
    pub add_node: f64,
    pub toggle_enable: f64,
    pub change_activation: f64,
}

impl Default for CppnRates {
    fn default() -> Self {
        CppnRates {
            perturb_weights: 0.8,
            perturb_each: 0.9,
            perturb_sigma: 0.5,
            add_connection: 0.1,
            add_node: 0.05,
            toggle_enable: 0.05,
            change_activation: 0.05,
        }
    }
}

impl CppnRates {
    pub fn none() -> Self {
        CppnRates {
            perturb_weights: 0.0,
            perturb_each: 0.0,
            perturb_sigma: 0.0,
            add_connection: 0.0,
            add_node: 0.0,
            toggle_enable: 0.0,
            change_activation: 0.0,
        }
    }
}

impl CppnGenome {
    fn io_nodes(output: Activation) -> Vec<NodeGene> {
        let mut nodes: Vec<NodeGene> = (0..INPUT_COUNT as u32)
            .map(|i| NodeGene { id: i, role: NodeRole::Input(i as u8), activation: Activation::Identity })
            .collect();
        nodes.push(NodeGene { id: BIAS_ID, role: NodeRole::Bias, activation: Activation::Identity });
        nodes.push(NodeGene { id: OUTPUT_ID, role: NodeRole::Output, activation: output });
        nodes
    }

    /// Inputs and output only.
    pub fn empty(output: Activation) -> Self {
        CppnGenome { nodes: Self::io_nodes(output), connections: Vec::new() }
    }

    /// Every input and the bias wired to the output with uniform weights in
    /// [-1, 1], then `hidden` node insertions.
    pub fn random<R: Rng + ?Sized>(tracker: &mut InnovationTracker, hidden: usize, rng: &mut R) -> Self {
        let output = *Activation::ALL.choose(rng).expect("non-empty");
        let mut g = Self::empty(output);
        for src in 0..=BIAS_ID {
            let innovation = tracker.connection(src, OUTPUT_ID);
            g.connections.push(ConnectionGene {
                innovation,
                source: src,
                target: OUTPUT_ID,
                weight: rng.random_range(-1.0..=1.0),
                enabled: true,
            });
        }
        g.sort();
        for _ in 0..hidden {
            g.add_node(tracker, rng);
        }
        g
    }

    fn sort(&mut self) {
        self.nodes.sort_by_key(|n| n.id);
        self.connections.sort_by_key(|c| c.innovation);
    }

    fn node(&self, id: u32) -> Option<&NodeGene> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(|i| &self.nodes[i])
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == NodeRole::Hidden).count()
    }

    /// Node ids in an order where every source precedes its targets. All
    /// connections count, enabled or not.
    pub fn topological_order(&self) -> Result<Vec<u32>, CppnError> {
        let mut indegree: BTreeMap<u32, usize> = self.nodes.iter().map(|n| (n.id, 0)).collect();
        let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for c in &self.connections {
            for node in [c.source, c.target] {
                if !indegree.contains_key(&node) {
                    return Err(CppnError::DanglingConnection { innovation: c.innovation, node });
                }
            }
            *indegree.get_mut(&c.target).expect("checked") += 1;
            out.entry(c.source).or_default().push(c.target);
        }
        let mut queue: VecDeque<u32> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = queue.pop_front() {
            order.push(id);
            for t in out.get(&id).into_iter().flatten() {
                let d = indegree.get_mut(t).expect("checked");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(*t);
                }
            }
        }
        if order.len() == self.nodes.len() {
            Ok(order)
        } else {
            Err(CppnError::Cyclic)
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    pub fn compile(&self) -> Result<CompiledCppn, CppnError> {
        let order = self.topological_order()?;
        let index: BTreeMap<u32, usize> = order.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut incoming = vec![Vec::new(); order.len()];
        for c in self.connections.iter().filter(|c| c.enabled) {
            incoming[index[&c.target]].push((index[&c.source], c.weight));
        }
        let steps = order
            .iter()
            .zip(incoming)
            .map(|(id, inputs)| {
                let node = self.node(*id).expect("ordered ids exist");
                let source = match node.role {
                    NodeRole::Input(i) => Source::Input(i as usize),
                    NodeRole::Bias => Source::Bias,
                    NodeRole::Output | NodeRole::Hidden => Source::Sum(node.activation, inputs),
                };
                Step { source }
            })
            .collect();
        Ok(CompiledCppn { steps, output: index[&OUTPUT_ID] })
    }

    fn reaches(&self, from: u32, to: u32) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                stack.extend(self.connections.iter().filter(|c| c.source == n).map(|c| c.target));
            }
        }
        false
    }

    fn add_connection<R: Rng + ?Sized>(&mut self, tracker: &mut InnovationTracker, rng: &mut R) -> bool {
        let sources: Vec<u32> = self.nodes.iter().filter(|n| n.role != NodeRole::Output).map(|n| n.id).collect();
        let targets: Vec<u32> =
            self.nodes.iter().filter(|n| matches!(n.role, NodeRole::Output | NodeRole::Hidden)).map(|n| n.id).collect();
        for _ in 0..RESAMPLE_ATTEMPTS {
            let (&s, &t) = (sources.choose(rng).expect("inputs exist"), targets.choose(rng).expect("output exists"));
            if s == t || self.connections.iter().any(|c| c.source == s && c.target == t) || self.reaches(t, s) {
                continue;
            }
            let innovation = tracker.connection(s, t);
            self.connections.push(ConnectionGene {
                innovation,
                source: s,
                target: t,
                weight: rng.random_range(-1.0..=1.0),
                enabled: true,
            });
            self.sort();
            return true;
        }
        false
    }

    fn add_node<R: Rng + ?Sized>(&mut self, tracker: &mut InnovationTracker, rng: &mut R) -> bool {
        let enabled: Vec<usize> = (0..self.connections.len()).filter(|&i| self.connections[i].enabled).collect();
        let Some(&i) = enabled.choose(rng) else { return false };
        let old = self.connections[i];
        self.connections[i].enabled = false;
        let mut id = tracker.split_node(old.innovation);
        if self.node(id).is_some() {
            id = tracker.fresh_node();
        }
        let activation = *Activation::ALL.choose(rng).expect("non-empty");
        self.nodes.push(NodeGene { id, role: NodeRole::Hidden, activation });
        for (source, target, weight) in [(old.source, id, 1.0), (id, old.target, old.weight)] {
            let innovation = tracker.connection(source, target);
            self.connections.push(ConnectionGene { innovation, source, target, weight, enabled: true });
        }
        self.sort();
        true
    }

    /// Line-oriented text: `node <id> <role> <activation>` lines, then
    /// `conn <innovation> <source> <target> <weight> <0|1>` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let role = match n.role {
                NodeRole::Input(i) => format!("input{i}"),
                NodeRole::Bias => "bias".into(),
                NodeRole::Output => "output".into(),
                NodeRole::Hidden => "hidden".into(),
            };
            let _ = writeln!(out, "node {} {} {}", n.id, role, n.activation.name());
        }
        for c in &self.connections {
            let _ =
                writeln!(out, "conn {} {} {} {} {}", c.innovation, c.source, c.target, c.weight, u8::from(c.enabled));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CppnError> {
        let mut g = CppnGenome { nodes: Vec::new(), connections: Vec::new() };
        for (i, line) in text.lines().enumerate() {
            let err = |reason: &str| CppnError::Parse { line: i + 1, reason: reason.to_string() };
            let cols: Vec<&str> = line.split_whitespace().collect();
            match cols.as_slice() {
                [] => {}
                ["node", id, role, act] => {
                    let role = match *role {
                        "bias" => NodeRole::Bias,
                        "output" => NodeRole::Output,
                        "hidden" => NodeRole::Hidden,
                        r => NodeRole::Input(
                            r.strip_prefix("input").and_then(|n| n.parse().ok()).ok_or_else(|| err("bad role"))?,
                        ),
                    };
                    g.nodes.push(NodeGene {
                        id: id.parse().map_err(|_| err("bad node id"))?,
                        role,
                        activation: Activation::parse(act).ok_or_else(|| err("bad activation"))?,
                    });
                }
                ["conn", inn, s, t, w, e] => g.connections.push(ConnectionGene {
                    innovation: inn.parse().map_err(|_| err("bad innovation"))?,
                    source: s.parse().map_err(|_| err("bad source"))?,
                    target: t.parse().map_err(|_| err("bad target"))?,
                    weight: w.parse().map_err(|_| err("bad weight"))?,
                    enabled: match *e {
                        "1" => true,
                        "0" => false,
                        _ => return Err(err("bad enabled flag")),
                    },
                }),
                _ => return Err(err("unrecognised line")),
            }
        }
        g.sort();
        g.topological_order()?;
        Ok(g)
    }
}

#[derive(Debug, Clone)]
enum Source {
    Input(usize),
    Bias,
    Sum(Activation, Vec<(usize, f64)>),
}

#[derive(Debug, Clone)]
struct Step {
    source: Source,
}

/// A genome flattened into evaluation order.
#[derive(Debug, Clone)]
pub struct CompiledCppn {
    steps: Vec<Step>,
    output: usize,
}

impl CompiledCppn {
    pub fn eval(&self, input: &[f64; INPUT_COUNT]) -> f64 {
        let mut values = vec![0.0; self.steps.len()];
        for (i, step) in self.steps.iter().enumerate() {
            values[i] = match &step.source {
                Source::Input(k) => input[*k],
                Source::Bias => 1.0,
                Source::Sum(act, inputs) => act.apply(inputs.iter().map(|&(s, w)| values[s] * w).sum()),
            };
        }
        values[self.output].clamp(-OUTPUT_LIMIT, OUTPUT_LIMIT)
    }
}

/// Forward pass with the bias input fixed at 1; the output is clamped to
/// [-3, 3].
pub fn eval_cppn(g: &CppnGenome, input: &[f64; INPUT_COUNT]) -> Result<f64, CppnError> {
    Ok(g.compile()?.eval(input))
}

/// Substrate position of each CPG node: its joint cell scaled per axis by
/// the largest absolute coordinate of the body, so values lie in [-1, 1] and
/// the core sits at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstrateCoords {
    pub positions: Vec<[f64; 3]>,
}

/// `w` coordinate of the x neuron of a node.
pub const W_X_NEURON: f64 = -1.0;
/// `w` coordinate of the y neuron of a node.
pub const W_Y_NEURON: f64 = 1.0;

impl SubstrateCoords {
    pub fn from_network(net: &CpgNetwork, e: &GridEmbedding) -> Self {
        let mut scale = [1i32; 3];
        for c in e.cells().keys() {
            for (s, v) in scale.iter_mut().zip(c.to_array()) {
                *s = (*s).max(v.abs());
            }
        }
        let norm = |c: Cell| {
            let a = c.to_array();
            [0, 1, 2].map(|k| a[k] as f64 / scale[k] as f64)
        };
        SubstrateCoords { positions: net.nodes.iter().map(|n| norm(n.cell)).collect() }
    }

    fn input(&self, from: (usize, f64), to: (usize, f64)) -> [f64; INPUT_COUNT] {
        let [x1, y1, z1] = self.positions[from.0];
        let [x2, y2, z2] = self.positions[to.0];
        [x1, y1, z1, from.1, x2, y2, z2, to.1]
    }
}

/// Fills every weight of `net` from the CPPN: internal weights from the
/// node's x→y neuron pair, couplings from the two x neurons.
pub fn query_weights(g: &CppnGenome, net: &mut CpgNetwork, coords: &SubstrateCoords) -> Result<(), CppnError> {
    if net.nodes.is_empty() {
        return Ok(());
    }
    let cppn = g.compile()?;
    for (i, node) in net.nodes.iter_mut().enumerate() {
        node.w_xy = cppn.eval(&coords.input((i, W_X_NEURON), (i, W_Y_NEURON)));
    }
    for c in &mut net.connections {
        c.weight = cppn.eval(&coords.input((c.a, W_X_NEURON), (c.b, W_X_NEURON)));
    }
    Ok(())
}

/// Which operators fired during one mutation call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CppnMutationReport {
    pub weights: bool,
    pub add_connection: bool,
    pub add_node: bool,
    pub toggle: bool,
    pub activation: bool,
}

pub fn mutate_cppn<R: Rng + ?Sized>(
    g: &CppnGenome,
    tracker: &mut InnovationTracker,
    rates: &CppnRates,
    rng: &mut R,
) -> (CppnGenome, CppnMutationReport) {
    let mut child = g.clone();
    let mut report = CppnMutationReport::default();
    if rates.perturb_weights > 0.0 && rng.random_bool(rates.perturb_weights) && rates.perturb_sigma > 0.0 {
        let normal = Normal::new(0.0, rates.perturb_sigma).expect("positive sigma");
        for c in &mut child.connections {
            if rng.random_bool(rates.perturb_each) {
                c.weight = (c.weight + normal.sample(rng)).clamp(-WEIGHT_LIMIT, WEIGHT_LIMIT);
                report.weights = true;
            }
        }
    }
    if rates.add_connection > 0.0 && rng.random_bool(rates.add_connection) {
        report.add_connection = child.add_connection(tracker, rng);
    }
    if rates.add_node > 0.0 && rng.random_bool(rates.add_node) {
        report.add_node = child.add_node(tracker, rng);
    }
    if rates.toggle_enable > 0.0 && rng.random_bool(rates.toggle_enable) && !child.connections.is_empty() {
        let i = rng.random_range(0..child.connections.len());
        child.connections[i].enabled = !child.connections[i].enabled;
        report.toggle = true;
    }
    if rates.change_activation > 0.0 && rng.random_bool(rates.change_activation) {
        let mutable: Vec<usize> = (0..child.nodes.len())
            .filter(|&i| matches!(child.nodes[i].role, NodeRole::Hidden | NodeRole::Output))
            .collect();
        if let Some(&i) = mutable.choose(rng) {
            child.nodes[i].activation = *Activation::ALL.choose(rng).expect("non-empty");
            report.activation = true;
        }
    }
    (child, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fitter {
    A,
    B,
}

/// NEAT crossover: genes sharing an innovation id come from either parent
/// with equal odds, disjoint and excess genes only from the fitter parent.
/// The child has exactly the fitter parent's topology, so it stays acyclic.
pub fn crossover_cppn<R: Rng + ?Sized>(a: &CppnGenome, b: &CppnGenome, fitter: Fitter, rng: &mut R) -> CppnGenome {
    let (best, other) = match fitter {
        Fitter::A => (a, b),
        Fitter::B => (b, a),
    };
    let other_genes: BTreeMap<u64, &ConnectionGene> = other.connections.iter().map(|c| (c.innovation, c)).collect();
    let connections = best
        .connections
        .iter()
        .map(|c| match other_genes.get(&c.innovation) {
            Some(o) if rng.random_bool(0.5) => ConnectionGene { weight: o.weight, enabled: o.enabled, ..*c },
            _ => *c,
        })
        .collect();
    CppnGenome { nodes: best.nodes.clone(), connections }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_link(weight: f64, output: Activation) -> CppnGenome {
        let mut g = CppnGenome::empty(output);
        g.connections.push(ConnectionGene { innovation: 0, source: 0, target: OUTPUT_ID, weight, enabled: true });
        g
    }

    #[test]
    fn identity_pass_through() {
        let g = single_link(1.0, Activation::Identity);
        let mut input = [0.0; INPUT_COUNT];
        input[0] = 0.7;
        assert_eq!(eval_cppn(&g, &input).unwrap(), 0.7);
        input[0] = 5.0;
        assert_eq!(eval_cppn(&g, &input).unwrap(), 3.0);
    }

    #[test]
    fn disabled_links_yield_activation_of_zero() {
        let mut g = single_link(1.0, Activation::Sigmoid);
        g.connections[0].enabled = false;
        assert_eq!(eval_cppn(&g, &[0.9; INPUT_COUNT]).unwrap(), 0.5);
    }

    #[test]
    fn hidden_gaussian_by_hand() {
        // input0 -(2)-> gaussian h -(1.5)-> sine out, bias -(-0.5)-> out
        let mut g = CppnGenome::empty(Activation::Sine);
        g.nodes.push(NodeGene { id: 10, role: NodeRole::Hidden, activation: Activation::Gaussian });
        let link =
            |innovation, source, target, weight| ConnectionGene { innovation, source, target, weight, enabled: true };
        g.connections = vec![link(0, 0, 10, 2.0), link(1, 10, OUTPUT_ID, 1.5), link(2, BIAS_ID, OUTPUT_ID, -0.5)];
        let mut input = [0.0; INPUT_COUNT];
        input[0] = 0.3;
        let expected = (1.5 * (-(0.6f64 * 0.6)).exp() - 0.5).sin();
        assert_eq!(eval_cppn(&g, &input).unwrap(), expected);
    }

    #[test]
    fn cycles_are_rejected() {
        let mut g = CppnGenome::empty(Activation::Identity);
        g.nodes.push(NodeGene { id: 10, role: NodeRole::Hidden, activation: Activation::Identity });
        g.nodes.push(NodeGene { id: 11, role: NodeRole::Hidden, activation: Activation::Identity });
        let link =
            |innovation, source, target| ConnectionGene { innovation, source, target, weight: 1.0, enabled: false };
        g.connections = vec![link(0, 10, 11), link(1, 11, 10)];
        assert_eq!(eval_cppn(&g, &[0.0; INPUT_COUNT]).unwrap_err(), CppnError::Cyclic);
    }

    #[test]
    fn add_node_splits_the_link() {
        let mut tracker = InnovationTracker::default();
        let g = single_link(0.8, Activation::Identity);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rates = CppnRates { add_node: 1.0, ..CppnRates::none() };
        let (child, report) = mutate_cppn(&g, &mut tracker, &rates, &mut rng);
        assert!(report.add_node);
        assert_eq!(child.hidden_count(), 1);
        assert_eq!(child.connections.len(), 3);
        assert!(!child.connections[0].enabled);
        assert_eq!(child.connections.iter().filter(|c| c.enabled).count(), 2);
        let mut input = [0.0; INPUT_COUNT];
        input[0] = 0.5;
        let hidden = child.nodes.iter().find(|n| n.role == NodeRole::Hidden).unwrap();
        assert_eq!(eval_cppn(&child, &input).unwrap(), 0.8 * hidden.activation.apply(0.5));
    }

    #[test]
    fn zero_rates_are_identity() {
        let mut tracker = InnovationTracker::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = CppnGenome::random(&mut tracker, 2, &mut rng);
        let (child, report) = mutate_cppn(&g, &mut tracker, &CppnRates::none(), &mut rng);
        assert_eq!(child, g);
        assert_eq!(report, CppnMutationReport::default());
    }

    #[test]
    fn crossover_boundaries() {
        let mut tracker = InnovationTracker::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = CppnGenome::random(&mut tracker, 1, &mut rng);
        assert_eq!(crossover_cppn(&a, &a, Fitter::A, &mut rng), a);

        let mut b = single_link(0.1, Activation::Sine);
        b.connections[0].innovation = 1000;
        let mut c = single_link(0.2, Activation::Gaussian);
        c.connections[0].innovation = 2000;
        assert_eq!(crossover_cppn(&b, &c, Fitter::B, &mut rng), c);
        assert_eq!(crossover_cppn(&b, &c, Fitter::A, &mut rng), b);
    }

    #[test]
    fn constant_cppn_paints_constant_weights() {
        use crate::controller::build_cpg_topology;
        use crate::morphology::embed;
        use crate::morphology::text::body_from_text;
        let body = body_from_text("Core(0)[0: Joint(0)[0: Brick(0)[0: Joint(90)]], 1: Joint(0)]").unwrap();
        let e = embed(&body);
        let mut net = build_cpg_topology(&body, &e, 3);
        assert_eq!(net.nodes.len(), 3);
        let mut g = CppnGenome::empty(Activation::Identity);
        g.connections.push(ConnectionGene {
            innovation: 8,
            source: BIAS_ID,
            target: OUTPUT_ID,
            weight: 0.4,
            enabled: true,
        });
        let coords = SubstrateCoords::from_network(&net, &e);
        query_weights(&g, &mut net, &coords).unwrap();
        assert!(net.nodes.iter().all(|n| n.w_xy == 0.4 && n.w_yx() == -0.4));
        assert!(!net.connections.is_empty());
        assert!(net.connections.iter().all(|c| c.weight == 0.4));
        assert_eq!(net.parameter_count(), 3 + net.connections.len());
    }

    #[test]
    fn text_round_trip() {
        let mut tracker = InnovationTracker::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = CppnGenome::random(&mut tracker, 3, &mut rng);
        assert_eq!(CppnGenome::from_text(&g.to_text()).unwrap(), g);
        assert!(CppnGenome::from_text("node 0 foo identity").is_err());
    }
}
