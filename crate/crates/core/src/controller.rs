//! Joint controllers: the coupled CPG network and the free-running sine brain.

use std::f64::consts::TAU;

use crate::morphology::{BodyGraph, Cell, GridEmbedding, ModuleKind, NodeId};

/// Joints whose cells are at most this far apart (Manhattan) get coupled.
pub const DEFAULT_COUPLING_DISTANCE: i32 = 3;
/// Integration step of the CPG dynamics, seconds.
pub const DEFAULT_CPG_DT: f64 = 0.005;

/// One oscillator: an x/y neuron pair plus an output neuron reading x with
/// unit weight. The y→x weight is always the negated x→y weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpgNode {
    pub joint: NodeId,
    pub cell: Cell,
    pub x: f64,
    pub y: f64,
    /// x→y weight.
    pub w_xy: f64,
}

impl CpgNode {
    pub const OUTPUT_WEIGHT: f64 = 1.0;

    pub fn new(joint: NodeId, cell: Cell) -> Self {
        CpgNode { joint, cell, x: 0.0, y: 1.0, w_xy: 0.0 }
    }

    pub fn w_yx(&self) -> f64 {
        -self.w_xy
    }

    pub fn output(&self) -> f64 {
        (Self::OUTPUT_WEIGHT * self.x).clamp(-1.0, 1.0)
    }
}

/// Coupling between the x neurons of nodes `a < b`: `a` receives
/// `weight * x_b` and `b` receives `-weight * x_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpgConnection {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CpgNetwork {
    pub nodes: Vec<CpgNode>,
    pub connections: Vec<CpgConnection>,
}

/// One node per embedded joint (storage order), one connection per joint
/// pair within `max_distance`, listed in lexicographic `(a, b)` order.
pub fn build_cpg_topology(body: &BodyGraph, e: &GridEmbedding, max_distance: i32) -> CpgNetwork {
    let nodes: Vec<CpgNode> = body
        .ids()
        .filter(|&id| body.kind(id) == ModuleKind::Joint)
        .filter_map(|id| e.placement(id).map(|p| CpgNode::new(id, p.cell)))
        .collect();
    let mut connections = Vec::new();
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            if nodes[a].cell.manhattan(nodes[b].cell) <= max_distance {
                connections.push(CpgConnection { a, b, weight: 0.0 });
            }
        }
    }
    CpgNetwork { nodes, connections }
}

impl CpgNetwork {
    /// `j + c`: one internal weight per node and one per connection.
    pub fn parameter_count(&self) -> usize {
        self.nodes.len() + self.connections.len()
    }

    pub fn reset(&mut self) {
        for n in &mut self.nodes {
            n.x = 0.0;
            n.y = 1.0;
        }
    }

    fn derivative(&self, x: &[f64], y: &[f64], dx: &mut [f64], dy: &mut [f64]) {
        for (i, n) in self.nodes.iter().enumerate() {
            dx[i] = n.w_xy * y[i];
            dy[i] = n.w_yx() * x[i];
        }
        for c in &self.connections {
            dx[c.a] += c.weight * x[c.b];
            dx[c.b] -= c.weight * x[c.a];
        }
    }

    /// Advances every node by one classic RK4 step.
    pub fn step(&mut self, dt: f64) {
        let n = self.nodes.len();
        if n == 0 {
            return;
        }
        let x0: Vec<f64> = self.nodes.iter().map(|n| n.x).collect();
        let y0: Vec<f64> = self.nodes.iter().map(|n| n.y).collect();
        let mut kx = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut ky = kx.clone();
        let mut xs = x0.clone();
        let mut ys = y0.clone();
        for stage in 0..4 {
            if stage > 0 {
                let h = if stage == 3 { dt } else { dt / 2.0 };
                for i in 0..n {
                    xs[i] = x0[i] + h * kx[stage - 1][i];
                    ys[i] = y0[i] + h * ky[stage - 1][i];
                }
            }
            let (kxs, kys) = (&mut kx[stage], &mut ky[stage]);
            self.derivative(&xs, &ys, kxs, kys);
        }
        for (i, node) in self.nodes.iter_mut().enumerate() {
            node.x = x0[i] + dt / 6.0 * (kx[0][i] + 2.0 * kx[1][i] + 2.0 * kx[2][i] + kx[3][i]);
            node.y = y0[i] + dt / 6.0 * (ky[0][i] + 2.0 * ky[1][i] + 2.0 * ky[2][i] + ky[3][i]);
        }
    }

    pub fn outputs(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(CpgNode::output)
    }
}

/// Integrates one step and returns the joint outputs in node order.
pub fn step_cpg(net: &mut CpgNetwork, dt: f64) -> Vec<f64> {
    net.step(dt);
    net.outputs().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    /// Hz
    pub frequency: f64,
    pub offset: f64,
    pub amplitude: f64,
}

impl OscillatorParams {
    pub fn output_at(&self, t: f64) -> f64 {
        (self.offset + self.amplitude * (TAU * self.frequency * t).sin()).clamp(-1.0, 1.0)
    }
}

/// Inclusive parameter ranges for sine oscillators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorRanges {
    pub frequency: (f64, f64),
    pub offset: (f64, f64),
    pub amplitude: (f64, f64),
}

impl Default for OscillatorRanges {
    fn default() -> Self {
        OscillatorRanges { frequency: (0.1, 2.0), offset: (-1.0, 1.0), amplitude: (0.0, 1.0) }
    }
}

impl OscillatorRanges {
    pub fn contains(&self, p: &OscillatorParams) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&v);
        within(p.frequency, self.frequency) && within(p.offset, self.offset) && within(p.amplitude, self.amplitude)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineOscillator {
    pub joint: NodeId,
    pub params: OscillatorParams,
}

/// Uncoupled per-joint oscillators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SineOscillatorBrain {
    pub oscillators: Vec<SineOscillator>,
}

pub fn eval_sine_brain(brain: &SineOscillatorBrain, t: f64) -> Vec<f64> {
    brain.oscillators.iter().map(|o| o.params.output_at(t)).collect()
}

/// Whatever drives the joints of a developed robot.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    Sine(SineOscillatorBrain),
    Cpg(CpgNetwork),
}

impl Controller {
    /// Joints driven, in output order.
    pub fn joints(&self) -> Vec<NodeId> {
        match self {
            Controller::Sine(b) => b.oscillators.iter().map(|o| o.joint).collect(),
            Controller::Cpg(n) => n.nodes.iter().map(|n| n.joint).collect(),
        }
    }

    /// Returns a runnable copy positioned at t = 0.
    pub fn start(&self) -> RunningController {
        let mut c = self.clone();
        if let Controller::Cpg(n) = &mut c {
            n.reset();
        }
        RunningController { inner: c }
    }

    /// Rewrites joint ids after the body has been pruned; drops joints that
    /// no longer exist.
    pub fn remap(&mut self, remap: &[Option<NodeId>]) {
        match self {
            Controller::Sine(b) => {
                b.oscillators.retain_mut(|o| match remap[o.joint.0] {
                    Some(id) => {
                        o.joint = id;
                        true
                    }
                    None => false,
                });
            }
            Controller::Cpg(_) => unreachable!("CPG networks are built after pruning"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunningController {
    inner: Controller,
}

impl RunningController {
    /// Outputs at time zero, before any integration.
    pub fn initial(&self, out: &mut [f64]) {
        match &self.inner {
            Controller::Sine(b) => {
                for (o, s) in out.iter_mut().zip(&b.oscillators) {
                    *o = s.params.output_at(0.0);
                }
            }
            Controller::Cpg(n) => {
                for (o, v) in out.iter_mut().zip(n.outputs()) {
                    *o = v;
                }
            }
        }
    }

    /// Advances to time `t` (one step of `dt`) and writes the outputs.
    pub fn advance(&mut self, t: f64, dt: f64, out: &mut [f64]) {
        match &mut self.inner {
            Controller::Sine(b) => {
                for (o, s) in out.iter_mut().zip(&b.oscillators) {
                    *o = s.params.output_at(t);
                }
            }
            Controller::Cpg(n) => {
                n.step(dt);
                for (o, v) in out.iter_mut().zip(n.outputs()) {
                    *o = v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::{embed, Rotation, SLOT_BACK, SLOT_FRONT, SLOT_LEFT, SLOT_RIGHT};

    fn single(w: f64) -> CpgNetwork {
        let mut n = CpgNode::new(NodeId(1), Cell::ORIGIN);
        n.w_xy = w;
        CpgNetwork { nodes: vec![n], connections: vec![] }
    }

    #[test]
    fn zero_weights_leave_state_untouched() {
        let mut net = single(0.0);
        for _ in 0..100 {
            net.step(DEFAULT_CPG_DT);
        }
        assert_eq!((net.nodes[0].x, net.nodes[0].y), (0.0, 1.0));
    }

    #[test]
    fn uncoupled_node_tracks_sine() {
        let mut net = single(1.0);
        let mut worst: f64 = 0.0;
        for k in 1..=2000 {
            net.step(0.005);
            worst = worst.max((net.nodes[0].x - (k as f64 * 0.005).sin()).abs());
        }
        assert!(worst < 1e-4, "max deviation {worst}");
    }

    #[test]
    fn uncoupled_node_conserves_radius() {
        let mut net = single(1.0);
        for _ in 0..1000 {
            net.step(0.005);
        }
        let r2 = net.nodes[0].x.powi(2) + net.nodes[0].y.powi(2);
        assert!((r2 - 1.0).abs() < 1e-6);
        assert_eq!(net.nodes[0].w_yx(), -1.0);
    }

    #[test]
    fn empty_and_adjacent_topologies() {
        let body = BodyGraph::core_only();
        let net = build_cpg_topology(&body, &embed(&body), DEFAULT_COUPLING_DISTANCE);
        assert_eq!(net.parameter_count(), 0);

        let mut body = BodyGraph::core_only();
        let j = body.attach(NodeId::ROOT, SLOT_FRONT, ModuleKind::Joint, Rotation::Deg0).unwrap();
        let b = body.attach(j, 0, ModuleKind::Brick, Rotation::Deg0).unwrap();
        body.attach(b, SLOT_FRONT, ModuleKind::Joint, Rotation::Deg0).unwrap();
        let net = build_cpg_topology(&body, &embed(&body), DEFAULT_COUPLING_DISTANCE);
        assert_eq!(net.nodes.len(), 2);
        assert_eq!(net.connections.len(), 1);
        assert_eq!(net.parameter_count(), 3);

        let mut body = BodyGraph::core_only();
        body.attach(NodeId::ROOT, SLOT_FRONT, ModuleKind::Joint, Rotation::Deg0).unwrap();
        let b = body.attach(NodeId::ROOT, SLOT_LEFT, ModuleKind::Brick, Rotation::Deg0).unwrap();
        body.attach(b, SLOT_FRONT, ModuleKind::Joint, Rotation::Deg0).unwrap();
        let net = build_cpg_topology(&body, &embed(&body), DEFAULT_COUPLING_DISTANCE);
        // (0,1,0) and (-2,0,0) are 3 apart
        assert_eq!(net.connections.len(), 1);
        assert_eq!(build_cpg_topology(&body, &embed(&body), 2).connections.len(), 0);
    }

    #[test]
    fn spider_plus_shape_wiring() {
        // four legs of joint-brick-joint-brick around the core
        let mut body = BodyGraph::core_only();
        for slot in [SLOT_FRONT, SLOT_LEFT, SLOT_RIGHT, SLOT_BACK] {
            let j1 = body.attach(NodeId::ROOT, slot, ModuleKind::Joint, Rotation::Deg0).unwrap();
            let b1 = body.attach(j1, 0, ModuleKind::Brick, Rotation::Deg0).unwrap();
            let j2 = body.attach(b1, SLOT_FRONT, ModuleKind::Joint, Rotation::Deg0).unwrap();
            body.attach(j2, 0, ModuleKind::Brick, Rotation::Deg0).unwrap();
        }
        let net = build_cpg_topology(&body, &embed(&body), DEFAULT_COUPLING_DISTANCE);
        let cells: Vec<[i32; 3]> = net.nodes.iter().map(|n| n.cell.to_array()).collect();
        assert_eq!(
            cells,
            vec![[0, 1, 0], [0, 3, 0], [-1, 0, 0], [-3, 0, 0], [1, 0, 0], [3, 0, 0], [0, -1, 0], [0, -3, 0]]
        );
        let pairs: Vec<(usize, usize)> = net.connections.iter().map(|c| (c.a, c.b)).collect();
        // inner ring fully connected plus each inner-outer pair along a leg
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 4), (0, 6), (2, 3), (2, 4), (2, 6), (4, 5), (4, 6), (6, 7)]);
        assert_eq!(net.parameter_count(), 18);
    }

    #[test]
    fn sine_brain_cases() {
        let brain = |f, off, amp| SineOscillatorBrain {
            oscillators: vec![SineOscillator {
                joint: NodeId(1),
                params: OscillatorParams { frequency: f, offset: off, amplitude: amp },
            }],
        };
        assert_eq!(eval_sine_brain(&brain(1.0, 0.3, 0.0), 1.7), vec![0.3]);
        assert_eq!(eval_sine_brain(&brain(1.0, 0.0, 1.0), 0.25), vec![1.0]);
        assert_eq!(eval_sine_brain(&brain(1.0, 0.8, 0.5), 0.25), vec![1.0]);
        assert!(eval_sine_brain(&brain(1.0, 0.8, 0.5), 0.75)[0] - 0.3 < 1e-12);
    }
}
