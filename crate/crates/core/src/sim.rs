//! Deterministic kinematic stand-in for a physics engine.
//!
//! Every control step the joint angles are read from the controller and the
//! module centres are placed by forward kinematics in the core frame. The
//! body is then tipped about its support until the centre of mass sits over
//! the support polygon of the lowest modules, and the planar pose of the core
//! is updated by the least-squares rigid motion that keeps those contact
//! modules where they were on the previous step.

use nalgebra::{Matrix3, Rotation3, Unit, Vector2, Vector3};

use crate::controller::Controller;
use crate::morphology::{embed, BodyGraph, Cell, Frame, ModuleKind, NodeId};
use crate::trajectory::{Pose, Trajectory};

/// Edge length of one grid cell, cm.
pub const CELL_SIZE_CM: f64 = 4.0;
/// Modules within this height of the lowest one (in cells) touch the ground.
pub const CONTACT_TOLERANCE: f64 = 0.1;
/// Controller output ±1 maps to ±90 degrees of joint angle.
pub const MAX_JOINT_ANGLE: f64 = std::f64::consts::FRAC_PI_2;

const MAX_TIPS_PER_STEP: usize = 16;
const SETTLE_ITERATIONS: usize = 64;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// seconds
    pub duration: f64,
    /// Control timestep, seconds.
    pub timestep: f64,
    /// seconds
    pub sample_period: f64,
    /// Planar start position of the core, cm.
    pub start: [f64; 2],
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { duration: 30.0, timestep: 0.005, sample_period: 0.1, start: [0.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(&'static str),
    #[error("controller drives {driven} joints but the body has {expected}")]
    JointMismatch { driven: usize, expected: usize },
    #[error("state became non-finite at step {0}")]
    NonFinite(usize),
}

fn ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    let n = r.round();
    ((r - n).abs() < 1e-6 && n >= 1.0).then_some(n as usize)
}

impl SimConfig {
    /// `(samples after t = 0, control steps per sample)`.
    pub fn schedule(&self) -> Result<(usize, usize), SimError> {
        if !(self.duration > 0.0 && self.timestep > 0.0 && self.sample_period > 0.0) {
            return Err(SimError::Config("durations must be positive"));
        }
        if self.timestep > self.sample_period {
            return Err(SimError::Config("timestep exceeds sample period"));
        }
        let samples = ratio(self.duration, self.sample_period)
            .ok_or(SimError::Config("duration is not a multiple of the sample period"))?;
        let steps = ratio(self.sample_period, self.timestep)
            .ok_or(SimError::Config("sample period is not a multiple of the timestep"))?;
        Ok((samples, steps))
    }

    pub fn sample_count(&self) -> Result<usize, SimError> {
        self.schedule().map(|(n, _)| n + 1)
    }
}

fn frame_matrix(f: &Frame) -> Matrix3<f64> {
    let col = |c: Cell| Vector3::new(c.x as f64, c.y as f64, c.z as f64);
    Matrix3::from_columns(&[col(f.right), col(f.front), col(f.up)])
}

/// Per-module data fixed for the whole run.
struct Link {
    parent: usize,
    /// Offset from the parent centre, parent frame.
    offset: Vector3<f64>,
    /// Orientation relative to the parent at zero joint angle.
    local: Matrix3<f64>,
    /// Index into the joint angle vector when the parent is a joint.
    parent_joint: Option<usize>,
}

struct Kinematics {
    links: Vec<Link>,
    joint_count: usize,
}

impl Kinematics {
    fn new(body: &BodyGraph, joints: &[NodeId]) -> Self {
        let e = embed(body);
        let mut joint_index = vec![None; body.len()];
        for (i, j) in joints.iter().enumerate() {
            joint_index[j.0] = Some(i);
        }
        let mut links = Vec::with_capacity(body.len());
        for id in body.ids() {
            let Some(here) = e.placement(id) else { continue };
            let Some(parent) = body.parent(id) else {
                links.push(Link {
                    parent: 0,
                    offset: Vector3::zeros(),
                    local: Matrix3::identity(),
                    parent_joint: None,
                });
                continue;
            };
            let there = e.placement(parent).expect("parents of embedded modules are embedded");
            let pf = frame_matrix(&there.frame);
            let d = here.cell - there.cell;
            links.push(Link {
                parent: links_index(&e, body, parent),
                offset: pf.transpose() * Vector3::new(d.x as f64, d.y as f64, d.z as f64),
                local: pf.transpose() * frame_matrix(&here.frame),
                parent_joint: if body.kind(parent) == ModuleKind::Joint { joint_index[parent.0] } else { None },
            });
        }
        Kinematics { links, joint_count: joints.len() }
    }

    /// Module centres in the core frame, cell units.
    fn positions(&self, angles: &[f64], rot: &mut [Matrix3<f64>], out: &mut [Vector3<f64>]) {
        rot[0] = Matrix3::identity();
        out[0] = Vector3::zeros();
        for (i, link) in self.links.iter().enumerate().skip(1) {
            let mut r = rot[link.parent];
            if let Some(j) = link.parent_joint {
                // hinge about the joint's local right axis
                let (s, c) = angles[j].sin_cos();
                let hinge = Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c);
                r *= hinge;
            }
            out[i] = out[link.parent] + r * link.offset;
            rot[i] = r * link.local;
        }
    }
}

// Storage index of `id` among embedded modules.
fn links_index(e: &crate::morphology::GridEmbedding, body: &BodyGraph, id: NodeId) -> usize {
    body.ids().take(id.0).filter(|&i| e.is_embedded(i)).count()
}

/// Closest point of the convex hull of `pts` to `q` (`q` itself if inside).
fn closest_on_hull(pts: &[Vector2<f64>], q: Vector2<f64>) -> Vector2<f64> {
    let hull = convex_hull(pts);
    match hull.len() {
        0 => q,
        1 => hull[0],
        _ => {
            if hull.len() >= 3 {
                let inside = (0..hull.len()).all(|i| {
                    let a = hull[i];
                    let b = hull[(i + 1) % hull.len()];
                    (b - a).perp(&(q - a)) >= -EPS
                });
                if inside {
                    return q;
                }
            }
            let mut best = hull[0];
            let mut best_d = f64::INFINITY;
            for i in 0..hull.len() {
                let a = hull[i];
                let b = hull[(i + 1) % hull.len()];
                let ab = b - a;
                let len2 = ab.norm_squared();
                let t = if len2 > 0.0 { ((q - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let p = a + ab * t;
                let d = (q - p).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = p;
                }
            }
            best
        }
    }
}

/// Counter-clockwise hull, monotone chain; collinear points dropped.
fn convex_hull(pts: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut p: Vec<Vector2<f64>> = pts.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup_by(|a, b| (*a - *b).norm_squared() < EPS * EPS);
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>| (a - o).perp(&(b - o));
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &pt in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= EPS {
                hull.pop();
            }
            hull.push(pt);
        }
        hull.pop();
    }
    hull
}

/// Tips the body about its support edge until the centre of mass rests
/// above the contact polygon. Returns the updated tilt.
fn settle(points: &[Vector3<f64>], com: &Vector3<f64>, mut tilt: Rotation3<f64>, max_tips: usize) -> Rotation3<f64> {
    let mut world = vec![Vector3::zeros(); points.len()];
    let mut contact = Vec::with_capacity(points.len());
    for _ in 0..max_tips {
        let mut zmin = f64::INFINITY;
        for (w, p) in world.iter_mut().zip(points) {
            *w = tilt * p;
            zmin = zmin.min(w.z);
        }
        let c = tilt * com;
        contact.clear();
        contact.extend(world.iter().filter(|w| w.z <= zmin + CONTACT_TOLERANCE).map(|w| w.xy()));
        let q = closest_on_hull(&contact, c.xy());
        let away = c.xy() - q;
        let dist = away.norm();
        if dist <= EPS {
            break;
        }
        let n = away / dist;
        let pivot = Vector3::new(q.x, q.y, zmin);
        let mut beta = f64::INFINITY;
        for w in &world {
            let r = w - pivot;
            let h = r.x * n.x + r.y * n.y;
            if h > EPS {
                beta = beta.min(r.z.max(0.0).atan2(h));
            }
        }
        if !beta.is_finite() || beta <= 0.0 {
            break;
        }
        let axis = Unit::new_normalize(Vector3::new(-n.y, n.x, 0.0));
        tilt = Rotation3::from_axis_angle(&axis, beta.min(std::f64::consts::FRAC_PI_2)) * tilt;
    }
    tilt
}

struct State {
    tilt: Rotation3<f64>,
    yaw: f64,
    origin: Vector2<f64>,
    ground: Vec<Vector2<f64>>,
    height: f64,
}

impl State {
    fn pose(&self, start: [f64; 2]) -> Pose {
        let (roll, pitch, _) = self.tilt.euler_angles();
        let full = Rotation3::from_axis_angle(&Vector3::z_axis(), self.yaw) * self.tilt;
        let (_, _, yaw) = full.euler_angles();
        Pose {
            position: [
                start[0] + self.origin.x * CELL_SIZE_CM,
                start[1] + self.origin.y * CELL_SIZE_CM,
                self.height * CELL_SIZE_CM,
            ],
            roll: roll.to_degrees(),
            pitch: pitch.to_degrees(),
            yaw: yaw.to_degrees(),
        }
    }
}

/// Runs the robot on flat ground and records the core pose every sample
/// period, starting with the settled pose at t = 0.
pub fn simulate(body: &BodyGraph, controller: &Controller, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    let (sample_count, steps_per_sample) = cfg.schedule()?;
    let joints = controller.joints();
    let expected = body.joints().count();
    if joints.len() != expected {
        return Err(SimError::JointMismatch { driven: joints.len(), expected });
    }
    let kin = Kinematics::new(body, &joints);
    let n = kin.links.len();
    let mut angles = vec![0.0; kin.joint_count];
    let mut outputs = vec![0.0; kin.joint_count];
    let mut rot = vec![Matrix3::identity(); n];
    let mut pts = vec![Vector3::zeros(); n];
    let mut running = controller.start();

    let mut samples = Vec::with_capacity(sample_count + 1);
    running.initial(&mut outputs);
    for (a, o) in angles.iter_mut().zip(&outputs) {
        *a = o * MAX_JOINT_ANGLE;
    }
    kin.positions(&angles, &mut rot, &mut pts);
    let com = pts.iter().sum::<Vector3<f64>>() / n as f64;
    let tilt = settle(&pts, &com, Rotation3::identity(), SETTLE_ITERATIONS);
    let mut state = State { tilt, yaw: 0.0, origin: Vector2::zeros(), ground: vec![Vector2::zeros(); n], height: 0.0 };
    place(&mut state, &pts, None);
    samples.push(state.pose(cfg.start));

    let mut step = 0usize;
    let mut contact = Vec::with_capacity(n);
    for _ in 0..sample_count {
        for _ in 0..steps_per_sample {
            step += 1;
            let t = step as f64 * cfg.timestep;
            running.advance(t, cfg.timestep, &mut outputs);
            for (a, o) in angles.iter_mut().zip(&outputs) {
                *a = o * MAX_JOINT_ANGLE;
            }
            kin.positions(&angles, &mut rot, &mut pts);
            let com = pts.iter().sum::<Vector3<f64>>() / n as f64;
            state.tilt = settle(&pts, &com, state.tilt, MAX_TIPS_PER_STEP);
            place(&mut state, &pts, Some(&mut contact));
            if !(state.origin.x.is_finite() && state.origin.y.is_finite() && state.yaw.is_finite()) {
                return Err(SimError::NonFinite(step));
            }
        }
        samples.push(state.pose(cfg.start));
    }
    let traj = Trajectory::new(cfg.sample_period, samples);
    if !traj.is_finite() {
        return Err(SimError::NonFinite(step));
    }
    Ok(traj)
}

/// Places the tilted body on the ground. With a contact buffer, the planar
/// pose is fitted so the contact modules keep last step's ground positions;
/// without one the current planar pose is kept.
fn place(state: &mut State, pts: &[Vector3<f64>], contact: Option<&mut Vec<usize>>) {
    let tilted: Vec<Vector3<f64>> = pts.iter().map(|p| state.tilt * p).collect();
    let zmin = tilted.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    state.height = 0.5 - zmin;
    let yaw_rot = nalgebra::Rotation2::new(state.yaw);
    let rel: Vec<Vector2<f64>> = tilted.iter().map(|p| yaw_rot * p.xy()).collect();

    if let Some(contact) = contact {
        contact.clear();
        contact.extend((0..tilted.len()).filter(|&i| tilted[i].z <= zmin + CONTACT_TOLERANCE));
        let k = contact.len() as f64;
        let mean_rel = contact.iter().map(|&i| rel[i]).sum::<Vector2<f64>>() / k;
        let mean_old = contact.iter().map(|&i| state.ground[i]).sum::<Vector2<f64>>() / k;
        let (mut sin, mut cos) = (0.0, 0.0);
        for &i in contact.iter() {
            let a = rel[i] - mean_rel;
            let b = state.ground[i] - mean_old;
            sin += a.perp(&b);
            cos += a.dot(&b);
        }
        let theta = if contact.len() > 1 && (sin != 0.0 || cos != 0.0) { sin.atan2(cos) } else { 0.0 };
        let r = nalgebra::Rotation2::new(theta);
        state.origin = mean_old - r * mean_rel;
        state.yaw = wrap_angle(state.yaw + theta);
        for (g, p) in state.ground.iter_mut().zip(&rel) {
            *g = state.origin + r * p;
        }
    } else {
        for (g, p) in state.ground.iter_mut().zip(&rel) {
            *g = state.origin + p;
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let r = a.rem_euclid(t);
    if r > std::f64::consts::PI {
        r - t
    } else {
        r
    }
}
