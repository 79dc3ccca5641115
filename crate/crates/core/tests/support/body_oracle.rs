#![allow(dead_code)]

//! Trait and geometry oracles that share no code with the library beyond
//! the body data structure.

use std::collections::BTreeSet;

use modbot_core::morphology::{BodyGraph, ModuleKind, NodeId, Rotation};
use modbot_core::traits::fold_angle;
use modbot_core::trajectory::Trajectory;
use nalgebra::{Matrix3, Vector3};

/// Largest leaf count of a subtree with `n` nodes whose root has `arity`
/// slots, when every non-root node may have up to three children.
fn best_leaves(n: usize, arity: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
    if n == 1 {
        return 1;
    }
    if let Some(v) = memo[n][arity] {
        return v;
    }
    // split n - 1 nodes over at most `arity` child subtrees
    let mut best_split = vec![vec![None; n]; arity + 1];
    best_split[0][0] = Some(0usize);
    for k in 1..=arity {
        for used in 0..n {
            let mut best = best_split[k - 1][used];
            for take in 1..=used {
                if let Some(rest) = best_split[k - 1][used - take] {
                    let cand = rest + best_leaves(take, 3, memo);
                    best = Some(best.map_or(cand, |b: usize| b.max(cand)));
                }
            }
            best_split[k][used] = best;
        }
    }
    let v = best_split[arity][n - 1].expect("reachable");
    memo[n][arity] = Some(v);
    v
}

pub fn max_leaves_dp(m: usize) -> usize {
    if m <= 1 {
        return 0;
    }
    let mut memo = vec![vec![None; 5]; m + 1];
    best_leaves(m, 4, &mut memo)
}

/// Exhaustive search over every slot-labelled tree of bricks.
pub fn max_leaves_exhaustive(m: usize) -> usize {
    fn grow(body: &BodyGraph, m: usize, best: &mut usize, seen: &mut BTreeSet<String>) {
        if body.len() == m {
            let leaves = body.ids().filter(|&id| id != NodeId::ROOT && body.is_leaf(id)).count();
            *best = (*best).max(leaves);
            return;
        }
        let key = modbot_core::morphology::text::body_to_text(body);
        if !seen.insert(key) {
            return;
        }
        for id in body.ids() {
            for slot in 0..body.kind(id).arity() as u8 {
                if body.child(id, slot).is_none() {
                    let mut next = body.clone();
                    next.attach(id, slot, ModuleKind::Brick, Rotation::Deg0).unwrap();
                    grow(&next, m, best, seen);
                }
            }
        }
    }
    let mut best = 0;
    grow(&BodyGraph::core_only(), m, &mut best, &mut BTreeSet::new());
    best
}

fn face_turn(kind: ModuleKind, slot: u8) -> Matrix3<i32> {
    // columns: images of local right, front, up
    let quarter = |k: i32| match k.rem_euclid(4) {
        0 => Matrix3::identity(),
        1 => Matrix3::new(0, -1, 0, 1, 0, 0, 0, 0, 1),
        2 => Matrix3::new(-1, 0, 0, 0, -1, 0, 0, 0, 1),
        _ => Matrix3::new(0, 1, 0, -1, 0, 0, 0, 0, 1),
    };
    match (kind, slot) {
        (_, 0) => quarter(0),
        (ModuleKind::Joint, _) => panic!("joints have one slot"),
        (_, 1) => quarter(1),
        (_, 2) => quarter(-1),
        (ModuleKind::Core, 3) => quarter(2),
        _ => panic!("bad slot"),
    }
}

fn roll(r: Rotation) -> Matrix3<i32> {
    match r {
        Rotation::Deg0 => Matrix3::identity(),
        Rotation::Deg90 => Matrix3::new(0, 0, 1, 0, 1, 0, -1, 0, 0),
    }
}

/// Cells of every module, from composed rotation matrices.
pub fn cells(body: &BodyGraph) -> Vec<Vector3<i32>> {
    let mut out = vec![Vector3::<i32>::zeros(); body.len()];
    let mut frames = vec![Matrix3::<i32>::identity(); body.len()];
    for id in body.ids().skip(1) {
        let a = body.module(id).attachment.unwrap();
        let parent_kind = body.kind(a.parent);
        let turn = face_turn(parent_kind, a.slot);
        let pf = frames[a.parent.0];
        let dir = pf * turn * Vector3::new(0, 1, 0);
        out[id.0] = out[a.parent.0] + dir;
        frames[id.0] = pf * turn * roll(body.module(id).rotation);
    }
    out
}

/// Proportion, size, limbs and coverage.
pub fn oracle_traits(body: &BodyGraph) -> (f64, usize, f64, f64) {
    let cs = cells(body);
    let unique: BTreeSet<[i32; 3]> = cs.iter().map(|c| [c.x, c.y, c.z]).collect();
    assert_eq!(unique.len(), cs.len(), "developed bodies never overlap");
    let span = |k: usize| {
        let lo = cs.iter().map(|c| c[k]).min().unwrap();
        let hi = cs.iter().map(|c| c[k]).max().unwrap();
        (hi - lo + 1) as f64
    };
    let (w, d, h) = (span(0), span(1), span(2));
    let proportion = w.min(d) / w.max(d);
    let coverage = cs.len() as f64 / (w * d * h);
    let m = body.len();
    let mut has_child = vec![false; m];
    for id in body.ids().skip(1) {
        has_child[body.module(id).attachment.unwrap().parent.0] = true;
    }
    let leaves = (1..m).filter(|&i| !has_child[i]).count();
    let limbs = if m == 1 { 0.0 } else { leaves as f64 / max_leaves_dp(m) as f64 };
    (proportion, m, limbs, coverage)
}

pub fn oracle_speed_balance(t: &Trajectory) -> (f64, f64) {
    let a = t.samples.first().unwrap().position;
    let b = t.samples.last().unwrap().position;
    let span = (t.samples.len() - 1) as f64 * t.sample_period;
    let speed = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt() / span;
    let tilt: f64 = t.samples.iter().map(|p| fold_angle(p.roll) + fold_angle(p.pitch)).sum();
    (speed, 1.0 - tilt / (360.0 * t.samples.len() as f64))
}
