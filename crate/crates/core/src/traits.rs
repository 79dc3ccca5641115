//! The six phenotypic traits: four morphological, two behavioural.

use std::fmt;
use std::str::FromStr;

use crate::morphology::{count_modules, BodyGraph, GridEmbedding, NodeId};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Trait {
    Proportion,
    Size,
    Limbs,
    Coverage,
    Speed,
    Balance,
}

impl Trait {
    pub const ALL: [Trait; 6] =
        [Trait::Proportion, Trait::Size, Trait::Limbs, Trait::Coverage, Trait::Speed, Trait::Balance];

    pub fn name(self) -> &'static str {
        match self {
            Trait::Proportion => "proportion",
            Trait::Size => "size",
            Trait::Limbs => "limbs",
            Trait::Coverage => "coverage",
            Trait::Speed => "speed",
            Trait::Balance => "balance",
        }
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown trait `{0}`")]
pub struct UnknownTrait(pub String);

impl FromStr for Trait {
    type Err = UnknownTrait;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Trait::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| UnknownTrait(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraitVector {
    pub proportion: f64,
    pub size: usize,
    pub limbs: f64,
    pub coverage: f64,
    /// cm/s
    pub speed: f64,
    pub balance: f64,
}

impl TraitVector {
    pub fn get(&self, t: Trait) -> f64 {
        match t {
            Trait::Proportion => self.proportion,
            Trait::Size => self.size as f64,
            Trait::Limbs => self.limbs,
            Trait::Coverage => self.coverage,
            Trait::Speed => self.speed,
            Trait::Balance => self.balance,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        Trait::ALL.map(|t| self.get(t))
    }

    /// Builds a vector from values in [`Trait::ALL`] order. Size is rounded.
    pub fn from_array(v: [f64; 6]) -> Self {
        TraitVector {
            proportion: v[0],
            size: v[1].round().max(0.0) as usize,
            limbs: v[2],
            coverage: v[3],
            speed: v[4],
            balance: v[5],
        }
    }
}

/// Short over long side of the top-down (x–y) bounding box.
pub fn proportion(e: &GridEmbedding) -> f64 {
    let (lo, hi) = e.bounds();
    let w = (hi.x - lo.x + 1) as f64;
    let d = (hi.y - lo.y + 1) as f64;
    w.min(d) / w.max(d)
}

/// Occupied cells over the cell volume of the 3D bounding box.
pub fn coverage(e: &GridEmbedding) -> f64 {
    let (lo, hi) = e.bounds();
    let volume = (hi.x - lo.x + 1) as f64 * (hi.y - lo.y + 1) as f64 * (hi.z - lo.z + 1) as f64;
    e.cell_count() as f64 / volume
}

/// Largest possible leaf count over valid bodies of `modules` modules.
///
/// The root contributes four slots and every further branching module three,
/// so `modules - 1 <= 4 + 3 * (internal - 1)`. Matches exhaustive
/// enumeration for small sizes (see the tests).
pub fn max_leaves(modules: usize) -> usize {
    if modules <= 1 {
        return 0;
    }
    let internal = (modules - 2).div_ceil(3).max(1);
    modules - internal
}

/// Leaf modules (the core excluded) over [`max_leaves`]; 0 for a bare core.
pub fn limbs(body: &BodyGraph) -> f64 {
    let m = count_modules(body);
    if m <= 1 {
        return 0.0;
    }
    let leaves = body.ids().filter(|&id| id != NodeId::ROOT && body.is_leaf(id)).count();
    leaves as f64 / max_leaves(m) as f64
}

/// Planar displacement from first to last sample over the window length.
pub fn speed(t: &Trajectory) -> f64 {
    let [x0, y0, _] = t.first().position;
    let [x1, y1, _] = t.last().position;
    let duration = t.duration();
    if duration <= 0.0 {
        return 0.0;
    }
    (x1 - x0).hypot(y1 - y0) / duration
}

/// Magnitude of an angle folded into [0, 180].
pub fn fold_angle(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        360.0 - r
    } else {
        r
    }
}

/// `1 - sum(|roll| + |pitch|) / (180 * 2 * T)` over all `T` samples.
pub fn balance(t: &Trajectory) -> f64 {
    let n = t.samples.len();
    if n == 0 {
        return 1.0;
    }
    let tilt: f64 = t.samples.iter().map(|p| fold_angle(p.roll) + fold_angle(p.pitch)).sum();
    1.0 - tilt / (180.0 * 2.0 * n as f64)
}

pub fn trait_vector(body: &BodyGraph, e: &GridEmbedding, t: &Trajectory) -> TraitVector {
    TraitVector {
        proportion: proportion(e),
        size: count_modules(body),
        limbs: limbs(body),
        coverage: coverage(e),
        speed: speed(t),
        balance: balance(t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::{embed, ModuleKind, Rotation, SLOT_FRONT, SLOT_LEFT, SLOT_RIGHT};
    use crate::trajectory::Pose;

    fn line(n: usize) -> BodyGraph {
        let mut body = BodyGraph::core_only();
        let mut p = NodeId::ROOT;
        for _ in 1..n {
            p = body.attach(p, SLOT_FRONT, ModuleKind::Brick, Rotation::Deg0).unwrap();
        }
        body
    }

    fn l_shape() -> BodyGraph {
        let mut body = line(2);
        body.attach(NodeId::ROOT, SLOT_RIGHT, ModuleKind::Brick, Rotation::Deg0).unwrap();
        body
    }

    fn flat(n: usize, roll: f64, pitch: f64) -> Trajectory {
        Trajectory::new(0.1, vec![Pose { roll, pitch, ..Default::default() }; n])
    }

    #[test]
    fn proportion_cases() {
        assert_eq!(proportion(&embed(&line(1))), 1.0);
        assert_eq!(proportion(&embed(&line(3))), 1.0 / 3.0);
        assert_eq!(proportion(&embed(&l_shape())), 1.0);
    }

    #[test]
    fn coverage_cases() {
        assert_eq!(coverage(&embed(&line(1))), 1.0);
        assert_eq!(coverage(&embed(&line(2))), 1.0);
        assert_eq!(coverage(&embed(&l_shape())), 0.75);
    }

    #[test]
    fn limbs_cases() {
        assert_eq!(limbs(&line(1)), 0.0);
        assert_eq!(limbs(&line(2)), 1.0);
        // core with a straight leg of 8: one leaf out of max_leaves(9) = 6
        let body = line(9);
        assert_eq!(max_leaves(9), 6);
        assert_eq!(limbs(&body), 1.0 / 6.0);
    }

    #[test]
    fn nine_module_body_with_three_leaves() {
        let mut body = BodyGraph::core_only();
        let mut tips = Vec::new();
        for slot in [SLOT_FRONT, SLOT_LEFT, SLOT_RIGHT] {
            let mut p = body.attach(NodeId::ROOT, slot, ModuleKind::Brick, Rotation::Deg0).unwrap();
            p = body.attach(p, SLOT_FRONT, ModuleKind::Joint, Rotation::Deg0).unwrap();
            tips.push(body.attach(p, 0, ModuleKind::Brick, Rotation::Deg0).unwrap());
        }
        assert_eq!(body.len(), 10);
        let (body, _) = body.retain(|id| id != tips[2]);
        assert_eq!(body.len(), 9);
        assert_eq!(limbs(&body), 3.0 / 6.0);
    }

    #[test]
    fn speed_cases() {
        let still = Trajectory::stationary(0.1, 301);
        assert_eq!(speed(&still), 0.0);
        let mut moved = Trajectory::stationary(1.0, 31);
        moved.samples[30].position = [30.0, 40.0, 0.0];
        assert!((speed(&moved) - 50.0 / 30.0).abs() < 1e-12);
        let circle: Vec<Pose> = (0..=100)
            .map(|i| {
                let a = i as f64 / 100.0 * std::f64::consts::TAU;
                Pose { position: [a.cos() * 10.0 - 10.0, a.sin() * 10.0, 0.0], ..Default::default() }
            })
            .collect();
        assert!(speed(&Trajectory::new(0.3, circle)) < 1e-12);
    }

    #[test]
    fn balance_anchors() {
        assert_eq!(balance(&flat(301, 0.0, 0.0)), 1.0);
        assert_eq!(balance(&flat(301, 180.0, 180.0)), 0.0);
        assert_eq!(balance(&flat(301, 90.0, 0.0)), 0.75);
        assert_eq!(balance(&flat(11, -90.0, 0.0)), 0.75);
        assert_eq!(fold_angle(270.0), 90.0);
        assert_eq!(fold_angle(-181.0), 179.0);
    }

    #[test]
    fn trait_vector_of_idle_core() {
        let body = line(1);
        let e = embed(&body);
        let tv = trait_vector(&body, &e, &Trajectory::stationary(0.1, 301));
        assert_eq!(tv, TraitVector { proportion: 1.0, size: 1, limbs: 0.0, coverage: 1.0, speed: 0.0, balance: 1.0 });
        assert_eq!(TraitVector::from_array(tv.to_array()), tv);
        assert_eq!("speed".parse::<Trait>(), Ok(Trait::Speed));
    }
}
