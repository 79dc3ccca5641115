use std::collections::{BTreeMap, VecDeque};
use std::ops::{Add, Neg, Sub};

use super::{BodyGraph, Face, NodeId, Rotation};

/// Integer grid coordinate, also used for unit axis vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Cell {
    pub const ORIGIN: Cell = Cell { x: 0, y: 0, z: 0 };

    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Cell { x, y, z }
    }

    pub fn cross(self, o: Cell) -> Cell {
        Cell::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn manhattan(self, o: Cell) -> i32 {
        (self.x - o.x).abs() + (self.y - o.y).abs() + (self.z - o.z).abs()
    }

    pub fn to_array(self) -> [i32; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Cell {
    type Output = Cell;
    fn add(self, o: Cell) -> Cell {
        Cell::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Cell {
    type Output = Cell;
    fn sub(self, o: Cell) -> Cell {
        Cell::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Cell {
    type Output = Cell;
    fn neg(self) -> Cell {
        Cell::new(-self.x, -self.y, -self.z)
    }
}

/// Right-handed orientation of a module: `right = front × up`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    pub right: Cell,
    pub front: Cell,
    pub up: Cell,
}

impl Default for Frame {
    fn default() -> Self {
        Frame::IDENTITY
    }
}

impl Frame {
    pub const IDENTITY: Frame = Frame { right: Cell::new(1, 0, 0), front: Cell::new(0, 1, 0), up: Cell::new(0, 0, 1) };

    pub fn direction(&self, face: Face) -> Cell {
        match face {
            Face::Front => self.front,
            Face::Back => -self.front,
            Face::Right => self.right,
            Face::Left => -self.right,
        }
    }

    /// Frame of a module attached on `face`: it faces away from the parent
    /// and keeps the parent's up axis, then rolls about its front axis.
    pub fn child(&self, face: Face, rotation: Rotation) -> Frame {
        let front = self.direction(face);
        let up = self.up;
        let right = front.cross(up);
        match rotation {
            Rotation::Deg0 => Frame { right, front, up },
            Rotation::Deg90 => Frame { right: -up, front, up: right },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Placement {
    pub cell: Cell,
    pub frame: Frame,
}

/// Assignment of modules to grid cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridEmbedding {
    cells: BTreeMap<Cell, NodeId>,
    placements: Vec<Option<Placement>>,
    omitted: usize,
}

impl GridEmbedding {
    pub fn cells(&self) -> &BTreeMap<Cell, NodeId> {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn placement(&self, id: NodeId) -> Option<&Placement> {
        self.placements.get(id.0).and_then(Option::as_ref)
    }

    pub fn is_embedded(&self, id: NodeId) -> bool {
        self.placement(id).is_some()
    }

    /// Modules dropped because they, or an ancestor, collided.
    pub fn omitted(&self) -> usize {
        self.omitted
    }

    /// Inclusive `(min, max)` corners of the occupied cells.
    pub fn bounds(&self) -> (Cell, Cell) {
        let mut it = self.cells.keys();
        let first = *it.next().expect("embedding always holds the core");
        it.fold((first, first), |(lo, hi), c| {
            (
                Cell::new(lo.x.min(c.x), lo.y.min(c.y), lo.z.min(c.z)),
                Cell::new(hi.x.max(c.x), hi.y.max(c.y), hi.z.max(c.z)),
            )
        })
    }
}

/// Lays out the body breadth-first, children in slot order.
///
/// A module whose cell is already taken is dropped together with its
/// subtree; the dropped total is available through
/// [`GridEmbedding::omitted`].
pub fn embed(body: &BodyGraph) -> GridEmbedding {
    let mut cells = BTreeMap::new();
    let mut placements = vec![None; body.len()];
    let mut embedded = 0usize;
    if body.is_empty() {
        return GridEmbedding { cells, placements, omitted: 0 };
    }
    let root = Placement { cell: Cell::ORIGIN, frame: Frame::IDENTITY };
    cells.insert(root.cell, NodeId::ROOT);
    placements[0] = Some(root);
    embedded += 1;

    let mut queue = VecDeque::from([NodeId::ROOT]);
    while let Some(id) = queue.pop_front() {
        let here = placements[id.0].expect("queued nodes are placed");
        let faces = body.kind(id).slot_faces();
        for (slot, child) in body.children(id) {
            let Some(&face) = faces.get(slot as usize) else { continue };
            let cell = here.cell + here.frame.direction(face);
            if cells.contains_key(&cell) {
                continue;
            }
            let frame = here.frame.child(face, body.module(child).rotation);
            cells.insert(cell, child);
            placements[child.0] = Some(Placement { cell, frame });
            embedded += 1;
            queue.push_back(child);
        }
    }
    GridEmbedding { cells, placements, omitted: body.len() - embedded }
}
