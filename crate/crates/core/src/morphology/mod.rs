//! Robot modules, the body tree and its embedding in the integer grid.
//!
//! A body is a tree rooted at a single [`ModuleKind::Core`]. Every module is
//! attached to one slot of its parent, optionally rolled by 90 degrees about
//! the attachment axis. [`embed`] lays the tree out on a 3D grid of unit
//! cells, dropping any subtree whose module would land on an occupied cell.

mod grid;
pub mod text;

pub use grid::{embed, Cell, Frame, GridEmbedding, Placement};

use std::fmt;

/// Default upper bound on the number of modules in one body.
pub const DEFAULT_MODULE_CAP: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModuleKind {
    Core,
    Brick,
    Joint,
}

impl ModuleKind {
    /// Number of child slots.
    pub fn arity(self) -> usize {
        match self {
            ModuleKind::Core => 4,
            ModuleKind::Brick => 3,
            ModuleKind::Joint => 1,
        }
    }

    /// Faces of the child slots, indexed by slot.
    pub fn slot_faces(self) -> &'static [Face] {
        match self {
            ModuleKind::Core => &[Face::Front, Face::Left, Face::Right, Face::Back],
            ModuleKind::Brick => &[Face::Front, Face::Left, Face::Right],
            ModuleKind::Joint => &[Face::Front],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModuleKind::Core => "Core",
            ModuleKind::Brick => "Brick",
            ModuleKind::Joint => "Joint",
        }
    }
}

/// A side of a module, expressed in the module's own frame.
///
/// Slot indices are shared across kinds so that slot 0 is always the front,
/// slot 1 the left and slot 2 the right side. Only the Core has a back slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Front,
    Left,
    Right,
    Back,
}

pub const SLOT_FRONT: u8 = 0;
pub const SLOT_LEFT: u8 = 1;
pub const SLOT_RIGHT: u8 = 2;
pub const SLOT_BACK: u8 = 3;

/// Roll of an attached module about its attachment axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rotation {
    #[default]
    Deg0,
    Deg90,
}

impl Rotation {
    pub fn degrees(self) -> u32 {
        match self {
            Rotation::Deg0 => 0,
            Rotation::Deg90 => 90,
        }
    }

    pub fn from_degrees(deg: u32) -> Option<Self> {
        match deg {
            0 => Some(Rotation::Deg0),
            90 => Some(Rotation::Deg90),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Where a module hangs off its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Attachment {
    pub parent: NodeId,
    pub slot: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Module {
    pub kind: ModuleKind,
    pub rotation: Rotation,
    pub attachment: Option<Attachment>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttachError {
    #[error("parent {0} does not exist")]
    NoSuchParent(NodeId),
    #[error("slot {slot} out of range for {kind:?} (arity {arity})")]
    SlotOutOfRange { kind: ModuleKind, slot: u8, arity: usize },
    #[error("slot {slot} of {parent} is already occupied")]
    SlotOccupied { parent: NodeId, slot: u8 },
    #[error("a body can only hold a single core")]
    SecondCore,
}

/// Tree of modules. Node 0 is the root and every parent precedes its
/// children in storage order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyGraph {
    modules: Vec<Module>,
    children: Vec<[Option<NodeId>; 4]>,
}

impl Default for BodyGraph {
    fn default() -> Self {
        Self::core_only()
    }
}

impl BodyGraph {
    pub fn core_only() -> Self {
        BodyGraph {
            modules: vec![Module { kind: ModuleKind::Core, rotation: Rotation::Deg0, attachment: None }],
            children: vec![[None; 4]],
        }
    }

    /// Builds a body from raw modules without checking any invariant.
    ///
    /// Intended for deserialisation and for exercising [`validate`]. When two
    /// modules claim the same slot, the child table keeps the first one.
    pub fn from_modules_unchecked(modules: Vec<Module>) -> Self {
        let mut children = vec![[None; 4]; modules.len()];
        for (i, m) in modules.iter().enumerate() {
            if let Some(a) = m.attachment {
                if let Some(row) = children.get_mut(a.parent.0) {
                    if let Some(cell) = row.get_mut(a.slot as usize) {
                        cell.get_or_insert(NodeId(i));
                    }
                }
            }
        }
        BodyGraph { modules, children }
    }

    pub fn attach(
        &mut self,
        parent: NodeId,
        slot: u8,
        kind: ModuleKind,
        rotation: Rotation,
    ) -> Result<NodeId, AttachError> {
        let parent_kind = self.modules.get(parent.0).ok_or(AttachError::NoSuchParent(parent))?.kind;
        if kind == ModuleKind::Core {
            return Err(AttachError::SecondCore);
        }
        if slot as usize >= parent_kind.arity() {
            return Err(AttachError::SlotOutOfRange { kind: parent_kind, slot, arity: parent_kind.arity() });
        }
        if self.children[parent.0][slot as usize].is_some() {
            return Err(AttachError::SlotOccupied { parent, slot });
        }
        let id = NodeId(self.modules.len());
        self.modules.push(Module { kind, rotation, attachment: Some(Attachment { parent, slot }) });
        self.children.push([None; 4]);
        self.children[parent.0][slot as usize] = Some(id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn modules(&self) -> &[Module] {
        &self.modules
    }

    pub fn module(&self, id: NodeId) -> &Module {
        &self.modules[id.0]
    }

    pub fn kind(&self, id: NodeId) -> ModuleKind {
        self.modules[id.0].kind
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.modules[id.0].attachment.map(|a| a.parent)
    }

    pub fn child(&self, id: NodeId, slot: u8) -> Option<NodeId> {
        self.children.get(id.0).and_then(|c| c.get(slot as usize).copied().flatten())
    }

    /// `(slot, child)` pairs in slot order.
    pub fn children(&self, id: NodeId) -> impl Iterator<Item = (u8, NodeId)> + '_ {
        self.children[id.0].iter().enumerate().filter_map(|(s, c)| c.map(|c| (s as u8, c)))
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.modules.len()).map(NodeId)
    }

    pub fn joints(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids().filter(|&id| self.kind(id) == ModuleKind::Joint)
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.children(id).next().is_none()
    }

    /// Keeps only the modules for which `keep` is true, renumbering in storage
    /// order. The caller must keep every kept module's parent. Returns the new
    /// body and the old-to-new id map.
    pub fn retain(&self, keep: impl Fn(NodeId) -> bool) -> (BodyGraph, Vec<Option<NodeId>>) {
        let mut remap = vec![None; self.len()];
        let mut modules = Vec::with_capacity(self.len());
        for id in self.ids() {
            if !keep(id) {
                continue;
            }
            let mut m = self.modules[id.0];
            if let Some(a) = m.attachment {
                match remap[a.parent.0] {
                    Some(p) => m.attachment = Some(Attachment { parent: p, slot: a.slot }),
                    None => continue,
                }
            }
            remap[id.0] = Some(NodeId(modules.len()));
            modules.push(m);
        }
        (BodyGraph::from_modules_unchecked(modules), remap)
    }
}

/// Number of modules including the core.
pub fn count_modules(body: &BodyGraph) -> usize {
    body.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BodyLimits {
    pub max_modules: usize,
    pub forbid_joint_on_joint: bool,
}

impl Default for BodyLimits {
    fn default() -> Self {
        BodyLimits { max_modules: DEFAULT_MODULE_CAP, forbid_joint_on_joint: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyBody,
    RootNotCore,
    RootAttached,
    ExtraCore {
        node: NodeId,
    },
    ModuleCapExceeded {
        count: usize,
        cap: usize,
    },
    JointOnJoint {
        node: NodeId,
    },
    ParentMissing {
        node: NodeId,
    },
    /// Parent stored after the child; the graph may not be a tree.
    ParentOrder {
        node: NodeId,
    },
    SlotOutOfRange {
        node: NodeId,
        slot: u8,
        arity: usize,
    },
    SlotShared {
        parent: NodeId,
        slot: u8,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyBody => write!(f, "body has no modules"),
            Violation::RootNotCore => write!(f, "root is not a core"),
            Violation::RootAttached => write!(f, "root has a parent"),
            Violation::ExtraCore { node } => write!(f, "extra core at {node}"),
            Violation::ModuleCapExceeded { count, cap } => {
                write!(f, "module cap exceeded ({count} > {cap})")
            }
            Violation::JointOnJoint { node } => write!(f, "joint {node} attached to a joint"),
            Violation::ParentMissing { node } => write!(f, "{node} has no parent"),
            Violation::ParentOrder { node } => write!(f, "{node} precedes its parent"),
            Violation::SlotOutOfRange { node, slot, arity } => {
                write!(f, "{node} uses slot {slot} of a parent with {arity} slots")
            }
            Violation::SlotShared { parent, slot } => {
                write!(f, "slot {slot} of {parent} holds more than one child")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every broken body invariant. An empty report means the body is valid.
pub fn validate(body: &BodyGraph, limits: &BodyLimits) -> ValidationReport {
    let mut violations = Vec::new();
    let modules = body.modules();
    if modules.is_empty() {
        violations.push(Violation::EmptyBody);
        return ValidationReport { violations };
    }
    if modules[0].kind != ModuleKind::Core {
        violations.push(Violation::RootNotCore);
    }
    if modules[0].attachment.is_some() {
        violations.push(Violation::RootAttached);
    }
    if modules.len() > limits.max_modules {
        violations.push(Violation::ModuleCapExceeded { count: modules.len(), cap: limits.max_modules });
    }
    let mut used = std::collections::HashSet::new();
    for (i, m) in modules.iter().enumerate().skip(1) {
        let node = NodeId(i);
        if m.kind == ModuleKind::Core {
            violations.push(Violation::ExtraCore { node });
        }
        let Some(a) = m.attachment else {
            violations.push(Violation::ParentMissing { node });
            continue;
        };
        if a.parent.0 >= i {
            violations.push(Violation::ParentOrder { node });
            continue;
        }
        let parent = &modules[a.parent.0];
        let arity = parent.kind.arity();
        if a.slot as usize >= arity {
            violations.push(Violation::SlotOutOfRange { node, slot: a.slot, arity });
        }
        if !used.insert((a.parent, a.slot)) {
            violations.push(Violation::SlotShared { parent: a.parent, slot: a.slot });
        }
        if limits.forbid_joint_on_joint && m.kind == ModuleKind::Joint && parent.kind == ModuleKind::Joint {
            violations.push(Violation::JointOnJoint { node });
        }
    }
    ValidationReport { violations }
}
