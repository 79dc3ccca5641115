//! Genotype encodings and the common development pipeline.

pub mod lsystem;
pub mod tree;

use rand::Rng;

use crate::controller::{Controller, CpgNetwork};
use crate::cppn::{crossover_cppn, mutate_cppn, CppnError, CppnGenome, CppnRates, Fitter, InnovationTracker};
use crate::morphology::{embed, BodyGraph, GridEmbedding, NodeId};

use lsystem::{crossover_grammar, decode_lsystem, mutate_grammar, random_grammar, Grammar, LSystemLimits};
use tree::{crossover_tree, decode_tree, mutate_tree, random_tree, TreeGenotype, TreeLimits, TreeRates};

/// A developed robot: the modules that could be placed, their placement, and
/// the controller driving its joints.
#[derive(Debug, Clone, PartialEq)]
pub struct Phenotype {
    pub body: BodyGraph,
    pub embedding: GridEmbedding,
    pub controller: Controller,
    /// Modules of the decoded body dropped because they collided.
    pub omitted: usize,
}

/// Removes modules that the grid embedding had to omit, along with their
/// subtrees. Returns the pruned body and the old-to-new id map.
pub fn prune_unembedded(body: &BodyGraph) -> (BodyGraph, Vec<Option<NodeId>>) {
    let e = embed(body);
    if e.omitted() == 0 {
        return (body.clone(), body.ids().map(Some).collect());
    }
    body.retain(|id| e.is_embedded(id))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DevelopError {
    #[error(transparent)]
    Cppn(#[from] CppnError),
}

/// Which variation steps changed the offspring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReproductionReport {
    pub body_mutated: bool,
    pub brain_mutated: bool,
}

/// A genotype representation with its variation operators.
///
/// Methods take `&mut self` so that encodings may keep run-wide state (the
/// CPPN innovation history).
pub trait Encoding {
    type Genotype: Clone + Send + Sync;

    fn name(&self) -> &'static str;

    fn random<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Self::Genotype;

    /// Crossover of `a` and `b` followed by mutation; `fitness_*` decide
    /// which parent counts as fitter where that matters.
    fn reproduce<R: Rng + ?Sized>(
        &mut self,
        a: (&Self::Genotype, f64),
        b: (&Self::Genotype, f64),
        mutate: bool,
        rng: &mut R,
    ) -> (Self::Genotype, ReproductionReport);

    fn develop(&self, g: &Self::Genotype) -> Result<Phenotype, DevelopError>;

    /// Single-line or multi-line text that round-trips the genotype.
    fn describe(&self, g: &Self::Genotype) -> String;
}

#[derive(Debug, Clone, Default)]
pub struct TreeEncoding {
    pub limits: TreeLimits,
    pub rates: TreeRates,
}

impl TreeEncoding {
    pub fn new(limits: TreeLimits, rates: TreeRates) -> Self {
        TreeEncoding { limits, rates }
    }
}

impl Encoding for TreeEncoding {
    type Genotype = TreeGenotype;

    fn name(&self) -> &'static str {
        "tree"
    }

    fn random<R: Rng + ?Sized>(&mut self, rng: &mut R) -> TreeGenotype {
        random_tree(rng, &self.limits)
    }

    fn reproduce<R: Rng + ?Sized>(
        &mut self,
        a: (&TreeGenotype, f64),
        b: (&TreeGenotype, f64),
        mutate: bool,
        rng: &mut R,
    ) -> (TreeGenotype, ReproductionReport) {
        let child = crossover_tree(a.0, b.0, rng, &self.limits);
        if !mutate {
            return (child, ReproductionReport::default());
        }
        let (child, r) = mutate_tree(&child, rng, &self.rates, &self.limits);
        (child, ReproductionReport { body_mutated: r.body_mutation(), brain_mutated: r.params > 0 })
    }

    fn develop(&self, g: &TreeGenotype) -> Result<Phenotype, DevelopError> {
        let (raw, brain) = decode_tree(g);
        let (body, remap) = prune_unembedded(&raw);
        let mut controller = Controller::Sine(brain);
        controller.remap(&remap);
        let embedding = embed(&body);
        Ok(Phenotype { omitted: raw.len() - body.len(), body, embedding, controller })
    }

    fn describe(&self, g: &TreeGenotype) -> String {
        g.to_text()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LSystemGenotype {
    pub grammar: Grammar,
    pub cppn: CppnGenome,
}

#[derive(Debug, Clone)]
pub struct LSystemEncoding {
    pub limits: LSystemLimits,
    /// Aggregate grammar mutation probability.
    pub grammar_rate: f64,
    pub cppn_rates: CppnRates,
    /// Hidden nodes inserted into each initial CPPN.
    pub initial_hidden: usize,
    pub tracker: InnovationTracker,
}

impl Default for LSystemEncoding {
    fn default() -> Self {
        LSystemEncoding {
            limits: LSystemLimits::default(),
            grammar_rate: 0.59,
            cppn_rates: CppnRates::default(),
            initial_hidden: 2,
            tracker: InnovationTracker::default(),
        }
    }
}

impl Encoding for LSystemEncoding {
    type Genotype = LSystemGenotype;

    fn name(&self) -> &'static str {
        "lsystem"
    }

    fn random<R: Rng + ?Sized>(&mut self, rng: &mut R) -> LSystemGenotype {
        let grammar = random_grammar(rng, &self.limits);
        let cppn = CppnGenome::random(&mut self.tracker, self.initial_hidden, rng);
        LSystemGenotype { grammar, cppn }
    }

    fn reproduce<R: Rng + ?Sized>(
        &mut self,
        a: (&LSystemGenotype, f64),
        b: (&LSystemGenotype, f64),
        mutate: bool,
        rng: &mut R,
    ) -> (LSystemGenotype, ReproductionReport) {
        let grammar = crossover_grammar(&a.0.grammar, &b.0.grammar, rng);
        let fitter = match a.1.partial_cmp(&b.1) {
            Some(std::cmp::Ordering::Less) => Fitter::B,
            Some(std::cmp::Ordering::Greater) => Fitter::A,
            _ if rng.random_bool(0.5) => Fitter::A,
            _ => Fitter::B,
        };
        let cppn = crossover_cppn(&a.0.cppn, &b.0.cppn, fitter, rng);
        if !mutate {
            return (LSystemGenotype { grammar, cppn }, ReproductionReport::default());
        }
        let (grammar, gr) = mutate_grammar(&grammar, rng, self.grammar_rate, &self.limits);
        let (cppn, cr) = mutate_cppn(&cppn, &mut self.tracker, &self.cppn_rates, rng);
        let brain_mutated = cr.weights || cr.add_connection || cr.add_node || cr.toggle || cr.activation;
        (LSystemGenotype { grammar, cppn }, ReproductionReport { body_mutated: gr.op.is_some(), brain_mutated })
    }

    fn develop(&self, g: &LSystemGenotype) -> Result<Phenotype, DevelopError> {
        let raw_len = {
            let s = lsystem::expand(&g.grammar, self.limits.iterations, self.limits.max_sentence);
            lsystem::decode_sentence(&s, &self.limits.body).len()
        };
        let (body, net): (BodyGraph, CpgNetwork) = decode_lsystem(&g.grammar, &g.cppn, &self.limits)?;
        let embedding = embed(&body);
        Ok(Phenotype { omitted: raw_len - body.len(), body, embedding, controller: Controller::Cpg(net) })
    }

    fn describe(&self, g: &LSystemGenotype) -> String {
        format!("{}---\n{}", g.grammar.to_text(), g.cppn.to_text())
    }
}
