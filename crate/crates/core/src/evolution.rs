//! Generational evolution with tournament selection and full lineage.

use rand::Rng;
use rayon::prelude::*;

use crate::encoding::{Encoding, Phenotype};
use crate::morphology::text::body_to_text;
use crate::sim::{simulate, SimConfig};
use crate::traits::{trait_vector, TraitVector};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Best of `k` distinct individuals, ties broken uniformly.
    Tournament(usize),
    /// Uniform random parents; the null model for selection wiring.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub selection: Selection,
    pub mutate: bool,
    pub sim: SimConfig,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 100,
            generations: 50,
            selection: Selection::Tournament(2),
            mutate: true,
            sim: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<G> {
    pub id: u64,
    pub generation: usize,
    pub genotype: G,
    pub traits: TraitVector,
    /// Equal to `traits.speed`.
    pub fitness: f64,
}

/// What gets persisted about an individual.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualRecord {
    pub id: u64,
    pub traits: TraitVector,
    pub fitness: f64,
    pub body: String,
    pub genotype: String,
    pub omitted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationTable {
    pub generation: usize,
    pub individuals: Vec<IndividualRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineageRecord {
    pub offspring: u64,
    pub generation: usize,
    pub parents: [u64; 2],
    pub offspring_traits: TraitVector,
    pub parent_traits: [TraitVector; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunEvent {
    DevelopFailed { id: u64, generation: usize, message: String },
    SimulationFailed { id: u64, generation: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub generations: Vec<GenerationTable>,
    /// `lineage[g - 1]` holds the records of generation `g`.
    pub lineage: Vec<Vec<LineageRecord>>,
    pub events: Vec<RunEvent>,
    pub evaluations: usize,
}

impl RunLog {
    pub fn lineage_of(&self, generation: usize) -> &[LineageRecord] {
        generation.checked_sub(1).and_then(|g| self.lineage.get(g)).map_or(&[], Vec::as_slice)
    }
}

/// Index of the winner of one tournament over `fitness`.
pub fn tournament_select<R: Rng + ?Sized>(fitness: &[f64], k: usize, rng: &mut R) -> usize {
    assert!(!fitness.is_empty(), "tournament over an empty population");
    let k = k.clamp(1, fitness.len());
    let entrants = rand::seq::index::sample(rng, fitness.len(), k).into_vec();
    let best = entrants.iter().map(|&i| fitness[i]).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = entrants.into_iter().filter(|&i| fitness[i] == best).collect();
    tied[rng.random_range(0..tied.len())]
}

fn select<R: Rng + ?Sized>(fitness: &[f64], selection: Selection, rng: &mut R) -> usize {
    match selection {
        Selection::Tournament(k) => tournament_select(fitness, k, rng),
        Selection::Uniform => rng.random_range(0..fitness.len()),
    }
}

/// Outcome of developing and simulating one genotype.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub phenotype: Option<Phenotype>,
    pub trajectory: Trajectory,
    pub traits: TraitVector,
    pub error: Option<RunEvent>,
}

pub fn evaluate<E: Encoding + Sync>(
    enc: &E,
    g: &E::Genotype,
    sim: &SimConfig,
    id: u64,
    generation: usize,
) -> Evaluation {
    let samples = sim.sample_count().unwrap_or(1);
    let idle = || Trajectory::stationary(sim.sample_period, samples);
    let p = match enc.develop(g) {
        Ok(p) => p,
        Err(e) => {
            let body = crate::morphology::BodyGraph::core_only();
            let em = crate::morphology::embed(&body);
            return Evaluation {
                phenotype: None,
                traits: trait_vector(&body, &em, &idle()),
                trajectory: idle(),
                error: Some(RunEvent::DevelopFailed { id, generation, message: e.to_string() }),
            };
        }
    };
    let (trajectory, error) = match simulate(&p.body, &p.controller, sim) {
        Ok(t) => (t, None),
        Err(e) => (idle(), Some(RunEvent::SimulationFailed { id, generation, message: e.to_string() })),
    };
    let mut traits = trait_vector(&p.body, &p.embedding, &trajectory);
    if error.is_some() {
        traits.speed = 0.0;
    }
    Evaluation { phenotype: Some(p), trajectory, traits, error }
}

/// Called once per evaluated individual, in id order.
pub type Observer<'a, G> = dyn FnMut(&Individual<G>, &Evaluation) + 'a;

struct Engine<'a, E: Encoding> {
    enc: &'a mut E,
    cfg: &'a EvolutionConfig,
    log: RunLog,
    next_id: u64,
}

impl<E: Encoding + Sync> Engine<'_, E> {
    fn evaluate_all(
        &mut self,
        generation: usize,
        genotypes: Vec<E::Genotype>,
        observer: &mut Observer<'_, E::Genotype>,
    ) -> Vec<Individual<E::Genotype>> {
        let first = self.next_id;
        self.next_id += genotypes.len() as u64;
        let enc: &E = self.enc;
        let evals: Vec<Evaluation> = genotypes
            .par_iter()
            .enumerate()
            .map(|(i, g)| evaluate(enc, g, &self.cfg.sim, first + i as u64, generation))
            .collect();
        self.log.evaluations += genotypes.len();
        let mut table = GenerationTable { generation, individuals: Vec::with_capacity(genotypes.len()) };
        let mut pop = Vec::with_capacity(genotypes.len());
        for (i, (genotype, ev)) in genotypes.into_iter().zip(evals).enumerate() {
            let id = first + i as u64;
            let ind = Individual { id, generation, traits: ev.traits, fitness: ev.traits.speed, genotype };
            observer(&ind, &ev);
            if let Some(e) = ev.error.clone() {
                self.log.events.push(e);
            }
            table.individuals.push(IndividualRecord {
                id,
                traits: ev.traits,
                fitness: ind.fitness,
                body: ev.phenotype.as_ref().map_or_else(|| "Core(0)".into(), |p| body_to_text(&p.body)),
                genotype: self.enc.describe(&ind.genotype),
                omitted: ev.phenotype.as_ref().map_or(0, |p| p.omitted),
            });
            pop.push(ind);
        }
        self.log.generations.push(table);
        pop
    }

    fn offspring<R: Rng + ?Sized>(
        &mut self,
        pop: &[Individual<E::Genotype>],
        rng: &mut R,
    ) -> (Vec<E::Genotype>, Vec<[usize; 2]>) {
        let fitness: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
        let mut children = Vec::with_capacity(pop.len());
        let mut parents = Vec::with_capacity(pop.len());
        for _ in 0..self.cfg.population_size {
            let a = select(&fitness, self.cfg.selection, rng);
            let mut b = select(&fitness, self.cfg.selection, rng);
            while b == a && pop.len() > 1 {
                b = select(&fitness, self.cfg.selection, rng);
            }
            let (child, _) = self.enc.reproduce(
                (&pop[a].genotype, pop[a].fitness),
                (&pop[b].genotype, pop[b].fitness),
                self.cfg.mutate,
                rng,
            );
            children.push(child);
            parents.push([a, b]);
        }
        (children, parents)
    }
}

/// Evaluates a random generation 0, then replaces the whole population
/// `cfg.generations` times.
pub fn run<E: Encoding + Sync, R: Rng + ?Sized>(enc: &mut E, cfg: &EvolutionConfig, rng: &mut R) -> RunLog {
    run_observed(enc, cfg, rng, &mut |_, _| {})
}

pub fn run_observed<E: Encoding + Sync, R: Rng + ?Sized>(
    enc: &mut E,
    cfg: &EvolutionConfig,
    rng: &mut R,
    observer: &mut Observer<'_, E::Genotype>,
) -> RunLog {
    assert!(cfg.population_size > 0, "population size must be positive");
    let mut engine = Engine { enc, cfg, log: RunLog::default(), next_id: 0 };
    let genotypes: Vec<E::Genotype> = (0..cfg.population_size).map(|_| engine.enc.random(rng)).collect();
    let mut pop = engine.evaluate_all(0, genotypes, observer);
    for generation in 1..=cfg.generations {
        let (children, parents) = engine.offspring(&pop, rng);
        let next = engine.evaluate_all(generation, children, observer);
        let records = next
            .iter()
            .zip(&parents)
            .map(|(c, &[a, b])| LineageRecord {
                offspring: c.id,
                generation,
                parents: [pop[a].id, pop[b].id],
                offspring_traits: c.traits,
                parent_traits: [pop[a].traits, pop[b].traits],
            })
            .collect();
        engine.log.lineage.push(records);
        pop = next;
    }
    engine.log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{LSystemEncoding, TreeEncoding};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn short_sim() -> SimConfig {
        SimConfig { duration: 2.0, ..SimConfig::default() }
    }

    #[test]
    fn tournament_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(tournament_select(&[3.0], 2, &mut rng), 0);
        for _ in 0..100 {
            assert_eq!(tournament_select(&[5.0, 1.0], 2, &mut rng), 0);
        }
        let flat = vec![1.0; 100];
        let mut counts = [0usize; 100];
        let n = 10_000;
        for _ in 0..n {
            counts[tournament_select(&flat, 2, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.01).abs() < 0.003, "{c}");
        }
    }

    #[test]
    fn lineage_integrity() {
        let cfg = EvolutionConfig { population_size: 10, generations: 5, sim: short_sim(), ..Default::default() };
        let log = run(&mut TreeEncoding::default(), &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(log.generations.len(), 6);
        assert_eq!(log.evaluations, 60);
        for g in 1..=5 {
            let prev: BTreeSet<u64> = log.generations[g - 1].individuals.iter().map(|i| i.id).collect();
            let cur: BTreeSet<u64> = log.generations[g].individuals.iter().map(|i| i.id).collect();
            assert!(prev.is_disjoint(&cur));
            assert_eq!(cur.len(), 10);
            let lineage = log.lineage_of(g);
            assert_eq!(lineage.len(), 10);
            for r in lineage {
                assert!(cur.contains(&r.offspring));
                assert!(r.parents.iter().all(|p| prev.contains(p)));
                assert_ne!(r.parents[0], r.parents[1]);
            }
        }
        for t in &log.generations {
            assert!(t.individuals.iter().all(|i| i.fitness == i.traits.speed));
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = EvolutionConfig { population_size: 2, generations: 1, sim: short_sim(), ..Default::default() };
        let once = || run(&mut LSystemEncoding::default(), &cfg, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(once(), once());
    }
}
