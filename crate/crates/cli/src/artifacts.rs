//! Running repetitions and the on-disk layout of their results.
//!
//! ```text
//! <output_dir>/
//!   run_00/ config.toml manifest.json events.csv
//!           traits_g00.csv ... lineage_g01.csv ... bodies_g00.txt ... genotypes_g00.txt ...
//!           trajectories/g00_i000000.csv   (only with trajectory dumping)
//!   analysis/ heritability.csv diversity.csv medians.csv response.csv
//!   figures/  *.svg
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use modbot_core::encoding::lsystem::LSystemLimits;
use modbot_core::encoding::tree::{TreeLimits, TreeRates};
use modbot_core::encoding::{Encoding, LSystemEncoding, TreeEncoding};
use modbot_core::evolution::{run_observed, EvolutionConfig, RunEvent, RunLog};
use modbot_core::morphology::BodyLimits;
use modbot_core::traits::{Trait, TraitVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EncodingKind, ExperimentConfig};

pub const ANALYSIS_DIR: &str = "analysis";
pub const FIGURES_DIR: &str = "figures";
pub const TRAJECTORY_DIR: &str = "trajectories";

pub fn run_dir(out: &Path, rep: usize) -> PathBuf {
    out.join(format!("run_{rep:02}"))
}

pub fn traits_file(generation: usize) -> String {
    format!("traits_g{generation:02}.csv")
}

pub fn lineage_file(generation: usize) -> String {
    format!("lineage_g{generation:02}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub encoding: String,
    pub repetition: usize,
    pub seed: u64,
    pub version: String,
    pub population_size: usize,
    pub generations: usize,
    /// Every decoded and simulated individual, generation 0 included.
    pub evaluations: usize,
    /// Offspring only: population size times generations.
    pub offspring_evaluations: usize,
    pub evaluation_note: String,
    pub failed_evaluations: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub dump_trajectories: bool,
    /// Replace existing run, analysis and figure directories.
    pub force: bool,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn trait_fields(t: &TraitVector) -> impl Iterator<Item = String> {
    t.to_array().into_iter().enumerate().map(|(k, v)| if k == 1 { format!("{}", v as usize) } else { fmt_f64(v) })
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn trait_header() -> Vec<String> {
    let mut h: Vec<String> = ["run_id", "generation", "individual_id"].map(String::from).to_vec();
    h.extend(Trait::ALL.iter().map(|t| t.name().to_string()));
    h
}

fn lineage_header() -> Vec<String> {
    let mut h: Vec<String> =
        ["run_id", "generation", "offspring_id", "parent1_id", "parent2_id"].map(String::from).to_vec();
    for who in ["offspring", "parent1", "parent2"] {
        h.extend(Trait::ALL.iter().map(|t| format!("{who}_{}", t.name())));
    }
    h
}

fn manifest(cfg: &ExperimentConfig, rep: usize, log: &RunLog) -> Manifest {
    Manifest {
        encoding: cfg.encoding.to_string(),
        repetition: rep,
        seed: cfg.seed + rep as u64,
        version: env!("CARGO_PKG_VERSION").to_string(),
        population_size: cfg.population_size,
        generations: cfg.generations,
        evaluations: log.evaluations,
        offspring_evaluations: cfg.population_size * cfg.generations,
        evaluation_note: format!(
            "the evaluation budget of population_size x generations = {} counts offspring; the random generation 0 adds {} more",
            cfg.population_size * cfg.generations,
            cfg.population_size
        ),
        failed_evaluations: log.events.len(),
    }
}

/// Writes everything except trajectories for one finished repetition.
pub fn write_run(dir: &Path, cfg: &ExperimentConfig, rep: usize, log: &RunLog) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    let mut m = serde_json::to_string_pretty(&manifest(cfg, rep, log))?;
    m.push('\n');
    fs::write(dir.join("manifest.json"), m)?;

    let run_id = rep.to_string();
    for table in &log.generations {
        let g = table.generation;
        let rows = table.individuals.iter().map(|i| {
            let mut r = vec![run_id.clone(), g.to_string(), i.id.to_string()];
            r.extend(trait_fields(&i.traits));
            r
        });
        write_csv(&dir.join(traits_file(g)), &trait_header(), rows)?;
        let mut bodies = String::new();
        let mut genotypes = String::new();
        for i in &table.individuals {
            writeln!(bodies, "{}\t{}", i.id, i.body).unwrap();
            writeln!(genotypes, "# individual {}", i.id).unwrap();
            genotypes.push_str(&i.genotype);
            if !i.genotype.ends_with('\n') {
                genotypes.push('\n');
            }
        }
        fs::write(dir.join(format!("bodies_g{g:02}.txt")), bodies)?;
        fs::write(dir.join(format!("genotypes_g{g:02}.txt")), genotypes)?;
    }
    for (k, records) in log.lineage.iter().enumerate() {
        let g = k + 1;
        let rows = records.iter().map(|r| {
            let mut row = vec![
                run_id.clone(),
                g.to_string(),
                r.offspring.to_string(),
                r.parents[0].to_string(),
                r.parents[1].to_string(),
            ];
            row.extend(trait_fields(&r.offspring_traits));
            row.extend(trait_fields(&r.parent_traits[0]));
            row.extend(trait_fields(&r.parent_traits[1]));
            row
        });
        write_csv(&dir.join(lineage_file(g)), &lineage_header(), rows)?;
    }
    let events = log.events.iter().map(|e| match e {
        RunEvent::DevelopFailed { id, generation, message } => {
            vec![generation.to_string(), id.to_string(), "develop".into(), message.clone()]
        }
        RunEvent::SimulationFailed { id, generation, message } => {
            vec![generation.to_string(), id.to_string(), "simulate".into(), message.clone()]
        }
    });
    write_csv(&dir.join("events.csv"), &["generation", "individual_id", "stage", "message"].map(String::from), events)?;
    Ok(())
}

pub fn evolution_config(cfg: &ExperimentConfig) -> EvolutionConfig {
    EvolutionConfig {
        population_size: cfg.population_size,
        generations: cfg.generations,
        sim: cfg.sim(),
        ..EvolutionConfig::default()
    }
}

pub fn tree_encoding(cfg: &ExperimentConfig) -> TreeEncoding {
    let body = BodyLimits { max_modules: cfg.module_cap, ..BodyLimits::default() };
    TreeEncoding::new(TreeLimits { body, ..TreeLimits::default() }, TreeRates::with_aggregate(cfg.mutation_rate))
}

pub fn lsystem_encoding(cfg: &ExperimentConfig) -> LSystemEncoding {
    let body = BodyLimits { max_modules: cfg.module_cap, ..BodyLimits::default() };
    LSystemEncoding {
        limits: LSystemLimits { body, ..LSystemLimits::default() },
        grammar_rate: cfg.mutation_rate,
        ..LSystemEncoding::default()
    }
}

fn run_with<E: Encoding + Sync>(
    mut enc: E,
    cfg: &ExperimentConfig,
    rep: usize,
    dir: &Path,
    dump: bool,
) -> Result<RunLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + rep as u64);
    let traj_dir = dir.join(TRAJECTORY_DIR);
    if dump {
        fs::create_dir_all(&traj_dir)?;
    }
    let mut io_error: Option<anyhow::Error> = None;
    let log = run_observed(&mut enc, &evolution_config(cfg), &mut rng, &mut |ind, ev| {
        if !dump || io_error.is_some() {
            return;
        }
        let path = traj_dir.join(format!("g{:02}_i{:06}.csv", ind.generation, ind.id));
        if let Err(e) = fs::write(&path, ev.trajectory.to_csv()) {
            io_error = Some(anyhow::Error::new(e).context(format!("writing {}", path.display())));
        }
    });
    match io_error {
        Some(e) => Err(e),
        None => Ok(log),
    }
}

/// Runs one repetition and writes its directory.
pub fn run_repetition(cfg: &ExperimentConfig, rep: usize, opts: &RunOptions) -> Result<RunLog> {
    let dir = run_dir(&cfg.output_dir, rep);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let log = match cfg.encoding {
        EncodingKind::Tree => run_with(tree_encoding(cfg), cfg, rep, &dir, opts.dump_trajectories)?,
        EncodingKind::Lsystem => run_with(lsystem_encoding(cfg), cfg, rep, &dir, opts.dump_trajectories)?,
    };
    write_run(&dir, cfg, rep, &log)?;
    Ok(log)
}

fn prepare_output(out: &Path, force: bool) -> Result<()> {
    if out.exists() {
        let occupied: Vec<PathBuf> = fs::read_dir(out)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                name.starts_with("run_") || name == ANALYSIS_DIR || name == FIGURES_DIR
            })
            .collect();
        if !occupied.is_empty() {
            if !force {
                bail!("{} already holds results; pass --force to replace them", out.display());
            }
            for p in occupied {
                fs::remove_dir_all(&p).with_context(|| format!("removing {}", p.display()))?;
            }
        }
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(())
}

/// Runs all repetitions concurrently, then analyses and renders.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<RunLog>> {
    cfg.validate()?;
    prepare_output(&cfg.output_dir, opts.force)?;
    let logs =
        (0..cfg.repetitions).into_par_iter().map(|rep| run_repetition(cfg, rep, opts)).collect::<Result<Vec<_>>>()?;
    crate::analyze::analyze_dir(&cfg.output_dir)?;
    crate::render::render_dir(&cfg.output_dir)?;
    Ok(logs)
}

// ---------------------------------------------------------------------------
// reading back

#[derive(Debug, Clone, PartialEq)]
pub struct TraitRow {
    pub run_id: usize,
    pub generation: usize,
    pub individual_id: u64,
    pub traits: TraitVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineageRow {
    pub run_id: usize,
    pub generation: usize,
    pub offspring_id: u64,
    pub parents: [u64; 2],
    pub offspring: TraitVector,
    pub parent_traits: [TraitVector; 2],
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let field = rec.get(i).with_context(|| format!("{}: missing column {i}", path.display()))?;
    field.parse().with_context(|| format!("{}: bad value `{field}` in column {i}", path.display()))
}

fn traits_at(rec: &csv::StringRecord, start: usize, path: &Path) -> Result<TraitVector> {
    let mut v = [0.0; 6];
    for (k, slot) in v.iter_mut().enumerate() {
        *slot = parse(rec, start + k, path)?;
    }
    Ok(TraitVector::from_array(v))
}

fn records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("missing or unreadable {}", path.display()))?;
    r.records().map(|x| x.with_context(|| format!("reading {}", path.display()))).collect()
}

pub fn read_traits(path: &Path) -> Result<Vec<TraitRow>> {
    records(path)?
        .iter()
        .map(|rec| {
            Ok(TraitRow {
                run_id: parse(rec, 0, path)?,
                generation: parse(rec, 1, path)?,
                individual_id: parse(rec, 2, path)?,
                traits: traits_at(rec, 3, path)?,
            })
        })
        .collect()
}

pub fn read_lineage(path: &Path) -> Result<Vec<LineageRow>> {
    records(path)?
        .iter()
        .map(|rec| {
            Ok(LineageRow {
                run_id: parse(rec, 0, path)?,
                generation: parse(rec, 1, path)?,
                offspring_id: parse(rec, 2, path)?,
                parents: [parse(rec, 3, path)?, parse(rec, 4, path)?],
                offspring: traits_at(rec, 5, path)?,
                parent_traits: [traits_at(rec, 11, path)?, traits_at(rec, 17, path)?],
            })
        })
        .collect()
}

/// Run directories in repetition order.
pub fn list_runs(out: &Path) -> Result<Vec<PathBuf>> {
    let mut runs: Vec<PathBuf> = fs::read_dir(out)
        .with_context(|| format!("reading {}", out.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("run_")))
        .collect();
    runs.sort();
    if runs.is_empty() {
        bail!("no run_* directories in {}", out.display());
    }
    Ok(runs)
}

/// Trait tables of one run, generation by generation.
pub fn read_run_traits(run: &Path) -> Result<Vec<Vec<TraitRow>>> {
    let mut out = Vec::new();
    loop {
        let p = run.join(traits_file(out.len()));
        if !p.exists() {
            break;
        }
        out.push(read_traits(&p)?);
    }
    if out.is_empty() {
        bail!("missing {}", run.join(traits_file(0)).display());
    }
    Ok(out)
}

/// Lineage tables of one run; entry `k` belongs to generation `k + 1`.
pub fn read_run_lineage(run: &Path, generations: usize) -> Result<Vec<Vec<LineageRow>>> {
    (1..generations).map(|g| read_lineage(&run.join(lineage_file(g)))).collect()
}
