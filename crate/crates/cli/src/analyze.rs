//! Analysis tables computed from the CSVs of an artifact directory.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use modbot_core::analysis::{
    estimate, mean, median, population_distances, rate_of_change, response_to_selection, selection_differential,
    trait_distances, HeritabilityEstimate, TraitBounds,
};
use modbot_core::evolution::LineageRecord;
use modbot_core::traits::{Trait, TraitVector};

use crate::artifacts::{fmt_f64, list_runs, read_run_lineage, read_run_traits, LineageRow, ANALYSIS_DIR};

pub const POOLED: &str = "all";
pub const ALL_TRAITS: &str = "ALL";

#[derive(Debug, Clone, PartialEq)]
pub struct HeritabilityRow {
    pub run: String,
    pub estimate: HeritabilityEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub run: String,
    pub generation: usize,
    /// A trait name or [`ALL_TRAITS`].
    pub trait_name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianRow {
    pub run: String,
    pub generation: usize,
    pub trait_kind: Trait,
    pub median: f64,
    pub increment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseRow {
    pub run: String,
    pub generation: usize,
    pub trait_kind: Trait,
    pub h2: Option<f64>,
    pub selection_differential: f64,
    pub predicted: Option<f64>,
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Analysis {
    pub heritability: Vec<HeritabilityRow>,
    pub diversity: Vec<SeriesRow>,
    pub medians: Vec<MedianRow>,
    pub response: Vec<ResponseRow>,
}

struct RunData {
    name: String,
    /// Trait vectors per generation.
    pops: Vec<Vec<TraitVector>>,
    /// Entry `k` belongs to offspring generation `k + 1`.
    lineage: Vec<Vec<LineageRecord>>,
}

fn to_record(r: &LineageRow) -> LineageRecord {
    LineageRecord {
        offspring: r.offspring_id,
        generation: r.generation,
        parents: r.parents,
        offspring_traits: r.offspring,
        parent_traits: r.parent_traits,
    }
}

fn load(out: &Path) -> Result<Vec<RunData>> {
    list_runs(out)?
        .iter()
        .map(|dir| {
            let traits = read_run_traits(dir)?;
            let lineage = read_run_lineage(dir, traits.len())?;
            Ok(RunData {
                name: traits[0].first().map_or_else(|| "0".to_string(), |r| r.run_id.to_string()),
                pops: traits.iter().map(|g| g.iter().map(|r| r.traits).collect()).collect(),
                lineage: lineage.iter().map(|g| g.iter().map(to_record).collect()).collect(),
            })
        })
        .collect()
}

fn heritability(runs: &[RunData]) -> Vec<HeritabilityRow> {
    let mut rows = Vec::new();
    for r in runs {
        for (k, records) in r.lineage.iter().enumerate() {
            for t in Trait::ALL {
                rows.push(HeritabilityRow { run: r.name.clone(), estimate: estimate(records, t, k) });
            }
        }
    }
    let transitions = runs.iter().map(|r| r.lineage.len()).min().unwrap_or(0);
    for k in 0..transitions {
        for t in Trait::ALL {
            let pooled = runs.iter().flat_map(|r| r.lineage[k].iter());
            rows.push(HeritabilityRow { run: POOLED.into(), estimate: estimate(pooled, t, k) });
        }
    }
    rows
}

fn diversity(runs: &[RunData]) -> Vec<SeriesRow> {
    let mut rows = Vec::new();
    let mut per_run: Vec<Vec<SeriesRow>> = Vec::new();
    for r in runs {
        let bounds = TraitBounds::from_vectors(r.pops.iter().flatten());
        let mut mine = Vec::new();
        for (g, pop) in r.pops.iter().enumerate() {
            for t in Trait::ALL {
                let value = median(&trait_distances(pop, t));
                mine.push(SeriesRow { run: r.name.clone(), generation: g, trait_name: t.name().into(), value });
            }
            let value = mean(&population_distances(pop, &bounds));
            mine.push(SeriesRow { run: r.name.clone(), generation: g, trait_name: ALL_TRAITS.into(), value });
        }
        per_run.push(mine);
    }
    let n = per_run.iter().map(Vec::len).min().unwrap_or(0);
    let mut pooled = Vec::with_capacity(n);
    for i in 0..n {
        let first = &per_run[0][i];
        let value = mean(&per_run.iter().map(|rows| rows[i].value).collect::<Vec<_>>());
        pooled.push(SeriesRow { run: POOLED.into(), value, ..first.clone() });
    }
    for mine in per_run {
        rows.extend(mine);
    }
    rows.extend(pooled);
    rows
}

fn median_rows(name: &str, pops: &[Vec<TraitVector>]) -> Vec<MedianRow> {
    let mut rows = Vec::new();
    for t in Trait::ALL {
        let series: Vec<f64> = pops.iter().map(|p| median(&p.iter().map(|v| v.get(t)).collect::<Vec<_>>())).collect();
        let inc = rate_of_change(&series);
        for (g, &m) in series.iter().enumerate() {
            rows.push(MedianRow {
                run: name.into(),
                generation: g,
                trait_kind: t,
                median: m,
                increment: g.checked_sub(1).map(|k| inc[k]),
            });
        }
    }
    rows
}

fn medians(runs: &[RunData]) -> Vec<MedianRow> {
    let mut rows: Vec<MedianRow> = runs.iter().flat_map(|r| median_rows(&r.name, &r.pops)).collect();
    let gens = runs.iter().map(|r| r.pops.len()).min().unwrap_or(0);
    let pooled: Vec<Vec<TraitVector>> =
        (0..gens).map(|g| runs.iter().flat_map(|r| r.pops[g].iter().copied()).collect()).collect();
    rows.extend(median_rows(POOLED, &pooled));
    rows
}

fn response_rows(name: &str, pops: &[Vec<TraitVector>], lineage: &[Vec<&LineageRecord>], out: &mut Vec<ResponseRow>) {
    for (k, records) in lineage.iter().enumerate() {
        for t in Trait::ALL {
            let h2 = estimate(records.iter().copied(), t, k).slope();
            let selected: Vec<f64> =
                records.iter().flat_map(|r| r.parent_traits.iter().map(move |p| p.get(t))).collect();
            let parents: Vec<f64> = pops[k].iter().map(|v| v.get(t)).collect();
            let children: Vec<f64> = pops[k + 1].iter().map(|v| v.get(t)).collect();
            let s = selection_differential(&selected, &parents);
            out.push(ResponseRow {
                run: name.into(),
                generation: k,
                trait_kind: t,
                h2,
                selection_differential: s,
                predicted: h2.map(|h| response_to_selection(h, s)),
                observed: mean(&children) - mean(&parents),
            });
        }
    }
}

fn response(runs: &[RunData]) -> Vec<ResponseRow> {
    let mut rows = Vec::new();
    for r in runs {
        let lineage: Vec<Vec<&LineageRecord>> = r.lineage.iter().map(|g| g.iter().collect()).collect();
        response_rows(&r.name, &r.pops, &lineage, &mut rows);
    }
    let gens = runs.iter().map(|r| r.pops.len()).min().unwrap_or(0);
    let pops: Vec<Vec<TraitVector>> =
        (0..gens).map(|g| runs.iter().flat_map(|r| r.pops[g].iter().copied()).collect()).collect();
    let lineage: Vec<Vec<&LineageRecord>> =
        (0..gens.saturating_sub(1)).map(|k| runs.iter().flat_map(|r| r.lineage[k].iter()).collect()).collect();
    response_rows(POOLED, &pops, &lineage, &mut rows);
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn write(path: &Path, header: &str, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

pub fn compute(out: &Path) -> Result<Analysis> {
    let runs = load(out)?;
    Ok(Analysis {
        heritability: heritability(&runs),
        diversity: diversity(&runs),
        medians: medians(&runs),
        response: response(&runs),
    })
}

/// Recomputes every analysis table from the run CSVs under `out`.
pub fn analyze_dir(out: &Path) -> Result<Analysis> {
    let a = compute(out)?;
    let dir = out.join(ANALYSIS_DIR);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write(
        &dir.join("heritability.csv"),
        "run,generation,trait,slope,intercept,n,degenerate,out_of_range",
        a.heritability.iter().map(|r| {
            let e = &r.estimate;
            format!(
                "{},{},{},{},{},{},{},{}",
                r.run,
                e.generation,
                e.trait_kind,
                opt(e.slope()),
                opt(e.regression.intercept()),
                e.pairs,
                u8::from(e.is_degenerate()),
                u8::from(e.out_of_range())
            )
        }),
    )?;
    write(
        &dir.join("diversity.csv"),
        "run,generation,trait,value",
        a.diversity.iter().map(|r| format!("{},{},{},{}", r.run, r.generation, r.trait_name, fmt_f64(r.value))),
    )?;
    write(
        &dir.join("medians.csv"),
        "run,generation,trait,median,increment",
        a.medians
            .iter()
            .map(|r| format!("{},{},{},{},{}", r.run, r.generation, r.trait_kind, fmt_f64(r.median), opt(r.increment))),
    )?;
    write(
        &dir.join("response.csv"),
        "run,generation,trait,h2,selection_differential,predicted_response,observed_response",
        a.response.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.run,
                r.generation,
                r.trait_kind,
                opt(r.h2),
                fmt_f64(r.selection_differential),
                opt(r.predicted),
                fmt_f64(r.observed)
            )
        }),
    )?;
    Ok(a)
}
