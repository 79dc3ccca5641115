//! Trait values recomputed from stored body text and trajectories.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use modbot_core::morphology::text::body_from_text;
use modbot_core::morphology::{count_modules, embed};
use modbot_core::traits::{balance, coverage, limbs, proportion, speed};
use modbot_core::trajectory::Trajectory;

use crate::artifacts::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    /// Label taken from an `id<TAB>body` line, else the 1-based line number.
    pub label: String,
    pub proportion: f64,
    pub size: usize,
    pub limbs: f64,
    pub coverage: f64,
    pub behaviour: Option<(f64, f64)>,
}

/// One body per non-blank line; `#` starts a comment line. `trajectory` maps a
/// row label to the trajectory of that individual.
pub fn oracle_traits(
    bodies: &str,
    mut trajectory: impl FnMut(&str) -> Result<Option<Trajectory>>,
) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    for (n, line) in bodies.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, text) = match line.split_once('\t') {
            Some((id, body)) => (id.trim().to_string(), body),
            None => ((n + 1).to_string(), line),
        };
        let body = body_from_text(text).with_context(|| format!("line {}: bad body", n + 1))?;
        let e = embed(&body);
        rows.push(OracleRow {
            proportion: proportion(&e),
            size: count_modules(&body),
            limbs: limbs(&body),
            coverage: coverage(&e),
            behaviour: trajectory(&label)?.map(|t| (speed(&t), balance(&t))),
            label,
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[OracleRow]) -> String {
    let behaviour = rows.iter().any(|r| r.behaviour.is_some());
    let mut s = String::from("label,proportion,size,limbs,coverage");
    if behaviour {
        s.push_str(",speed,balance");
    }
    s.push('\n');
    for r in rows {
        write!(s, "{},{},{},{},{}", r.label, fmt_f64(r.proportion), r.size, fmt_f64(r.limbs), fmt_f64(r.coverage))
            .unwrap();
        if let Some((v, b)) = r.behaviour {
            write!(s, ",{},{}", fmt_f64(v), fmt_f64(b)).unwrap();
        }
        s.push('\n');
    }
    s
}

fn read_trajectory(p: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    Trajectory::from_csv(&text).with_context(|| format!("parsing {}", p.display()))
}

/// With `trajectories`, each labelled body is paired with the file ending in
/// `_i<label as 6 digits>.csv`, as written by trajectory dumping.
pub fn run(body_file: &Path, trajectories: Option<&Path>) -> Result<String> {
    let bodies = fs::read_to_string(body_file).with_context(|| format!("reading {}", body_file.display()))?;
    let files: Vec<std::path::PathBuf> = match trajectories {
        Some(dir) => fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect(),
        None => Vec::new(),
    };
    let rows = oracle_traits(&bodies, |label| {
        if trajectories.is_none() {
            return Ok(None);
        }
        let id: u64 = label.parse().with_context(|| format!("label `{label}` is not an individual id"))?;
        let suffix = format!("_i{id:06}.csv");
        let path = files
            .iter()
            .find(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(&suffix)))
            .with_context(|| format!("no trajectory for individual {id}"))?;
        read_trajectory(path).map(Some)
    })?;
    Ok(to_csv(&rows))
}
