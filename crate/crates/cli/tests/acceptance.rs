//! Acceptance criteria, one line each. Run with
//! `cargo test -p modbot-cli --test acceptance -- --nocapture` to see the report.
//!
//! Criterion 9 is a qualitative trend check: it is reported but never fails
//! the suite.

#[path = "../../core/tests/support/body_oracle.rs"]
mod body_oracle;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use body_oracle::{oracle_speed_balance, oracle_traits};
use modbot_cli::artifacts::{
    lineage_file, read_lineage, read_traits, run_experiment, traits_file, Manifest, RunOptions,
};
use modbot_cli::config::{EncodingKind, ExperimentConfig};
use modbot_core::analysis::estimate;
use modbot_core::controller::{CpgNetwork, CpgNode};
use modbot_core::encoding::lsystem::{
    decode_sentence, expand, mutate_grammar, random_grammar, Grammar, LSystemLimits, Symbol,
};
use modbot_core::encoding::tree::{mutate_tree, random_tree, TreeLimits, TreeRates};
use modbot_core::evolution::LineageRecord;
use modbot_core::morphology::text::body_from_text;
use modbot_core::morphology::{validate, Cell, NodeId, Violation};
use modbot_core::traits::{balance, Trait, TraitVector};
use modbot_core::trajectory::{Pose, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (usize, &'static str, bool, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn records(pairs: impl IntoIterator<Item = ((f64, f64), f64)>) -> Vec<LineageRecord> {
    let tv = |v: f64| TraitVector { speed: v, ..TraitVector::from_array([0.0; 6]) };
    pairs
        .into_iter()
        .enumerate()
        .map(|(i, ((a, b), o))| LineageRecord {
            offspring: i as u64,
            generation: 1,
            parents: [0, 1],
            offspring_traits: tv(o),
            parent_traits: [tv(a), tv(b)],
        })
        .collect()
}

fn c1_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let perfect = records((0..1000).map(|_| {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        ((a, b), (a + b) / 2.0)
    }));
    let s1 = estimate(&perfect, Trait::Speed, 0).slope().unwrap_or(f64::NAN);
    let independent = records((0..10_000).map(|_| ((rng.random(), rng.random()), rng.random())));
    let s0 = estimate(&independent, Trait::Speed, 0).slope().unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (s1 - 1.0).abs() < 1e-9 && s0.abs() < 0.05 && secs < 1.0,
        format!("copy slope {s1:.12} (|err| < 1e-9); independent slope {s0:+.4} (|.| < 0.05); {secs:.3} s (< 1 s)"),
    )
}

fn c2_recovery() -> Outcome {
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        // midparent spans [0, 1], so noise bound is 10% of that range
        let recs = records((0..1000).map(|_| {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            ((a, b), 0.5 * (a + b) / 2.0 + rng.random_range(-0.1..=0.1))
        }));
        let s = estimate(&recs, Trait::Speed, 0).slope().unwrap_or(f64::NAN);
        worst = worst.max((s - 0.5).abs());
        if (s - 0.5).abs() <= 0.05 {
            hits += 1;
        }
    }
    outcome(hits >= 19, format!("{hits}/20 seeds within 0.5 ± 0.05 (need 19); largest error {worst:.4}"))
}

fn small_run(
    encoding: EncodingKind,
    out: &Path,
    population: usize,
    generations: usize,
    reps: usize,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        population_size: population,
        generations,
        repetitions: reps,
        seed,
        ..ExperimentConfig::new(encoding, out)
    }
}

fn c3_trait_oracles() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut bodies = 0;
    let mut morph_mismatch = 0;
    let mut worst_behaviour: f64 = 0.0;
    for (k, enc) in [EncodingKind::Tree, EncodingKind::Lsystem].into_iter().enumerate() {
        let out = tmp.path().join(enc.to_string());
        let cfg = small_run(enc, &out, 100, 1, 1, 300 + k as u64);
        run_experiment(&cfg, &RunOptions { dump_trajectories: true, force: false }).unwrap();
        let run = out.join("run_00");
        let texts: HashMap<u64, String> = fs::read_to_string(run.join("bodies_g00.txt"))
            .unwrap()
            .lines()
            .map(|l| {
                let (id, body) = l.split_once('\t').unwrap();
                (id.parse().unwrap(), body.to_string())
            })
            .collect();
        for row in read_traits(&run.join(traits_file(0))).unwrap() {
            let body = body_from_text(&texts[&row.individual_id]).unwrap();
            let (p, s, l, c) = oracle_traits(&body);
            let t = row.traits;
            if (p, s, l, c) != (t.proportion, t.size, t.limbs, t.coverage) {
                morph_mismatch += 1;
            }
            let path = run.join("trajectories").join(format!("g00_i{:06}.csv", row.individual_id));
            let traj = Trajectory::from_csv(&fs::read_to_string(path).unwrap()).unwrap();
            let (v, b) = oracle_speed_balance(&traj);
            worst_behaviour = worst_behaviour.max((v - t.speed).abs()).max((b - t.balance).abs());
            bodies += 1;
        }
    }
    outcome(
        bodies == 200 && morph_mismatch == 0 && worst_behaviour < 1e-9,
        format!(
            "{bodies} random bodies; morphology mismatches {morph_mismatch} (exact); speed/balance max error {worst_behaviour:.1e} (< 1e-9)"
        ),
    )
}

fn c4_balance_anchors() -> Outcome {
    let constant = |roll, pitch| Trajectory::new(0.1, vec![Pose { roll, pitch, ..Pose::default() }; 300]);
    let got = [balance(&constant(0.0, 0.0)), balance(&constant(180.0, 180.0)), balance(&constant(90.0, 0.0))];
    outcome(
        got == [1.0, 0.0, 0.75],
        format!("(0,0) -> {}, (180,180) -> {}, (90,0) -> {} (exact 1, 0, 0.75)", got[0], got[1], got[2]),
    )
}

fn c5_cpg() -> Outcome {
    let mut node = CpgNode::new(NodeId(1), Cell::ORIGIN);
    node.w_xy = 1.0;
    let mut net = CpgNetwork { nodes: vec![node], connections: Vec::new() };
    let dt = 0.005;
    let steps = (30.0 / dt) as usize;
    let mut dev: f64 = 0.0;
    let mut r2 = vec![1.0];
    for k in 1..=steps {
        net.step(dt);
        let n = &net.nodes[0];
        dev = dev.max((n.x - (k as f64 * dt).sin()).abs());
        r2.push(n.x * n.x + n.y * n.y);
    }
    let drift = (0..=steps - 1000).step_by(1000).map(|k| (r2[k + 1000] - r2[k]).abs()).fold(0.0, f64::max);
    outcome(
        dev < 1e-3 && drift < 1e-6,
        format!("max |x - sin t| {dev:.2e} (< 1e-3); x²+y² drift per 1000 steps {drift:.2e} (< 1e-6)"),
    )
}

fn c6_lsystem() -> Outcome {
    use Symbol::*;
    let g = Grammar {
        rules: [vec![CoreSym, AddFront, BrickSym], vec![BrickSym], vec![VerticalJointSym], vec![HorizontalJointSym]],
    };
    let expected =
        [vec![CoreSym], vec![CoreSym, AddFront, BrickSym], vec![CoreSym, AddFront, BrickSym, AddFront, BrickSym]];
    let hand = (0..3).all(|it| expand(&g, it, 300) == expected[it]);
    let limits = LSystemLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let (mut invalid, mut joj) = (0, 0);
    for _ in 0..1000 {
        let g = random_grammar(&mut rng, &limits);
        let body = decode_sentence(&expand(&g, limits.iterations, limits.max_sentence), &limits.body);
        let report = validate(&body, &limits.body);
        invalid += usize::from(!report.is_valid());
        joj += report.violations.iter().filter(|v| matches!(v, Violation::JointOnJoint { .. })).count();
    }
    outcome(
        hand && invalid == 0 && joj == 0,
        format!(
            "worked example iterations 0-2 {}; 1000 grammars: {invalid} invalid, {joj} joint-on-joint",
            if hand { "exact" } else { "WRONG" }
        ),
    )
}

fn c7_ea_contract() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("tree");
    let cfg = small_run(EncodingKind::Tree, &out, 100, 50, 1, 700);
    let start = Instant::now();
    run_experiment(&cfg, &RunOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let run = out.join("run_00");

    let tables: Vec<_> = (0..).map(|g| run.join(traits_file(g))).take_while(|p| p.exists()).collect();
    let pops: Vec<BTreeMap<u64, TraitVector>> = tables
        .iter()
        .map(|p| read_traits(p).unwrap().into_iter().map(|r| (r.individual_id, r.traits)).collect())
        .collect();
    let mut links = 0usize;
    let mut intact = 0usize;
    let mut seen = BTreeSet::new();
    let mut unique = true;
    for pop in &pops {
        for id in pop.keys() {
            unique &= seen.insert(*id);
        }
    }
    for g in 1..pops.len() {
        let rows = read_lineage(&run.join(lineage_file(g))).unwrap();
        let ids: BTreeSet<u64> = rows.iter().map(|r| r.offspring_id).collect();
        links += 1;
        intact += usize::from(ids.len() == rows.len() && ids.iter().eq(pops[g].keys()));
        for r in &rows {
            links += 3;
            intact += usize::from(pops[g].get(&r.offspring_id) == Some(&r.offspring));
            for (p, t) in r.parents.iter().zip(&r.parent_traits) {
                intact += usize::from(pops[g - 1].get(p) == Some(t));
            }
        }
    }
    let m: Manifest = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    let integrity = intact as f64 / links.max(1) as f64;
    let threads = rayon::current_num_threads();
    outcome(
        tables.len() == 51
            && m.offspring_evaluations == 5000
            && m.evaluations == 5100
            && m.evaluation_note.contains("5000")
            && unique
            && integrity == 1.0
            && secs < 900.0,
        format!(
            "{} generation tables (51); offspring evaluations {} (5000, +{} for generation 0, noted in manifest); lineage integrity {:.1}% ({intact}/{links}); {secs:.0} s on {threads} thread(s) (< 900 s)",
            tables.len(),
            m.offspring_evaluations,
            m.evaluations - m.offspring_evaluations,
            integrity * 100.0
        ),
    )
}

fn c8_mutation_rate() -> Outcome {
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let tl = TreeLimits::default();
    let rates = TreeRates::default();
    let trees: Vec<_> = (0..100).map(|_| random_tree(&mut rng, &tl)).collect();
    let tree_hits = (0..n).filter(|i| mutate_tree(&trees[i % 100], &mut rng, &rates, &tl).1.body_mutation()).count();
    let ll = LSystemLimits::default();
    let grammars: Vec<_> = (0..100).map(|_| random_grammar(&mut rng, &ll)).collect();
    let ls_hits = (0..n).filter(|i| mutate_grammar(&grammars[i % 100], &mut rng, 0.59, &ll).1.op.is_some()).count();
    let (pt, pl) = (tree_hits as f64 / n as f64, ls_hits as f64 / n as f64);
    outcome(
        (pt - 0.59).abs() <= 0.02 && (pl - 0.59).abs() <= 0.02,
        format!("tree {pt:.4}, L-system {pl:.4} over {n} mutations each (0.59 ± 0.02)"),
    )
}

fn read_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let h: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| h.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn pooled(rows: &[BTreeMap<String, String>], generation: usize, t: Trait, column: &str) -> Option<f64> {
    rows.iter()
        .find(|r| r["run"] == "all" && r["generation"] == generation.to_string() && r["trait"] == t.name())
        .and_then(|r| r[column].parse().ok())
}

fn c9_trend() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |enc: EncodingKind| tmp.path().join(enc.to_string());
    for enc in [EncodingKind::Tree, EncodingKind::Lsystem] {
        run_experiment(&small_run(enc, &dir(enc), 50, 20, 5, 900), &RunOptions::default()).unwrap();
    }
    let h = |enc| read_rows(&dir(enc).join("analysis/heritability.csv"));
    let (ht, hl) = (h(EncodingKind::Tree), h(EncodingKind::Lsystem));
    let measured = [Trait::Speed, Trait::Balance, Trait::Proportion, Trait::Size, Trait::Limbs];
    let mut wins = 0;
    let mut parts = Vec::new();
    for t in measured {
        let (a, b) = (pooled(&ht, 0, t, "slope"), pooled(&hl, 0, t, "slope"));
        let win = matches!((a, b), (Some(a), Some(b)) if a > b);
        wins += usize::from(win);
        let f = |v: Option<f64>| v.map_or("undef".into(), |v| format!("{v:.2}"));
        parts.push(format!("{} {}/{}", t.name(), f(a), f(b)));
    }
    let div = read_rows(&dir(EncodingKind::Lsystem).join("analysis/diversity.csv"));
    let mut drops = 0;
    let mut dparts = Vec::new();
    for t in Trait::ALL.into_iter().filter(|&t| t != Trait::Speed) {
        let (d0, d20) = (pooled(&div, 0, t, "value"), pooled(&div, 20, t, "value"));
        let drop = matches!((d0, d20), (Some(a), Some(b)) if b < a);
        drops += usize::from(drop);
        dparts.push(format!("{} {:.3}->{:.3}", t.name(), d0.unwrap_or(f64::NAN), d20.unwrap_or(f64::NAN)));
    }
    outcome(
        wins >= 3 && drops >= 3,
        format!(
            "gen-0 h² tree/L-system: {} -> tree higher on {wins}/5 (need 3); L-system diversity g0->g20: {} -> lower on {drops}/5 (need 3)",
            parts.join(", "),
            dparts.join(", ")
        ),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut same = true;
    let mut files = 0;
    for enc in [EncodingKind::Tree, EncodingKind::Lsystem] {
        let out = tmp.path().join(enc.to_string());
        let cfg = small_run(enc, &out, 20, 5, 2, 1000);
        let opts = RunOptions { dump_trajectories: true, force: true };
        run_experiment(&cfg, &opts).unwrap();
        let a = snapshot(&out);
        run_experiment(&cfg, &opts).unwrap();
        let b = snapshot(&out);
        files += a.len();
        same &= a == b && a.keys().any(|p| p.extension().is_some_and(|e| e == "svg"));
    }
    outcome(same, format!("{files} files over both encodings, byte-identical across two executions: {same}"))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        (1, "heritability estimator exactness", false, c1_exactness),
        (2, "heritability estimator recovery", false, c2_recovery),
        (3, "trait oracle equivalence", false, c3_trait_oracles),
        (4, "balance anchors", false, c4_balance_anchors),
        (5, "CPG numerics", false, c5_cpg),
        (6, "L-system correctness", false, c6_lsystem),
        (7, "EA contract", false, c7_ea_contract),
        (8, "mutation aggregate rate", false, c8_mutation_rate),
        (9, "qualitative trend (soft)", true, c9_trend),
        (10, "determinism", false, c10_determinism),
    ];
    let mut hard_failures = Vec::new();
    println!();
    for (n, name, soft, check) in criteria {
        let o = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let tag = match (o.pass, soft) {
            (true, _) => "PASS",
            (false, true) => "SOFT-FAIL",
            (false, false) => "FAIL",
        };
        println!("[{tag}] {n:>2} {name}: {}", o.detail);
        if !o.pass && !soft {
            hard_failures.push(n);
        }
    }
    assert!(hard_failures.is_empty(), "failed criteria: {hard_failures:?}");
}
