//! Deterministic SVG figures drawn from the CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use modbot_core::traits::Trait;

use crate::analyze::{ALL_TRAITS, POOLED};
use crate::artifacts::{lineage_file, list_runs, read_lineage, read_traits, traits_file, ANALYSIS_DIR, FIGURES_DIR};

const W: f64 = 520.0;
const H: f64 = 340.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 48.0;
const PALETTE: [&str; 6] = ["#7aa6c2", "#c29a7a", "#8fbf8f", "#b48fbf", "#bfb48f", "#8fb9bf"];

fn table(path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    if !path.exists() {
        bail!("missing {}; run `analyze` first", path.display());
    }
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    r.records()
        .map(|rec| {
            let rec = rec.with_context(|| format!("reading {}", path.display()))?;
            Ok(header.iter().cloned().zip(rec.iter().map(String::from)).collect())
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> Option<f64> {
    row.get(key).and_then(|v| v.parse().ok()).filter(|v: &f64| v.is_finite())
}

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl IntoIterator<Item = f64>) -> Range {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.into_iter().filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            let pad = if lo.abs() > 1e-12 { lo.abs() * 0.1 } else { 1.0 };
            return Range { lo: lo - pad, hi: hi + pad };
        }
        let pad = (hi - lo) * 0.05;
        Range { lo: lo - pad, hi: hi + pad }
    }
}

struct Canvas {
    svg: String,
    x: Range,
    y: Range,
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

impl Canvas {
    fn new(title: &str, xlabel: &str, ylabel: &str, x: Range, y: Range, metadata: Option<String>) -> Canvas {
        let mut svg = String::new();
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        if let Some(m) = metadata {
            writeln!(svg, "<metadata>{m}</metadata>").unwrap();
        }
        writeln!(svg, r##"<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>"##).unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
            W / 2.0,
            escape(title)
        )
        .unwrap();
        let mut c = Canvas { svg, x, y };
        c.axes(xlabel, ylabel);
        c
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.lo) / (self.x.hi - self.x.lo) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.lo) / (self.y.hi - self.y.lo) * (H - TOP - BOTTOM)
    }

    fn axes(&mut self, xlabel: &str, ylabel: &str) {
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
        writeln!(self.svg, r##"<path d="M{x0:.2} {y1:.2}V{y0:.2}H{x1:.2}" fill="none" stroke="#333333"/>"##).unwrap();
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.lo + f * (self.x.hi - self.x.lo);
            let yv = self.y.lo + f * (self.y.hi - self.y.lo);
            let (px, py) = (self.px(xv), self.py(yv));
            writeln!(
                self.svg,
                r##"<path d="M{px:.2} {y0:.2}v4M{x0:.2} {py:.2}h-4" stroke="#333333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                y0 + 16.0,
                tick_label(xv),
                x0 - 6.0,
                py + 4.0,
                tick_label(yv)
            )
            .unwrap();
        }
        writeln!(
            self.svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            H - 10.0,
            escape(xlabel)
        )
        .unwrap();
        writeln!(
            self.svg,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        )
        .unwrap();
    }

    /// Polyline broken at missing values.
    fn series(&mut self, points: &[(f64, Option<f64>)], color: &str, width: f64) {
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in points {
            match y {
                Some(y) if y.is_finite() => {
                    write!(d, "{}{:.2} {:.2}", if pen_down { "L" } else { "M" }, self.px(x), self.py(y)).unwrap();
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        if !d.is_empty() {
            writeln!(self.svg, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="{width}"/>"#).unwrap();
        }
    }

    fn clipped_line(&mut self, slope: f64, intercept: f64, color: &str) {
        let (a, b) = (self.x.lo, self.x.hi);
        let (ya, yb) = (slope * a + intercept, slope * b + intercept);
        writeln!(
            self.svg,
            r#"<path d="M{:.2} {:.2}L{:.2} {:.2}" stroke="{color}" stroke-width="1.5" clip-path="url(#plot)"/>"#,
            self.px(a),
            self.py(ya),
            self.px(b),
            self.py(yb)
        )
        .unwrap();
    }

    fn clip(&mut self) {
        writeln!(
            self.svg,
            r#"<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}"/></clipPath>"#,
            W - LEFT - RIGHT,
            H - TOP - BOTTOM
        )
        .unwrap();
    }

    fn legend(&mut self, entries: &[(&str, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = TOP + 6.0 + 14.0 * i as f64;
            writeln!(
                self.svg,
                r#"<path d="M{:.2} {y:.2}h14" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                W - RIGHT - 110.0,
                W - RIGHT - 92.0,
                y + 4.0,
                escape(label)
            )
            .unwrap();
        }
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

type Series = BTreeMap<String, Vec<(f64, Option<f64>)>>;

/// `run -> [(generation, value)]` for rows whose `key` column equals `name`.
fn collect(rows: &[BTreeMap<String, String>], key: &str, name: &str, value: &str) -> Series {
    let mut out: Series = BTreeMap::new();
    for r in rows.iter().filter(|r| r.get(key).map(String::as_str) == Some(name)) {
        let (Some(run), Some(g)) = (r.get("run"), num(r, "generation")) else { continue };
        out.entry(run.clone()).or_default().push((g, num(r, value)));
    }
    out
}

fn line_chart(title: &str, ylabel: &str, series: &Series) -> String {
    let xs = Range::of(series.values().flatten().map(|p| p.0));
    let ys = Range::of(series.values().flatten().filter_map(|p| p.1));
    let mut c = Canvas::new(title, "generation", ylabel, xs, ys, None);
    let mut i = 0;
    for (run, pts) in series {
        if run == POOLED {
            continue;
        }
        c.series(pts, PALETTE[i % PALETTE.len()], 1.0);
        i += 1;
    }
    if let Some(pts) = series.get(POOLED) {
        c.series(pts, "#000000", 2.0);
    }
    c.legend(&[("single run", PALETTE[0]), ("all runs", "#000000")]);
    c.finish()
}

fn scatter(out: &Path, t: Trait, heritability: &[BTreeMap<String, String>]) -> Result<String> {
    let mut points = Vec::new();
    for run in list_runs(out)? {
        let path = run.join(lineage_file(1));
        if !path.exists() {
            continue;
        }
        for r in read_lineage(&path)? {
            points.push(((r.parent_traits[0].get(t) + r.parent_traits[1].get(t)) / 2.0, r.offspring.get(t)));
        }
    }
    let fit = heritability.iter().find(|r| {
        r.get("run").map(String::as_str) == Some(POOLED)
            && r.get("generation").map(String::as_str) == Some("0")
            && r.get("trait").map(String::as_str) == Some(t.name())
    });
    let slope = fit.and_then(|r| num(r, "slope"));
    let intercept = fit.and_then(|r| num(r, "intercept"));
    let metadata = format!(
        r#"{{"trait":"{}","generation":0,"pairs":{},"slope":{},"intercept":{}}}"#,
        t.name(),
        points.len(),
        slope.map_or("null".into(), |v| format!("{v}")),
        intercept.map_or("null".into(), |v| format!("{v}"))
    );
    let r = Range::of(points.iter().flat_map(|p| [p.0, p.1]));
    let mut c = Canvas::new(
        &format!("{t}: offspring vs mid-parent, generation 0"),
        "mid-parent value",
        "offspring value",
        r,
        r,
        Some(metadata),
    );
    c.clip();
    for (x, y) in &points {
        writeln!(
            c.svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#555555" fill-opacity="0.5"/>"##,
            c.px(*x),
            c.py(*y)
        )
        .unwrap();
    }
    c.clipped_line(1.0, 0.0, "#d62728");
    if let (Some(s), Some(i)) = (slope, intercept) {
        c.clipped_line(s, i, "#1f77b4");
    }
    c.legend(&[("regression", "#1f77b4"), ("h2 = 1", "#d62728")]);
    Ok(c.finish())
}

fn histogram(out: &Path) -> Result<String> {
    let mut values = Vec::new();
    for run in list_runs(out)? {
        values.extend(read_traits(&run.join(traits_file(0)))?.iter().map(|r| r.traits.speed));
    }
    let bins = 20;
    let r = Range::of(values.iter().copied());
    let width = (r.hi - r.lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &values {
        let k = (((v - r.lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let ymax = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut c = Canvas::new(
        "fitness of the random generation 0",
        "speed (cm/s)",
        "individuals",
        r,
        Range { lo: 0.0, hi: ymax * 1.05 },
        Some(format!(r#"{{"bins":{bins},"individuals":{}}}"#, values.len())),
    );
    for (k, &n) in counts.iter().enumerate() {
        let x0 = c.px(r.lo + k as f64 * width);
        let x1 = c.px(r.lo + (k + 1) as f64 * width);
        let y = c.py(n as f64);
        writeln!(
            c.svg,
            r##"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4" stroke="#ffffff"/>"##,
            x1 - x0,
            c.py(0.0) - y
        )
        .unwrap();
    }
    Ok(c.finish())
}

/// Writes the figure set into `<out>/figures`.
pub fn render_dir(out: &Path) -> Result<Vec<String>> {
    let analysis = out.join(ANALYSIS_DIR);
    let heritability = table(&analysis.join("heritability.csv"))?;
    let diversity = table(&analysis.join("diversity.csv"))?;
    let medians = table(&analysis.join("medians.csv"))?;
    let dir = out.join(FIGURES_DIR);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut figures: Vec<(String, String)> = Vec::new();
    for t in Trait::ALL {
        let n = t.name();
        figures.push((format!("scatter_{n}.svg"), scatter(out, t, &heritability)?));
        figures.push((
            format!("median_{n}.svg"),
            line_chart(&format!("median {n} per generation"), n, &collect(&medians, "trait", n, "median")),
        ));
        figures.push((
            format!("increment_{n}.svg"),
            line_chart(
                &format!("increment of median {n} per generation"),
                "increment",
                &collect(&medians, "trait", n, "increment"),
            ),
        ));
        figures.push((
            format!("heritability_{n}.svg"),
            line_chart(
                &format!("heritability of {n} per generation"),
                "h2",
                &collect(&heritability, "trait", n, "slope"),
            ),
        ));
        figures.push((
            format!("diversity_{n}.svg"),
            line_chart(
                &format!("median {n} diversity per generation"),
                "diversity",
                &collect(&diversity, "trait", n, "value"),
            ),
        ));
    }
    figures.push((
        "diversity_all.svg".into(),
        line_chart(
            "mean distance in normalized trait space",
            "diversity",
            &collect(&diversity, "trait", ALL_TRAITS, "value"),
        ),
    ));
    figures.push(("fitness_g00.svg".into(), histogram(out)?));

    let mut names = Vec::with_capacity(figures.len());
    for (name, svg) in figures {
        let path = dir.join(&name);
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        names.push(name);
    }
    Ok(names)
}
