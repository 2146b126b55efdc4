//! SVG figures rendered from recorded runs only.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::metrics::moving_average;
use super::run::RunRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LearningCurve,
    Heatmap,
    LossMap,
    Shotdown,
    TrajectoryProjection,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::LearningCurve,
        PlotKind::Heatmap,
        PlotKind::LossMap,
        PlotKind::Shotdown,
        PlotKind::TrajectoryProjection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::LearningCurve => "learning_curve",
            PlotKind::Heatmap => "heatmap",
            PlotKind::LossMap => "loss_map",
            PlotKind::Shotdown => "shotdown",
            PlotKind::TrajectoryProjection => "trajectory_projection",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.replace('-', "_"))
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.as_str()).collect();
                Error::config(format!("unknown plot kind '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x);
        let (y0, y1) = widen(y);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#).unwrap();
    for (v, anchor_x) in [(f.x0, l), (f.x1, r)] {
        writeln!(s, r#"<text x="{anchor_x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#, b + 16.0, fmt(v)).unwrap();
    }
    for (v, anchor_y) in [(f.y0, b), (f.y1, t)] {
        writeln!(s, r#"<text x="{}" y="{anchor_y}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#, l - 6.0, fmt(v)).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#, W / 2.0, H - 14.0, escape(xlabel)).unwrap();
    writeln!(s, r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{}</text>"#, H / 2.0, H / 2.0, escape(ylabel)).unwrap();
}

fn fmt(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn polyline(s: &mut String, f: &Frame, xs: &[f64], ys: &[f64], stroke: &str, class: &str) {
    let pts: Vec<String> = xs.iter().zip(ys).map(|(&x, &y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
    writeln!(s, r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#, pts.join(" ")).unwrap();
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn missing(series: &str) -> Error {
    Error::usage(format!("runs do not contain the '{series}' series"))
}

/// Mean across seeds with a shaded band down to the worst seed.
fn mean_and_worst(series: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = series.iter().map(Vec::len).min().unwrap_or(0);
    let mean = (0..n).map(|i| series.iter().map(|s| s[i]).sum::<f64>() / series.len() as f64).collect();
    let worst = (0..n).map(|i| series.iter().map(|s| s[i]).fold(f64::INFINITY, f64::min)).collect();
    (mean, worst)
}

fn band_svg(title: &str, xlabel: &str, ylabel: &str, series: &[Vec<f64>], smooth: usize) -> String {
    let smoothed: Vec<Vec<f64>> = series.iter().map(|s| moving_average(s, smooth)).collect();
    let (mean, worst) = mean_and_worst(&smoothed);
    let xs: Vec<f64> = (1..=mean.len()).map(|e| e as f64).collect();
    let f = Frame::new((1.0, xs.len() as f64), range(mean.iter().chain(&worst).copied()));
    let mut s = header(title);
    axes(&mut s, &f, xlabel, ylabel);
    if series.len() > 1 {
        let mut d = String::new();
        for (i, (&x, &y)) in xs.iter().zip(&mean).enumerate() {
            write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, f.px(x), f.py(y)).unwrap();
        }
        for (&x, &y) in xs.iter().zip(&worst).rev() {
            write!(d, "L{:.2} {:.2} ", f.px(x), f.py(y)).unwrap();
        }
        writeln!(s, r##"<path class="band" d="{}Z" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##, d).unwrap();
    }
    polyline(&mut s, &f, &xs, &mean, "#08519c", "mean");
    s.push_str("</svg>\n");
    s
}

/// Sequential colour from light yellow (t = 0) to dark red (t = 1).
pub fn heat_color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 128.0), lerp(255.0, 0.0), lerp(204.0, 38.0))
}

/// Cell-by-cell colour map; row 0 is drawn at the bottom.
fn grid_svg(title: &str, grid: &[Vec<f64>]) -> String {
    let rows = grid.len();
    let cols = grid.first().map_or(0, Vec::len);
    let (lo, hi) = range(grid.iter().flatten().copied());
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let cell = ((W - 2.0 * MARGIN) / cols.max(1) as f64).min((H - 2.0 * MARGIN) / rows.max(1) as f64);
    let mut s = header(title);
    for (y, row) in grid.iter().enumerate() {
        for (x, &v) in row.iter().enumerate() {
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
            writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                MARGIN + x as f64 * cell,
                MARGIN + (rows - 1 - y) as f64 * cell,
                cell,
                cell,
                heat_color(t)
            )
            .unwrap();
        }
    }
    let lx = MARGIN + cols as f64 * cell + 16.0;
    writeln!(s, r#"<rect x="{lx}" y="{MARGIN}" width="12" height="12" fill="{}"/>"#, heat_color(1.0)).unwrap();
    writeln!(s, r#"<text class="max" x="{}" y="{}" font-family="sans-serif" font-size="11">max {}</text>"#, lx + 16.0, MARGIN + 10.0, fmt(hi)).unwrap();
    writeln!(s, r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{}"/>"#, MARGIN + 20.0, heat_color(0.0)).unwrap();
    writeln!(s, r#"<text class="min" x="{}" y="{}" font-family="sans-serif" font-size="11">min {}</text>"#, lx + 16.0, MARGIN + 30.0, fmt(lo)).unwrap();
    s.push_str("</svg>\n");
    s
}

fn trajectory_svg(title: &str, xs: &[f64], ys: &[f64]) -> String {
    let f = Frame::new(range(xs.iter().copied()), range(ys.iter().copied()));
    let mut s = header(title);
    axes(&mut s, &f, "x (km)", "y (km)");
    polyline(&mut s, &f, xs, ys, "#08519c", "flight");
    s.push_str("</svg>\n");
    s
}

/// Renders `kind` from `runs` into SVG text, keyed by file name.
pub fn render(runs: &[RunRecord], kind: PlotKind) -> Result<Vec<(String, String)>> {
    if runs.is_empty() {
        return Err(Error::usage("no runs to plot"));
    }
    let label = &runs[0].meta.name;
    let variant = runs[0].meta.variant;
    match kind {
        PlotKind::LearningCurve => {
            if runs.iter().any(|r| r.rows.is_empty()) {
                return Err(missing("extrinsic_return"));
            }
            let series: Vec<Vec<f64>> = runs.iter().map(RunRecord::returns).collect();
            let smooth = (series[0].len() / 100).max(1);
            let title = format!("{label} {variant}: extrinsic return ({} seeds)", runs.len());
            Ok(vec![("learning_curve.svg".into(), band_svg(&title, "episode", "return", &series, smooth))])
        }
        PlotKind::Shotdown => {
            let series = runs
                .iter()
                .map(|r| r.rows.iter().map(|row| row.shotdown_prob).collect::<Option<Vec<f64>>>())
                .collect::<Option<Vec<_>>>()
                .filter(|s| s.iter().all(|v| !v.is_empty()))
                .ok_or_else(|| missing("shotdown_prob"))?;
            let title = format!("{label} {variant}: cumulative shot-down probability");
            Ok(vec![("shotdown.svg".into(), band_svg(&title, "episode", "P(shot down)", &series, 1))])
        }
        PlotKind::Heatmap => runs
            .iter()
            .map(|r| {
                let v = r.visits.as_ref().ok_or_else(|| missing("visits"))?;
                let title = format!("{label} {variant} seed {}: visits", r.seed());
                Ok((format!("heatmap_seed{}.svg", r.seed()), grid_svg(&title, &v.rows())))
            })
            .collect(),
        PlotKind::LossMap => runs
            .iter()
            .map(|r| {
                let m = r.loss_map.as_ref().ok_or_else(|| missing("loss_map"))?;
                let title = format!("{label} {variant} seed {}: predictor loss", r.seed());
                Ok((format!("loss_map_seed{}.svg", r.seed()), grid_svg(&title, m)))
            })
            .collect(),
        PlotKind::TrajectoryProjection => runs
            .iter()
            .map(|r| {
                let t = r.trajectory.as_ref().filter(|t| !t.is_empty()).ok_or_else(|| missing("trajectory"))?;
                let xs: Vec<f64> = t.iter().map(|p| p.x).collect();
                let ys: Vec<f64> = t.iter().map(|p| p.y).collect();
                let title = format!("{label} {variant} seed {}: x-y projection", r.seed());
                Ok((format!("trajectory_seed{}.svg", r.seed()), trajectory_svg(&title, &xs, &ys)))
            })
            .collect(),
    }
}

/// Writes the figures for `kind` into `out_dir` and returns their paths.
pub fn emit_plots(runs: &[RunRecord], kind: PlotKind, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let files = render(runs, kind)?;
    fs::create_dir_all(out_dir)?;
    files
        .into_iter()
        .map(|(name, svg)| {
            let path = out_dir.join(name);
            fs::write(&path, svg)?;
            Ok(path)
        })
        .collect()
}
