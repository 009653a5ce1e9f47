//! CSV tables and standalone SVG line plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::learner::fmt_f64;

use super::boltzmann::BoltzmannComparison;
use super::convergence::MeanCurve;
use super::plateau::PlateauRow;
use super::scan::{ScanRow, SCAN_CSV_HEADER};

pub const MEAN_CURVE_CSV_HEADER: &str = "t,mean_gap,mean_pi_star,mean_avg_grad_norm_sq,mean_regret";
pub const PLATEAU_CSV_HEADER: &str = "p_star,median_time,window,min_window_gap,delta_gap,hit_times";
pub const BOLTZMANN_CSV_HEADER: &str = "seed,boltzmann_regret_per_step,gradient_regret_per_step";

pub fn mean_curve_csv(curve: &MeanCurve) -> String {
    let mut s = String::new();
    writeln!(s, "{MEAN_CURVE_CSV_HEADER}").unwrap();
    for i in 0..curve.t.len() {
        writeln!(
            s,
            "{},{},{},{},{}",
            curve.t[i],
            fmt_f64(curve.gap[i]),
            fmt_f64(curve.pi_star[i]),
            fmt_f64(curve.avg_grad_norm_sq[i]),
            fmt_f64(curve.regret[i])
        )
        .unwrap();
    }
    s
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{SCAN_CSV_HEADER}").unwrap();
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(r.pi[0]),
            fmt_f64(r.pi[1]),
            fmt_f64(r.pi[2]),
            fmt_f64(r.stoch_scale),
            fmt_f64(r.grad_norm),
            fmt_f64(r.ratio)
        )
        .unwrap();
    }
    s
}

fn fmt_time(v: f64) -> String {
    if v.is_finite() {
        fmt_f64(v)
    } else {
        "inf".into()
    }
}

/// Per-seed hit times are `;`-separated, `inf` for runs that never got there.
pub fn plateau_csv(rows: &[PlateauRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{PLATEAU_CSV_HEADER}").unwrap();
    for r in rows {
        let hits: Vec<String> = r.hit_times.iter().map(|h| h.map_or("inf".into(), |t| t.to_string())).collect();
        writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(r.p_star),
            fmt_time(r.median_time),
            r.window,
            fmt_f64(r.min_window_gap),
            fmt_f64(r.delta_gap),
            hits.join(";")
        )
        .unwrap();
    }
    s
}

pub fn boltzmann_csv(cmp: &BoltzmannComparison) -> String {
    let mut s = String::new();
    writeln!(s, "{BOLTZMANN_CSV_HEADER}").unwrap();
    for ((seed, b), g) in cmp.seeds.iter().zip(&cmp.boltzmann).zip(&cmp.gradient) {
        writeln!(s, "{seed},{},{}", fmt_f64(*b), fmt_f64(*g)).unwrap();
    }
    s
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Axes {
    pub log_x: bool,
    pub log_y: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf"];

fn transform(v: f64, log: bool) -> Option<f64> {
    match (log, v.is_finite()) {
        (_, false) => None,
        (true, _) if v <= 0.0 => None,
        (true, _) => Some(v.log10()),
        (false, _) => Some(v),
    }
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let (a, b) = (lo.floor() as i32, hi.ceil() as i32);
        let step = ((b - a) / 8).max(1);
        (a..=b)
            .step_by(step as usize)
            .map(|e| e as f64)
            .filter(|e| *e >= lo - 1e-9 && *e <= hi + 1e-9)
            .map(|e| (e, format!("1e{}", e as i32)))
            .collect()
    } else {
        (0..=4)
            .map(|i| {
                let v = lo + (hi - lo) * i as f64 / 4.0;
                (v, format!("{v:.3}"))
            })
            .collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A self-contained SVG line chart. Points that cannot be shown on a log axis
/// are dropped.
pub fn line_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], axes: Axes) -> String {
    let mapped: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter_map(|&(x, y)| Some((transform(x, axes.log_x)?, transform(y, axes.log_y)?)))
                .collect()
        })
        .collect();
    let all = mapped.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();
    writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    )
    .unwrap();
    for (v, label) in ticks(x0, x1, axes.log_x) {
        let x = px(v);
        writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#333"/>"##, TOP + ph, TOP + ph + 5.0).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, TOP + ph + 18.0).unwrap();
    }
    for (v, label) in ticks(y0, y1, axes.log_y) {
        let y = py(v);
        writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/>"##, LEFT - 5.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0, escape(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    )
    .unwrap();
    for (i, (pts, series)) in mapped.iter().zip(series).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" ")).unwrap();
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            LEFT + pw - 150.0,
            LEFT + pw - 130.0
        )
        .unwrap();
        writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, LEFT + pw - 125.0, ly + 4.0, escape(&series.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}
