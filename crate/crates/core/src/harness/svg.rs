use std::fmt::Write;

use super::sweep::{SeriesId, SweepResult};

/// Trailing window of the plotted moving average.
pub const SMOOTHING_WINDOW: usize = 50;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 30.0, 50.0); // left, right, top, bottom
const PALETTE: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
];

/// Mean of the last `window` values up to and including each index.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Line plot of smoothed mean return per episode with ±1 standard-error bands.
///
/// The raw baseline is drawn dashed in black. A k-curve whose final-window
/// mean is at least the baseline's is drawn bold.
pub fn render_sweep_svg(result: &SweepResult) -> String {
    let smoothed: Vec<(SeriesId, Vec<f64>, Vec<f64>)> = result
        .curves
        .iter()
        .map(|c| (c.id, moving_average(&c.mean, SMOOTHING_WINDOW), moving_average(&c.stderr, SMOOTHING_WINDOW)))
        .collect();
    let episodes = result.curves.iter().map(|c| c.episodes()).max().unwrap_or(0).max(1);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, m, s) in &smoothed {
        for (a, b) in m.iter().zip(s) {
            lo = lo.min(a - b);
            hi = hi.max(a + b);
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo, hi) = (lo - 1.0, hi + 1.0);
    }

    let (ml, mr, mt, mb) = MARGIN;
    let pw = WIDTH - ml - mr;
    let ph = HEIGHT - mt - mb;
    let x = |e: usize| ml + if episodes > 1 { e as f64 / (episodes - 1) as f64 * pw } else { 0.0 };
    let y = |v: f64| mt + (hi - v) / (hi - lo) * ph;
    let baseline = result.final_window(SeriesId::Raw).map(|f| f.0);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.0}</text>"#, ml - 6.0, y(v) + 4.0, v);
        let e = (episodes - 1) * i / 4;
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, x(e), HEIGHT - mb + 18.0, e + 1);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">episode</text>"#, ml + pw / 2.0, HEIGHT - 10.0);
    let _ = writeln!(svg, r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">mean return ({SMOOTHING_WINDOW}-episode moving average)</text>"#, mt + ph / 2.0, mt + ph / 2.0);

    for (i, (id, mean, se)) in smoothed.iter().enumerate() {
        let (color, width, dash) = match id {
            SeriesId::Raw => ("black", 2.0, r#" stroke-dasharray="6 4""#),
            SeriesId::K(k) => {
                let bold = match (baseline, result.final_window(*id)) {
                    (Some(b), Some((m, _))) => m >= b,
                    _ => false,
                };
                (PALETTE[(k - 1) % PALETTE.len()], if bold { 3.0 } else { 1.0 }, "")
            }
        };
        let mut band = String::new();
        for (e, (m, s)) in mean.iter().zip(se).enumerate() {
            let _ = write!(band, "{:.2},{:.2} ", x(e), y(m + s));
        }
        for (e, (m, s)) in mean.iter().zip(se).enumerate().rev() {
            let _ = write!(band, "{:.2},{:.2} ", x(e), y(m - s));
        }
        let _ = writeln!(svg, r#"<polygon points="{}" fill="{color}" fill-opacity="0.12" stroke="none"/>"#, band.trim_end());
        let line: Vec<String> = mean.iter().enumerate().map(|(e, m)| format!("{:.2},{:.2}", x(e), y(*m))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#, line.join(" "));
        let ly = mt + 14.0 + 16.0 * i as f64;
        let lx = ml + pw - 70.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="{width}"{dash}/>"#, ly - 4.0, lx + 20.0, ly - 4.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{ly:.1}">{id}</text>"#, lx + 26.0);
    }
    svg.push_str("</svg>\n");
    svg
}
