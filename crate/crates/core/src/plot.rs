//! Static SVG figures rendered straight from curve and IWT artifacts.
//!
//! Output is plain text with fixed-precision coordinates, so identical
//! inputs always give identical bytes.

use std::fmt::Write;

use crate::iwt::IWTResult;
use crate::pipeline::{VICurveSet, Which};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

const OBSERVED_COLOR: &str = "#1f77b4";
const NULL_COLOR: &str = "#d62728";

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-level mean, 5% and 95% quantiles of the present cells.
pub fn level_bands(set: &VICurveSet, which: Which) -> Vec<(f64, f64, f64)> {
    set.matrix(which)
        .iter()
        .map(|row| {
            let mut v: Vec<f64> = row.iter().flatten().copied().collect();
            v.sort_by(f64::total_cmp);
            let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
            (mean, quantile(&v, 0.05), quantile(&v, 0.95))
        })
        .collect()
}

struct Frame {
    y_max: f64,
}

impl Frame {
    fn x(&self, p: f64) -> f64 {
        LEFT + p * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - v / self.y_max * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

fn axes(out: &mut String, f: &Frame, y_label: &str, ticks: &[f64]) {
    let (x0, x1) = (f.x(0.0), f.x(1.0));
    let (y0, y1) = (f.y(0.0), f.y(f.y_max));
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=10 {
        let p = i as f64 / 10.0;
        let x = f.x(p);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{p:.1}</text>"#,
            y0 + 4.0,
            y0 + 18.0
        );
    }
    for &t in ticks {
        let y = f.y(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            x0 - 7.0,
            y + 4.0,
            format_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">perturbation level p</text>"#,
        0.5 * (x0 + x1),
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{y_label}</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1)
    );
}

fn format_tick(t: f64) -> String {
    if t == 0.0 {
        "0".to_string()
    } else if t < 0.1 {
        format!("{t:.2}")
    } else {
        format!("{t:.1}")
    }
}

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let step = 10f64.powf(v.log10().floor());
    (v / step).ceil() * step
}

/// VIc and VIc_random level means with 5–95% replicate bands.
pub fn curve_svg(set: &VICurveSet) -> String {
    let obs = level_bands(set, Which::Observed);
    let null = level_bands(set, Which::Null);
    let top = obs.iter().chain(&null).map(|b| b.2.max(b.0)).fold(0.0, f64::max);
    let f = Frame { y_max: nice_max(top) };
    let ticks: Vec<f64> = (0..=5).map(|i| f.y_max * i as f64 / 5.0).collect();
    let mut out = String::new();
    header(&mut out);
    for (bands, color) in [(&obs, OBSERVED_COLOR), (&null, NULL_COLOR)] {
        let mut d = String::new();
        for (&p, b) in set.grid.levels.iter().zip(bands.iter()) {
            let _ = write!(d, "{}{:.2} {:.2} ", if d.is_empty() { "M" } else { "L" }, f.x(p), f.y(b.2));
        }
        for (&p, b) in set.grid.levels.iter().zip(bands.iter()).rev() {
            let _ = write!(d, "L{:.2} {:.2} ", f.x(p), f.y(b.1));
        }
        let _ = writeln!(out, r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, d);
    }
    axes(&mut out, &f, "VI (nats)", &ticks);
    for (bands, color, name) in [(&obs, OBSERVED_COLOR, "VIc"), (&null, NULL_COLOR, "VIc_random")] {
        let points: Vec<String> = set
            .grid
            .levels
            .iter()
            .zip(bands.iter())
            .map(|(&p, b)| format!("{:.2},{:.2}", f.x(p), f.y(b.0)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="{name}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
    }
    for (i, (color, name)) in [(OBSERVED_COLOR, "VIc"), (NULL_COLOR, "VIc_random")].iter().enumerate() {
        let y = TOP + 12.0 + 16.0 * i as f64;
        let x = WIDTH - RIGHT - 110.0;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{name}</text>"#,
            x + 20.0,
            x + 26.0,
            y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Extent of each component along the level axis, split at midpoints.
fn spans(levels: &[f64]) -> Vec<(f64, f64)> {
    let t = levels.len();
    (0..t)
        .map(|k| {
            let lo = if k == 0 { levels[0] } else { 0.5 * (levels[k - 1] + levels[k]) };
            let hi = if k + 1 == t { levels[t - 1] } else { 0.5 * (levels[k] + levels[k + 1]) };
            (lo, hi)
        })
        .collect()
}

/// Step plot of IWT adjusted p-values with shaded significance regions.
pub fn pvalue_svg(levels: &[f64], iwt: &IWTResult) -> String {
    let f = Frame { y_max: 1.0 };
    let mut out = String::new();
    header(&mut out);
    let sp = spans(levels);
    for (k, &(lo, hi)) in sp.iter().enumerate().take(iwt.components) {
        let p = iwt.adjusted_p[k];
        let fill = if p <= 0.01 {
            "#606060"
        } else if p <= 0.05 {
            "#c8c8c8"
        } else {
            continue;
        };
        let _ = writeln!(
            out,
            r#"<rect class="sig" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            f.x(lo),
            f.y(1.0),
            f.x(hi) - f.x(lo),
            f.y(0.0) - f.y(1.0)
        );
    }
    axes(&mut out, &f, "adjusted p-value", &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    for (alpha, dash) in [(0.05, ""), (0.01, r#" stroke-dasharray="4 3""#)] {
        let y = f.y(alpha);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="red"{dash}/>"#,
            f.x(0.0),
            f.x(1.0)
        );
    }
    let mut d = String::new();
    for (k, &(lo, hi)) in sp.iter().enumerate().take(iwt.components) {
        let y = f.y(iwt.adjusted_p[k]);
        let _ = write!(d, "{}{:.2} {y:.2} L{:.2} {y:.2} ", if d.is_empty() { "M" } else { "L" }, f.x(lo), f.x(hi));
    }
    let _ = writeln!(out, r#"<path class="step" d="{}" fill="none" stroke="black" stroke-width="2"/>"#, d.trim_end());
    out.push_str("</svg>\n");
    out
}
