//! Static SVG 1.1 figures: (mu, lambda) heatmaps and time-series plots.
//!
//! Documents are self-contained (no external fonts, images or styles).

use optosync_core::{CellStatus, SweepField};
use std::fmt::Write;

/// Colour of synchronized cells (negative exponent).
pub const SYNC_BLUE: &str = "#2166ac";
/// Colour of unsynchronized cells (positive exponent).
pub const NO_SYNC_RED: &str = "#b2182b";
/// Colour of marginal cells.
pub const MARGINAL_GRAY: &str = "#9e9e9e";

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapStyle {
    /// Blue below zero, red above, gray for marginal cells.
    Sign,
    /// Linear colour ramp with a colour bar.
    Continuous,
}

pub fn escape(text: &str) -> String {
    let mut s = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => s.push_str("&amp;"),
            '<' => s.push_str("&lt;"),
            '>' => s.push_str("&gt;"),
            '"' => s.push_str("&quot;"),
            '\'' => s.push_str("&apos;"),
            c => s.push(c),
        }
    }
    s
}

/// Compact tick label with at most 4 significant digits.
pub fn tick_label(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{:.*}", (3 - a.log10().floor() as i32).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.2e}");
        let (m, e) = s.split_once('e').unwrap_or((&s, "0"));
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        format!("{m}e{e}")
    }
}

/// Round tick positions covering `[lo, hi]` with about `n` intervals.
pub fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return vec![lo];
    }
    let raw = (hi - lo) / n.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let stop = (hi / step).floor() as i64;
    (start..=stop).map(|k| k as f64 * step).collect()
}

/// Viridis-like ramp, `u` in `[0, 1]`.
fn ramp(u: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let u = if u.is_finite() { u.clamp(0.0, 1.0) } else { 0.0 };
    let x = u * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn open(w: u32, h: u32) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    s
}

/// Heatmap of a sweep field with `mu` on the horizontal and `lambda` on the
/// vertical axis. Divergent cells are hatched.
pub fn render_heatmap(field: &SweepField, style: HeatmapStyle, title: &str) -> String {
    let (x0, y0, pw, ph) = (80.0, 50.0, 480.0, 400.0);
    let g = &field.grid;
    let (nm, nl) = (g.mu_steps, g.lambda_steps);
    let (cw, chh) = (pw / nm as f64, ph / nl as f64);
    let mut s = open(760, 520);
    s.push_str(
        "<defs><pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"6\" height=\"6\">\
<rect width=\"6\" height=\"6\" fill=\"white\"/>\
<path d=\"M0,6 L6,0\" stroke=\"black\" stroke-width=\"1\"/></pattern></defs>\n",
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        x0 + pw / 2.0,
        escape(title)
    );

    let ok: Vec<f64> = (0..field.values.len())
        .filter(|&k| field.status[k] != CellStatus::Divergent && field.values[k].is_finite())
        .map(|k| field.values[k])
        .collect();
    let vmin = ok.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = ok.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    for i in 0..nm {
        for j in 0..nl {
            let k = g.index(i, j);
            let v = field.values[k];
            let fill = match (field.status[k], style) {
                (CellStatus::Divergent, _) => "url(#hatch)".to_string(),
                (_, _) if !v.is_finite() => "url(#hatch)".to_string(),
                (CellStatus::Marginal, HeatmapStyle::Sign) => MARGINAL_GRAY.to_string(),
                (_, HeatmapStyle::Sign) => {
                    if v < 0.0 { SYNC_BLUE } else if v > 0.0 { NO_SYNC_RED } else { MARGINAL_GRAY }.to_string()
                }
                (_, HeatmapStyle::Continuous) => {
                    let u = if vmax > vmin { (v - vmin) / (vmax - vmin) } else { 0.5 };
                    ramp(u)
                }
            };
            let x = x0 + i as f64 * cw;
            let y = y0 + ph - (j + 1) as f64 * chh;
            let _ = writeln!(
                s,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"/>",
                cw + 0.05,
                chh + 0.05
            );
        }
    }
    let _ = writeln!(
        s,
        "<rect x=\"{x0}\" y=\"{y0}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>"
    );

    // ticks at cell centres
    let pick = |n: usize| -> Vec<usize> {
        let m = n.min(6);
        if m <= 1 {
            vec![0]
        } else {
            (0..m).map(|t| t * (n - 1) / (m - 1)).collect()
        }
    };
    for i in pick(nm) {
        let x = x0 + (i as f64 + 0.5) * cw;
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/><text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            y0 + ph,
            y0 + ph + 5.0,
            y0 + ph + 19.0,
            tick_label(g.mu(i))
        );
    }
    for j in pick(nl) {
        let y = y0 + ph - (j as f64 + 0.5) * chh;
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            tick_label(g.lambda(j))
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">μ</text>",
        x0 + pw / 2.0,
        y0 + ph + 40.0
    );
    let _ = writeln!(
        s,
        "<text x=\"24\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">λ</text>",
        y0 + ph / 2.0
    );

    let lx = x0 + pw + 25.0;
    match style {
        HeatmapStyle::Sign => {
            let entries = [
                (SYNC_BLUE, "exponent < 0 (sync)"),
                (NO_SYNC_RED, "exponent > 0 (no sync)"),
                (MARGINAL_GRAY, "marginal"),
                ("url(#hatch)", "divergent"),
            ];
            for (n, (color, label)) in entries.iter().enumerate() {
                let y = y0 + 10.0 + n as f64 * 24.0;
                let _ = writeln!(
                    s,
                    "<rect x=\"{lx}\" y=\"{y}\" width=\"14\" height=\"14\" fill=\"{color}\" stroke=\"black\"/><text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>",
                    lx + 20.0,
                    y + 11.0,
                    escape(label)
                );
            }
        }
        HeatmapStyle::Continuous => {
            let (bh, steps) = (ph, 64);
            for k in 0..steps {
                let u0 = k as f64 / steps as f64;
                let y = y0 + bh * (1.0 - u0 - 1.0 / steps as f64);
                let _ = writeln!(
                    s,
                    "<rect x=\"{lx}\" y=\"{y:.2}\" width=\"18\" height=\"{:.2}\" fill=\"{}\"/>",
                    bh / steps as f64 + 0.05,
                    ramp(u0 + 0.5 / steps as f64)
                );
            }
            let _ = writeln!(
                s,
                "<rect x=\"{lx}\" y=\"{y0}\" width=\"18\" height=\"{bh}\" fill=\"none\" stroke=\"black\"/>"
            );
            if vmax > vmin {
                for t in nice_ticks(vmin, vmax, 5) {
                    let y = y0 + bh * (1.0 - (t - vmin) / (vmax - vmin));
                    let _ = writeln!(
                        s,
                        "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{}\" y=\"{:.2}\" font-size=\"11\">{}</text>",
                        lx + 18.0,
                        lx + 23.0,
                        lx + 26.0,
                        y + 4.0,
                        tick_label(t)
                    );
                }
            } else if vmin.is_finite() {
                let _ = writeln!(
                    s,
                    "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>",
                    lx + 26.0,
                    y0 + bh / 2.0,
                    tick_label(vmin)
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

/// One curve of a line plot.
pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Line plot of one or more series on shared axes.
pub fn render_series(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (x0, y0, pw, ph) = (80.0, 50.0, 560.0, 360.0);
    let mut s = open(820, 480);
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        x0 + pw / 2.0,
        escape(title)
    );
    let finite = |v: &&f64| v.is_finite();
    let xs = series.iter().flat_map(|c| c.x.iter().filter(finite));
    let ys = series.iter().flat_map(|c| c.y.iter().filter(finite));
    let (mut xmin, mut xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let (mut ymin, mut ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !xmin.is_finite() {
        (xmin, xmax) = (0.0, 1.0);
    }
    if !ymin.is_finite() {
        (ymin, ymax) = (0.0, 1.0);
    }
    if xmax <= xmin {
        xmax = xmin + 1.0;
    }
    if ymax <= ymin {
        let pad = ymin.abs().max(1.0) * 0.5;
        (ymin, ymax) = (ymin - pad, ymax + pad);
    } else {
        let pad = 0.05 * (ymax - ymin);
        (ymin, ymax) = (ymin - pad, ymax + pad);
    }
    let px = |x: f64| x0 + pw * (x - xmin) / (xmax - xmin);
    let py = |y: f64| y0 + ph * (1.0 - (y - ymin) / (ymax - ymin));

    for t in nice_ticks(xmin, xmax, 6) {
        let x = px(t);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#e0e0e0\"/><text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            y0 + ph,
            y0 + ph + 18.0,
            tick_label(t)
        );
    }
    for t in nice_ticks(ymin, ymax, 6) {
        let y = py(t);
        let _ = writeln!(
            s,
            "<line x1=\"{x0}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#e0e0e0\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            x0 + pw,
            x0 - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        "<rect x=\"{x0}\" y=\"{y0}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>"
    );
    for (n, c) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let len = c.x.len().min(c.y.len());
        let stride = len.div_ceil(4000).max(1);
        let mut pts = String::new();
        for k in (0..len).step_by(stride).chain(std::iter::once(len.saturating_sub(1))) {
            if k < len && c.x[k].is_finite() && c.y[k].is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", px(c.x[k]), py(c.y[k]));
            }
        }
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>",
            pts.trim_end()
        );
        let ly = y0 + 12.0 + n as f64 * 18.0;
        let lx = x0 + pw + 15.0;
        let _ = writeln!(
            s,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>",
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(c.label)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        x0 + pw / 2.0,
        y0 + ph + 40.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"22\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 22 {})\">{}</text>",
        y0 + ph / 2.0,
        y0 + ph / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
    s
}
