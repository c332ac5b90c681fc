//! Static SVG line chart of mean MSE against budget on a log axis.

use std::fmt::Write as _;
use std::path::Path;

use crate::bench::Aggregate;
use crate::error::{Error, Result};

/// Smallest plotted MSE; exact zeros land here.
pub const MSE_FLOOR: f64 = 1e-16;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Curve<'a> {
    label: String,
    points: Vec<&'a Aggregate>,
}

fn curves(aggs: &[Aggregate]) -> Vec<Curve<'_>> {
    let mut out: Vec<Curve> = Vec::new();
    for a in aggs {
        let label = a.label();
        match out.iter_mut().find(|c| c.label == label) {
            Some(c) => c.points.push(a),
            None => out.push(Curve {
                label,
                points: vec![a],
            }),
        }
    }
    for c in &mut out {
        c.points.sort_by_key(|a| a.budget);
    }
    out
}

fn log_mse(v: f64) -> f64 {
    v.max(MSE_FLOOR).log10()
}

pub fn render_svg(aggs: &[Aggregate]) -> Result<String> {
    if aggs.is_empty() {
        return Err(Error::Usage("nothing to plot".into()));
    }
    let curves = curves(aggs);
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for a in aggs {
        x0 = x0.min(a.budget as f64);
        x1 = x1.max(a.budget as f64);
        let y = log_mse(a.mean_mse);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let (y0, mut y1) = (y0.floor(), y1.ceil());
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    // decade grid on y
    let decades = (y1 - y0) as i64;
    let step = ((decades + 7) / 8).max(1);
    let mut d = y0 as i64;
    while d <= y1 as i64 {
        let y = sy(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            LEFT,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
        d += step;
    }
    // budget ticks on x
    let mut budgets: Vec<usize> = aggs.iter().map(|a| a.budget).collect();
    budgets.sort_unstable();
    budgets.dedup();
    for b in &budgets {
        let x = sx(*b as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{b}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000000"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">budget T</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">mean MSE</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|a| format!("{:.2},{:.2}", sx(a.budget as f64), sy(log_mse(a.mean_mse))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            c.label
        );
        for p in &pts {
            let (x, y) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 25.0,
            lx + 30.0,
            ly + 4.0,
            c.label
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(aggs: &[Aggregate], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(aggs)?).map_err(|e| Error::io(path, e))
}
