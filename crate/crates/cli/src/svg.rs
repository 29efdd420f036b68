//! Minimal static SVG charts: polylines and survival step functions.

use std::fmt::Write as _;
use std::path::Path;

use firmsurv_core::{Error, Result};

use crate::stages::write_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    /// Horizontal to the next x, then vertical to the next y.
    Step,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub kind: PlotKind,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Fixed-precision coordinate so output bytes do not depend on float
/// formatting details.
fn c(v: f64) -> String {
    format!("{v:.2}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Data range padded when empty; the flag reports whether padding happened.
fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64, bool) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi, false)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, lo + pad, true)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * f64::from(i) / 4.0).collect()
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

/// Render the chart to SVG text. Degenerate axis ranges are padded with a
/// warning.
pub fn render(chart: &Chart) -> Result<String> {
    if chart.series.is_empty() || chart.series.iter().any(|s| s.points.is_empty()) {
        return Err(Error::domain("cannot plot an empty series"));
    }
    let all = || chart.series.iter().flat_map(|s| s.points.iter());
    if all().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::domain("cannot plot non-finite coordinates"));
    }
    let (x0, x1, px) = axis_range(all().map(|p| p.0));
    let (y0, y1, py) = axis_range(all().map(|p| p.1));
    if px || py {
        log::warn!("degenerate axis range in `{}`; padded", chart.title);
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        c(LEFT + pw / 2.0),
        escape(&chart.title)
    );
    // axes
    let _ = writeln!(
        out,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}"/></g>"#,
        l = c(LEFT),
        r = c(LEFT + pw),
        t = c(TOP),
        b = c(TOP + ph)
    );
    out.push_str("<g class=\"ticks\">\n");
    for v in ticks(x0, x1) {
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{b}" x2="{x}" y2="{b5}" stroke="black"/><text x="{x}" y="{ty}" text-anchor="middle">{}</text>"#,
            tick_label(v),
            x = c(sx(v)),
            b = c(TOP + ph),
            b5 = c(TOP + ph + 5.0),
            ty = c(TOP + ph + 18.0)
        );
    }
    for v in ticks(y0, y1) {
        let _ = writeln!(
            out,
            r#"<line x1="{l5}" y1="{y}" x2="{l}" y2="{y}" stroke="black"/><text x="{tx}" y="{ty}" text-anchor="end">{}</text>"#,
            tick_label(v),
            y = c(sy(v)),
            l = c(LEFT),
            l5 = c(LEFT - 5.0),
            tx = c(LEFT - 8.0),
            ty = c(sy(v) + 4.0)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        c(LEFT + pw / 2.0),
        c(HEIGHT - 16.0),
        escape(&chart.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
        escape(&chart.y_label),
        y = c(TOP + ph / 2.0)
    );

    for (i, s) in chart.series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let (fx, fy) = s.points[0];
        let mut d = format!("M{} {}", c(sx(fx)), c(sy(fy)));
        for &(x, y) in &s.points[1..] {
            match chart.kind {
                PlotKind::Line => {
                    let _ = write!(d, " L{} {}", c(sx(x)), c(sy(y)));
                }
                PlotKind::Step => {
                    let _ = write!(d, " H{} V{}", c(sx(x)), c(sy(y)));
                }
            }
        }
        let _ = writeln!(
            out,
            r#"<path class="series" data-name="{}" d="{d}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            escape(&s.name)
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            out,
            r#"<g class="legend"><line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            c(lx),
            c(lx + 20.0),
            c(lx + 26.0),
            c(ly + 4.0),
            escape(&s.name),
            y = c(ly)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_svg(chart: &Chart, path: &Path) -> Result<()> {
    write_text(path, &render(chart)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(kind: PlotKind, points: Vec<(f64, f64)>) -> Chart {
        Chart {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            kind,
            series: vec![Series {
                name: "a<b".into(),
                points,
            }],
        }
    }

    #[test]
    fn single_point_gets_padded_axes() {
        let svg = render(&chart(PlotKind::Line, vec![(2.0, 0.0)])).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains(">1<") && svg.contains(">3<"));
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn rendering_is_byte_deterministic() {
        let ch = chart(PlotKind::Step, vec![(0.0, 1.0), (1.0, 0.8), (2.5, 0.6)]);
        assert_eq!(render(&ch).unwrap(), render(&ch).unwrap());
    }

    #[test]
    fn step_path_has_one_vertical_per_step() {
        let svg = render(&chart(
            PlotKind::Step,
            vec![(0.0, 1.0), (1.0, 0.8), (2.0, 0.7), (4.0, 0.5)],
        ))
        .unwrap();
        let d = svg
            .lines()
            .find(|l| l.contains("class=\"series\""))
            .and_then(|l| l.split("d=\"").nth(1))
            .and_then(|rest| rest.split('"').next())
            .unwrap();
        let cmds: Vec<char> = d.chars().filter(|ch| ch.is_ascii_alphabetic()).collect();
        assert_eq!(cmds, vec!['M', 'H', 'V', 'H', 'V', 'H', 'V']);
    }

    #[test]
    fn empty_and_non_finite_rejected() {
        assert!(render(&chart(PlotKind::Line, vec![])).is_err());
        assert!(render(&chart(PlotKind::Line, vec![(f64::NAN, 1.0)])).is_err());
    }
}
