//! Γ against 1/p as a static SVG.

use std::fmt::Write;

use num_traits::ToPrimitive;
use quadec::exponent::{Exponent, PiecewiseExponent, QMode};
use quadec::linalg::{format_rat, Rat};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn f(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

struct Frame {
    y_max: f64,
}

impl Frame {
    /// s = 1/p runs over [0, 1/2].
    fn x(&self, s: f64) -> f64 {
        MARGIN + s / 0.5 * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, g: f64) -> f64 {
        HEIGHT - MARGIN - g / self.y_max * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Vertices of the graph: piece endpoints in 1/p.
fn vertices(g: &PiecewiseExponent) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for piece in &g.pieces {
        for p in [&piece.p_to, &piece.p_from] {
            let pt = (f(&p.reciprocal()), f(&g.eval(p)));
            if out.last() != Some(&pt) {
                out.push(pt);
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.dedup();
    out
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], style: &str) {
    let coords: Vec<String> = pts.iter().map(|&(s, g)| format!("{:.2},{:.2}", frame.x(s), frame.y(g))).collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" {style}/>"#, coords.join(" "));
}

/// `graph` is the certified upper end of Γ; `lower`, when present, is the
/// lower end for a table with open cells and is drawn dashed.
pub fn render(graph: &PiecewiseExponent, lower: Option<&PiecewiseExponent>, title: &str) -> String {
    let upper_pts = vertices(graph);
    let lower_pts = lower.map(vertices).unwrap_or_default();
    let top = upper_pts.iter().chain(&lower_pts).map(|p| p.1).fold(0.0f64, f64::max);
    let frame = Frame { y_max: if top > 0.0 { (top * 4.0).ceil() / 4.0 } else { 1.0 } };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // Axes.
    let (x0, x1, y0, y1) = (frame.x(0.0), frame.x(0.5), frame.y(0.0), frame.y(frame.y_max));
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for (k, label) in [(0.0, "0"), (0.125, "1/8"), (0.25, "1/4"), (0.375, "3/8"), (0.5, "1/2")] {
        let x = frame.x(k);
        let _ = writeln!(out, r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{}" stroke="black"/>"#, y0 + 4.0);
        let _ = writeln!(out, r#"<text x="{x}" y="{}" text-anchor="middle">{label}</text>"#, y0 + 16.0);
    }
    let steps = (frame.y_max * 4.0).round() as usize;
    let stride = steps.div_ceil(8).max(1);
    for i in (0..=steps).step_by(stride) {
        let g = i as f64 / 4.0;
        let y = frame.y(g);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{g}</text>"#, x0 - 7.0, y + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">1/p</text>"#, (x0 + x1) / 2.0, HEIGHT - 14.0);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">Γ</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    if lower.is_some() {
        polyline(&mut out, &frame, &lower_pts, r#"stroke="gray" stroke-width="1.5" stroke-dasharray="5,4""#);
    }
    polyline(&mut out, &frame, &upper_pts, r#"stroke="navy" stroke-width="2""#);

    // Branch labels at piece midpoints.
    for piece in &graph.pieces {
        let (a, b) = (f(&piece.p_from.reciprocal()), f(&piece.p_to.reciprocal()));
        let mid = Exponent::from_reciprocal(
            &((piece.p_from.reciprocal() + piece.p_to.reciprocal()) / Rat::from_integer(2.into())),
        );
        let (x, y) = (frame.x((a + b) / 2.0), frame.y(f(&graph.eval(&mid))));
        let cells: Vec<String> = piece.labels.iter().map(ToString::to_string).collect();
        let text = format!("{} {}", cells.join(" "), piece.branch.formula());
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" fill="navy">{}</text>"#,
            y - 8.0,
            escape(&text)
        );
    }

    for k in &graph.kinks {
        let (x, y) = (frame.x(f(&k.reciprocal())), frame.y(f(&graph.eval(k))));
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="crimson"/>"#);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" fill="crimson">p={k}</text>"#, x + 6.0, y + 14.0);
    }

    let mode = match &graph.mode {
        QMode::Diagonal => "q = p".to_string(),
        QMode::Fixed(q) => format!("q = {q}"),
    };
    let note = if lower.is_some() { format!("{mode}; dashed: lower end of open table") } else { mode };
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        WIDTH - MARGIN,
        MARGIN - 14.0,
        escape(&note)
    );
    out.push_str("</svg>\n");
    out
}

/// The value at each kink, for captions.
pub fn kink_table(graph: &PiecewiseExponent) -> Vec<(String, String)> {
    graph.kinks.iter().map(|k| (k.to_string(), format_rat(&graph.eval(k)))).collect()
}
