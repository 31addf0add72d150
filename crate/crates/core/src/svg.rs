//! Minimal standalone SVG box plots of |ρ| summaries.

use std::fmt::Write;

use crate::stats::BoxSummary;

const W_BOX: f64 = 36.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

/// One box per summary on a fixed [0, 1] axis.
pub fn boxplot(title: &str, boxes: &[&BoxSummary]) -> String {
    let width = 2.0 * MARGIN + W_BOX * boxes.len().max(1) as f64;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let y = |v: f64| MARGIN + (1.0 - v.clamp(0.0, 1.0)) * plot_h;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{HEIGHT}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="20" font-size="12">{}</text>"#, escape(title));
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN}" x2="{x2}" y1="{yy:.1}" y2="{yy:.1}" stroke="#ddd"/><text x="8" y="{ty:.1}">{v:.1}</text>"##,
            x2 = width - MARGIN,
            yy = y(v),
            ty = y(v) + 3.0
        );
    }
    for (i, b) in boxes.iter().enumerate() {
        let cx = MARGIN + W_BOX * (i as f64 + 0.5);
        let label_y = HEIGHT - MARGIN + 14.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{label_y}" text-anchor="middle">{}</text>"#, cx, escape(&b.rm));
        if b.count == 0 {
            continue;
        }
        let half = W_BOX * 0.3;
        let fill = if b.strong { "#9c9" } else { "#ccd" };
        let _ = writeln!(
            s,
            r##"<line x1="{cx:.1}" x2="{cx:.1}" y1="{:.1}" y2="{:.1}" stroke="#333"/><rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{fill}" stroke="#333"/><line x1="{:.1}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#000" stroke-width="2"/><circle cx="{cx:.1}" cy="{:.1}" r="2"/>"##,
            y(b.max),
            y(b.min),
            cx - half,
            y(b.q3),
            2.0 * half,
            (y(b.q1) - y(b.q3)).max(0.5),
            cx - half,
            cx + half,
            y(b.median),
            y(b.median),
            y(b.mean)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
