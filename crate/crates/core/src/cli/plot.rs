use std::fmt::Write as _;

use super::commands::Tradeoff;

const SIZE: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn x(v: f64) -> f64 {
    MARGIN + v.clamp(0.0, 1.0) * SIZE
}

fn y(v: f64) -> f64 {
    MARGIN + (1.0 - v.clamp(0.0, 1.0)) * SIZE
}

/// Scatter of (transfer strength, content preservation) on unit axes, one
/// labelled dot per grid point, with the random-pair lower bound dashed.
pub fn tradeoff_svg(t: &Tradeoff) -> String {
    let full = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{v}</text>"#, x(v), y(0.0) + 16.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v}</text>"#, x(0.0) - 6.0, y(v) + 4.0).unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">transfer strength</text>"#,
        x(0.5),
        y(0.0) + 36.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">content preservation</text>"#,
        y(0.5),
        y(0.5)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        x(0.5),
        MARGIN - 16.0,
        t.kind.name()
    )
    .unwrap();
    if t.lower_bound.is_finite() {
        writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#,
            x(0.0),
            y(t.lower_bound),
            x(1.0),
            y(t.lower_bound)
        )
        .unwrap();
    }
    for r in &t.reports {
        let (cx, cy) = (x(r.transfer_strength), y(r.content_preservation));
        writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="4" fill="steelblue"/>"#).unwrap();
        let mut label = format!("e{}", r.enc_dim);
        if r.style_dim > 0 {
            label.push_str(&format!(" s{}", r.style_dim));
        }
        writeln!(s, r#"<text x="{:.2}" y="{:.2}">{label}</text>"#, cx + 6.0, cy - 6.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
