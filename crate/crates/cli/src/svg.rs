//! Eigenvalue staircase plots.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
    pub dashed: bool,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 50.0;

/// Step plot of `i ↦ λ_i` for each series, sharing axes.
pub fn staircase(title: &str, series: &[Series]) -> String {
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(1).max(1);
    let ymax = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold(0.0_f64, f64::max)
        .max(1e-12)
        * 1.1;
    let x = |i: f64| PAD + (W - 2.0 * PAD) * i / n as f64;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * v / ymax;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{:.1},{:.1} L{:.1},{:.1} L{:.1},{:.1}" fill="none" stroke="black"/>"#,
        PAD,
        PAD,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    );
    for t in 0..=4 {
        let v = ymax * t as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}</text>"#,
            PAD - 6.0,
            y(v) + 4.0,
            v
        );
    }
    for i in 0..n {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{i}</text>"#,
            x(i as f64 + 0.5),
            H - PAD + 16.0
        );
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">index</text>"#, W / 2.0, H - 12.0);
    for (s_idx, s) in series.iter().enumerate() {
        let mut d = String::new();
        for (i, v) in s.values.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.1},{:.1} L{:.1},{:.1} ", x(i as f64), y(*v), x(i as f64 + 1.0), y(*v));
        }
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            d.trim_end(),
            s.color
        );
        let ly = PAD + 16.0 * s_idx as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="1.5"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            PAD + 10.0,
            ly,
            PAD + 34.0,
            ly,
            s.color,
            PAD + 40.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
