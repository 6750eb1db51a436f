//! Minimal SVG writers: a nodal heatmap and a log-log line plot.
//!
//! Output depends only on the input numbers, so re-runs are byte-identical.

use std::fmt::Write as _;

use qsp::grid::Field;

/// Viridis anchor colours, evenly spaced on `[0, 1]`.
const VIRIDIS: [(u8, u8, u8); 5] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
];

fn colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let k = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let w = x - k as f64;
    let mix = |a: u8, b: u8| (a as f64 + w * (b as f64 - a as f64)).round() as u8;
    let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace("--", "- -")
}

fn header(out: &mut String, w: u32, h: u32, comment: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    if !comment.is_empty() {
        writeln!(out, "<!--\n{}-->", escape(comment)).unwrap();
    }
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
}

/// Heatmap of a field with `y` pointing up, plus a colour bar.
/// `comment` is embedded verbatim (escaped) as an XML comment.
pub fn heatmap(u: &Field, title: &str, comment: &str) -> String {
    let n = u.domain().n();
    let cell = (480 / n).max(1) as u32;
    let side = cell * n as u32;
    let (left, top) = (20u32, 40u32);
    let (w, h) = (left + side + 110, top + side + 30);
    let (lo, hi) = (u.min(), u.max());
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = String::new();
    header(&mut s, w, h, comment);
    writeln!(
        s,
        r#"<text x="{left}" y="24" font-family="sans-serif" font-size="16">{}</text>"#,
        escape(title)
    )
    .unwrap();
    let vals = u.as_slice();
    for j in 0..n {
        let y = top + (n - 1 - j) as u32 * cell;
        for i in 0..n {
            let x = left + i as u32 * cell;
            let c = colour((vals[j * n + i] - lo) / span);
            writeln!(s, r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{c}"/>"#).unwrap();
        }
    }
    let bx = left + side + 20;
    let steps = 64u32;
    let bh = side as f64 / steps as f64;
    for k in 0..steps {
        let y = top as f64 + (steps - 1 - k) as f64 * bh;
        let c = colour((k as f64 + 0.5) / steps as f64);
        writeln!(
            s,
            r#"<rect x="{bx}" y="{y:.3}" width="20" height="{:.3}" fill="{c}"/>"#,
            bh + 0.5
        )
        .unwrap();
    }
    for (v, y) in [(hi, top + 10), (lo, top + side)] {
        writeln!(
            s,
            r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="12">{v:.4e}</text>"#,
            bx + 26
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Log-log plot of `ys` against `xs`; points that are not strictly
/// positive and finite are skipped.
pub fn loglog(xs: &[f64], ys: &[f64], xlabel: &str, ylabel: &str, comment: &str) -> String {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite() && **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let (w, h) = (560u32, 400u32);
    let (l, r, t, b) = (80.0, 20.0, 30.0, 50.0);
    let (pw, ph) = (w as f64 - l - r, h as f64 - t - b);
    let mut s = String::new();
    header(&mut s, w, h, comment);
    writeln!(
        s,
        r#"<rect x="{l}" y="{t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        l + pw / 2.0,
        h as f64 - 10.0,
        escape(xlabel)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        t + ph / 2.0,
        t + ph / 2.0,
        escape(ylabel)
    )
    .unwrap();
    if pts.is_empty() {
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">no positive data</text>"#,
            l + pw / 2.0,
            t + ph / 2.0
        )
        .unwrap();
        s.push_str("</svg>\n");
        return s;
    }
    let range = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).floor();
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).ceil();
        if hi > lo { (lo, hi) } else { (lo, lo + 1.0) }
    };
    let (x0, x1) = range(|p| p.0);
    let (y0, y1) = range(|p| p.1);
    let px = |x: f64| l + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| t + ph - (y - y0) / (y1 - y0) * ph;
    for d in x0 as i32..=x1 as i32 {
        let x = px(d as f64);
        writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{t}" x2="{x:.2}" y2="{}" stroke="#dddddd"/><text x="{x:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">1e{d}</text>"##,
            t + ph,
            t + ph + 16.0
        )
        .unwrap();
    }
    for d in y0 as i32..=y1 as i32 {
        let y = py(d as f64);
        writeln!(
            s,
            r##"<line x1="{l}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#dddddd"/><text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">1e{d}</text>"##,
            l + pw,
            l - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    let mut poly = String::new();
    for (x, y) in &pts {
        write!(poly, "{:.2},{:.2} ", px(*x), py(*y)).unwrap();
    }
    writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#3b528b" stroke-width="2"/>"##,
        poly.trim_end()
    )
    .unwrap();
    for (x, y) in &pts {
        writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#21918c"/>"##, px(*x), py(*y)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
