//! Minimal SVG line charts of summary curves.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::Summary;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// One polyline per method of `y(summary)` against `x(summary)`.
pub fn line_chart(
    rows: &[Summary],
    title: &str,
    x_label: &str,
    y_label: &str,
    x: impl Fn(&Summary) -> f64,
    y: impl Fn(&Summary) -> f64,
) -> String {
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        let (px, py) = (x(r), y(r));
        if px.is_finite() && py.is_finite() {
            series.entry(&r.method).or_default().push((px, py));
        }
    }
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(a, b) in pts {
        x0 = x0.min(a);
        x1 = x1.max(a);
        y0 = y0.min(b);
        y1 = y1.max(b);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        esc(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#,
            sx(v),
            H - PAD + 15.0
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            PAD - 4.0,
            sy(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 10.0,
        esc(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(y_label)
    );
    for (i, (name, mut p)) in series.into_iter().enumerate() {
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        let c = COLORS[i % COLORS.len()];
        let d: Vec<String> = p
            .iter()
            .map(|&(a, b)| format!("{:.1},{:.1}", sx(a), sy(b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{c}" stroke-width="1.5" fill="none"/>"#,
            d.join(" ")
        );
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly:.1}" fill="{c}">{}</text>"#,
            W - PAD - 90.0,
            esc(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_has_one_polyline_per_method() {
        let row = |method: &str, snr: f64, sinr: f64| Summary {
            method: method.into(),
            m: 10,
            snr_db: snr,
            trials: 1,
            mean_sinr_db: sinr,
            mean_objective: 1.0,
            mean_lower_bound: None,
            mean_iterations: 1.0,
            converged_fraction: 1.0,
            mean_wall_time_ms: None,
        };
        let rows = [row("a", 0.0, 1.0), row("a", 5.0, 2.0), row("b<", 0.0, 0.5)];
        let s = line_chart(&rows, "t", "SNR", "SINR", |r| r.snr_db, |r| r.mean_sinr_db);
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.contains("b&lt;"));
        assert!(s.ends_with("</svg>\n"));
    }
}
