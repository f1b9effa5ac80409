//! Small static SVG renderers for routing maps and delay statistics.

use std::fmt::Write;

use super::DelaySummary;

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"10\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

/// One row per labeled strip (see `RoutingMap::strip`); each character is
/// one destination colored by link, `.` left blank.
pub fn strip_map_svg(title: &str, rows: &[(String, String)]) -> String {
    let cell = 3.0;
    let label_w = 140.0;
    let width = rows.iter().map(|(_, s)| s.len()).max().unwrap_or(0) as f64 * cell + label_w + 10.0;
    let height = rows.len() as f64 * 14.0 + 30.0;
    let mut out = open(width, height);
    let _ = writeln!(out, "<text x=\"5\" y=\"14\">{}</text>", esc(title));
    for (r, (label, strip)) in rows.iter().enumerate() {
        let y = 24.0 + r as f64 * 14.0;
        let _ = writeln!(out, "<text x=\"5\" y=\"{}\">{}</text>", y + 9.0, esc(label));
        for (i, c) in strip.chars().enumerate() {
            if let Some(d) = c.to_digit(36) {
                let _ = writeln!(
                    out,
                    "<rect x=\"{}\" y=\"{y}\" width=\"{cell}\" height=\"10\" fill=\"{}\"/>",
                    label_w + i as f64 * cell,
                    PALETTE[d as usize % PALETTE.len()]
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart of histogram counts with `bin_ms` wide bins.
pub fn histogram_svg(title: &str, counts: &[usize], bin_ms: f64) -> String {
    let (w, h, pad) = (520.0, 260.0, 36.0);
    let max = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bar = (w - 2.0 * pad) / counts.len().max(1) as f64;
    let mut out = open(w, h);
    let _ = writeln!(out, "<text x=\"{pad}\" y=\"14\">{}</text>", esc(title));
    for (i, c) in counts.iter().enumerate() {
        let bh = *c as f64 / max * (h - 2.0 * pad);
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{bh:.2}\" fill=\"{}\"/>",
            pad + i as f64 * bar,
            h - pad - bh,
            (bar - 1.0).max(0.5),
            PALETTE[0]
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{pad}\" y=\"{}\">0 ms</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{} ms</text>",
        h - pad + 14.0,
        w - pad,
        h - pad + 14.0,
        bin_ms * counts.len() as f64
    );
    out.push_str("</svg>\n");
    out
}

/// Median lines with a 25th–75th percentile band, one series per link.
pub fn time_series_svg(title: &str, series: &[(String, Vec<(u64, DelaySummary)>)]) -> String {
    let (w, h, pad) = (640.0, 280.0, 40.0);
    let pts = series.iter().flat_map(|(_, s)| s.iter());
    let (mut t0, mut t1, mut ymax) = (u64::MAX, 0u64, 1.0f64);
    for (t, s) in pts {
        t0 = t0.min(*t);
        t1 = t1.max(*t);
        ymax = ymax.max(s.p75);
    }
    let span = (t1.saturating_sub(t0)).max(1) as f64;
    let x = |t: u64| pad + (t.saturating_sub(t0)) as f64 / span * (w - 2.0 * pad);
    let y = |v: f64| h - pad - v / ymax * (h - 2.0 * pad);
    let mut out = open(w, h);
    let _ = writeln!(out, "<text x=\"{pad}\" y=\"14\">{}</text>", esc(title));
    for (k, (label, s)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let upper: Vec<String> = s.iter().map(|(t, d)| format!("{:.1},{:.1}", x(*t), y(d.p75))).collect();
        let lower: Vec<String> = s.iter().rev().map(|(t, d)| format!("{:.1},{:.1}", x(*t), y(d.p25))).collect();
        let _ = writeln!(
            out,
            "<polygon points=\"{} {}\" fill=\"{color}\" fill-opacity=\"0.2\"/>",
            upper.join(" "),
            lower.join(" ")
        );
        let median: Vec<String> = s.iter().map(|(t, d)| format!("{:.1},{:.1}", x(*t), y(d.median))).collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\"/>",
            median.join(" ")
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            w - pad - 120.0,
            24.0 + k as f64 * 12.0,
            esc(label)
        );
    }
    let _ = writeln!(out, "<text x=\"4\" y=\"{}\">{ymax:.0} ms</text>", pad);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_roots() {
        let s = strip_map_svg("map", &[("t0".into(), "01.10".into())]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<rect").count(), 1 + 4);
        let hsvg = histogram_svg("h", &[1, 2, 3], 20.0);
        assert_eq!(hsvg.matches("<rect").count(), 1 + 3);
        let d = DelaySummary { median: 2.0, p25: 1.0, p75: 3.0, count: 3 };
        let t = time_series_svg("ts <a>", &[("link".into(), vec![(0, d), (900, d)])]);
        assert!(t.contains("ts &lt;a&gt;"));
        assert!(t.contains("<polyline"));
    }
}
