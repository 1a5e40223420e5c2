//! Mean toxicity per week as an SVG line chart.

use std::fmt::Write as _;
use std::io::Write;

use crate::engine::MetricsSeries;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders one polyline per series (weeks on x, mean toxicity on y) with a
/// legend. Identical input gives identical bytes.
pub fn render_svg(series: &[(String, MetricsSeries)]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::invalid("nothing to plot"));
    }
    if let Some((label, _)) = series.iter().find(|(_, s)| s.is_empty()) {
        return Err(Error::invalid(format!("series {label:?} has no rows")));
    }
    let weeks = series
        .iter()
        .flat_map(|(_, s)| s.rows.iter().map(|r| r.week));
    let (w_min, w_max) = weeks.fold((usize::MAX, 0), |(a, b), w| (a.min(w), b.max(w)));
    let y_max = series
        .iter()
        .flat_map(|(_, s)| s.rows.iter().map(|r| r.mean_toxicity))
        .fold(0.0, f64::max);
    let y_top = if y_max > 0.0 { y_max * 1.1 } else { 1.0 };
    let span = (w_max - w_min).max(1) as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |w: usize| LEFT + (w - w_min) as f64 / span * plot_w;
    let y = |v: f64| TOP + (1.0 - v / y_top) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}" fill="none" stroke="black"/>"#
    );
    for w in w_min..=w_max {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{w}</text>"#,
            x(w),
            y0 + 16.0
        );
    }
    for i in 0..=4 {
        let v = y_top * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            x0 - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">week</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">mean toxicity</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    for (i, (label, s)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = s
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.week), y(r.mean_toxicity)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 8.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot<W: Write>(series: &[(String, MetricsSeries)], mut w: W) -> Result<()> {
    w.write_all(render_svg(series)?.as_bytes())?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::WeekMetrics;

    fn series(weeks: usize, scale: f64) -> MetricsSeries {
        MetricsSeries {
            rows: (1..=weeks)
                .map(|week| WeekMetrics {
                    week,
                    total_toxicity: scale * week as f64,
                    mean_toxicity: scale * week as f64 / 100.0,
                    active_nodes: week,
                })
                .collect(),
        }
    }

    #[test]
    fn one_series_eight_points() {
        let svg = render_svg(&[("baseline".into(), series(8, 1.0))]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), 8);
    }

    #[test]
    fn two_series_two_legend_entries() {
        let svg = render_svg(&[
            ("a<b".into(), series(4, 1.0)),
            ("rp_56".into(), series(4, 0.5)),
        ])
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("class=\"legend\"").count(), 2);
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn deterministic_and_rejects_empty() {
        let input = [("x".to_string(), series(3, 2.0))];
        assert_eq!(render_svg(&input).unwrap(), render_svg(&input).unwrap());
        assert!(render_svg(&[]).is_err());
        assert!(render_svg(&[("e".into(), MetricsSeries::default())]).is_err());
        // a single week or all-zero values still render
        let flat = MetricsSeries {
            rows: vec![WeekMetrics {
                week: 1,
                total_toxicity: 0.0,
                mean_toxicity: 0.0,
                active_nodes: 0,
            }],
        };
        assert!(render_svg(&[("z".into(), flat)])
            .unwrap()
            .contains("<polyline"));
    }
}
