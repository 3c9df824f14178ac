//! Static SVG line charts drawn from result tables.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::results::{ExperimentResult, Percentiles, PowerCurve};

const W: f64 = 420.0;
const H: f64 = 300.0;
const PAD: f64 = 48.0;
const COLOURS: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// A dashed reference line.
    pub reference: Option<f64>,
}

fn bounds(chart: &Chart) -> Option<(f64, f64, f64, f64)> {
    let pts = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if let Some(r) = chart.reference {
        y0 = y0.min(r);
        y1 = y1.max(r);
    }
    if !x0.is_finite() {
        return None;
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    Some((x0, x1, y0, y1))
}

fn draw(out: &mut String, chart: &Chart, dx: f64) {
    let _ = write!(out, r#"<g transform="translate({dx},0)">"#);
    let _ = write!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        W / 2.0,
        escape(&chart.title)
    );
    let Some((x0, x1, y0, y1)) = bounds(chart) else {
        out.push_str("</g>");
        return;
    };
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 1.5 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = write!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 1.5 * PAD,
        H - 2.0 * PAD
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="10">{fx:.3}</text>"#,
            sx(fx),
            H - PAD + 14.0
        );
        let _ = write!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-size="10">{fy:.3}</text>"#,
            PAD - 4.0,
            sy(fy) + 3.0
        );
    }
    let _ = write!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
        W / 2.0,
        H - 8.0,
        escape(&chart.x_label)
    );
    let _ = write!(
        out,
        r#"<text x="12" y="{}" text-anchor="middle" font-size="11" transform="rotate(-90 12 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(&chart.y_label)
    );
    if let Some(r) = chart.reference {
        let _ = write!(
            out,
            r##"<line x1="{PAD}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4 3"/>"##,
            W - 0.5 * PAD,
            sy(r),
            sy(r)
        );
    }
    for (k, s) in chart.series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = write!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.6" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" font-size="10" fill="{colour}">{}</text>"#,
            PAD + 6.0,
            PAD + 12.0 + 12.0 * k as f64,
            escape(&s.name)
        );
    }
    out.push_str("</g>");
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Charts laid out side by side.
pub fn render(charts: &[Chart]) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{H}" font-family="sans-serif">"#,
        W * charts.len() as f64
    );
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, c) in charts.iter().enumerate() {
        draw(&mut out, c, W * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

fn group<T>(items: impl Iterator<Item = (String, T)>) -> BTreeMap<String, Vec<T>> {
    let mut m: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for (k, v) in items {
        m.entry(k).or_default().push(v);
    }
    m
}

pub fn coverage_svg(result: &ExperimentResult, alpha: f64) -> String {
    let by = |f: fn(&crate::results::CoverageRecord) -> f64| {
        group(result.records.iter().map(|r| (r.procedure.clone(), (r.theta, f(r)))))
            .into_iter()
            .map(|(name, points)| Series { name, points })
            .collect::<Vec<_>>()
    };
    render(&[
        Chart {
            title: "selective coverage".into(),
            x_label: "theta".into(),
            y_label: "coverage".into(),
            series: by(|r| r.coverage),
            reference: Some(1.0 - alpha),
        },
        Chart {
            title: "mean width".into(),
            x_label: "theta".into(),
            y_label: "width".into(),
            series: by(|r| r.mean_width),
            reference: None,
        },
    ])
}

pub fn power_svg(curve: &PowerCurve, alpha: f64) -> String {
    let mut thetas: Vec<f64> = Vec::new();
    for r in &curve.records {
        if !thetas.contains(&r.theta) {
            thetas.push(r.theta);
        }
    }
    let charts: Vec<Chart> = thetas
        .iter()
        .map(|&theta| {
            let recs = curve.records.iter().filter(|r| r.theta == theta);
            let series = group(recs.map(|r| (r.test.clone(), (r.t, r.rejection))))
                .into_iter()
                .map(|(name, points)| Series { name, points })
                .collect();
            Chart {
                title: format!("theta = {theta}"),
                x_label: "t".into(),
                y_label: "rejection rate".into(),
                series,
                reference: Some(alpha),
            }
        })
        .collect();
    render(&charts)
}

pub fn percentile_svg(table: &Percentiles) -> String {
    let mut series = Vec::new();
    let first = table.records.iter().filter(|r| r.component == 0);
    for (name, recs) in group(first.map(|r| (r.estimator.clone(), r))) {
        for (q, f) in [("q25", 0usize), ("q50", 1), ("q75", 2)] {
            let points = recs.iter().map(|r| (r.theta, [r.q25, r.q50, r.q75][f])).collect();
            series.push(Series {
                name: format!("{name} {q}"),
                points,
            });
        }
    }
    render(&[Chart {
        title: "quartiles of the first eta estimate".into(),
        x_label: "theta".into(),
        y_label: "estimate".into(),
        series,
        reference: None,
    }])
}
