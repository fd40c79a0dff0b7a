use chrono::{DateTime, Utc};

use super::report::EvalReport;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 50.0;

/// SVG line plot of window MAPE against issue time, with the threshold as a
/// dashed line and `holidays` (half-open time spans) shaded.
pub fn mape_svg(report: &EvalReport, holidays: &[(DateTime<Utc>, DateTime<Utc>)]) -> String {
    let points: Vec<(i64, f64)> = report
        .windows
        .iter()
        .filter_map(|w| w.mape.map(|m| (w.issued_at.timestamp(), m)))
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    svg.push_str(&format!(
        "<text x=\"{MARGIN}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">{} {} ({}): window MAPE %</text>\n",
        report.consumer_id, report.task, report.label
    ));
    let (Some(first), Some(last)) = (report.windows.first(), report.windows.last()) else {
        svg.push_str("</svg>\n");
        return svg;
    };
    let (t0, t1) = (first.issued_at.timestamp(), last.issued_at.timestamp().max(first.issued_at.timestamp() + 1));
    let y_max = points
        .iter()
        .map(|p| p.1)
        .fold(report.mape_threshold, f64::max)
        * 1.1;
    let x = |t: i64| MARGIN + (t - t0) as f64 / (t1 - t0) as f64 * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - v / y_max * (HEIGHT - 2.0 * MARGIN);
    for (a, b) in holidays {
        let (a, b) = (a.timestamp().max(t0), b.timestamp().min(t1));
        if a < b {
            svg.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{MARGIN}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#f4c7c3\" opacity=\"0.6\"/>\n",
                x(a),
                x(b) - x(a),
                HEIGHT - 2.0 * MARGIN
            ));
        }
    }
    svg.push_str(&format!(
        "<line x1=\"{MARGIN}\" y1=\"{0:.2}\" x2=\"{1}\" y2=\"{0:.2}\" stroke=\"black\"/>\n\
         <line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{0:.2}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN,
        WIDTH - MARGIN
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN}\" y1=\"{0:.2}\" x2=\"{1}\" y2=\"{0:.2}\" stroke=\"red\" stroke-dasharray=\"6 4\"/>\n\
         <text x=\"{2}\" y=\"{3:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"red\">{4}%</text>\n",
        y(report.mape_threshold),
        WIDTH - MARGIN,
        WIDTH - MARGIN + 4.0,
        y(report.mape_threshold) + 4.0,
        report.mape_threshold
    ));
    for frac in [0.0, 0.5, 1.0] {
        let v = y_max / 1.1 * frac;
        svg.push_str(&format!(
            "<text x=\"4\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{v:.1}</text>\n",
            y(v) + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{MARGIN}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n\
         <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
        HEIGHT - MARGIN + 16.0,
        first.issued_at.format("%Y-%m-%d"),
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        last.issued_at.format("%Y-%m-%d")
    ));
    if !points.is_empty() {
        let path: Vec<String> = points.iter().map(|&(t, v)| format!("{:.2},{:.2}", x(t), y(v))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"{}\"/>\n",
            path.join(" ")
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Contiguous runs of rows where `flag` is set, as half-open time spans.
pub fn flagged_spans(
    timestamps: &[DateTime<Utc>],
    flag: impl Fn(usize) -> bool,
) -> Vec<(DateTime<Utc>, DateTime<Utc>)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let step = match timestamps {
        [a, b, ..] => *b - *a,
        _ => chrono::Duration::hours(1),
    };
    for i in 0..=timestamps.len() {
        let on = i < timestamps.len() && flag(i);
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let end = if i < timestamps.len() { timestamps[i] } else { timestamps[i - 1] + step };
                spans.push((timestamps[s], end));
                start = None;
            }
            _ => {}
        }
    }
    spans
}
