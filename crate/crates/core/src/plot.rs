//! Tiny SVG line-chart emitter for training curves. No dependencies, plain
//! linear axes, one polyline per series.

use crate::diagnostics::EpochRecord;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 50.0;

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Renders the series into a standalone SVG document.
pub fn render_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (x_lo, x_hi) = nice_range(
        all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = nice_range(
        all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    ));
    // axis ticks: min and max on each axis
    for (v, x) in [(x_lo, sx(x_lo)), (x_hi, sx(x_hi))] {
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{v:.3}</text>\n",
            HEIGHT - MARGIN + 16.0
        ));
    }
    for (v, y) in [(y_lo, sy(y_lo)), (y_hi, sy(y_hi))] {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{y:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{v:.4}</text>\n",
            MARGIN - 6.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    ));
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            WIDTH - MARGIN - 150.0,
            MARGIN + 16.0 * (k as f64 + 1.0),
            escape(s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Objective and accuracy curves from a diagnostics trace.
pub fn render_training_curves(title: &str, records: &[EpochRecord]) -> String {
    let series = [
        Series {
            label: "primal objective",
            points: records.iter().map(|r| (r.epoch as f64, r.primal_obj)).collect(),
        },
        Series {
            label: "dual objective",
            points: records.iter().map(|r| (r.epoch as f64, r.dual_obj)).collect(),
        },
        Series {
            label: "test accuracy",
            points: records.iter().map(|r| (r.epoch as f64, r.test_accuracy)).collect(),
        },
    ];
    render_chart(title, "epoch", "value", &series)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(epoch: usize, p: f64) -> EpochRecord {
        EpochRecord {
            epoch,
            wall_time_s: 0.0,
            primal_obj: p,
            dual_obj: p / 2.0,
            test_accuracy: 0.9,
            sv_count: 5,
            merge_fraction: 0.0,
            violation_fraction: 0.1,
            nonzero_step_fraction: 0.2,
        }
    }

    #[test]
    fn emits_wellformed_svg_with_all_series() {
        let records: Vec<EpochRecord> = (1..=10).map(|e| record(e, 1.0 / e as f64)).collect();
        let svg = render_training_curves("run", &records);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("test accuracy"));
    }

    #[test]
    fn degenerate_flat_series_does_not_divide_by_zero() {
        let records = vec![record(1, 2.0), record(2, 2.0)];
        let svg = render_training_curves("flat", &records);
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }

    #[test]
    fn escapes_markup_in_labels() {
        let svg = render_chart("a<b&c", "x", "y", &[Series { label: "s", points: vec![(0.0, 0.0), (1.0, 1.0)] }]);
        assert!(svg.contains("a&lt;b&amp;c"));
    }
}
