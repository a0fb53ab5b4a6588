//! Minimal hand-written SVG line plots. CSV is the canonical output; these
//! are a convenience with no plotting dependency.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 300.0;
const MARGIN: f64 = 35.0;

/// A single-panel polyline plot of `(x, y)` samples (sorted by `x` by the
/// caller) with labeled points drawn as circles.
pub fn line_plot(title: &str, points: &[(f64, f64)], labels: &[(f64, f64)]) -> String {
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points.iter().chain(labels) {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() || y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" font-family=\"monospace\" font-size=\"14\">{title}</text>",
        MARGIN
    );
    // Axis frame.
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        svg,
        "<text x=\"4\" y=\"{}\" font-family=\"monospace\" font-size=\"10\">{y_max:.2}</text>",
        MARGIN + 4.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"4\" y=\"{}\" font-family=\"monospace\" font-size=\"10\">{y_min:.2}</text>",
        HEIGHT - MARGIN
    );
    let mut path = String::new();
    for &(x, y) in points {
        let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(y));
    }
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\"/>",
        path.trim_end()
    );
    for &(x, y) in labels {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"none\" stroke=\"red\" stroke-width=\"1.5\"/>",
            sx(x),
            sy(y)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
