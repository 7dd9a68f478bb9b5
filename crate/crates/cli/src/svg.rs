use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 300.0;
const MARGIN: f64 = 20.0;

fn polyline(values: &[f64], lo: f64, hi: f64, colour: &str) -> String {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let step = (WIDTH - 2.0 * MARGIN) / (values.len().max(2) - 1) as f64;
    let mut points = String::new();
    for (i, v) in values.iter().enumerate() {
        let x = MARGIN + i as f64 * step;
        let y = HEIGHT - MARGIN - (v - lo) / span * (HEIGHT - 2.0 * MARGIN);
        let _ = write!(points, "{x:.2},{y:.2} ");
    }
    format!(
        "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.trim_end()
    )
}

/// Pure spectrum in red under the predicted one in black, on shared axes.
/// With a perfect prediction the black line covers the red entirely.
pub fn overlay(pure: &[f64], predicted: &[f64], title: &str) -> String {
    let all = pure.iter().chain(predicted).copied().filter(|v| v.is_finite());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let escaped = title.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <title>{escaped}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    s.push_str(&polyline(pure, lo, hi, "red"));
    s.push_str(&polyline(predicted, lo, hi, "black"));
    s.push_str("</svg>\n");
    s
}
