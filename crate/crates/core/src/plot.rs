//! SVG and CSV renderings of the heel-distance signal with its detected
//! maxima, in the style of a frames-vs-distance gait plot.

use crate::pipeline::SignalTrace;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Sibling CSV of the plot: one row per frame.
pub fn render_plot_csv(trace: &SignalTrace) -> String {
    let mut out = String::from("frame,d_raw,d_smooth,is_maximum\n");
    for (t, (raw, smooth)) in trace.d_raw.iter().zip(&trace.d_smooth).enumerate() {
        let is_max = trace.maxima.contains(&t) as u8;
        out.push_str(&format!("{t},{raw},{smooth},{is_max}\n"));
    }
    out
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 46.0;

/// Render the distance signal as a static SVG: raw polyline, smoothed
/// overlay, one marker per retained maximum. `config_json`, when given,
/// is embedded in a `<desc>` block for provenance.
pub fn render_plot_svg(trace: &SignalTrace, title: &str, config_json: Option<&str>) -> String {
    let n = trace.d_raw.len();
    let y_max = trace
        .d_raw
        .iter()
        .chain(&trace.d_smooth)
        .cloned()
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.05;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |t: usize| MARGIN_LEFT + plot_w * t as f64 / (n.max(2) - 1) as f64;
    let y_of = |v: f64| MARGIN_TOP + plot_h * (1.0 - v / y_max);

    let polyline = |d: &[f64]| -> String {
        d.iter()
            .enumerate()
            .map(|(t, v)| format!("{:.2},{:.2}", x_of(t), y_of(*v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    ));
    svg.push('\n');
    if let Some(cfg) = config_json {
        svg.push_str(&format!("<desc>{}</desc>\n", xml_escape(cfg)));
    }
    svg.push_str(&format!(
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{:.1}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN_LEFT,
        xml_escape(title)
    ));
    svg.push('\n');

    // axes
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    svg.push_str(&format!(
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{:.1}" y2="{y0:.1}" stroke="black"/>"#,
        MARGIN_LEFT + plot_w
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<line x1="{x0:.1}" y1="{:.1}" x2="{x0:.1}" y2="{y0:.1}" stroke="black"/>"#,
        MARGIN_TOP
    ));
    svg.push('\n');
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = y_of(v);
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.3}</text>"#,
            x0 - 6.0,
            y + 3.0
        ));
        svg.push('\n');
        let t = (n.saturating_sub(1)) * k / 4;
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{t}</text>"#,
            x_of(t),
            y0 + 16.0
        ));
        svg.push('\n');
    }
    svg.push_str(&format!(
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">frame</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    ));
    svg.push('\n');

    svg.push_str(&format!(
        r##"<polyline points="{}" fill="none" stroke="#9ecbff" stroke-width="1"/>"##,
        polyline(&trace.d_raw)
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r##"<polyline points="{}" fill="none" stroke="#1f5fbf" stroke-width="1.6"/>"##,
        polyline(&trace.d_smooth)
    ));
    svg.push('\n');
    for &m in &trace.maxima {
        svg.push_str(&format!(
            r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#d62728"/>"##,
            x_of(m),
            y_of(trace.d_smooth[m])
        ));
        svg.push('\n');
    }
    svg.push_str("</svg>\n");
    svg
}
