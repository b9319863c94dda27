use std::fmt::Write;
use std::path::Path;

use super::{check_series, write_file, ReportError, ScoreSeries};
use crate::agents::AgentRole;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn color(role: AgentRole) -> &'static str {
    match role {
        AgentRole::Analysis => "#1f77b4",
        AgentRole::Feedback => "#ff7f0e",
        AgentRole::Predictor => "#2ca02c",
        AgentRole::Optimizer => "#d62728",
    }
}

/// Line chart of per-role scores over epochs. The y axis always spans [0, 1].
pub fn learning_curve_svg(series: &[ScoreSeries]) -> Result<String, ReportError> {
    let n = check_series(series)?;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |e: usize| {
        if n <= 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * e as f64 / (n - 1) as f64
        }
    };
    let y = |v: f64| TOP + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // axes and grid
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(s, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g class="y-ticks" stroke="#dddddd">"##);
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{0:.2}" x2="{x1:.2}" y2="{0:.2}"/>"#, y(v));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="labels" fill="black">"#);
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            x0 - 6.0,
            y(v) + 4.0
        );
    }
    let step = ((n.saturating_sub(1)) as f64 / 10.0).ceil().max(1.0) as usize;
    let mut ticks: Vec<usize> = (0..n).step_by(step).collect();
    if n > 0 && ticks.last() != Some(&(n - 1)) {
        ticks.push(n - 1);
    }
    for e in ticks {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{e}</text>"#, x(e), y0 + 18.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">epoch</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">score</text>"#,
        TOP + plot_h / 2.0
    );
    let _ = writeln!(s, "</g>");

    for sr in series {
        let points: Vec<String> = sr
            .values
            .iter()
            .enumerate()
            .map(|(e, &v)| format!("{:.2},{:.2}", x(e), y(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-role="{}" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            sr.role.as_str(),
            color(sr.role),
            points.join(" ")
        );
    }

    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, sr) in series.iter().enumerate() {
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = x1 + 16.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 20.0,
            color(sr.role),
            lx + 26.0,
            ly + 4.0,
            sr.role.agent_name()
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_learning_curve_svg(series: &[ScoreSeries], path: &Path) -> Result<(), ReportError> {
    write_file(path, &learning_curve_svg(series)?)
}
