//! Minimal self-contained SVG rendering of sweep curves: revenue and welfare
//! versus the fraction of bidders called, one polyline per mechanism.

use auction_attrib_core::evaluation::SweepResult;

const COLORS: [&str; 9] =
    ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"];

struct Panel {
    origin_x: f64,
    origin_y: f64,
    width: f64,
    height: f64,
}

impl Panel {
    fn x(&self, fraction: f64) -> f64 {
        self.origin_x + fraction.clamp(0.0, 1.0) * self.width
    }

    fn y(&self, value: f64, max: f64) -> f64 {
        let max = if max > 0.0 { max } else { 1.0 };
        self.origin_y + self.height - (value / max).clamp(0.0, 1.0) * self.height
    }
}

fn draw_panel(
    out: &mut String,
    panel: &Panel,
    title: &str,
    results: &[SweepResult],
    value: impl Fn(&auction_attrib_core::evaluation::MetricPoint) -> f64,
) {
    let max = results
        .iter()
        .flat_map(|r| r.points.iter())
        .map(&value)
        .fold(0.0f64, f64::max);
    out.push_str(&format!(
        "<rect x='{}' y='{}' width='{}' height='{}' fill='none' stroke='#444'/>\n",
        panel.origin_x, panel.origin_y, panel.width, panel.height
    ));
    out.push_str(&format!(
        "<text x='{}' y='{}' font-size='15' text-anchor='middle'>{title}</text>\n",
        panel.origin_x + panel.width / 2.0,
        panel.origin_y - 10.0
    ));
    for tick in [0.0f64, 0.25, 0.5, 0.75, 1.0] {
        let x = panel.x(tick);
        let y = panel.origin_y + panel.height;
        out.push_str(&format!("<line x1='{x}' y1='{y}' x2='{x}' y2='{}' stroke='#999'/>\n", y + 5.0));
        out.push_str(&format!(
            "<text x='{x}' y='{}' font-size='11' text-anchor='middle'>{:.0}%</text>\n",
            y + 18.0,
            tick * 100.0
        ));
    }
    out.push_str(&format!(
        "<text x='{}' y='{}' font-size='11' text-anchor='end'>{max:.3}</text>\n",
        panel.origin_x - 4.0,
        panel.origin_y + 10.0
    ));
    out.push_str(&format!(
        "<text x='{}' y='{}' font-size='11' text-anchor='end'>0</text>\n",
        panel.origin_x - 4.0,
        panel.origin_y + panel.height
    ));
    for (idx, result) in results.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let points: Vec<String> = result
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", panel.x(p.pct_called), panel.y(value(p), max)))
            .collect();
        if points.len() >= 2 {
            out.push_str(&format!(
                "<polyline points='{}' fill='none' stroke='{color}' stroke-width='1.8'/>\n",
                points.join(" ")
            ));
        }
        for p in &result.points {
            out.push_str(&format!(
                "<circle cx='{:.2}' cy='{:.2}' r='2.4' fill='{color}'/>\n",
                panel.x(p.pct_called),
                panel.y(value(p), max)
            ));
        }
    }
}

/// Renders the curves for all mechanisms into one SVG document.
pub(crate) fn curves(results: &[SweepResult]) -> String {
    let mut out = String::from(
        "<svg xmlns='http://www.w3.org/2000/svg' width='980' height='430' viewBox='0 0 980 430' \
         font-family='sans-serif'>\n<rect width='980' height='430' fill='white'/>\n",
    );
    let revenue_panel = Panel { origin_x: 60.0, origin_y: 40.0, width: 380.0, height: 300.0 };
    let welfare_panel = Panel { origin_x: 530.0, origin_y: 40.0, width: 380.0, height: 300.0 };
    draw_panel(&mut out, &revenue_panel, "revenue vs fraction called", results, |p| p.revenue_mean);
    draw_panel(&mut out, &welfare_panel, "welfare vs fraction called", results, |p| p.welfare_mean);
    for (idx, result) in results.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let x = 60.0 + (idx as f64) * 100.0;
        out.push_str(&format!("<rect x='{x}' y='395' width='12' height='12' fill='{color}'/>\n"));
        out.push_str(&format!("<text x='{}' y='406' font-size='13'>{}</text>\n", x + 16.0, result.mechanism));
    }
    out.push_str("</svg>\n");
    out
}
