//! Box plots written directly as SVG.

use std::fmt::Write as _;

use super::stats::BoxStats;

const WIDTH_PER_BOX: f64 = 110.0;
const MARGIN_LEFT: f64 = 100.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PLOT_HEIGHT: f64 = 320.0;
const BOX_WIDTH: f64 = 50.0;
/// Values are floored here before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    /// Base-10 logarithm; values below [`LOG_FLOOR`] are drawn at the floor.
    Log,
}

impl Scale {
    fn map(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log => v.max(LOG_FLOOR).log10(),
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(scale: Scale, t: f64) -> String {
    match scale {
        Scale::Log => format!("1e{}", t.round() as i64),
        Scale::Linear => format!("{t:.2e}"),
    }
}

/// One box per `(label, stats)` pair, sharing a vertical axis.
pub fn box_plot(title: &str, y_label: &str, series: &[(String, BoxStats)], scale: Scale) -> String {
    let width = MARGIN_LEFT + MARGIN_RIGHT + WIDTH_PER_BOX * series.len().max(1) as f64;
    let height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM;
    let values = series.iter().flat_map(|(_, b)| [b.min, b.max]).map(|v| scale.map(v));
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let ticks: Vec<f64> = match scale {
        Scale::Log => {
            (lo, hi) = (lo.floor(), hi.ceil().max(lo.floor() + 1.0));
            let step = ((hi - lo) / 8.0).ceil().max(1.0);
            (0..).map(|k| lo + step * k as f64).take_while(|&t| t <= hi).collect()
        }
        Scale::Linear => {
            let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1e-12) };
            (lo, hi) = (lo - pad, hi + pad);
            (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
        }
    };
    let y = |v: f64| MARGIN_TOP + PLOT_HEIGHT * (1.0 - (scale.map(v) - lo) / (hi - lo));
    let y_raw = |t: f64| MARGIN_TOP + PLOT_HEIGHT * (1.0 - (t - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_TOP + PLOT_HEIGHT / 2.0,
        escape(y_label)
    );
    let axis_x = MARGIN_LEFT - 10.0;
    let _ = writeln!(
        s,
        r#"<line x1="{axis_x:.1}" y1="{MARGIN_TOP:.1}" x2="{axis_x:.1}" y2="{:.1}" stroke="black"/>"#,
        MARGIN_TOP + PLOT_HEIGHT
    );
    for &t in &ticks {
        let ty = y_raw(t);
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{ty:.1}" x2="{axis_x:.1}" y2="{ty:.1}" stroke="black"/>"#, axis_x - 4.0);
        let _ = writeln!(
            s,
            r##"<line x1="{axis_x:.1}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" stroke="#ddd"/>"##,
            width - MARGIN_RIGHT
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, axis_x - 6.0, ty + 4.0, tick_label(scale, t));
    }
    for (k, (label, b)) in series.iter().enumerate() {
        let cx = MARGIN_LEFT + WIDTH_PER_BOX * (k as f64 + 0.5);
        let (left, right) = (cx - BOX_WIDTH / 2.0, cx + BOX_WIDTH / 2.0);
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
            y(b.whisker_low),
            y(b.whisker_high)
        );
        for w in [b.whisker_low, b.whisker_high] {
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
                cx - BOX_WIDTH / 4.0,
                y(w),
                cx + BOX_WIDTH / 4.0,
                y(w)
            );
        }
        let (top, bottom) = (y(b.q3), y(b.q1));
        let _ = writeln!(
            s,
            r##"<rect x="{left:.1}" y="{top:.1}" width="{BOX_WIDTH:.1}" height="{:.1}" fill="#9ecae1" stroke="black"/>"##,
            (bottom - top).max(0.5)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{left:.1}" y1="{:.1}" x2="{right:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
            y(b.median),
            y(b.median)
        );
        for &o in &b.outliers {
            let _ = writeln!(s, r#"<circle cx="{cx:.1}" cy="{:.1}" r="2.5" fill="none" stroke="black"/>"#, y(o));
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{} (n={})</text>"#,
            MARGIN_TOP + PLOT_HEIGHT + 20.0,
            escape(label),
            b.count
        );
    }
    s.push_str("</svg>\n");
    s
}
