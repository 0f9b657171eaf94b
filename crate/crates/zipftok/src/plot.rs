//! Standalone SVG rendering of rank-frequency tables: log-log axes with
//! decade grid lines, subsampled data points, fitted line overlays, and a
//! breakpoint marker.

use crate::error::{Error, Result};
use crate::powerfit::FitReport;
use crate::zipfstats::RankFrequencyTable;

#[derive(Debug, Clone)]
pub struct PlotConfig {
    pub width: u32,
    pub height: u32,
    /// Data points are subsampled, log-uniformly in rank, to at most this
    /// many circles.
    pub max_points: usize,
    pub title: String,
}

impl Default for PlotConfig {
    fn default() -> Self {
        PlotConfig {
            width: 800,
            height: 600,
            max_points: 5_000,
            title: String::new(),
        }
    }
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Renders the table (and optional fit overlay) to an SVG document.
pub fn render_rank_frequency_svg(
    rft: &RankFrequencyTable,
    fit: Option<&FitReport>,
    cfg: &PlotConfig,
) -> Result<String> {
    let rows: Vec<(u64, u64)> = rft
        .rows()
        .iter()
        .filter(|r| r.frequency > 0)
        .map(|r| (r.rank, r.frequency))
        .collect();
    if rows.is_empty() {
        return Err(Error::param("nothing to plot: no positive frequencies"));
    }

    let max_rank = rows.last().expect("non-empty").0 as f64;
    let max_freq = rows.first().expect("non-empty").1 as f64;
    let min_freq = rows.iter().map(|r| r.1).min().expect("non-empty") as f64;

    // Axis bounds snapped to whole decades.
    let x_lo = 0.0;
    let x_hi = max_rank.log10().ceil().max(x_lo + 1.0);
    let y_lo = min_freq.log10().floor();
    let y_hi = max_freq.log10().ceil().max(y_lo + 1.0);

    let plot_w = cfg.width as f64 - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = cfg.height as f64 - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = move |lr: f64| MARGIN_LEFT + (lr - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = move |lf: f64| MARGIN_TOP + (y_hi - lf) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = cfg.width,
        h = cfg.height
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<rect width="{}" height="{}" fill="white"/>"#,
        cfg.width, cfg.height
    ));
    svg.push('\n');
    if !cfg.title.is_empty() {
        svg.push_str(&format!(
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            cfg.width / 2,
            escape_xml(&cfg.title)
        ));
        svg.push('\n');
    }

    // Decade grid.
    let mut d = x_lo;
    while d <= x_hi + 1e-9 {
        let x = sx(d);
        svg.push_str(&format!(
            r##"<line class="grid" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">1e{}</text>"#,
            MARGIN_TOP + plot_h + 18.0,
            d as i64
        ));
        svg.push('\n');
        d += 1.0;
    }
    let mut d = y_lo;
    while d <= y_hi + 1e-9 {
        let y = sy(d);
        svg.push_str(&format!(
            r##"<line class="grid" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"<text x="{:.2}" y="{y:.2}" font-family="sans-serif" font-size="12" text-anchor="end">1e{}</text>"#,
            MARGIN_LEFT - 6.0,
            d as i64
        ));
        svg.push('\n');
        d += 1.0;
    }

    // Axis labels.
    svg.push_str(&format!(
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">rank</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        cfg.height as f64 - 10.0
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">frequency</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));
    svg.push('\n');

    // Data points, subsampled log-uniformly in rank.
    for &(rank, freq) in subsample_log_uniform(&rows, cfg.max_points).iter() {
        svg.push_str(&format!(
            r##"<circle class="pt" cx="{:.2}" cy="{:.2}" r="2" fill="#1f77b4" fill-opacity="0.7"/>"##,
            sx((rank as f64).log10()),
            sy((freq as f64).log10()),
        ));
        svg.push('\n');
    }

    // Fit overlays.
    if let Some(report) = fit {
        let mut fit_line = |exp: f64, amp_log10: f64, lo: u64, hi: u64, color: &str| {
            let (x1, x2) = ((lo as f64).log10(), (hi as f64).log10());
            let y_at = |lx: f64| amp_log10 - exp * lx;
            svg.push_str(&format!(
                r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
                sx(x1),
                sy(y_at(x1)),
                sx(x2),
                sy(y_at(x2)),
            ));
            svg.push('\n');
        };
        if report.model_preferred == "broken" {
            let b = &report.broken;
            fit_line(
                b.head.exponent,
                b.head.amplitude_log10,
                b.head.fit_range[0],
                b.head.fit_range[1],
                "#d62728",
            );
            fit_line(
                b.tail.exponent,
                b.tail.amplitude_log10,
                b.tail.fit_range[0],
                b.tail.fit_range[1],
                "#2ca02c",
            );
            let bx = sx((b.breakpoint_rank as f64).log10());
            svg.push_str(&format!(
                r##"<line class="breakpoint" x1="{bx:.2}" y1="{:.2}" x2="{bx:.2}" y2="{:.2}" stroke="#9467bd" stroke-width="1.5" stroke-dasharray="5,4"/>"##,
                MARGIN_TOP,
                MARGIN_TOP + plot_h
            ));
            svg.push('\n');
        } else {
            let s = &report.single;
            fit_line(
                s.exponent,
                s.amplitude_log10,
                s.fit_range[0],
                s.fit_range[1],
                "#d62728",
            );
        }
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// At most `max_points` rows, chosen nearest to a log-uniform rank grid.
/// Keeps the visual shape of a bend while bounding file size.
fn subsample_log_uniform(rows: &[(u64, u64)], max_points: usize) -> Vec<(u64, u64)> {
    if rows.len() <= max_points {
        return rows.to_vec();
    }
    let n = rows.len();
    let ln_max = (n as f64).ln();
    let mut out = Vec::with_capacity(max_points);
    let mut last_idx = usize::MAX;
    for i in 0..max_points {
        let t = i as f64 / (max_points - 1) as f64;
        let idx = ((t * ln_max).exp().round() as usize - 1).min(n - 1);
        if idx != last_idx {
            out.push(rows[idx]);
            last_idx = idx;
        }
    }
    out
}

fn escape_xml(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '&' => "&amp;".to_string(),
            '<' => "&lt;".to_string(),
            '>' => "&gt;".to_string(),
            '"' => "&quot;".to_string(),
            c => c.to_string(),
        })
        .collect()
}
