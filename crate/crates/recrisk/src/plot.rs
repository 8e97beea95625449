//! Minimal deterministic SVG line charts for sweep results.
//!
//! Reads rows from a results CSV, picks an x and a y column, optionally
//! groups rows into one series per distinct value of a third column, and
//! renders polylines with markers, axes, ticks and a legend. Identical
//! input always produces byte-identical SVG. Risk-reduction charts add the
//! y = x reference diagonal.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    /// One series per distinct value of this column; a single series when
    /// absent.
    pub group: Option<String>,
    /// Draw the y = x reference diagonal.
    pub diagonal: bool,
    pub title: String,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 48.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

/// Render rows (already split into header + string cells) into an SVG
/// document. Rows whose x or y cell is empty or non-numeric are skipped, so
/// infeasible sweep cells drop out silently.
pub fn render_rows(headers: &[String], rows: &[Vec<String>], spec: &PlotSpec) -> Result<String> {
    let available = || headers.join(", ");
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn {
                column: name.to_string(),
                available: available(),
            })
    };
    let x_col = col(&spec.x)?;
    let y_col = col(&spec.y)?;
    let group_col = spec.group.as_deref().map(col).transpose()?;

    // group label -> sorted (x, y) points
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in rows {
        let (Some(xs), Some(ys)) = (row.get(x_col), row.get(y_col)) else {
            continue;
        };
        let (Ok(x), Ok(y)) = (xs.parse::<f64>(), ys.parse::<f64>()) else {
            continue;
        };
        if !x.is_finite() || !y.is_finite() {
            continue;
        }
        let label = match group_col {
            Some(c) => row.get(c).cloned().unwrap_or_default(),
            None => spec.y.clone(),
        };
        series.entry(label).or_default().push((x, y));
    }
    if series.is_empty() {
        return Err(Error::InvalidInput(
            "no plottable rows (empty input or non-numeric cells)".into(),
        ));
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    }

    let all: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    let (mut x_min, mut x_max) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    let (mut y_min, mut y_max) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    if spec.diagonal {
        let lo = x_min.min(y_min);
        let hi = x_max.max(y_max);
        x_min = lo;
        x_max = hi;
        y_min = lo;
        y_max = hi;
    }
    if x_max == x_min {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_max == y_min {
        y_min -= 0.5;
        y_max += 0.5;
    }

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        fmt2(MARGIN_L + plot_w / 2.0),
        xml_escape(&spec.title)
    ));

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt2(MARGIN_L),
        fmt2(MARGIN_T + plot_h),
        fmt2(MARGIN_L + plot_w),
        fmt2(MARGIN_T + plot_h)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt2(MARGIN_L),
        fmt2(MARGIN_T),
        fmt2(MARGIN_L),
        fmt2(MARGIN_T + plot_h)
    ));

    // Ticks: five per axis.
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let xv = x_min + frac * (x_max - x_min);
        let yv = y_min + frac * (y_max - y_min);
        let xp = sx(xv);
        let yp = sy(yv);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{y1}\" stroke=\"black\"/>\n",
            x = fmt2(xp),
            y0 = fmt2(MARGIN_T + plot_h),
            y1 = fmt2(MARGIN_T + plot_h + 5.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n",
            fmt2(xp),
            fmt2(MARGIN_T + plot_h + 18.0),
            fmt_tick(xv)
        ));
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"black\"/>\n",
            x0 = fmt2(MARGIN_L - 5.0),
            x1 = fmt2(MARGIN_L),
            y = fmt2(yp)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            fmt2(MARGIN_L - 8.0),
            fmt2(yp + 4.0),
            fmt_tick(yv)
        ));
    }

    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        fmt2(MARGIN_L + plot_w / 2.0),
        fmt2(HEIGHT - 10.0),
        xml_escape(&spec.x)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        fmt2(MARGIN_T + plot_h / 2.0),
        fmt2(MARGIN_T + plot_h / 2.0),
        xml_escape(&spec.y)
    ));

    if spec.diagonal {
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888888\" \
             stroke-dasharray=\"6,4\"/>\n",
            fmt2(sx(x_min)),
            fmt2(sy(x_min)),
            fmt2(sx(x_max)),
            fmt2(sy(x_max))
        ));
    }

    for (idx, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        if points.len() > 1 {
            let path: Vec<String> = points
                .iter()
                .map(|&(x, y)| format!("{},{}", fmt2(sx(x)), fmt2(sy(y))))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
        }
        for &(x, y) in points {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>\n",
                fmt2(sx(x)),
                fmt2(sy(y))
            ));
        }
        // Legend entry.
        let ly = MARGIN_T + 14.0 * idx as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            fmt2(WIDTH - MARGIN_R + 10.0),
            fmt2(ly)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            fmt2(WIDTH - MARGIN_R + 24.0),
            fmt2(ly + 9.0),
            xml_escape(label)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Render a results CSV straight to an SVG file.
pub fn render_csv(csv_path: &Path, spec: &PlotSpec, out_path: &Path) -> Result<()> {
    let mut reader = csv::Reader::from_path(csv_path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row?;
        rows.push(row.iter().map(str::to_string).collect::<Vec<String>>());
    }
    let svg = render_rows(&headers, &rows, spec)?;
    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(out_path, svg)?;
    Ok(())
}
