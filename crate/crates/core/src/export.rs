//! CSV tables and SVG plots.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Point;

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidParams(format!("csv: {e}"))
}

/// A CSV with a header row and numeric rows.
pub fn table_csv(headers: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers).map_err(csv_err)?;
    for row in rows {
        if row.len() != headers.len() {
            return Err(Error::DimensionMismatch(format!("row of {} values under {} headers", row.len(), headers.len())));
        }
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

/// Node lattice `origin + h·(i, j)` with `nodes_x × nodes_y` nodes,
/// row-major in `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLayout {
    pub origin: Point,
    pub h: f64,
    pub nodes_x: usize,
    pub nodes_y: usize,
}

impl NodeLayout {
    pub fn count(&self) -> usize {
        self.nodes_x * self.nodes_y
    }
}

/// One row per node: `i, j, x, y` followed by the named fields.
pub fn nodal_csv(layout: &NodeLayout, fields: &[(&str, &[f64])]) -> Result<String> {
    if let Some((name, f)) = fields.iter().find(|(_, f)| f.len() != layout.count()) {
        return Err(Error::DimensionMismatch(format!("field {name} has {} values for {} nodes", f.len(), layout.count())));
    }
    let mut headers = vec!["i", "j", "x", "y"];
    headers.extend(fields.iter().map(|f| f.0));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&headers).map_err(csv_err)?;
    for k in 0..layout.count() {
        let (i, j) = (k % layout.nodes_x, k / layout.nodes_x);
        let mut rec = vec![
            i.to_string(),
            j.to_string(),
            format!("{:e}", layout.origin[0] + i as f64 * layout.h),
            format!("{:e}", layout.origin[1] + j as f64 * layout.h),
        ];
        rec.extend(fields.iter().map(|(_, f)| format!("{:e}", f[k])));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

const HEATMAP_MAX_SIDE: usize = 256;
const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 480.0;
const MARGIN: f64 = 60.0;

// viridis anchors
const RAMP: [[f64; 3]; 5] = [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let k = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - k as f64;
    let c: Vec<u8> = (0..3).map(|d| (RAMP[k][d] * (1.0 - f) + RAMP[k + 1][d] * f).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Heatmap of a node field, subsampled to at most 256 nodes per side.
/// Nodes with `mask[k] == false` are left blank.
pub fn heatmap_svg(layout: &NodeLayout, values: &[f64], mask: Option<&[bool]>, title: &str) -> Result<String> {
    if values.len() != layout.count() || mask.is_some_and(|m| m.len() != layout.count()) {
        return Err(Error::DimensionMismatch(format!("heatmap needs {} values", layout.count())));
    }
    let stride = layout.nodes_x.max(layout.nodes_y).div_ceil(HEATMAP_MAX_SIDE).max(1);
    let (cols, rows) = (layout.nodes_x.div_ceil(stride), layout.nodes_y.div_ceil(stride));
    let keep = |k: usize| mask.map_or(true, |m| m[k]) && values[k].is_finite();
    let (lo, hi) = (0..values.len()).filter(|&k| keep(k)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| (lo.min(values[k]), hi.max(values[k])));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = (PLOT_W - 2.0 * MARGIN) / cols.max(rows) as f64;
    let mut s = String::new();
    let (w, h) = (cols as f64 * px + 2.0 * MARGIN, rows as f64 * px + 2.0 * MARGIN);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="30" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    for r in 0..rows {
        for c in 0..cols {
            let k = (r * stride) * layout.nodes_x + c * stride;
            if !keep(k) {
                continue;
            }
            // y grows upward in the domain
            let y = MARGIN + (rows - 1 - r) as f64 * px;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                MARGIN + c as f64 * px,
                px + 0.05,
                px + 0.05,
                color((values[k] - lo) / span)
            );
        }
    }
    if lo.is_finite() {
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.1}" font-family="sans-serif" font-size="12">min {lo:.4e}  max {hi:.4e}</text>"#, h - 20.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// A polyline or marker series for [`plot_svg`].
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
    pub line: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Scatter or line plot; points that are not positive on a log axis are
/// skipped.
pub fn plot_svg(spec: &PlotSpec) -> String {
    let tx = |v: f64| if spec.log_x { v.log10() } else { v };
    let ty = |v: f64| if spec.log_y { v.log10() } else { v };
    let ok = |p: &(f64, f64)| (!spec.log_x || p.0 > 0.0) && (!spec.log_y || p.1 > 0.0) && p.0.is_finite() && p.1.is_finite();
    let pts: Vec<(f64, f64)> = spec.series.iter().flat_map(|s| s.points.iter().filter(|p| ok(p)).map(|p| (tx(p.0), ty(p.1)))).collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |a, p| {
        (a.0.min(p.0), a.1.max(p.0), a.2.min(p.1), a.3.max(p.1))
    });
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let sx = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (PLOT_W - 2.0 * MARGIN);
    let sy = |v: f64| PLOT_H - MARGIN - (v - y0) / (y1 - y0) * (PLOT_H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="30" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, PLOT_W / 2.0, escape(&spec.title));
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        PLOT_W - 2.0 * MARGIN,
        PLOT_H - 2.0 * MARGIN
    );
    let tick = |v: f64, log: bool| if log { format!("1e{v:.2}") } else { format!("{v:.3}") };
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#, sx(xv), PLOT_H - MARGIN + 16.0, tick(xv, spec.log_x));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#, MARGIN - 4.0, sy(yv) + 4.0, tick(yv, spec.log_y));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#, PLOT_W / 2.0, PLOT_H - 14.0, escape(&spec.x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        PLOT_H / 2.0,
        PLOT_H / 2.0,
        escape(&spec.y_label)
    );
    for (n, series) in spec.series.iter().enumerate() {
        let colour = PALETTE[n % PALETTE.len()];
        let mapped: Vec<(f64, f64)> = series.points.iter().filter(|p| ok(p)).map(|p| (sx(tx(p.0)), sy(ty(p.1)))).collect();
        if series.line && mapped.len() > 1 {
            let path: Vec<String> = mapped.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, path.join(" "));
        }
        if series.markers {
            for (x, y) in &mapped {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{colour}"/>"#);
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" fill="{colour}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 16.0 + 15.0 * n as f64,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Log-log plot of `(x, y)` data with the fitted line `c x^p`.
pub fn loglog_with_fit(title: &str, x_label: &str, y_label: &str, data: &[(f64, f64)], fit: Option<(f64, f64)>) -> String {
    let mut series = vec![Series { label: "measured".into(), points: data.to_vec(), markers: true, line: false }];
    if let Some((p, c)) = fit {
        let xs: Vec<f64> = data.iter().map(|d| d.0).filter(|x| *x > 0.0).collect();
        let (lo, hi) = xs.iter().fold((f64::INFINITY, 0.0f64), |a, x| (a.0.min(*x), a.1.max(*x)));
        if lo.is_finite() {
            series.push(Series { label: format!("fit slope {p:.3}"), points: vec![(lo, c * lo.powf(p)), (hi, c * hi.powf(p))], markers: false, line: true });
        }
    }
    plot_svg(&PlotSpec { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), log_x: true, log_y: true, series })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let text = table_csv(&["eps", "err"], &[vec![0.5, 1e-3], vec![0.25, 5e-4]]).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows: Vec<Vec<f64>> = r.records().map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
        assert_eq!(rows, vec![vec![0.5, 1e-3], vec![0.25, 5e-4]]);
        assert!(table_csv(&["a"], &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn nodal_layout() {
        let layout = NodeLayout { origin: [0.0, 0.0], h: 0.5, nodes_x: 3, nodes_y: 2 };
        let v: Vec<f64> = (0..6).map(f64::from).collect();
        let text = nodal_csv(&layout, &[("u", &v)]).unwrap();
        let last = text.lines().last().unwrap();
        assert_eq!(last, "2,1,1e0,5e-1,5e0");
        assert!(heatmap_svg(&layout, &v, None, "u").unwrap().contains("<rect"));
        assert!(heatmap_svg(&layout, &v[..5], None, "u").is_err());
    }

    #[test]
    fn plots_are_svg() {
        let s = loglog_with_fit("rate", "eps", "err", &[(0.5, 0.1), (0.25, 0.05), (0.0, 1.0)], Some((1.0, 0.2)));
        assert!(s.starts_with("<svg") && s.contains("polyline") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
    }
}
