use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::{write, EXIT_ERROR, EXIT_OK};

const COLUMNS: [&str; 4] = ["step", "loss", "rel_error", "seconds"];
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Relative error per step from one history file.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub fn read_history(path: &Path) -> Result<Series, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = rdr.headers().map_err(|e| format!("{}: {e}", path.display()))?.clone();
    let mut idx = [0usize; 4];
    for (k, col) in COLUMNS.iter().enumerate() {
        idx[k] = headers.iter().position(|h| h == *col).ok_or_else(|| format!("{}: missing column `{col}`", path.display()))?;
    }
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let mut vals = [0.0; 4];
        for k in 0..4 {
            let cell = rec.get(idx[k]).unwrap_or("");
            vals[k] = cell.trim().parse().map_err(|_| format!("{}: row {}: bad `{}` value {cell:?}", path.display(), line + 2, COLUMNS[k]))?;
        }
        points.push((vals[0], vals[2]));
    }
    let label = path.parent().and_then(|p| p.file_name()).or(path.file_stem()).map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    Ok(Series { label, points })
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log-scale relative error against step, one polyline per series.
pub fn render_svg(series: &[Series]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 160.0, 20.0, 50.0);
    let positive = || series.iter().flat_map(|s| &s.points).filter(|p| p.1 > 0.0 && p.1.is_finite());
    let x_max = series.iter().flat_map(|s| &s.points).map(|p| p.0).fold(1.0, f64::max);
    let lo = positive().map(|p| p.1.log10()).fold(f64::INFINITY, f64::min);
    let hi = positive().map(|p| p.1.log10()).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo.floor(), hi.ceil().max(lo.floor() + 1.0)) } else { (-2.0, 0.0) };
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + pw * (x / x_max);
    let sy = |y: f64| top + ph * (hi - y.log10()) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for e in (lo as i32)..=(hi as i32) {
        let y = sy(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, left - 6.0, y + 4.0);
    }
    for k in 0..=5 {
        let x = x_max * k as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, sx(x), top + ph + 16.0, x.round());
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step</text>"#, left + pw / 2.0, h - 12.0);
    let _ = writeln!(s, r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">relative error</text>"#, top + ph / 2.0);
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser.points.iter().filter(|p| p.1 > 0.0 && p.1.is_finite()).map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = top + 14.0 + 18.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, left + pw + 10.0, left + pw + 30.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, left + pw + 36.0, ly + 4.0, esc(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

pub(crate) fn cmd_plot(histories: &[PathBuf], out: &Path) -> i32 {
    let mut series = Vec::new();
    for p in histories {
        match read_history(p) {
            Ok(s) => series.push(s),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        }
    }
    match write(out, render_svg(&series).as_bytes()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
