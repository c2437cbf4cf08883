//! Field snapshots and simple SVG line plots.

use super::WaveField;
use crate::{Error, Result};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// Writes one sheet as a text header line `nx ny h t` followed by
/// little-endian `f64` values in row-major order.
pub fn write_snapshot(path: &Path, field: &WaveField, sheet: usize) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{} {} {} {}", field.n, field.n, field.h, field.t)?;
    for v in &field.u[sheet] {
        f.write_all(&v.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

/// Returns `(nx, ny, h, t, values)`.
pub fn read_snapshot(path: &Path) -> Result<(usize, usize, f64, f64, Vec<f64>)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let bad = || Error::InvalidArgument(format!("malformed snapshot header in {}", path.display()));
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    let nx: usize = parts[0].parse().map_err(|_| bad())?;
    let ny: usize = parts[1].parse().map_err(|_| bad())?;
    let h: f64 = parts[2].parse().map_err(|_| bad())?;
    let t: f64 = parts[3].parse().map_err(|_| bad())?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != nx * ny * 8 {
        return Err(bad());
    }
    let vals = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((nx, ny, h, t, vals))
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of named `(x, y)` series; `log_y` plots `log10 |y|`.
pub fn series_svg(title: &str, series: &[(String, Vec<(f64, f64)>)], log_y: bool) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let tf = |y: f64| if log_y { y.abs().max(1e-300).log10() } else { y };
    let pts = series.iter().flat_map(|(_, s)| s.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        let y = tf(*y);
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (tf(y) - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n\
         <rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n\
         <text x=\"{pad}\" y=\"{}\">{x0:.3}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{x1:.3}</text>\n\
         <text x=\"5\" y=\"{}\">{y1:.3}</text><text x=\"5\" y=\"{}\">{y0:.3}</text>\n",
        w / 2.0,
        escape(title),
        w - 2.0 * pad,
        h - 2.0 * pad,
        h - pad + 15.0,
        w - pad,
        h - pad + 15.0,
        pad + 4.0,
        h - pad,
    );
    for (n, (name, data)) in series.iter().enumerate() {
        let c = COLORS[n % COLORS.len()];
        let path: Vec<String> = data.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{c}\" text-anchor=\"end\">{}</text>\n",
            w - pad - 4.0,
            pad + 14.0 * (n + 1) as f64,
            escape(name)
        ));
    }
    s.push_str("</svg>\n");
    s
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
