//! File formats: series CSV, binary field dumps, SVG heatmaps.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chemohapto_core::diagnostics::DiagnosticsRecord;
use chemohapto_core::{Field2D, Grid};

pub const FIELD_MAGIC: &[u8; 8] = b"CHFIELD1";
pub const FIELD_HEADER_LEN: usize = 32;

/// Header row plus one row per record, 17 significant digits.
pub fn series_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = DiagnosticsRecord::COLUMNS.join(",");
    out.push('\n');
    for r in records {
        for (i, v) in r.values().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_series(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    fs::write(path, series_csv(records)).with_context(|| format!("cannot write {}", path.display()))
}

/// Parses a file written by [`series_csv`] into columns.
pub fn read_series(text: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty series file")?;
    let mut cols: Vec<(String, Vec<f64>)> = header.split(',').map(|h| (h.to_string(), Vec::new())).collect();
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            bail!("row {} has {} cells, expected {}", n + 2, cells.len(), cols.len());
        }
        for (c, cell) in cols.iter_mut().zip(cells) {
            c.1.push(
                cell.parse()
                    .with_context(|| format!("row {}: bad number {cell:?}", n + 2))?,
            );
        }
    }
    Ok(cols)
}

/// 32-byte header (magic, `nx` and `ny` as u32, `Lx` and `Ly` as f64, all
/// little-endian) followed by row-major f64 values.
pub fn encode_field(f: &Field2D) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(FIELD_HEADER_LEN + 8 * g.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    out.extend_from_slice(&g.lx().to_le_bytes());
    out.extend_from_slice(&g.ly().to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<Field2D> {
    if bytes.len() < FIELD_HEADER_LEN || &bytes[..8] != FIELD_MAGIC {
        bail!("not a field dump (bad magic)");
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (nx, ny) = (u32_at(8), u32_at(12));
    let grid = Grid::new(nx, ny, f64_at(16), f64_at(24)).map_err(|e| anyhow::anyhow!("field header: {e}"))?;
    let body = &bytes[FIELD_HEADER_LEN..];
    if body.len() != 8 * grid.len() {
        bail!(
            "field body has {} bytes, expected {} for {nx}x{ny}",
            body.len(),
            8 * grid.len()
        );
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(grid.field(values).expect("length checked"))
}

pub fn write_field(path: &Path, f: &Field2D) -> Result<()> {
    fs::write(path, encode_field(f)).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_field(path: &Path) -> Result<Field2D> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    decode_field(&bytes).with_context(|| format!("in {}", path.display()))
}

/// Block-averages `f` down to at most `max` cells per axis.
fn downsample(f: &Field2D, max: usize) -> (usize, usize, Vec<f64>) {
    let g = f.grid();
    let (bx, by) = (g.nx().div_ceil(max), g.ny().div_ceil(max));
    let (mx, my) = (g.nx().div_ceil(bx), g.ny().div_ceil(by));
    let mut out = vec![0.0; mx * my];
    let mut count = vec![0usize; mx * my];
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let k = (j / by) * mx + i / bx;
            out[k] += f.at(i, j);
            count[k] += 1;
        }
    }
    for (v, c) in out.iter_mut().zip(count) {
        *v /= c as f64;
    }
    (mx, my, out)
}

/// Piecewise-linear dark-blue to yellow ramp.
fn color(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let s = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + s * (q - p)).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Self-contained SVG heatmap; `y` points up.
pub fn heatmap_svg(f: &Field2D, title: &str, max: usize) -> String {
    let (mx, my, vals) = downsample(f, max.max(1));
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cell = (512 / mx.max(my)).max(1);
    let (w, h) = (mx * cell, my * cell);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{}" viewBox="0 0 {w} {}">"#,
        h + 24,
        h + 24
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="2" y="16" font-family="monospace" font-size="12">{title}: min {lo:.4e} max {hi:.4e}</text>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<g transform="translate(0,24)" shape-rendering="crispEdges">"#
    )
    .unwrap();
    for j in 0..my {
        for i in 0..mx {
            let (r, g, b) = color((vals[j * mx + i] - lo) / span);
            writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                i * cell,
                (my - 1 - j) * cell
            )
            .unwrap();
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let g = Grid::new(5, 4, 2.0, 0.5).unwrap();
        let f = g.sample(|x, y| x * 1e-3 - y.exp());
        let bytes = encode_field(&f);
        assert_eq!(bytes.len(), 32 + 8 * 20);
        assert_eq!(decode_field(&bytes).unwrap(), f);
        assert!(decode_field(&bytes[..40]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let r = DiagnosticsRecord {
            t: 0.1,
            mass: 1.0 / 3.0,
            l2_u: std::f64::consts::PI,
            linf_u: 1e-300,
            entropy: -0.0,
            g_m: 2.5e17,
            grad_v_l4: 0.7,
            linf_grad_v: 5e-324,
            linf_grad_w: 1.0,
            identity_residual: 0.0,
            delta_w_violation_max: -1.25,
            clipped_mass: 0.0,
            dt: 1e-4,
        };
        let cols = read_series(&series_csv(&[r])).unwrap();
        for ((name, v), x) in cols.iter().zip(r.values()) {
            assert_eq!(v[0].to_bits(), x.to_bits(), "{name}");
        }
    }

    #[test]
    fn svg_is_capped() {
        let g = Grid::unit_square(130).unwrap();
        let (mx, my, _) = downsample(&g.sample(|x, _| x), 64);
        assert!(mx <= 64 && my <= 64);
        let svg = heatmap_svg(&g.constant(1.0), "u", 64);
        assert_eq!(svg.matches("<rect").count(), mx * my);
    }
}
