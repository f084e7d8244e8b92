//! Energy and visitation maps over the `[-1, 1]²` plane.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::ebm::EnergyModel;
use crate::error::{Error, Result};

/// Centre of cell `i` of `resolution` equal cells spanning `[-1, 1]`.
pub fn cell_center(i: usize, resolution: usize) -> f64 {
    -1.0 + (i as f64 + 0.5) * 2.0 / resolution as f64
}

/// `E(p, p + displacement)` at each cell centre `p`. Row `i` holds
/// `y = cell_center(i)`, column `j` holds `x = cell_center(j)`.
pub fn energy_heatmap(model: &EnergyModel, resolution: usize, displacement: [f64; 2]) -> Result<Array2<f64>> {
    if model.state_dim() != 2 {
        return Err(Error::Unsupported(format!("energy heatmaps need a 2-D state space, got {}", model.state_dim())));
    }
    if resolution == 0 {
        return Err(Error::Contract("heatmap resolution must be at least 1".into()));
    }
    let mut pairs = Array2::zeros((resolution * resolution, 4));
    for i in 0..resolution {
        for j in 0..resolution {
            let p = [cell_center(j, resolution), cell_center(i, resolution)];
            let mut row = pairs.row_mut(i * resolution + j);
            row[0] = p[0];
            row[1] = p[1];
            row[2] = p[0] + displacement[0];
            row[3] = p[1] + displacement[1];
        }
    }
    let e = model.pair_energies(pairs.view())?;
    Ok(e.into_shape((resolution, resolution)).expect("row-major energies"))
}

/// Visit counts of `points` on a `resolution²` grid over `[-1, 1]²`, same
/// layout as [`energy_heatmap`]. Points on the upper edge land in the last
/// cell.
pub fn visitation_map(points: &[[f64; 2]], resolution: usize) -> Array2<f64> {
    let mut m = Array2::zeros((resolution, resolution));
    let idx = |v: f64| (((v + 1.0) / 2.0 * resolution as f64).floor().max(0.0) as usize).min(resolution - 1);
    for p in points {
        m[[idx(p[1]), idx(p[0])]] += 1.0;
    }
    m
}

/// One line per row, comma separated.
pub fn matrix_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.outer_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parses the output of [`matrix_csv`].
pub fn parse_matrix_csv(text: &str) -> Result<Array2<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<_, _>>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Contract(format!("bad matrix entry: {e}")))?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Contract("ragged matrix".into()));
    }
    let flat: Vec<f64> = rows.concat();
    Ok(Array2::from_shape_vec((rows.len(), cols), flat).expect("checked shape"))
}

/// Five-stop blue to yellow ramp.
fn color(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Colour-mapped SVG of `m`, first row at the bottom so `+y` points up.
/// Depends on nothing but the matrix.
pub fn heatmap_svg(m: &Array2<f64>, title: &str) -> String {
    const CELL: usize = 10;
    let (rows, cols) = m.dim();
    let finite = || m.iter().copied().filter(|v| v.is_finite());
    let lo = finite().fold(f64::INFINITY, f64::min);
    let hi = finite().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (w, h) = (cols * CELL, rows * CELL + 20);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(
        svg,
        r#"<text x="2" y="14" font-family="sans-serif" font-size="12">{title} [{lo:.4}, {hi:.4}]</text>"#
    );
    for i in 0..rows {
        for j in 0..cols {
            let v = m[[i, j]];
            let (r, g, b) = color(if hi > lo { (v - lo) / span } else { 0.5 });
            let y = 20 + (rows - 1 - i) * CELL;
            let _ = writeln!(
                svg,
                r#"<rect x="{}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({r},{g},{b})"/>"#,
                j * CELL
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
