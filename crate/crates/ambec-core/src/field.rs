//! Field snapshots and their columnar text serialization.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};
use crate::C64;

/// Complex atomic and molecular wavefunctions sampled on one grid, with a
/// time stamp.
#[derive(Debug, Clone)]
pub struct FieldPair {
    pub psi_a: Array1<C64>,
    pub psi_m: Array1<C64>,
    pub t: f64,
}

impl FieldPair {
    pub fn new(psi_a: Array1<C64>, psi_m: Array1<C64>, t: f64) -> Result<Self> {
        if psi_a.len() != psi_m.len() {
            return Err(Error::ShapeMismatch {
                expected: psi_a.len(),
                got: psi_m.len(),
            });
        }
        Ok(FieldPair { psi_a, psi_m, t })
    }

    pub fn zeros(n: usize) -> Self {
        FieldPair {
            psi_a: Array1::from_elem(n, C64::new(0.0, 0.0)),
            psi_m: Array1::from_elem(n, C64::new(0.0, 0.0)),
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.psi_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi_a.is_empty()
    }

    /// Index of the first non-finite entry in either field, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.psi_a
            .iter()
            .zip(self.psi_m.iter())
            .position(|(a, m)| !(a.is_finite() && m.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        let ma = self.psi_a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let mm = self.psi_m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        ma.max(mm)
    }
}

/// Write a snapshot in the columnar text format: a header naming the columns,
/// a metadata comment (time stamp, grid kind), then one row per grid point
/// with 17 significant digits.
pub fn write_snapshot<W: Write>(mut w: W, f: &FieldPair, grid: &Grid) -> Result<()> {
    grid.check_len(f.len())?;
    writeln!(w, "# x  re_psi_a  im_psi_a  re_psi_m  im_psi_m")?;
    let kind = match grid.kind() {
        GridKind::Periodic => "periodic",
        GridKind::Bounded => "bounded",
    };
    writeln!(w, "# t = {:.16e}  grid = {}", f.t, kind)?;
    for (i, &x) in grid.points().iter().enumerate() {
        writeln!(
            w,
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            x, f.psi_a[i].re, f.psi_a[i].im, f.psi_m[i].re, f.psi_m[i].im
        )?;
    }
    Ok(())
}

pub fn save_snapshot(path: impl AsRef<Path>, f: &FieldPair, grid: &Grid) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), f, grid)
}

/// Read a snapshot back, reconstructing the grid from the x column and the
/// metadata comment.
pub fn load_snapshot(path: impl AsRef<Path>) -> Result<(FieldPair, Grid)> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut t = 0.0;
    let mut kind = GridKind::Periodic;
    let mut xs: Vec<f64> = Vec::new();
    let mut pa: Vec<C64> = Vec::new();
    let mut pm: Vec<C64> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            for part in meta.split_whitespace().collect::<Vec<_>>().windows(3) {
                if part[1] == "=" {
                    match part[0] {
                        "t" => {
                            t = part[2].parse().map_err(|_| {
                                Error::Config(format!("bad time stamp in snapshot: {}", part[2]))
                            })?
                        }
                        "grid" => {
                            kind = match part[2] {
                                "periodic" => GridKind::Periodic,
                                "bounded" => GridKind::Bounded,
                                other => {
                                    return Err(Error::Config(format!(
                                        "unknown grid kind in snapshot: {other}"
                                    )))
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
            continue;
        }
        let cols: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("bad snapshot row: {line}")))?;
        if cols.len() != 5 {
            return Err(Error::Config(format!(
                "snapshot rows need 5 columns, got {}",
                cols.len()
            )));
        }
        xs.push(cols[0]);
        pa.push(C64::new(cols[1], cols[2]));
        pm.push(C64::new(cols[3], cols[4]));
    }
    if xs.len() < 8 {
        return Err(Error::Config("snapshot too short".into()));
    }
    let dx = xs[1] - xs[0];
    for w in xs.windows(2) {
        if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs().max(1.0) {
            return Err(Error::Config("snapshot grid is not uniform".into()));
        }
    }
    let n = xs.len();
    let grid = match kind {
        GridKind::Periodic => Grid::periodic(xs[0], xs[n - 1] + dx, n)?,
        GridKind::Bounded => Grid::bounded(xs[0], xs[n - 1], n)?,
    };
    let f = FieldPair::new(Array1::from_vec(pa), Array1::from_vec(pm), t)?;
    grid.check_len(f.len())?;
    Ok((f, grid))
}
