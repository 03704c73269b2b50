//! Uniform 1-D grids with spectral (periodic) or finite-difference (bounded)
//! differentiation, plus the matching quadrature rules.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array1;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::C64;

/// Discretization flavor. Periodic grids exclude `x_max` (it aliases
/// `x_min`) and carry a wavenumber table for FFT differentiation; bounded
/// grids include both endpoints and differentiate with 4th-order stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Periodic,
    Bounded,
}

#[derive(Debug, Clone)]
pub struct Grid {
    kind: GridKind,
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
    points: Array1<f64>,
    /// FFT-layout wavenumbers (periodic grids only): 0, 1, .., n/2, -n/2+1, .., -1
    /// times 2π/L, with the Nyquist entry stored positive.
    wavenumbers: Option<Array1<f64>>,
}

fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

impl Grid {
    /// Periodic grid of `n` points on `[x_min, x_max)` with `dx = (x_max - x_min)/n`.
    /// `n` must be a power of two, at least 8.
    pub fn periodic(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Grid(format!(
                "box bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < 8 || !is_power_of_two(n) {
            return Err(Error::Grid(format!(
                "periodic grids need a power-of-two point count >= 8, got {n}"
            )));
        }
        let length = x_max - x_min;
        let dx = length / n as f64;
        // Points are built symmetrically about the box center so that x and -x
        // mirror bit-exactly on symmetric boxes; parity cancellations in
        // quadrature then hold to roundoff.
        let center = 0.5 * (x_min + x_max);
        let half = n as i64 / 2;
        let points =
            Array1::from_iter((0..n).map(|j| center + (j as i64 - half) as f64 * dx));
        let k0 = 2.0 * PI / length;
        let wavenumbers = Array1::from_iter((0..n).map(|j| {
            if j <= n / 2 {
                k0 * j as f64
            } else {
                -k0 * (n - j) as f64
            }
        }));
        Ok(Grid {
            kind: GridKind::Periodic,
            x_min,
            x_max,
            n,
            dx,
            points,
            wavenumbers: Some(wavenumbers),
        })
    }

    /// Bounded grid of `n` points on `[x_min, x_max]`, both endpoints included,
    /// `dx = (x_max - x_min)/(n - 1)`. `n` must be 2^k + 1 (so the interval
    /// count is a power of two), at least 9.
    pub fn bounded(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Grid(format!(
                "box bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < 9 || !is_power_of_two(n - 1) {
            return Err(Error::Grid(format!(
                "bounded grids need 2^k + 1 points (k >= 3), got {n}"
            )));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        let center = 0.5 * (x_min + x_max);
        let half = (n as i64 - 1) / 2;
        let points =
            Array1::from_iter((0..n).map(|j| center + (j as i64 - half) as f64 * dx));
        Ok(Grid {
            kind: GridKind::Bounded,
            x_min,
            x_max,
            n,
            dx,
            points,
            wavenumbers: None,
        })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn points(&self) -> &Array1<f64> {
        &self.points
    }
    pub fn wavenumbers(&self) -> Option<&Array1<f64>> {
        self.wavenumbers.as_ref()
    }

    /// True when the box is symmetric about the origin (parity tests assume this).
    pub fn is_symmetric(&self) -> bool {
        self.x_min == -self.x_max
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.n,
                got: len,
            })
        }
    }

    /// Same box at `factor`-times the resolution (used for solution validation).
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        match self.kind {
            GridKind::Periodic => Grid::periodic(self.x_min, self.x_max, self.n * factor),
            GridKind::Bounded => Grid::bounded(self.x_min, self.x_max, (self.n - 1) * factor + 1),
        }
    }

    /// Quadrature of real samples: periodic rectangle rule on spectral grids
    /// (spectrally accurate for periodic integrands), trapezoid on bounded ones.
    pub fn integrate<I: IntoIterator<Item = f64>>(&self, values: I) -> f64 {
        let mut it = values.into_iter();
        match self.kind {
            GridKind::Periodic => self.dx * kahan_sum(it),
            GridKind::Bounded => {
                let first = it.next().unwrap_or(0.0);
                let mut last = first;
                let mut sum = KahanAcc::new();
                sum.add(first);
                for v in it {
                    sum.add(v);
                    last = v;
                }
                self.dx * (sum.value() - 0.5 * (first + last))
            }
        }
    }

    /// Complex quadrature with the same rules.
    pub fn integrate_c<I: IntoIterator<Item = C64>>(&self, values: I) -> C64 {
        let (re, im): (Vec<f64>, Vec<f64>) = values.into_iter().map(|z| (z.re, z.im)).unzip();
        C64::new(self.integrate(re), self.integrate(im))
    }

    /// Indices of roughly `m` collocation points clustered toward both the
    /// core (x = 0) and the box edges, mirrored over the two half-axes.
    /// Uniform subsampling under-weights the tails; this Chebyshev-style map
    /// covers core and tail together.
    pub fn collocation_indices(&self, m: usize) -> Vec<usize> {
        let m = m.max(4);
        let per_side = m / 2;
        let center = 0.5 * (self.x_min + self.x_max);
        let half_width = 0.5 * (self.x_max - self.x_min) - self.dx;
        let mut idx: Vec<usize> = Vec::with_capacity(2 * per_side);
        for i in 0..per_side {
            let theta = PI * i as f64 / (per_side - 1).max(1) as f64;
            let target = 0.5 * half_width * (1.0 - theta.cos());
            for sign in [-1.0, 1.0] {
                let x = center + sign * target;
                let j = ((x - self.points[0]) / self.dx).round() as i64;
                let j = j.clamp(0, self.n as i64 - 1) as usize;
                idx.push(j);
            }
        }
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

/// Compensated (Kahan) summation; keeps parity cancellations at roundoff.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = KahanAcc::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[derive(Default)]
struct KahanAcc {
    sum: f64,
    carry: f64,
}

impl KahanAcc {
    fn new() -> Self {
        Self::default()
    }
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum
    }
}

/// Cached FFT machinery for one periodic grid.
pub struct SpectralOps {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    k: Array1<f64>,
}

impl SpectralOps {
    pub fn new(grid: &Grid) -> Result<Self> {
        let k = grid
            .wavenumbers()
            .ok_or_else(|| Error::Grid("spectral operations need a periodic grid".into()))?
            .clone();
        let mut planner = FftPlanner::new();
        Ok(SpectralOps {
            n: grid.len(),
            fft: planner.plan_fft_forward(grid.len()),
            ifft: planner.plan_fft_inverse(grid.len()),
            k,
        })
    }

    pub fn wavenumbers(&self) -> &Array1<f64> {
        &self.k
    }

    pub fn forward(&self, f: &mut [C64]) {
        self.fft.process(f);
    }

    /// Unnormalized inverse followed by the 1/n scale.
    pub fn inverse(&self, f: &mut [C64]) {
        self.ifft.process(f);
        let scale = 1.0 / self.n as f64;
        for v in f.iter_mut() {
            *v *= scale;
        }
    }

    /// d²f/dx² by spectral multiplier -k².
    pub fn second_derivative(&self, f: &Array1<C64>) -> Array1<C64> {
        let mut buf = f.to_vec();
        self.fft.process(&mut buf);
        for (v, &k) in buf.iter_mut().zip(self.k.iter()) {
            *v *= -k * k;
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        Array1::from_iter(buf.into_iter().map(|v| v * scale))
    }

    /// df/dx by spectral multiplier ik; the Nyquist mode is zeroed, as usual
    /// for odd-order spectral derivatives of real data.
    pub fn first_derivative(&self, f: &Array1<C64>) -> Array1<C64> {
        let mut buf = f.to_vec();
        self.fft.process(&mut buf);
        for (j, v) in buf.iter_mut().enumerate() {
            if j == self.n / 2 {
                *v = C64::new(0.0, 0.0);
            } else {
                *v *= C64::new(0.0, self.k[j]);
            }
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        Array1::from_iter(buf.into_iter().map(|v| v * scale))
    }
}

// 4th-order finite-difference stencils; one-sided closures at the boundary
// rows keep the full order on bounded grids.
const D2_EDGE0: [f64; 6] = [
    45.0 / 12.0,
    -154.0 / 12.0,
    214.0 / 12.0,
    -156.0 / 12.0,
    61.0 / 12.0,
    -10.0 / 12.0,
];
const D2_EDGE1: [f64; 6] = [
    10.0 / 12.0,
    -15.0 / 12.0,
    -4.0 / 12.0,
    14.0 / 12.0,
    -6.0 / 12.0,
    1.0 / 12.0,
];
const D1_EDGE0: [f64; 5] = [
    -25.0 / 12.0,
    48.0 / 12.0,
    -36.0 / 12.0,
    16.0 / 12.0,
    -3.0 / 12.0,
];
const D1_EDGE1: [f64; 5] = [
    -3.0 / 12.0,
    -10.0 / 12.0,
    18.0 / 12.0,
    -6.0 / 12.0,
    1.0 / 12.0,
];

/// 4th-order second derivative on a bounded uniform grid.
pub fn fd4_second_derivative(f: &Array1<C64>, dx: f64) -> Array1<C64> {
    let n = f.len();
    assert!(n >= 6, "FD4 stencils need at least 6 points");
    let s = 1.0 / (dx * dx);
    let mut out = Array1::from_elem(n, C64::new(0.0, 0.0));
    for i in 2..n - 2 {
        out[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2])
            / 12.0
            * s;
    }
    let edge = |w: &[f64; 6], take: &dyn Fn(usize) -> C64| -> C64 {
        w.iter()
            .enumerate()
            .map(|(j, &c)| take(j) * c)
            .sum::<C64>()
            * s
    };
    out[0] = edge(&D2_EDGE0, &|j| f[j]);
    out[1] = edge(&D2_EDGE1, &|j| f[j]);
    out[n - 1] = edge(&D2_EDGE0, &|j| f[n - 1 - j]);
    out[n - 2] = edge(&D2_EDGE1, &|j| f[n - 1 - j]);
    out
}

/// 4th-order first derivative on a bounded uniform grid.
pub fn fd4_first_derivative(f: &Array1<C64>, dx: f64) -> Array1<C64> {
    let n = f.len();
    assert!(n >= 5, "FD4 stencils need at least 5 points");
    let s = 1.0 / dx;
    let mut out = Array1::from_elem(n, C64::new(0.0, 0.0));
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / 12.0 * s;
    }
    let edge = |w: &[f64; 5], take: &dyn Fn(usize) -> C64, sign: f64| -> C64 {
        w.iter()
            .enumerate()
            .map(|(j, &c)| take(j) * c)
            .sum::<C64>()
            * (s * sign)
    };
    out[0] = edge(&D1_EDGE0, &|j| f[j], 1.0);
    out[1] = edge(&D1_EDGE1, &|j| f[j], 1.0);
    out[n - 1] = edge(&D1_EDGE0, &|j| f[n - 1 - j], -1.0);
    out[n - 2] = edge(&D1_EDGE1, &|j| f[n - 1 - j], -1.0);
    out
}

/// Second derivative dispatched on the grid kind.
pub fn second_derivative(grid: &Grid, f: &Array1<C64>) -> Result<Array1<C64>> {
    grid.check_len(f.len())?;
    match grid.kind() {
        GridKind::Periodic => Ok(SpectralOps::new(grid)?.second_derivative(f)),
        GridKind::Bounded => Ok(fd4_second_derivative(f, grid.dx())),
    }
}

/// First derivative dispatched on the grid kind.
pub fn first_derivative(grid: &Grid, f: &Array1<C64>) -> Result<Array1<C64>> {
    grid.check_len(f.len())?;
    match grid.kind() {
        GridKind::Periodic => Ok(SpectralOps::new(grid)?.first_derivative(f)),
        GridKind::Bounded => Ok(fd4_first_derivative(f, grid.dx())),
    }
}

pub fn real_to_complex(f: &Array1<f64>) -> Array1<C64> {
    f.mapv(|v| C64::new(v, 0.0))
}
