//! Periodic grids, field containers and the discrete calculus used by every
//! other module.
//!
//! Storage is row-major with x fastest: the value at column `i`, row `j`
//! lives at `j * nx + i`. Derivatives act line by line; the y direction is
//! handled by transposing into a scratch buffer so both axes share the same
//! one-dimensional kernels.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, lx) x [0, ly)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(Error::Grid(format!("need nx, ny >= 8, got {nx} x {ny}")));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::Grid(format!("lengths must be positive, got {lx} x {ly}")));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// `n x n` grid on the default `2π x 2π` torus.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 2.0 * PI, 2.0 * PI)
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    fn check_same(&self, other: &Grid2) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape(format!("grid {self:?} vs {other:?}")))
        }
    }
}

/// One-dimensional differentiation kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Spectral,
    Central4,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "spectral" => Ok(Scheme::Spectral),
            "central4" => Ok(Scheme::Central4),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Per-axis choice of derivative kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DerivScheme {
    pub x: Scheme,
    pub y: Scheme,
}

impl DerivScheme {
    pub const SPECTRAL: DerivScheme = DerivScheme { x: Scheme::Spectral, y: Scheme::Spectral };
    pub const CENTRAL4: DerivScheme = DerivScheme { x: Scheme::Central4, y: Scheme::Central4 };
}

impl Default for DerivScheme {
    fn default() -> Self {
        Self::SPECTRAL
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Angular wavenumber of FFT bin `m` on a line of `n` points and length `l`.
fn wavenumber(m: usize, n: usize, l: f64) -> f64 {
    let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * PI * m / l
}

fn spectral_line(line: &mut [Complex64], l: f64) {
    let n = line.len();
    let (fwd, inv) = plans(n);
    fwd.process(line);
    let scale = 1.0 / n as f64;
    for (m, c) in line.iter_mut().enumerate() {
        if n % 2 == 0 && m == n / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, wavenumber(m, n, l) * scale);
        }
    }
    inv.process(line);
}

fn central4_line(line: &mut [Complex64], h: f64, scratch: &mut Vec<Complex64>) {
    let n = line.len();
    scratch.clear();
    scratch.extend_from_slice(line);
    let f = |i: isize| scratch[i.rem_euclid(n as isize) as usize];
    let w = 1.0 / (12.0 * h);
    for (i, out) in line.iter_mut().enumerate() {
        let i = i as isize;
        *out = (f(i - 2) - f(i + 2) + 8.0 * (f(i + 1) - f(i - 1))) * w;
    }
}

/// Zero-mean spectral antiderivative of one line; returns the removed mean.
fn antiderivative_line(line: &mut [Complex64], l: f64) -> Complex64 {
    let n = line.len();
    let (fwd, inv) = plans(n);
    fwd.process(line);
    let scale = 1.0 / n as f64;
    let mean = line[0] * scale;
    for (m, c) in line.iter_mut().enumerate() {
        if m == 0 || (n % 2 == 0 && m == n / 2) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, -scale / wavenumber(m, n, l));
        }
    }
    inv.process(line);
    mean
}

fn transpose<T: Copy + Send + Sync>(data: &[T], nx: usize, ny: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(data.len());
    for i in 0..nx {
        for j in 0..ny {
            out.push(data[j * nx + i]);
        }
    }
    out
}

/// Differentiate complex data laid out on `grid` along `axis`.
pub(crate) fn diff_complex(grid: &Grid2, data: &[Complex64], axis: Axis, scheme: Scheme) -> Vec<Complex64> {
    let (line_len, l, h) = match axis {
        Axis::X => (grid.nx, grid.lx, grid.hx()),
        Axis::Y => (grid.ny, grid.ly, grid.hy()),
    };
    let mut work = match axis {
        Axis::X => data.to_vec(),
        Axis::Y => transpose(data, grid.nx, grid.ny),
    };
    work.par_chunks_mut(line_len).for_each_init(Vec::new, |scratch, line| match scheme {
        Scheme::Spectral => spectral_line(line, l),
        Scheme::Central4 => central4_line(line, h, scratch),
    });
    match axis {
        Axis::X => work,
        Axis::Y => transpose(&work, grid.ny, grid.nx),
    }
}

fn diff_real(grid: &Grid2, data: &[f64], axis: Axis, scheme: Scheme) -> Vec<f64> {
    let c: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    diff_complex(grid, &c, axis, scheme).into_iter().map(|z| z.re).collect()
}

/// Scalar field with one real value per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2,
    pub data: Vec<f64>,
}

/// Complex field with one complex value per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub grid: Grid2,
    pub data: Vec<Complex64>,
}

/// Three-component real vector field, components interleaved per point.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField3 {
    pub grid: Grid2,
    pub data: Vec<[f64; 3]>,
}

/// Common behaviour of the field containers.
pub trait Field: Sized + Clone {
    fn grid(&self) -> &Grid2;
    fn all_finite(&self) -> bool;
    /// Unchecked derivative along `axis`.
    fn deriv(&self, axis: Axis, scheme: Scheme) -> Self;
    /// Largest absolute entry.
    fn max_abs(&self) -> f64;

    fn dx(&self, s: DerivScheme) -> Self {
        self.deriv(Axis::X, s.x)
    }

    fn dy(&self, s: DerivScheme) -> Self {
        self.deriv(Axis::Y, s.y)
    }
}

impl Field for ScalarField {
    fn grid(&self) -> &Grid2 {
        &self.grid
    }
    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
    fn deriv(&self, axis: Axis, scheme: Scheme) -> Self {
        Self { grid: self.grid, data: diff_real(&self.grid, &self.data, axis, scheme) }
    }
    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Field for ComplexField {
    fn grid(&self) -> &Grid2 {
        &self.grid
    }
    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
    fn deriv(&self, axis: Axis, scheme: Scheme) -> Self {
        Self { grid: self.grid, data: diff_complex(&self.grid, &self.data, axis, scheme) }
    }
    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

impl Field for VectorField3 {
    fn grid(&self) -> &Grid2 {
        &self.grid
    }
    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.iter().all(|c| c.is_finite()))
    }
    fn deriv(&self, axis: Axis, scheme: Scheme) -> Self {
        // Pack two components into one complex line, the third alone.
        let g = &self.grid;
        let ab: Vec<Complex64> = self.data.iter().map(|v| Complex64::new(v[0], v[1])).collect();
        let c: Vec<Complex64> = self.data.iter().map(|v| Complex64::new(v[2], 0.0)).collect();
        let dab = diff_complex(g, &ab, axis, scheme);
        let dc = diff_complex(g, &c, axis, scheme);
        let data = dab.iter().zip(&dc).map(|(p, q)| [p.re, p.im, q.re]).collect();
        Self { grid: *g, data }
    }
    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(norm3(v)))
    }
}

/// Checked x-derivative.
pub fn ddx<F: Field>(f: &F, scheme: DerivScheme) -> Result<F> {
    if !f.all_finite() {
        return Err(Error::NonFinite("ddx"));
    }
    Ok(f.dx(scheme))
}

/// Checked y-derivative.
pub fn ddy<F: Field>(f: &F, scheme: DerivScheme) -> Result<F> {
    if !f.all_finite() {
        return Err(Error::NonFinite("ddy"));
    }
    Ok(f.dy(scheme))
}

/// Result of [`inv_dx`]: the zero-mean antiderivative and the per-row means
/// that had to be discarded to make it periodic.
#[derive(Clone, Debug)]
pub struct Antiderivative {
    pub field: ScalarField,
    pub row_means: Vec<f64>,
}

impl Antiderivative {
    /// Largest discarded mean, a measure of the solvability violation.
    pub fn max_mean(&self) -> f64 {
        self.row_means.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Periodic antiderivative in x with zero mean on every row.
pub fn inv_dx(f: &ScalarField) -> Result<Antiderivative> {
    if !f.all_finite() {
        return Err(Error::NonFinite("inv_dx"));
    }
    Ok(inv_dx_unchecked(f))
}

pub(crate) fn inv_dx_unchecked(f: &ScalarField) -> Antiderivative {
    let g = f.grid;
    let mut work: Vec<Complex64> = f.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let row_means: Vec<f64> = work
        .par_chunks_mut(g.nx)
        .map(|line| antiderivative_line(line, g.lx).re)
        .collect();
    let field = ScalarField { grid: g, data: work.into_iter().map(|z| z.re).collect() };
    Antiderivative { field, row_means }
}

/// Zero-mean periodic antiderivative of samples of a function of one
/// variable on `[0, l)`; returns the antiderivative and the removed mean.
pub fn inv_d_line(values: &[f64], l: f64) -> (Vec<f64>, f64) {
    let mut work: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mean = antiderivative_line(&mut work, l).re;
    (work.into_iter().map(|z| z.re).collect(), mean)
}

/// Periodic trapezoid quadrature `hx * hy * Σ f`.
pub fn integrate2(f: &ScalarField) -> f64 {
    f.grid.hx() * f.grid.hy() * f.data.iter().sum::<f64>()
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Inner product with metric `diag(1, 1, beta)`.
pub fn dot_eta(beta: f64, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + beta * a[2] * b[2]
}

/// Wedge product compatible with [`dot_eta`]: `diag(1, 1, beta) (a x b)`.
pub fn wedge_eta(beta: f64, a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    let c = cross3(a, b);
    [c[0], c[1], beta * c[2]]
}

impl ScalarField {
    pub fn zeros(grid: Grid2) -> Self {
        Self { grid, data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid2, v: f64) -> Self {
        Self { grid, data: vec![v; grid.len()] }
    }

    pub fn from_data(grid: Grid2, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!("expected {} values, got {}", grid.len(), data.len())));
        }
        Ok(Self { grid, data })
    }

    /// Sample `f(x, y)` at the grid points.
    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                data.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid, data }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.grid.nx..(j + 1) * self.grid.nx]
    }

    /// Mean over x of every row.
    pub fn mean_x(&self) -> Vec<f64> {
        (0..self.grid.ny).map(|j| self.row(j).iter().sum::<f64>() / self.grid.nx as f64).collect()
    }

    /// Subtract the x-mean of every row.
    pub fn remove_mean_x(&self) -> Self {
        let means = self.mean_x();
        let nx = self.grid.nx;
        let data = self.data.iter().enumerate().map(|(n, v)| v - means[n / nx]).collect();
        Self { grid: self.grid, data }
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField { grid: self.grid, data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    pub fn check_grid(&self, other: &Grid2) -> Result<()> {
        self.grid.check_same(other)
    }
}

impl ComplexField {
    pub fn zeros(grid: Grid2) -> Self {
        Self { grid, data: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                data.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, data }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid, data }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn re(&self) -> ScalarField {
        ScalarField { grid: self.grid, data: self.data.iter().map(|z| z.re).collect() }
    }

    pub fn im(&self) -> ScalarField {
        ScalarField { grid: self.grid, data: self.data.iter().map(|z| z.im).collect() }
    }

    pub fn mul_real(&self, s: &ScalarField) -> Self {
        debug_assert_eq!(self.grid, s.grid);
        let data = self.data.iter().zip(&s.data).map(|(&a, &b)| a * b).collect();
        Self { grid: self.grid, data }
    }

    pub fn max_dist(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl VectorField3 {
    pub fn constant(grid: Grid2, v: [f64; 3]) -> Self {
        Self { grid, data: vec![v; grid.len()] }
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                data.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, data }
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField { grid: self.grid, data: self.data.iter().map(|v| v[c]).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&[f64; 3], &[f64; 3]) -> [f64; 3]) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect();
        Self { grid: self.grid, data }
    }

    /// Pointwise inner product under the metric `diag(1, 1, beta)`.
    pub fn dot(&self, other: &Self, beta: f64) -> ScalarField {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| dot_eta(beta, a, b)).collect();
        ScalarField { grid: self.grid, data }
    }

    pub fn wedge(&self, other: &Self, beta: f64) -> Self {
        self.zip_map(other, |a, b| wedge_eta(beta, a, b))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|a| [s * a[0], s * a[1], s * a[2]]).collect() }
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> Self {
        debug_assert_eq!(self.grid, s.grid);
        let data = self.data.iter().zip(&s.data).map(|(a, &w)| [w * a[0], w * a[1], w * a[2]]).collect();
        Self { grid: self.grid, data }
    }

    pub fn max_dist(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| {
            m.max(norm3(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> Grid2 {
        Grid2::square(n).unwrap()
    }

    #[test]
    fn grid_rejects_small_or_bad() {
        assert!(Grid2::new(4, 16, 1.0, 1.0).is_err());
        assert!(Grid2::new(16, 16, 0.0, 1.0).is_err());
        assert!(Grid2::new(16, 16, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn derivative_of_zero_is_zero() {
        let f = ScalarField::zeros(g(16));
        assert_eq!(ddx(&f, DerivScheme::SPECTRAL).unwrap().max_abs(), 0.0);
        assert_eq!(ddy(&f, DerivScheme::CENTRAL4).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn spectral_sine_derivative() {
        let grid = Grid2::new(32, 16, 3.0, 5.0).unwrap();
        let w = 2.0 * PI / grid.lx;
        let f = ScalarField::from_fn(grid, |x, _| (w * x).sin());
        let exact = ScalarField::from_fn(grid, |x, _| w * (w * x).cos());
        let err = ddx(&f, DerivScheme::SPECTRAL).unwrap().sub(&exact).max_abs();
        assert!(err < 1e-10, "{err}");
        let wy = 2.0 * PI / grid.ly;
        let fy = ScalarField::from_fn(grid, |_, y| (wy * y).sin());
        let ey = ScalarField::from_fn(grid, |_, y| wy * (wy * y).cos());
        assert!(ddy(&fy, DerivScheme::SPECTRAL).unwrap().sub(&ey).max_abs() < 1e-10);
    }

    #[test]
    fn central4_converges_at_fourth_order() {
        let err = |n: usize| {
            let grid = g(n);
            let f = ScalarField::from_fn(grid, |x, _| x.sin());
            let exact = ScalarField::from_fn(grid, |x, _| x.cos());
            ddx(&f, DerivScheme::CENTRAL4).unwrap().sub(&exact).max_abs()
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 16.0).abs() < 2.0, "{ratio}");
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut f = ScalarField::zeros(g(8));
        f.data[3] = f64::NAN;
        assert!(matches!(ddx(&f, DerivScheme::SPECTRAL), Err(Error::NonFinite(_))));
        assert!(inv_dx(&f).is_err());
    }

    #[test]
    fn inv_dx_examples() {
        let grid = Grid2::new(32, 8, 3.0, 1.0).unwrap();
        let z = inv_dx(&ScalarField::zeros(grid)).unwrap();
        assert_eq!(z.field.max_abs(), 0.0);
        assert_eq!(z.max_mean(), 0.0);

        let w = 2.0 * PI / grid.lx;
        let f = ScalarField::from_fn(grid, |x, _| (w * x).cos());
        let exact = ScalarField::from_fn(grid, |x, _| (w * x).sin() / w);
        assert!(inv_dx(&f).unwrap().field.sub(&exact).max_abs() < 1e-12);

        let one = inv_dx(&ScalarField::constant(grid, 1.0)).unwrap();
        assert!(one.field.max_abs() < 1e-14);
        assert!(one.row_means.iter().all(|m| (m - 1.0).abs() < 1e-14));
    }

    #[test]
    fn integrate2_examples() {
        let grid = g(16);
        assert!((integrate2(&ScalarField::constant(grid, 1.0)) - 4.0 * PI * PI).abs() < 1e-12);
        assert!(integrate2(&ScalarField::from_fn(grid, |x, _| x.sin())).abs() < 1e-12);
        let unit = Grid2::new(16, 16, 1.0, 1.0).unwrap();
        let s2 = ScalarField::from_fn(unit, |x, _| (2.0 * PI * x).sin().powi(2));
        assert!((integrate2(&s2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vector_derivative_matches_components() {
        let grid = g(16);
        let v = VectorField3::from_fn(grid, |x, y| [x.sin() * y.cos(), (2.0 * x).cos(), (x + y).sin()]);
        let d = v.dy(DerivScheme::SPECTRAL);
        for c in 0..3 {
            let dc = v.component(c).dy(DerivScheme::SPECTRAL);
            assert!(d.component(c).sub(&dc).max_abs() < 1e-13);
        }
    }

    #[test]
    fn wedge_is_eta_orthogonal() {
        for beta in [1.0, -1.0] {
            let a = [0.3, -1.2, 0.7];
            let b = [2.0, 0.1, -0.4];
            let w = wedge_eta(beta, &a, &b);
            assert!(dot_eta(beta, &a, &w).abs() < 1e-15);
            assert!(dot_eta(beta, &b, &w).abs() < 1e-15);
        }
    }
}
