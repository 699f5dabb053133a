//! 2x2 complex matrix fields, the Pauli algebra, Lax connections for both
//! sides of the correspondence, zero-curvature residuals and the
//! nonisospectral λ-flow.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{diff_complex, Axis, ComplexField, DerivScheme, Field, Grid2, ScalarField, VectorField3};
use crate::frames::{FrameCoeffs, Triple};
use crate::nls_dynamics::{NlsParams, NlsState};
use crate::spin_dynamics::{SpinParams, SpinState};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Complex 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [Complex64; 4]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([ZERO; 4]);
    pub const IDENTITY: Mat2 = Mat2([ONE, ZERO, ZERO, ONE]);

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([a, b, c, d])
    }

    pub fn scale(self, s: Complex64) -> Self {
        Mat2(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0] + self.0[3]
    }

    pub fn dagger(&self) -> Self {
        let [a, b, c, d] = self.0;
        Mat2([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    pub fn commutator(self, other: Mat2) -> Mat2 {
        self * other - other * self
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2(self.0.map(|z| -z))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Mat2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

impl Mul<Complex64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: Complex64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2(self.0.map(|z| z * s))
    }
}

/// Pauli matrix `σ_j`, `j ∈ {1, 2, 3}`.
pub fn pauli(j: usize) -> Mat2 {
    match j {
        1 => Mat2([ZERO, ONE, ONE, ZERO]),
        2 => Mat2([ZERO, -I, I, ZERO]),
        3 => Mat2([ONE, ZERO, ZERO, -ONE]),
        _ => panic!("Pauli index must be 1, 2 or 3, got {j}"),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PauliReport {
    pub checks: Vec<(String, bool)>,
}

impl PauliReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// Exact checks of `σ_j² = I` and `σ_a σ_b = i ε_abc σ_c`.
pub fn pauli_identities() -> PauliReport {
    let mut checks = Vec::new();
    for j in 1..=3 {
        checks.push((format!("s{j}^2 = I"), pauli(j) * pauli(j) == Mat2::IDENTITY));
    }
    for (a, b, c) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
        checks.push((format!("s{a}s{b} = i s{c}"), pauli(a) * pauli(b) == pauli(c) * I));
        checks.push((format!("s{b}s{a} = -i s{c}"), pauli(b) * pauli(a) == pauli(c) * -I));
    }
    PauliReport { checks }
}

/// Field of 2x2 matrices on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat2Field {
    pub grid: Grid2,
    pub data: Vec<Mat2>,
}

impl Mat2Field {
    pub fn constant(grid: Grid2, m: Mat2) -> Self {
        Self { grid, data: vec![m; grid.len()] }
    }

    pub fn from_entries(e: [&ComplexField; 4]) -> Self {
        let grid = e[0].grid;
        let data = (0..grid.len()).map(|n| Mat2(std::array::from_fn(|k| e[k].data[n]))).collect();
        Self { grid, data }
    }

    pub fn entry(&self, k: usize) -> ComplexField {
        ComplexField { grid: self.grid, data: self.data.iter().map(|m| m.0[k]).collect() }
    }

    pub fn deriv(&self, axis: Axis, scheme: DerivScheme) -> Self {
        let s = match axis {
            Axis::X => scheme.x,
            Axis::Y => scheme.y,
        };
        let parts: Vec<Vec<Complex64>> =
            (0..4).map(|k| diff_complex(&self.grid, &self.entry(k).data, axis, s)).collect();
        let data = (0..self.grid.len()).map(|n| Mat2(std::array::from_fn(|k| parts[k][n]))).collect();
        Self { grid: self.grid, data }
    }

    pub fn zip_map(&self, o: &Self, f: impl Fn(Mat2, Mat2) -> Mat2) -> Self {
        Self { grid: self.grid, data: self.data.iter().zip(&o.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn map(&self, f: impl Fn(Mat2) -> Mat2) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|&a| f(a)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.max_abs()))
    }

    pub fn max_trace(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.trace().norm()))
    }
}

/// `Λ = cλ² + dλ`.
pub fn lambda_poly(c: f64, d: f64, lambda: Complex64) -> Complex64 {
    c * lambda * lambda + d * lambda
}

/// q-side connection:
///
/// ```text
/// U  = i[Λ σ3 + (2cλ + d) Q],  Q = [[0, q], [p, 0]]
/// V  = λ² B2 + λ B1 + B0
/// B2 = -4ic² v σ3
/// B1 = -4icd v σ3 + 2c σ3 Q_y - 8ic² v Q
/// B0 = -id² v σ3 + d σ3 Q_y - 4icd v Q
/// ```
///
/// `B0` is the closed form of `(d/2c) B1 - (d²/4c²) B2`, which stays
/// regular at `c = 0`. `v` is the full field including any background.
pub fn build_lax_q(
    q: &ComplexField,
    p: &ComplexField,
    v: &ScalarField,
    par: &NlsParams,
    lambda: Complex64,
) -> (Mat2Field, Mat2Field) {
    let (c, d) = (par.c, par.d);
    let lam_poly = lambda_poly(c, d, lambda);
    let a = 2.0 * c * lambda + d;
    let qy = q.dy(par.scheme);
    let py = p.dy(par.scheme);
    let s3 = pauli(3);
    let mut u = Vec::with_capacity(q.data.len());
    let mut w = Vec::with_capacity(q.data.len());
    for n in 0..q.data.len() {
        let qm = Mat2([ZERO, q.data[n], p.data[n], ZERO]);
        let qym = Mat2([ZERO, qy.data[n], py.data[n], ZERO]);
        let vn = v.data[n];
        u.push((s3 * lam_poly + qm * a) * I);
        let b2 = s3 * (-4.0 * I * c * c * vn);
        let b1 = s3 * (-4.0 * I * c * d * vn) + s3 * qym * (2.0 * c) + qm * (-8.0 * I * c * c * vn);
        let b0 = s3 * (-I * d * d * vn) + s3 * qym * d + qm * (-4.0 * I * c * d * vn);
        w.push(b2 * (lambda * lambda) + b1 * lambda + b0);
    }
    (Mat2Field { grid: q.grid, data: u }, Mat2Field { grid: q.grid, data: w })
}

/// `U_t - 2Λ U_y - V_x + [U, V]` with `U_t` supplied.
pub fn zero_curvature_residual(
    u_t: &Mat2Field,
    u: &Mat2Field,
    v: &Mat2Field,
    lam_poly: Complex64,
    scheme: DerivScheme,
) -> Mat2Field {
    let uy = u.deriv(Axis::Y, scheme);
    let vx = v.deriv(Axis::X, scheme);
    let data = (0..u.data.len())
        .map(|n| u_t.data[n] - uy.data[n] * (2.0 * lam_poly) - vx.data[n] + u.data[n].commutator(v.data[n]))
        .collect();
    Mat2Field { grid: u.grid, data }
}

/// Zero-curvature residual of the q-side pair on the middle of three slices
/// `t - span/2`, `t`, `t + span/2` (so `U_t ≈ (U_next - U_prev)/span`).
pub fn zero_curvature_q(
    prev: &NlsState,
    mid: &NlsState,
    next: &NlsState,
    span: f64,
    par: &NlsParams,
    lambda: Complex64,
) -> f64 {
    let build = |s: &NlsState| build_lax_q(&s.q, &s.p, &s.v_total(par), par, lambda);
    let (u0, _) = build(prev);
    let (u2, _) = build(next);
    let (u1, v1) = build(mid);
    let ut = u0.zip_map(&u2, |a, b| (b - a) * (1.0 / span));
    zero_curvature_residual(&ut, &u1, &v1, lambda_poly(par.c, par.d, lambda), par.scheme).max_abs()
}

/// Frame connection `(1/2i) [[r, p - iq], [β(p + iq), -r]]` for a
/// coefficient triple `(p, q, r)`; `(k, σ, τ)` gives U, `(m3, m2, m1)`
/// gives V and `(ω3, ω2, ω1)` gives W.
pub fn frame_connection(t: &Triple, beta: f64) -> Mat2Field {
    let h = Complex64::new(0.0, -0.5);
    let data = (0..t.p.data.len())
        .map(|n| {
            let (p, q, r) = (t.p.data[n], t.q.data[n], t.r.data[n]);
            Mat2([
                h * r,
                h * Complex64::new(p, -q),
                h * beta * Complex64::new(p, q),
                -h * r,
            ])
        })
        .collect();
    Mat2Field { grid: t.p.grid, data }
}

/// `X_b - Y_a + [X, Y]` for 2x2 connections.
pub fn compat2(x: &Mat2Field, x_b: &Mat2Field, y: &Mat2Field, y_a: &Mat2Field) -> Mat2Field {
    let data = (0..x.data.len())
        .map(|n| x_b.data[n] - y_a.data[n] + x.data[n].commutator(y.data[n]))
        .collect();
    Mat2Field { grid: x.grid, data }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FrameZcReport {
    pub uv: f64,
    pub uw: Option<f64>,
    pub vw: Option<f64>,
}

/// `U_y - V_x + [U, V]`, `U_t - W_x + [U, W]`, `V_t - W_y + [V, W]` for the
/// frame connections; `rates` holds time derivatives of the coefficients.
pub fn frame_zero_curvature(
    coeffs: &FrameCoeffs,
    rates: Option<&FrameCoeffs>,
    scheme: DerivScheme,
    beta: f64,
) -> FrameZcReport {
    let u = frame_connection(&coeffs.x_triple(), beta);
    let v = frame_connection(&coeffs.y_triple(), beta);
    let uv = compat2(&u, &u.deriv(Axis::Y, scheme), &v, &v.deriv(Axis::X, scheme)).max_abs();
    let mut r = FrameZcReport { uv, ..Default::default() };
    if let Some(rt) = rates {
        let w = frame_connection(&coeffs.t_triple(), beta);
        let ut = frame_connection(&rt.x_triple(), beta);
        let vt = frame_connection(&rt.y_triple(), beta);
        r.uw = Some(compat2(&u, &ut, &w, &w.deriv(Axis::X, scheme)).max_abs());
        r.vw = Some(compat2(&v, &vt, &w, &w.deriv(Axis::Y, scheme)).max_abs());
    }
    r
}

/// Grouping of the ambiguous bracket in the spin-side `F1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum F1Reading {
    /// `S((S S_x)_y - [S S_x, B])`.
    Grouped,
    /// `S(S S_x)_y - [S S_x, B]`. The resulting `V'` is not traceless: its
    /// trace is a λ-dependent multiple of `S.(S_x ^ S_y)`.
    Split,
}

/// Spin matrix `S1 σ1 + S2 σ2 + √β S3 σ3`, so that `S² = β I`.
pub fn spin_matrix(s: &[f64; 3], beta: f64) -> Mat2 {
    let s3 = if beta > 0.0 { Complex64::new(s[2], 0.0) } else { I * s[2] };
    pauli(1) * s[0] + pauli(2) * s[1] + pauli(3) * s3
}

fn spin_matrix_field(s: &VectorField3, beta: f64) -> Mat2Field {
    Mat2Field { grid: s.grid, data: s.data.iter().map(|a| spin_matrix(a, beta)).collect() }
}

/// Spin-side connection, built term by term:
///
/// ```text
/// U' = [ic(λ² - l²) + id(λ - l)] S + c(λ - l)/(2cλ + d) S S_x
/// V' = [2c(λ² - l²) + 2d(λ - l)] B + λ² F2 + λ F1 + F0
/// F2 = -4ic² v S
/// F1 = -4icd v S - 4c² v/(2cl + d) S S_x - ic/(2cl + d) (bracket)
/// F0 = -l F1 - l² F2,   B = ([S, S_y] + 2iu S)/4
/// ```
pub fn build_lax_spin(
    s: &VectorField3,
    u: &ScalarField,
    v: &ScalarField,
    par: &SpinParams,
    lambda: Complex64,
    reading: F1Reading,
) -> Result<(Mat2Field, Mat2Field)> {
    let (c, d, l) = (par.c, par.d, par.l);
    let den_lambda = 2.0 * c * lambda + d;
    if den_lambda.norm() < 1e-12 {
        return Err(Error::Param("2cλ + d vanishes".into()));
    }
    let den_l = 2.0 * c * l + d;
    if den_l.abs() < 1e-12 {
        return Err(Error::Param("2cl + d vanishes".into()));
    }
    let sc = par.scheme;
    let sm = spin_matrix_field(s, par.beta);
    let sx = sm.deriv(Axis::X, sc);
    let sy = sm.deriv(Axis::Y, sc);
    let ssx = sm.zip_map(&sx, |a, b| a * b);
    let ssx_y = ssx.deriv(Axis::Y, sc);
    let n = s.data.len();
    let lam2 = lambda * lambda;
    let cu = I * c * (lam2 - l * l) + I * d * (lambda - l);
    let cs = c * (lambda - l) / den_lambda;
    let cb = 2.0 * c * (lam2 - l * l) + 2.0 * d * (lambda - l);
    let mut up = Vec::with_capacity(n);
    let mut vp = Vec::with_capacity(n);
    for k in 0..n {
        let (sk, ssxk) = (sm.data[k], ssx.data[k]);
        let (uk, vk) = (u.data[k], v.data[k]);
        let b = (sk.commutator(sy.data[k]) + sk * (2.0 * I * uk)) * 0.25;
        let bracket = match reading {
            F1Reading::Grouped => sk * (ssx_y.data[k] - ssxk.commutator(b)),
            F1Reading::Split => sk * ssx_y.data[k] - ssxk.commutator(b),
        };
        let f2 = sk * (-4.0 * I * c * c * vk);
        let f1 = sk * (-4.0 * I * c * d * vk) + ssxk * (-4.0 * c * c * vk / den_l) + bracket * (-I * c / den_l);
        let f0 = f1 * (-l) + f2 * (-l * l);
        up.push(sk * cu + ssxk * cs);
        vp.push(b * cb + f2 * lam2 + f1 * lambda + f0);
    }
    Ok((Mat2Field { grid: s.grid, data: up }, Mat2Field { grid: s.grid, data: vp }))
}

/// Diagnostic `U'_t + 2Λ U'_y - V'_x + [U', V']` on the middle of three
/// spin slices; not expected to vanish for either bracket reading.
pub fn spin_zero_curvature(
    prev: &SpinState,
    mid: &SpinState,
    next: &SpinState,
    span: f64,
    par: &SpinParams,
    lambda: Complex64,
    reading: F1Reading,
) -> Result<f64> {
    let build = |st: &SpinState| build_lax_spin(&st.s, &st.u, &st.v, par, lambda, reading);
    let (u0, _) = build(prev)?;
    let (u2, _) = build(next)?;
    let (u1, v1) = build(mid)?;
    let ut = u0.zip_map(&u2, |a, b| (b - a) * (1.0 / span));
    let r = zero_curvature_residual(&ut, &u1, &v1, -lambda_poly(par.c, par.d, lambda), par.scheme);
    Ok(r.max_abs())
}

/// Right-hand side of `λ_t = 2(cλ² + dλ) λ_y`.
pub fn lambda_rhs(lambda: Complex64, lambda_y: Complex64, c: f64, d: f64) -> Complex64 {
    2.0 * lambda_poly(c, d, lambda) * lambda_y
}

/// Parameters of the closed-form λ-flow `λ = ((y + cc)/(a - k t))^{1/n}`,
/// which solves `λ_t = k λ^n λ_y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaFlow {
    pub n: f64,
    pub k: f64,
    pub a: f64,
    pub cc: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LambdaSample {
    pub y: f64,
    pub t: f64,
    pub lambda: [f64; 2],
    pub analytic: f64,
    pub fd: f64,
}

impl LambdaFlow {
    fn base(&self, t: f64) -> Result<f64> {
        let den = self.a - self.k * t;
        if den.abs() < 1e-10 {
            return Err(Error::Pole(den.abs()));
        }
        Ok(den)
    }

    /// Principal-branch solution.
    pub fn value(&self, y: f64, t: f64) -> Result<Complex64> {
        let den = self.base(t)?;
        let z = Complex64::new((y + self.cc) / den, 0.0);
        Ok(if z.norm() == 0.0 { z } else { z.powf(1.0 / self.n) })
    }

    /// Closed-form `(λ_y, λ_t)`.
    pub fn partials(&self, y: f64, t: f64) -> Result<(Complex64, Complex64)> {
        let den = self.base(t)?;
        let z = Complex64::new((y + self.cc) / den, 0.0);
        let zp = z.powf(1.0 / self.n - 1.0) / self.n;
        Ok((zp / den, zp * (y + self.cc) * self.k / (den * den)))
    }

    /// `|λ_t - k λ^n λ_y|` from the closed-form partials.
    pub fn analytic_residual(&self, y: f64, t: f64) -> Result<f64> {
        let lam = self.value(y, t)?;
        let (ly, lt) = self.partials(y, t)?;
        Ok((lt - self.k * lam.powf(self.n) * ly).norm())
    }

    /// Same residual with second-order central differences of step `h`.
    pub fn fd_residual(&self, y: f64, t: f64, h: f64) -> Result<f64> {
        let lam = self.value(y, t)?;
        let ly = (self.value(y + h, t)? - self.value(y - h, t)?) / (2.0 * h);
        let lt = (self.value(y, t + h)? - self.value(y, t - h)?) / (2.0 * h);
        Ok((lt - self.k * lam.powf(self.n) * ly).norm())
    }

    pub fn sample(&self, y: f64, t: f64, h: f64) -> Result<LambdaSample> {
        let lam = self.value(y, t)?;
        Ok(LambdaSample {
            y,
            t,
            lambda: [lam.re, lam.im],
            analytic: self.analytic_residual(y, t)?,
            fd: self.fd_residual(y, t, h)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_suite() {
        let r = pauli_identities();
        assert!(r.all_pass(), "{:?}", r.checks);
        assert_eq!(pauli(1) * pauli(2), pauli(3) * I);
        assert_eq!(pauli(3) * pauli(2), pauli(1) * -I);
        for j in 1..=3 {
            assert_eq!(pauli(j).trace(), ZERO);
        }
    }

    #[test]
    fn lax_q_trivial_and_entries() {
        let g = Grid2::square(16).unwrap();
        let par = NlsParams::m3q(0.4, 0.7).unwrap();
        let lam = Complex64::new(0.3, 0.1);
        let z = ComplexField::zeros(g);
        let (u, v) = build_lax_q(&z, &z, &ScalarField::zeros(g), &par, lam);
        let expect = pauli(3) * (I * lambda_poly(0.4, 0.7, lam));
        assert!(u.data.iter().all(|m| (*m - expect).max_abs() < 1e-15));
        assert_eq!(v.max_abs(), 0.0);

        let q = crate::init::periodic_packet(g, 0.5, 0.9, 1);
        let p = q.conj();
        let vv = crate::nls_dynamics::solve_v_nls(&q, &p, par.scheme).unwrap().v;
        let (u, v) = build_lax_q(&q, &p, &vv, &par, lam);
        let a = I * (2.0 * 0.4 * lam + 0.7);
        for n in 0..g.len() {
            assert!((u.data[n].0[1] - a * q.data[n]).norm() < 1e-14);
            assert!((u.data[n].0[2] - a * p.data[n]).norm() < 1e-14);
        }
        assert!(u.max_trace() < 1e-12 && v.max_trace() < 1e-12);
    }

    #[test]
    fn b0_matches_general_formula_for_nonzero_c() {
        let g = Grid2::square(16).unwrap();
        let (c, d) = (0.6, 0.9);
        let par = NlsParams::m3q(c, d).unwrap();
        let q = crate::init::periodic_packet(g, 0.5, 0.9, 1);
        let p = q.conj();
        let vv = crate::nls_dynamics::solve_v_nls(&q, &p, par.scheme).unwrap().v;
        // V(λ) = λ²B2 + λB1 + B0: recover the coefficients from three λ.
        let v_at = |l: f64| build_lax_q(&q, &p, &vv, &par, Complex64::new(l, 0.0)).1;
        let (v0, v1, vm) = (v_at(0.0), v_at(1.0), v_at(-1.0));
        for n in 0..g.len() {
            let b0 = v0.data[n];
            let b2 = (v1.data[n] + vm.data[n]) * 0.5 - b0;
            let b1 = (v1.data[n] - vm.data[n]) * 0.5;
            let rebuilt = b1 * (d / (2.0 * c)) - b2 * (d * d / (4.0 * c * c));
            assert!((rebuilt - b0).max_abs() < 1e-12);
        }
    }

    #[test]
    fn frame_connection_trivial() {
        let g = Grid2::square(16).unwrap();
        let z = ScalarField::zeros(g);
        let c = FrameCoeffs {
            k: z.clone(),
            sigma: z.clone(),
            tau: z.clone(),
            m1: z.clone(),
            m2: z.clone(),
            m3: z.clone(),
            w1: z.clone(),
            w2: z.clone(),
            w3: z,
        };
        let r = frame_zero_curvature(&c, Some(&c), DerivScheme::SPECTRAL, 1.0);
        assert_eq!((r.uv, r.uw, r.vw), (0.0, Some(0.0), Some(0.0)));
    }

    #[test]
    fn constant_diagonal_pair_has_zero_residual() {
        let g = Grid2::square(16).unwrap();
        let u = Mat2Field::constant(g, pauli(3) * Complex64::new(0.2, 0.5));
        let v = Mat2Field::constant(g, pauli(3) * Complex64::new(-1.0, 0.3));
        let ut = Mat2Field::constant(g, Mat2::ZERO);
        let r = zero_curvature_residual(&ut, &u, &v, Complex64::new(0.7, 0.0), DerivScheme::SPECTRAL);
        assert!(r.max_abs() < 1e-15);
    }

    #[test]
    fn spin_lax_structure() {
        let g = Grid2::square(128).unwrap();
        let s = crate::init::modulated_helix(g, &crate::init::HelixParams::default());
        for a in &s.data {
            let m = spin_matrix(a, 1.0);
            assert!((m * m - Mat2::IDENTITY).max_abs() < 1e-14);
        }
        let h = crate::init::hyperbolic_smooth_spin(g, 4, 0.5);
        for a in &h.data {
            let m = spin_matrix(a, -1.0);
            assert!((m * m + Mat2::IDENTITY).max_abs() < 1e-12);
        }
        let par = SpinParams::m3(0.3, 1.0, 0.4).unwrap();
        let st = SpinState::new(s.clone(), &par).unwrap();
        for reading in [F1Reading::Grouped, F1Reading::Split] {
            let (u, v) = build_lax_spin(&s, &st.u, &st.v, &par, Complex64::new(0.4, 0.0), reading).unwrap();
            // At λ = l both brackets of U' and all of V' vanish.
            assert!(u.max_abs() < 1e-14);
            assert!(v.max_abs() < 1e-13);
            let (u, _) = build_lax_spin(&s, &st.u, &st.v, &par, Complex64::new(0.9, 0.2), reading).unwrap();
            assert!(u.max_trace() < 1e-12);
        }
        let sy = spin_matrix_field(&s, 1.0).deriv(Axis::Y, par.scheme);
        let sm = spin_matrix_field(&s, 1.0);
        for n in 0..g.len() {
            assert!(sm.data[n].commutator(sy.data[n]).trace().norm() < 1e-13);
        }
        let z = VectorField3::constant(g, [0.0, 0.0, 1.0]);
        let zero = ScalarField::zeros(g);
        let (u, _) = build_lax_spin(&z, &zero, &zero, &par, Complex64::new(0.4, 0.0), F1Reading::Grouped).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        let bad = SpinParams::m3(0.5, 1.0, 0.0).unwrap();
        assert!(build_lax_spin(&z, &zero, &zero, &bad, Complex64::new(-1.0, 0.0), F1Reading::Split).is_err());
    }

    #[test]
    fn lambda_flow_cases() {
        let m1 = LambdaFlow { n: 1.0, k: 2.0, a: 3.0, cc: 0.5 };
        assert!(m1.analytic_residual(0.7, 0.2).unwrap() < 1e-12);
        let v = m1.value(0.7, 0.2).unwrap();
        assert!((v - Complex64::new(1.2 / 2.6, 0.0)).norm() < 1e-15);
        assert!(matches!(m1.value(0.0, 1.5), Err(Error::Pole(_))));
        let m2 = LambdaFlow { n: 2.0, k: 0.8, a: 2.0, cc: 1.0 };
        let e1 = m2.fd_residual(0.3, 0.4, 1e-2).unwrap();
        let e2 = m2.fd_residual(0.3, 0.4, 5e-3).unwrap();
        assert!((e1 / e2 - 4.0).abs() < 0.3, "{}", e1 / e2);
        assert_eq!(lambda_rhs(ZERO, Complex64::new(1.0, 0.0), 0.5, 1.0), ZERO);
        // M-I: c = 0, d = 1 gives k = 2; M-II: d = 0 gives k = 2c with n = 2.
        let lam = m1.value(0.1, 0.3).unwrap();
        let (ly, lt) = m1.partials(0.1, 0.3).unwrap();
        assert!((lambda_rhs(lam, ly, 0.0, 1.0) - lt).norm() < 1e-12);
        let c = 0.4;
        let m2c = LambdaFlow { n: 2.0, k: 2.0 * c, a: 2.0, cc: 1.0 };
        let lam = m2c.value(0.1, 0.3).unwrap();
        let (ly, lt) = m2c.partials(0.1, 0.3).unwrap();
        assert!((lambda_rhs(lam, ly, c, 0.0) - lt).norm() < 1e-12);
    }
}
