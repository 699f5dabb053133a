//! Spin solution to NLS field: the curvature map and the residual check of
//! the M-III_q equation along a spin run.
//!
//! From the Frenet coefficients of `S` on a time slice,
//!
//! ```text
//! q = k / (2(2cl + d)) · exp(i(2l(cl + d) x - ∂⁻¹τ))
//! ```
//!
//! On the torus the antiderivative of τ is split into its zero-mean part
//! and the row mean `μ`, whose linear phase `-μ x` is re-added after
//! rounding `(A - μ)` to a wavenumber the period admits. The free function
//! of `(y, t)` in the phase is fixed by the connection gauge
//! `χ = -∂_y⁻¹ mean_x(m1 - u)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{inv_d_line, inv_dx_unchecked, ComplexField, DerivScheme, Field, Grid2, ScalarField, VectorField3};
use crate::frames::{coeffs_from_frame, frame_from_spin};
use crate::spin_dynamics::{advance_spin, solve_u_with, SpinParams, SpinState, DEFAULT_CFL};

/// Phase mismatch, in cycles per period, above which a linear phase is
/// reported as not admitted by the torus.
pub const OBSTRUCTION_TOL: f64 = 1e-4;

/// Amplitude of the curvature map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
pub enum Amplitude {
    /// `k / (2(2cl + d))`.
    #[default]
    Frenet,
    /// `(k² + σ²) / (2(2cl + d))`.
    Modified,
    /// `√(k² + σ²) / (2(2cl + d))`.
    ModifiedSqrt,
}

#[derive(Clone, Copy, Debug)]
pub struct QMapOptions {
    pub amplitude: Amplitude,
    pub connection_gauge: bool,
    pub scheme: DerivScheme,
}

impl Default for QMapOptions {
    fn default() -> Self {
        Self { amplitude: Amplitude::Frenet, connection_gauge: true, scheme: DerivScheme::SPECTRAL }
    }
}

/// Output of [`q_from_spin`].
#[derive(Clone, Debug)]
pub struct QMap {
    pub q: ComplexField,
    /// Row means of τ.
    pub tau_means: Vec<f64>,
    /// Largest distance, in cycles per period, between a row's linear
    /// phase rate `A - μ` and the admissible wavenumber it was rounded to.
    pub obstruction_x: f64,
    /// Same for the y-linear part of the connection gauge.
    pub obstruction_y: f64,
    pub degenerate_fraction: f64,
}

impl QMap {
    pub fn obstructed(&self) -> bool {
        self.obstruction_x > OBSTRUCTION_TOL || self.obstruction_y > OBSTRUCTION_TOL
    }
}

fn round_rate(rate: f64, period: f64) -> (f64, f64) {
    let cycles = rate * period / (2.0 * PI);
    let r = cycles.round();
    (r * 2.0 * PI / period, (cycles - r).abs())
}

/// Map a unit spin field to `q`.
pub fn q_from_spin(s: &VectorField3, par: &SpinParams, opts: &QMapOptions) -> Result<QMap> {
    if par.beta != 1.0 {
        return Err(Error::Param("the curvature map is implemented for beta = +1".into()));
    }
    let den = par.denominator();
    if den.abs() < 1e-12 {
        return Err(Error::Param("2cl + d vanishes".into()));
    }
    let sc = opts.scheme;
    let g = s.grid;
    let frame = frame_from_spin(s, sc, 1.0)?;
    let c = coeffs_from_frame(&frame, sc, None);
    let amp = match opts.amplitude {
        Amplitude::Frenet => c.k.clone(),
        Amplitude::Modified => c.k.mul(&c.k).add(&c.sigma.mul(&c.sigma)),
        Amplitude::ModifiedSqrt => c.k.mul(&c.k).add(&c.sigma.mul(&c.sigma)).map(f64::sqrt),
    }
    .scale(1.0 / (2.0 * den));
    let tau_int = inv_dx_unchecked(&c.tau);
    let a = par.advection();
    let mut rates = Vec::with_capacity(g.ny);
    let mut obstruction_x = 0.0f64;
    for &mu in &tau_int.row_means {
        let (r, off) = round_rate(a - mu, g.lx);
        rates.push(r);
        obstruction_x = obstruction_x.max(off);
    }
    let (chi, obstruction_y) = if opts.connection_gauge {
        let u = solve_u_with(s, 1.0, sc).field;
        let src = c.m1.sub(&u).mean_x();
        let (anti, mean) = inv_d_line(&src, g.ly);
        let (rate, off) = round_rate(mean, g.ly);
        let chi: Vec<f64> = (0..g.ny).map(|j| -anti[j] - rate * g.y(j)).collect();
        (chi, off)
    } else {
        (vec![0.0; g.ny], 0.0)
    };
    let mut q = ComplexField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let n = g.idx(i, j);
            let phase = rates[j] * g.x(i) - tau_int.field.data[n] + chi[j];
            q.data[n] = Complex64::from_polar(amp.data[n], phase);
        }
    }
    Ok(QMap {
        q,
        tau_means: tau_int.row_means,
        obstruction_x,
        obstruction_y,
        degenerate_fraction: frame.degenerate_fraction(),
    })
}

/// Residuals of the three M-III_q equations for `q` with `p = conj q`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NlsResidual {
    /// Max-norm of `i q_t - (q_xy - 4ic(vq)_x + 2d² v q)`.
    pub r23a: f64,
    /// Same after removing, row by row, the real multiple of `q` (the
    /// `(y, t)` freedom of the v constraint).
    pub r23a_projected: f64,
    /// Max-norm of `i p_t + (p_xy + 4ic(vp)_x + 2d² v p)`.
    pub r23b: f64,
    /// Largest row mean of `(pq)_y` left unmatched by `v_x`.
    pub r23c: f64,
    pub qt_max: f64,
}

/// Evaluate the M-III_q residual with `q_t` supplied (e.g. by central
/// differences of neighbouring slices).
pub fn nls_residual(q: &ComplexField, qt: &ComplexField, c: f64, d: f64, scheme: DerivScheme) -> NlsResidual {
    let i = Complex64::new(0.0, 1.0);
    let g = q.grid;
    let p = q.conj();
    let pt = qt.conj();
    let pq_y = p.zip_map(q, |a, b| a * b).dy(scheme).re();
    let vs = inv_dx_unchecked(&pq_y);
    let v = vs.field;
    let eq = |f: &ComplexField, ft: &ComplexField, sign: f64| {
        let vf = f.mul_real(&v);
        let fxy = f.dx(scheme).dy(scheme);
        let vfx = vf.dx(scheme);
        let mut r = ComplexField::zeros(g);
        for n in 0..g.len() {
            let rhs = fxy.data[n] - sign * 4.0 * i * c * vfx.data[n] + 2.0 * d * d * vf.data[n];
            r.data[n] = i * ft.data[n] - sign * rhs;
        }
        r
    };
    let ra = eq(q, qt, 1.0);
    let rb = eq(&p, &pt, -1.0);
    let mut proj = ra.clone();
    for j in 0..g.ny {
        let (mut num, mut den) = (0.0, 0.0);
        for ii in 0..g.nx {
            let n = g.idx(ii, j);
            num += (q.data[n].conj() * ra.data[n]).re;
            den += q.data[n].norm_sqr();
        }
        if den > 0.0 {
            let w = num / den;
            for ii in 0..g.nx {
                let n = g.idx(ii, j);
                proj.data[n] -= w * q.data[n];
            }
        }
    }
    NlsResidual {
        r23a: ra.max_abs(),
        r23a_projected: proj.max_abs(),
        r23b: rb.max_abs(),
        r23c: vs.row_means.iter().fold(0.0, |m, v: &f64| m.max(v.abs())),
        qt_max: qt.max_abs(),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EquivOptions {
    /// Slice spacing in units of `hx`.
    pub kappa: f64,
    pub q_map: QMapOptions,
    /// Abort when more than this fraction of frame points is degenerate.
    pub max_degenerate: f64,
}

impl Default for EquivOptions {
    fn default() -> Self {
        Self { kappa: 0.25, q_map: QMapOptions::default(), max_degenerate: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderPoint {
    pub n: usize,
    pub h: f64,
    pub slice_spacing: f64,
    pub steps_per_slice: usize,
    pub residual: NlsResidual,
    pub obstruction_x: f64,
    pub obstruction_y: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivReport {
    /// Values on the finest grid.
    pub residual_23a: f64,
    pub residual_23a_projected: f64,
    pub residual_23b: f64,
    pub residual_23c: f64,
    pub ladder: Vec<LadderPoint>,
    /// Least-squares slope of `log r23a` against `log h`.
    pub order: f64,
    pub pairwise_orders: Vec<f64>,
    pub order_projected: f64,
    pub obstructed: bool,
}

/// Least-squares slope of `log r` against `log h`.
pub fn fitted_order(h: &[f64], r: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = r.iter().map(|v| v.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Evaluate the residual at the middle of three slices of a spin run
/// started from `s0`, spaced `kappa * hx` apart.
pub fn equiv_point(s0: &VectorField3, par: &SpinParams, opts: &EquivOptions) -> Result<LadderPoint> {
    let g = s0.grid;
    let spacing = opts.kappa * g.hx();
    let steps = (spacing / (DEFAULT_CFL * g.hx() * g.hy())).ceil().max(1.0) as usize;
    let dt = spacing / steps as f64;
    let p = par.with_scheme(opts.q_map.scheme);
    let st0 = SpinState::new(s0.clone(), &p)?;
    let st1 = advance_spin(&st0, &p, dt, steps)?;
    let st2 = advance_spin(&st1, &p, dt, steps)?;
    let maps: Vec<QMap> = [&st0, &st1, &st2]
        .iter()
        .map(|st| q_from_spin(&st.s, &p, &opts.q_map))
        .collect::<Result<_>>()?;
    if let Some(worst) = maps.iter().map(|m| m.degenerate_fraction).reduce(f64::max) {
        if worst > opts.max_degenerate {
            return Err(Error::DegenerateFrame { fraction: 100.0 * worst });
        }
    }
    let qt = maps[0].q.zip_map(&maps[2].q, |a, b| (b - a) / (2.0 * spacing));
    let residual = nls_residual(&maps[1].q, &qt, p.c, p.d, opts.q_map.scheme);
    Ok(LadderPoint {
        n: g.nx,
        h: g.hx(),
        slice_spacing: spacing,
        steps_per_slice: steps,
        residual,
        obstruction_x: maps.iter().map(|m| m.obstruction_x).fold(0.0, f64::max),
        obstruction_y: maps.iter().map(|m| m.obstruction_y).fold(0.0, f64::max),
    })
}

/// Run the check on a ladder of `n x n` grids over `[0, lx) x [0, ly)`;
/// `datum` samples the initial spin field on a grid.
pub fn l_equiv_check(
    datum: &(dyn Fn(Grid2) -> Result<VectorField3> + Sync),
    par: &SpinParams,
    ladder: &[usize],
    domain: (f64, f64),
    opts: &EquivOptions,
) -> Result<EquivReport> {
    if ladder.len() < 2 {
        return Err(Error::Param("a ladder needs at least two grids".into()));
    }
    let points: Vec<LadderPoint> = ladder
        .par_iter()
        .map(|&n| {
            let g = Grid2::new(n, n, domain.0, domain.1)?;
            equiv_point(&datum(g)?, par, opts)
        })
        .collect::<Result<_>>()?;
    let h: Vec<f64> = points.iter().map(|p| p.h).collect();
    let r: Vec<f64> = points.iter().map(|p| p.residual.r23a).collect();
    let rp: Vec<f64> = points.iter().map(|p| p.residual.r23a_projected).collect();
    let pairwise = (1..points.len()).map(|i| (r[i - 1] / r[i]).ln() / (h[i - 1] / h[i]).ln()).collect();
    let finest = points.last().expect("non-empty ladder").residual;
    Ok(EquivReport {
        residual_23a: finest.r23a,
        residual_23a_projected: finest.r23a_projected,
        residual_23b: finest.r23b,
        residual_23c: finest.r23c,
        order: fitted_order(&h, &r),
        order_projected: fitted_order(&h, &rp),
        pairwise_orders: pairwise,
        obstructed: points.iter().any(|p| p.obstruction_x > OBSTRUCTION_TOL || p.obstruction_y > OBSTRUCTION_TOL),
        ladder: points,
    })
}

/// Residual from three saved slices of an existing run (`span` is the
/// time between the first and last).
pub fn equiv_from_slices(
    slices: [&VectorField3; 3],
    span: f64,
    par: &SpinParams,
    opts: &QMapOptions,
) -> Result<NlsResidual> {
    let q: Vec<ComplexField> = slices.iter().map(|s| q_from_spin(s, par, opts).map(|m| m.q)).collect::<Result<_>>()?;
    let qt = q[0].zip_map(&q[2], |a, b| (b - a) / span);
    Ok(nls_residual(&q[1], &qt, par.c, par.d, opts.scheme))
}

/// Amplitude of the curvature map at every point, for the comparisons of
/// the Frenet and modified variants.
pub fn amplitude_field(k: &ScalarField, sigma: &ScalarField, par: &SpinParams, a: Amplitude) -> ScalarField {
    let den = 2.0 * par.denominator();
    match a {
        Amplitude::Frenet => k.scale(1.0 / den),
        Amplitude::Modified => k.mul(k).add(&sigma.mul(sigma)).scale(1.0 / den),
        Amplitude::ModifiedSqrt => k.mul(k).add(&sigma.mul(sigma)).map(f64::sqrt).scale(1.0 / den),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{modulated_helix, HelixParams};

    #[test]
    fn great_circle_maps_to_constant() {
        let g = Grid2::square(32).unwrap();
        let s = VectorField3::from_fn(g, |x, _| [x.sin(), 0.0, x.cos()]);
        let par = SpinParams::m1();
        let m = q_from_spin(&s, &par, &QMapOptions::default()).unwrap();
        assert!(m.q.data.iter().all(|z| (z - Complex64::new(0.5, 0.0)).norm() < 1e-12));
        assert!(!m.obstructed());

        let s2 = VectorField3::from_fn(g, |x, _| [(2.0 * x).sin(), 0.0, (2.0 * x).cos()]);
        let par = SpinParams::m3(0.0, 0.5, 0.0).unwrap();
        let m = q_from_spin(&s2, &par, &QMapOptions::default()).unwrap();
        assert!(m.q.data.iter().all(|z| (z - Complex64::new(2.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn constant_field_aborts() {
        let g = Grid2::square(16).unwrap();
        let s = VectorField3::constant(g, [0.0, 0.0, 1.0]);
        assert!(q_from_spin(&s, &SpinParams::m1(), &QMapOptions::default()).is_err());
    }

    #[test]
    fn latitude_circle_reports_obstruction() {
        let g = Grid2::square(32).unwrap();
        let a = 1.0f64;
        let s = VectorField3::from_fn(g, |x, _| [a.sin() * x.cos(), a.sin() * x.sin(), a.cos()]);
        let m = q_from_spin(&s, &SpinParams::m1(), &QMapOptions::default()).unwrap();
        assert!(m.obstructed());
        assert!((m.tau_means[0] - a.cos()).abs() < 1e-10);
    }

    #[test]
    fn y_independent_helix_is_static() {
        let g = Grid2::square(32).unwrap();
        let h = HelixParams { twist: 0.0, shift: 0.0, ..HelixParams::default() };
        let s = modulated_helix(g, &h);
        let p = equiv_point(&s, &SpinParams::m3(0.3, 1.0, 0.5).unwrap(), &EquivOptions::default()).unwrap();
        assert!(p.residual.r23a < 1e-8, "{}", p.residual.r23a);
    }

    #[test]
    fn fitted_order_of_power_law() {
        let h = [0.4, 0.2, 0.1];
        let r: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((fitted_order(&h, &r) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn modified_amplitude_disagrees_unless_k_is_one() {
        let g = Grid2::square(16).unwrap();
        let par = SpinParams::m1();
        let z = ScalarField::zeros(g);
        let one = ScalarField::constant(g, 1.0);
        let two = ScalarField::constant(g, 2.0);
        let diff = |k: &ScalarField| {
            amplitude_field(k, &z, &par, Amplitude::Frenet).sub(&amplitude_field(k, &z, &par, Amplitude::Modified)).max_abs()
        };
        assert_eq!(diff(&one), 0.0);
        assert!((diff(&two) - 1.0).abs() < 1e-15);
        let sq = amplitude_field(&two, &z, &par, Amplitude::ModifiedSqrt);
        assert_eq!(sq, amplitude_field(&two, &z, &par, Amplitude::Frenet));
    }
}
