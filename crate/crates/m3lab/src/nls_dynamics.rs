//! The M-III_q system and its Zakharov and Strachan reductions:
//!
//! ```text
//! i q_t =   q_xy - 4ic (v q)_x + 2 d² v q
//! i p_t = -(p_xy + 4ic (v p)_x + 2 d² v p)
//! v_x   = (p q)_y
//! ```
//!
//! `v` is re-solved from `(q, p)` at every stage as the zero-mean
//! antiderivative; [`NlsParams::v_background`] adds a constant level, which
//! the constraint leaves free.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{inv_dx_unchecked, ComplexField, DerivScheme, Field, Grid2, ScalarField};
use crate::spin_dynamics::{check_beta, check_dt};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlsModel {
    M3q,
    Zakharov,
    Strachan,
}

impl std::str::FromStr for NlsModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m3q" => Ok(NlsModel::M3q),
            "zakharov" => Ok(NlsModel::Zakharov),
            "strachan" => Ok(NlsModel::Strachan),
            other => Err(Error::Config(format!("unknown nls model '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NlsParams {
    pub c: f64,
    pub d: f64,
    pub beta: f64,
    pub model: NlsModel,
    /// Constant added to the solved `v`.
    pub v_background: f64,
    pub scheme: DerivScheme,
}

impl NlsParams {
    pub fn new(model: NlsModel, c: f64, d: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(c.is_finite() && d.is_finite()) {
            return Err(Error::Param("non-finite nls parameter".into()));
        }
        match model {
            NlsModel::Zakharov if c != 0.0 || d != 1.0 => {
                return Err(Error::Param(format!("Zakharov needs (c, d) = (0, 1), got ({c}, {d})")))
            }
            NlsModel::Strachan if d != 0.0 => {
                return Err(Error::Param(format!("Strachan needs d = 0, got {d}")))
            }
            _ => {}
        }
        Ok(Self { c, d, beta, model, v_background: 0.0, scheme: DerivScheme::SPECTRAL })
    }

    pub fn zakharov() -> Self {
        Self::new(NlsModel::Zakharov, 0.0, 1.0, 1.0).expect("valid")
    }

    pub fn strachan(c: f64) -> Result<Self> {
        Self::new(NlsModel::Strachan, c, 0.0, 1.0)
    }

    pub fn m3q(c: f64, d: f64) -> Result<Self> {
        Self::new(NlsModel::M3q, c, d, 1.0)
    }

    pub fn with_background(mut self, v0: f64) -> Self {
        self.v_background = v0;
        self
    }

    pub fn with_scheme(mut self, scheme: DerivScheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Frequency of `exp(i(k1 x + k2 y - ω t))` on the background `v0`.
    pub fn plane_wave_frequency(&self, k1: f64, k2: f64) -> f64 {
        -k1 * k2 + 4.0 * self.c * self.v_background * k1 + 2.0 * self.d * self.d * self.v_background
    }
}

#[derive(Clone, Debug)]
pub struct NlsState {
    pub q: ComplexField,
    pub p: ComplexField,
    /// Zero-mean solution of the v constraint (without background).
    pub v: ScalarField,
    pub t: f64,
    /// Keep `p = beta conj(q)` after every step.
    pub conjugate: bool,
    /// Largest deviation of `p` from `beta conj(q)` removed by the last step.
    pub conjugate_defect: f64,
}

impl NlsState {
    /// State with `p = beta conj(q)`.
    pub fn reduced(q: ComplexField, par: &NlsParams) -> Result<Self> {
        let p = q.conj().map(|z| z * par.beta);
        let mut s = Self::general(q, p, par)?;
        s.conjugate = true;
        Ok(s)
    }

    pub fn general(q: ComplexField, p: ComplexField, par: &NlsParams) -> Result<Self> {
        if !(q.all_finite() && p.all_finite()) {
            return Err(Error::NonFinite("nls fields"));
        }
        if q.grid != p.grid {
            return Err(Error::Shape("q and p on different grids".into()));
        }
        let v = solve_v_nls(&q, &p, par.scheme)?.v;
        Ok(Self { q, p, v, t: 0.0, conjugate: false, conjugate_defect: 0.0 })
    }

    pub fn grid(&self) -> Grid2 {
        self.q.grid
    }

    /// Full `v` including the background level.
    pub fn v_total(&self, par: &NlsParams) -> ScalarField {
        self.v.map(|x| x + par.v_background)
    }
}

/// Solution of the v constraint.
#[derive(Clone, Debug)]
pub struct VSolve {
    pub v: ScalarField,
    /// Largest imaginary part discarded from `inv_dx((pq)_y)`.
    pub imag_residue: f64,
    /// Largest discarded row mean of `(pq)_y`.
    pub solvability: f64,
}

pub fn solve_v_nls(q: &ComplexField, p: &ComplexField, scheme: DerivScheme) -> Result<VSolve> {
    if !(q.all_finite() && p.all_finite()) {
        return Err(Error::NonFinite("solve_v_nls"));
    }
    let pq = p.zip_map(q, |a, b| a * b).dy(scheme);
    let re = inv_dx_unchecked(&pq.re());
    let im = inv_dx_unchecked(&pq.im());
    Ok(VSolve { imag_residue: im.field.max_abs(), solvability: re.max_mean().max(im.max_mean()), v: re.field })
}

fn rhs_parts(q: &ComplexField, p: &ComplexField, v: &ScalarField, par: &NlsParams) -> (ComplexField, ComplexField) {
    let sc = par.scheme;
    let i = Complex64::new(0.0, 1.0);
    let c4 = Complex64::new(0.0, 4.0 * par.c);
    let d2 = 2.0 * par.d * par.d;
    let vq = q.mul_real(v);
    let vp = p.mul_real(v);
    let qxy = q.dx(sc).dy(sc);
    let pxy = p.dx(sc).dy(sc);
    let vqx = vq.dx(sc);
    let vpx = vp.dx(sc);
    let n = q.data.len();
    let mut qt = ComplexField::zeros(q.grid);
    let mut pt = ComplexField::zeros(q.grid);
    for k in 0..n {
        qt.data[k] = -i * (qxy.data[k] - c4 * vqx.data[k] + d2 * vq.data[k]);
        pt.data[k] = i * (pxy.data[k] + c4 * vpx.data[k] + d2 * vp.data[k]);
    }
    (qt, pt)
}

/// `(q_t, p_t)` with `v` re-solved from `(q, p)`.
pub fn rhs_from_fields(q: &ComplexField, p: &ComplexField, par: &NlsParams) -> (ComplexField, ComplexField) {
    let pq = p.zip_map(q, |a, b| a * b).dy(par.scheme);
    let v = inv_dx_unchecked(&pq.re()).field.map(|x| x + par.v_background);
    rhs_parts(q, p, &v, par)
}

/// `(q_t, p_t)` for a state whose `v` is current.
pub fn nls_rhs(state: &NlsState, par: &NlsParams) -> (ComplexField, ComplexField) {
    rhs_parts(&state.q, &state.p, &state.v_total(par), par)
}

/// One RK4 step; re-imposes `p = beta conj(q)` when the state is reduced.
pub fn step_rk4_nls(state: &NlsState, par: &NlsParams, dt: f64) -> Result<NlsState> {
    check_dt(&state.q.grid, dt)?;
    let (q0, p0) = (&state.q, &state.p);
    let lin = |a: &ComplexField, s: f64, b: &ComplexField| a.zip_map(b, |x, y| x + s * y);
    let (kq1, kp1) = rhs_from_fields(q0, p0, par);
    let (kq2, kp2) = rhs_from_fields(&lin(q0, 0.5 * dt, &kq1), &lin(p0, 0.5 * dt, &kp1), par);
    let (kq3, kp3) = rhs_from_fields(&lin(q0, 0.5 * dt, &kq2), &lin(p0, 0.5 * dt, &kp2), par);
    let (kq4, kp4) = rhs_from_fields(&lin(q0, dt, &kq3), &lin(p0, dt, &kp3), par);
    let combine = |y: &ComplexField, k1: &ComplexField, k2: &ComplexField, k3: &ComplexField, k4: &ComplexField| {
        let mut out = y.clone();
        for n in 0..out.data.len() {
            out.data[n] += dt / 6.0 * (k1.data[n] + 2.0 * k2.data[n] + 2.0 * k3.data[n] + k4.data[n]);
        }
        out
    };
    let q = combine(q0, &kq1, &kq2, &kq3, &kq4);
    let mut p = combine(p0, &kp1, &kp2, &kp3, &kp4);
    let t = state.t + dt;
    if !(q.all_finite() && p.all_finite()) {
        return Err(Error::UnstableStep { correction: f64::INFINITY, t });
    }
    let mut defect = 0.0;
    if state.conjugate {
        let target = q.conj().map(|z| z * par.beta);
        defect = p.max_dist(&target);
        p = target;
    }
    let v = solve_v_nls(&q, &p, par.scheme)?.v;
    Ok(NlsState { q, p, v, t, conjugate: state.conjugate, conjugate_defect: defect })
}

pub fn advance_nls(state: &NlsState, par: &NlsParams, dt: f64, steps: usize) -> Result<NlsState> {
    let mut s = state.clone();
    for _ in 0..steps {
        s = step_rk4_nls(&s, par, dt)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{periodic_packet, plane_wave, plane_wave_numbers};

    fn grid() -> Grid2 {
        Grid2::square(32).unwrap()
    }

    #[test]
    fn validation() {
        assert!(NlsParams::new(NlsModel::Zakharov, 0.1, 1.0, 1.0).is_err());
        assert!(NlsParams::new(NlsModel::Strachan, 0.1, 1.0, 1.0).is_err());
        assert!(NlsParams::new(NlsModel::M3q, 0.1, 1.0, 2.0).is_err());
    }

    #[test]
    fn zero_field() {
        let par = NlsParams::m3q(0.3, 0.8).unwrap();
        let st = NlsState::reduced(ComplexField::zeros(grid()), &par).unwrap();
        let (qt, pt) = nls_rhs(&st, &par);
        assert_eq!(qt.max_abs(), 0.0);
        assert_eq!(pt.max_abs(), 0.0);
        let next = step_rk4_nls(&st, &par, crate::spin_dynamics::default_dt(&grid())).unwrap();
        assert_eq!(next.q, st.q);
    }

    #[test]
    fn plane_wave_has_zero_v_and_derived_frequency() {
        let g = grid();
        let par = NlsParams::m3q(0.3, 0.8).unwrap().with_background(0.7);
        let q = plane_wave(g, 0.5, 2, -1);
        let st = NlsState::reduced(q.clone(), &par).unwrap();
        assert!(st.v.max_abs() < 1e-13);
        let (k1, k2) = plane_wave_numbers(&g, 2, -1);
        let omega = par.plane_wave_frequency(k1, k2);
        let (qt, _) = nls_rhs(&st, &par);
        let expected = q.map(|z| Complex64::new(0.0, -omega) * z);
        assert!(qt.max_dist(&expected) < 1e-11);
    }

    #[test]
    fn reductions_are_exact() {
        let g = grid();
        let q = periodic_packet(g, 0.4, 0.8, 1);
        let p = q.conj();
        assert_eq!(
            rhs_from_fields(&q, &p, &NlsParams::m3q(0.0, 1.0).unwrap()),
            rhs_from_fields(&q, &p, &NlsParams::zakharov())
        );
        assert_eq!(
            rhs_from_fields(&q, &p, &NlsParams::m3q(0.6, 0.0).unwrap()),
            rhs_from_fields(&q, &p, &NlsParams::strachan(0.6).unwrap())
        );
    }

    #[test]
    fn p_rhs_is_conjugate_of_q_rhs() {
        let g = grid();
        for beta in [1.0, -1.0] {
            let par = NlsParams::new(NlsModel::M3q, 0.4, 0.9, beta).unwrap();
            let st = NlsState::reduced(periodic_packet(g, 0.5, 0.7, 2), &par).unwrap();
            let (qt, pt) = nls_rhs(&st, &par);
            assert!(pt.max_dist(&qt.conj().map(|z| z * beta)) < 1e-10);
        }
    }

    #[test]
    fn v_round_trip() {
        let g = grid();
        let q = periodic_packet(g, 0.6, 0.9, 1);
        let p = q.conj();
        let s = solve_v_nls(&q, &p, DerivScheme::SPECTRAL).unwrap();
        let target = p.zip_map(&q, |a, b| a * b).dy(DerivScheme::SPECTRAL).re();
        let res = s.v.dx(DerivScheme::SPECTRAL).sub(&target).remove_mean_x();
        assert!(res.max_abs() < 1e-9);
        assert!(s.imag_residue < 1e-10);
    }
}
