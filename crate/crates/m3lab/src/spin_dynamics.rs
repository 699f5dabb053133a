//! Isotropic M-III spin equation, its M-I and M-II reductions, RK4 time
//! stepping and the M-0 decomposition `S_t = d2 S_x + d3 S_y`.
//!
//! The auxiliary fields are constraints, re-solved from `S` whenever a
//! right-hand side is evaluated:
//!
//! ```text
//! u_x = -beta S.(S_x ^ S_y)
//! v_x = (S_x.S_x)_y / (4 (2cl + d)^2)
//! S_t = (S ^ S_y + u S)_x + 2l(cl + d) S_y - 4 c v S_x
//! ```
//!
//! Products use the metric `diag(1, 1, beta)`, so `beta = -1` evolves on the
//! hyperboloid `S.S = -1`.

use crate::error::{Error, Result};
use crate::fields::{inv_dx_unchecked, Antiderivative, DerivScheme, Field, Grid2, ScalarField, VectorField3};
use crate::frames::FrameCoeffs;

/// Largest accepted `dt / (hx hy)`; RK4 on the mixed-derivative dispersion
/// `i kx ky` is stable up to about `2.8 / π²`.
pub const CFL_LIMIT: f64 = 0.28;

/// Default `dt / (hx hy)`.
pub const DEFAULT_CFL: f64 = 0.2;

/// Renormalization corrections above this reject the step.
pub const MAX_RENORM_CORRECTION: f64 = 1e-3;

pub fn default_dt(grid: &Grid2) -> f64 {
    DEFAULT_CFL * grid.hx() * grid.hy()
}

pub(crate) fn check_dt(grid: &Grid2, dt: f64) -> Result<()> {
    let limit = CFL_LIMIT * grid.hx() * grid.hy();
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::Param(format!("dt = {dt} outside (0, {limit:.3e}]")));
    }
    Ok(())
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta == 1.0 || beta == -1.0 {
        Ok(())
    } else {
        Err(Error::Param(format!("beta must be +1 or -1, got {beta}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinModel {
    M1,
    M2,
    M3,
}

impl std::str::FromStr for SpinModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m1" => Ok(SpinModel::M1),
            "m2" => Ok(SpinModel::M2),
            "m3" => Ok(SpinModel::M3),
            other => Err(Error::Config(format!("unknown spin model '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinParams {
    pub c: f64,
    pub d: f64,
    pub l: f64,
    pub beta: f64,
    pub model: SpinModel,
    pub scheme: DerivScheme,
}

impl SpinParams {
    /// Validated parameters. M1 requires `(c, d) = (0, 1)` and ignores `l`
    /// (it is the `l = 0` slice of M-III); M2 requires `d = 0`, `c != 0` and
    /// `l != 0`; M3 requires `2cl + d != 0`.
    pub fn new(model: SpinModel, c: f64, d: f64, l: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if ![c, d, l].iter().all(|v| v.is_finite()) {
            return Err(Error::Param("non-finite spin parameter".into()));
        }
        match model {
            SpinModel::M1 if c != 0.0 || d != 1.0 => {
                return Err(Error::Param(format!("M1 needs (c, d) = (0, 1), got ({c}, {d})")))
            }
            SpinModel::M2 if d != 0.0 || c == 0.0 => {
                return Err(Error::Param(format!("M2 needs d = 0 and c != 0, got c = {c}, d = {d}")))
            }
            _ => {}
        }
        let p = Self { c, d, l, beta, model, scheme: DerivScheme::SPECTRAL };
        if p.denominator().abs() < 1e-12 {
            return Err(Error::Param(format!("2cl + d = {} vanishes", p.denominator())));
        }
        Ok(p)
    }

    pub fn m1() -> Self {
        Self::new(SpinModel::M1, 0.0, 1.0, 0.0, 1.0).expect("M1 parameters are valid")
    }

    pub fn m2(c: f64, l: f64) -> Result<Self> {
        Self::new(SpinModel::M2, c, 0.0, l, 1.0)
    }

    pub fn m3(c: f64, d: f64, l: f64) -> Result<Self> {
        Self::new(SpinModel::M3, c, d, l, 1.0)
    }

    pub fn with_scheme(mut self, scheme: DerivScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        self.beta = beta;
        Ok(self)
    }

    fn effective_l(&self) -> f64 {
        match self.model {
            SpinModel::M1 => 0.0,
            _ => self.l,
        }
    }

    /// `2cl + d`.
    pub fn denominator(&self) -> f64 {
        2.0 * self.c * self.effective_l() + self.d
    }

    /// Coefficient `2l(cl + d)` of `S_y`.
    pub fn advection(&self) -> f64 {
        let l = self.effective_l();
        2.0 * l * (self.c * l + self.d)
    }

    /// Prefactor of the v constraint.
    pub fn v_prefactor(&self) -> f64 {
        1.0 / (4.0 * self.denominator().powi(2))
    }
}

/// Spin field with its current constraint fields.
#[derive(Clone, Debug)]
pub struct SpinState {
    pub s: VectorField3,
    pub u: ScalarField,
    pub v: ScalarField,
    pub t: f64,
    /// Largest renormalization correction applied by the last step.
    pub renorm_correction: f64,
}

impl SpinState {
    /// Wrap a unit field, solving the constraints.
    pub fn new(s: VectorField3, p: &SpinParams) -> Result<Self> {
        if !s.all_finite() {
            return Err(Error::NonFinite("spin field"));
        }
        let dev = s.data.iter().fold(0.0f64, |m, a| m.max((crate::fields::dot_eta(p.beta, a, a) - p.beta).abs()));
        if dev > 1e-9 {
            return Err(Error::Param(format!("|S|^2 deviates from beta by {dev:.3e}")));
        }
        let u = solve_u_with(&s, p.beta, p.scheme).field;
        let v = solve_v(&s, p)?.field;
        Ok(Self { s, u, v, t: 0.0, renorm_correction: 0.0 })
    }

    pub fn grid(&self) -> Grid2 {
        self.s.grid
    }
}

/// Solve the u constraint for `beta = +1` with spectral derivatives.
pub fn solve_u(s: &VectorField3) -> Result<Antiderivative> {
    if !s.all_finite() {
        return Err(Error::NonFinite("solve_u"));
    }
    Ok(solve_u_with(s, 1.0, DerivScheme::SPECTRAL))
}

pub fn solve_u_with(s: &VectorField3, beta: f64, scheme: DerivScheme) -> Antiderivative {
    let sx = s.dx(scheme);
    let sy = s.dy(scheme);
    solve_u_from(s, &sx, &sy, beta)
}

fn solve_u_from(s: &VectorField3, sx: &VectorField3, sy: &VectorField3, beta: f64) -> Antiderivative {
    let rhs = s.dot(&sx.wedge(sy, beta), beta).scale(-beta);
    inv_dx_unchecked(&rhs)
}

/// Solve the v constraint.
pub fn solve_v(s: &VectorField3, p: &SpinParams) -> Result<Antiderivative> {
    if p.denominator().abs() < 1e-12 {
        return Err(Error::Param("2cl + d vanishes".into()));
    }
    if !s.all_finite() {
        return Err(Error::NonFinite("solve_v"));
    }
    let sx = s.dx(p.scheme);
    Ok(solve_v_from(&sx, p))
}

fn solve_v_from(sx: &VectorField3, p: &SpinParams) -> Antiderivative {
    let e = sx.dot(sx, p.beta).dy(p.scheme).scale(p.v_prefactor());
    inv_dx_unchecked(&e)
}

/// Right-hand side evaluated from `S` alone; returns `(S_t, u, v)`.
pub fn rhs_from_spin(s: &VectorField3, p: &SpinParams) -> (VectorField3, ScalarField, ScalarField) {
    let sc = p.scheme;
    let sx = s.dx(sc);
    let sy = s.dy(sc);
    let u = solve_u_from(s, &sx, &sy, p.beta).field;
    let v = solve_v_from(&sx, p).field;
    let r = rhs_with(s, &sx, &sy, &u, &v, p);
    (r, u, v)
}

fn rhs_with(
    s: &VectorField3,
    sx: &VectorField3,
    sy: &VectorField3,
    u: &ScalarField,
    v: &ScalarField,
    p: &SpinParams,
) -> VectorField3 {
    let flux = s.wedge(sy, p.beta).add(&s.mul_scalar(u));
    let a = p.advection();
    let cv = v.scale(-4.0 * p.c);
    let mut r = flux.dx(p.scheme).axpy(a, sy).add(&sx.mul_scalar(&cv));
    // Only the discarded row mean of the u constraint leaves the tangent
    // plane; project it out.
    for (ri, si) in r.data.iter_mut().zip(&s.data) {
        let w = crate::fields::dot_eta(p.beta, si, ri) / crate::fields::dot_eta(p.beta, si, si);
        for c in 0..3 {
            ri[c] -= w * si[c];
        }
    }
    r
}

/// `S_t` for a state whose `u`, `v` are current.
pub fn spin_rhs(state: &SpinState, p: &SpinParams) -> Result<VectorField3> {
    if p.denominator().abs() < 1e-12 {
        return Err(Error::Param("2cl + d vanishes".into()));
    }
    let sx = state.s.dx(p.scheme);
    let sy = state.s.dy(p.scheme);
    Ok(rhs_with(&state.s, &sx, &sy, &state.u, &state.v, p))
}

/// One classical RK4 step followed by renormalization onto `S.S = beta`.
pub fn step_rk4_spin(state: &SpinState, p: &SpinParams, dt: f64) -> Result<SpinState> {
    check_dt(&state.s.grid, dt)?;
    let s0 = &state.s;
    let (k1, _, _) = rhs_from_spin(s0, p);
    let (k2, _, _) = rhs_from_spin(&s0.axpy(0.5 * dt, &k1), p);
    let (k3, _, _) = rhs_from_spin(&s0.axpy(0.5 * dt, &k2), p);
    let (k4, _, _) = rhs_from_spin(&s0.axpy(dt, &k3), p);
    let mut s = s0.zip_map(&k1, |a, b| [a[0] + dt / 6.0 * b[0], a[1] + dt / 6.0 * b[1], a[2] + dt / 6.0 * b[2]]);
    for (si, ((b, c), d)) in s.data.iter_mut().zip(k2.data.iter().zip(&k3.data).zip(&k4.data)) {
        for n in 0..3 {
            si[n] += dt / 6.0 * (2.0 * b[n] + 2.0 * c[n] + d[n]);
        }
    }
    let t = state.t + dt;
    let mut correction = 0.0f64;
    for si in s.data.iter_mut() {
        let ratio = crate::fields::dot_eta(p.beta, si, si) / p.beta;
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::UnstableStep { correction: f64::INFINITY, t });
        }
        let norm = ratio.sqrt();
        correction = correction.max((norm - 1.0).abs());
        for c in si.iter_mut() {
            *c /= norm;
        }
    }
    if correction > MAX_RENORM_CORRECTION {
        return Err(Error::UnstableStep { correction, t });
    }
    let (_, u, v) = rhs_from_spin(&s, p);
    Ok(SpinState { s, u, v, t, renorm_correction: correction })
}

/// Take `steps` RK4 steps of size `dt`.
pub fn advance_spin(state: &SpinState, p: &SpinParams, dt: f64, steps: usize) -> Result<SpinState> {
    let mut s = state.clone();
    for _ in 0..steps {
        s = step_rk4_spin(&s, p, dt)?;
    }
    Ok(s)
}

/// Coefficients of the M-0 decomposition.
#[derive(Clone, Debug)]
pub struct M0Coeffs {
    pub a12: ScalarField,
    pub a13: ScalarField,
    pub b12: ScalarField,
    pub b13: ScalarField,
    pub c12: ScalarField,
    pub c13: ScalarField,
    pub d2: ScalarField,
    pub d3: ScalarField,
    /// `true` where `|Δ| < 1e-8` and the point is excluded.
    pub mask: Vec<bool>,
}

impl M0Coeffs {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Solve `S_t = d2 S_x + d3 S_y` in the (e2, e3) basis given frame
/// coefficients (which must include the ω fields).
pub fn m0_reduce(c: &FrameCoeffs) -> Result<M0Coeffs> {
    let a12 = c.w3.clone();
    let a13 = c.w2.scale(-1.0);
    let b12 = c.k.clone();
    let b13 = c.sigma.scale(-1.0);
    let c12 = c.m3.clone();
    let c13 = c.m2.scale(-1.0);
    let n = a12.data.len();
    let mut d2 = ScalarField::zeros(a12.grid);
    let mut d3 = ScalarField::zeros(a12.grid);
    let mut mask = vec![false; n];
    for i in 0..n {
        let (d2i, d3i) = match solve2(
            [b12.data[i], c12.data[i], b13.data[i], c13.data[i]],
            [a12.data[i], a13.data[i]],
        ) {
            Some(x) => x,
            None => {
                mask[i] = true;
                continue;
            }
        };
        d2.data[i] = d2i;
        d3.data[i] = d3i;
    }
    let masked = mask.iter().filter(|&&m| m).count();
    if 2 * masked > n {
        return Err(Error::DegenerateFrame { fraction: 100.0 * masked as f64 / n as f64 });
    }
    Ok(M0Coeffs { a12, a13, b12, b13, c12, c13, d2, d3, mask })
}

/// Cramer solve of `[[m0, m1], [m2, m3]] (x, y) = r`; `None` when
/// `|det| < 1e-8`.
fn solve2(m: [f64; 4], r: [f64; 2]) -> Option<(f64, f64)> {
    let det = m[0] * m[3] - m[1] * m[2];
    if det.abs() < 1e-8 {
        return None;
    }
    Some(((r[0] * m[3] - m[1] * r[1]) / det, (m[0] * r[1] - r[0] * m[2]) / det))
}

/// Masked max-norm of `S_t - d2 S_x - d3 S_y` with `S_t` from [`spin_rhs`].
pub fn m0_residual(state: &SpinState, m0: &M0Coeffs, p: &SpinParams) -> Result<f64> {
    let st = spin_rhs(state, p)?;
    let sx = state.s.dx(p.scheme);
    let sy = state.s.dy(p.scheme);
    let mut worst = 0.0f64;
    for i in 0..st.data.len() {
        if m0.mask[i] {
            continue;
        }
        let (a, b) = (m0.d2.data[i], m0.d3.data[i]);
        for c in 0..3 {
            worst = worst.max((st.data[i][c] - a * sx.data[i][c] - b * sy.data[i][c]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::random_smooth_spin;

    fn grid() -> Grid2 {
        Grid2::square(32).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(SpinParams::new(SpinModel::M1, 0.5, 1.0, 0.0, 1.0).is_err());
        assert!(SpinParams::new(SpinModel::M2, 1.0, 0.5, 1.0, 1.0).is_err());
        assert!(SpinParams::new(SpinModel::M2, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(SpinParams::new(SpinModel::M3, 1.0, -2.0, 1.0, 1.0).is_err());
        assert!(SpinParams::new(SpinModel::M3, 1.0, 1.0, 1.0, 0.5).is_err());
        assert!(SpinParams::m3(0.3, 1.0, 0.2).is_ok());
    }

    #[test]
    fn constant_field_has_zero_constraints_and_rhs() {
        let p = SpinParams::m3(0.4, 1.0, 0.5).unwrap();
        let st = SpinState::new(VectorField3::constant(grid(), [0.0, 0.0, 1.0]), &p).unwrap();
        assert_eq!(st.u.max_abs(), 0.0);
        assert_eq!(st.v.max_abs(), 0.0);
        assert_eq!(spin_rhs(&st, &p).unwrap().max_abs(), 0.0);
        let next = step_rk4_spin(&st, &p, default_dt(&st.grid())).unwrap();
        assert_eq!(next.s, st.s);
    }

    #[test]
    fn y_independent_field_is_static() {
        let p = SpinParams::m3(0.4, 1.0, 0.5).unwrap();
        let s = VectorField3::from_fn(grid(), |x, _| {
            let b = 0.3 * x.sin();
            [x.cos() * b.cos(), x.sin() * b.cos(), b.sin()]
        });
        let st = SpinState::new(s, &p).unwrap();
        assert!(st.u.max_abs() < 1e-13);
        assert!(st.v.max_abs() < 1e-13);
        assert!(spin_rhs(&st, &p).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn constraint_round_trips() {
        // Resolved well enough that the dropped Nyquist row of ρ is below roundoff.
        let s = crate::init::modulated_helix(Grid2::square(128).unwrap(), &crate::init::HelixParams::default());
        let u = solve_u(&s).unwrap();
        let sc = DerivScheme::SPECTRAL;
        let rho = s.dot(&s.dx(sc).wedge(&s.dy(sc), 1.0), 1.0);
        let res = u.field.dx(sc).add(&rho).remove_mean_x();
        assert!(res.max_abs() < 1e-9, "{}", res.max_abs());

        let p = SpinParams::m3(0.3, 1.0, 0.7).unwrap();
        let v = solve_v(&s, &p).unwrap();
        let sx = s.dx(sc);
        let target = sx.dot(&sx, 1.0).dy(sc).scale(p.v_prefactor());
        let res = v.field.dx(sc).sub(&target).remove_mean_x();
        assert!(res.max_abs() < 1e-9);
    }

    #[test]
    fn m1_matches_m3_at_l_zero_and_m2_matches_d_zero() {
        let s = random_smooth_spin(grid(), 11, 3, 0.8);
        let (r1, _, _) = rhs_from_spin(&s, &SpinParams::m1());
        let (r3, _, _) = rhs_from_spin(&s, &SpinParams::m3(0.0, 1.0, 0.0).unwrap());
        assert_eq!(r1, r3);

        let (r2, _, _) = rhs_from_spin(&s, &SpinParams::m2(0.7, 0.9).unwrap());
        let (r3, _, _) = rhs_from_spin(&s, &SpinParams::m3(0.7, 0.0, 0.9).unwrap());
        assert_eq!(r2, r3);
    }

    #[test]
    fn rhs_is_tangent() {
        for beta in [1.0, -1.0] {
            let s = if beta > 0.0 {
                random_smooth_spin(grid(), 3, 3, 0.8)
            } else {
                crate::init::hyperbolic_smooth_spin(grid(), 3, 0.4)
            };
            let p = SpinParams::m3(0.3, 1.0, 0.4).unwrap().with_beta(beta).unwrap();
            let st = SpinState::new(s, &p).unwrap();
            let r = spin_rhs(&st, &p).unwrap();
            let t = st.s.dot(&r, beta).max_abs();
            assert!(t < 1e-9, "beta {beta}: {t}");
        }
    }

    #[test]
    fn dt_bounds() {
        let p = SpinParams::m1();
        let st = SpinState::new(VectorField3::constant(grid(), [0.0, 0.0, 1.0]), &p).unwrap();
        assert!(step_rk4_spin(&st, &p, 0.0).is_err());
        assert!(step_rk4_spin(&st, &p, 1.0).is_err());
    }

    #[test]
    fn norm_drift_small_over_100_steps() {
        let grid = Grid2::square(64).unwrap();
        let p = SpinParams::m3(0.3, 1.0, 0.2).unwrap();
        let mut st = SpinState::new(random_smooth_spin(grid, 5, 2, 0.5), &p).unwrap();
        let dt = default_dt(&grid);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            st = step_rk4_spin(&st, &p, dt).unwrap();
            worst = worst.max(st.renorm_correction);
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn solve2_cases() {
        // a = 2 b  gives d2 = 2, d3 = 0;  a = 3 c  gives d2 = 0, d3 = 3.
        let (b12, b13, c12, c13) = (1.3, -0.4, 0.2, 0.9);
        let (x, y) = solve2([b12, c12, b13, c13], [2.0 * b12, 2.0 * b13]).unwrap();
        assert!((x - 2.0).abs() < 1e-14 && y.abs() < 1e-14);
        let (x, y) = solve2([b12, c12, b13, c13], [3.0 * c12, 3.0 * c13]).unwrap();
        assert!(x.abs() < 1e-14 && (y - 3.0).abs() < 1e-14);
        assert!(solve2([1.0, 2.0, 2.0, 4.0], [1.0, 1.0]).is_none());
    }
}
