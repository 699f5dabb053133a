//! Orthonormal frames `(e1, e2, e3)` built from spin fields, their
//! coefficients along x, y, t and the compatibility residuals.
//!
//! Conventions, with `<a, b>` the metric product of [`crate::fields::dot_eta`]:
//!
//! ```text
//! e1_x =  k e2 - σ e3      e1_y =  m3 e2 - m2 e3      e1_t =  ω3 e2 - ω2 e3
//! e2_x = -βk e1 + τ e3     e2_y = -βm3 e1 + m1 e3     e2_t = -βω3 e1 + ω1 e3
//! e3_x =  βσ e1 - τ e2     e3_y =  βm2 e1 - m1 e2     e3_t =  βω2 e1 - ω1 e2
//! ```
//!
//! so `(e1, e2, e3)_x = M(k, σ, τ) (e1, e2, e3)` with
//! `M(p, q, r) = [[0, p, -q], [-βp, 0, r], [βq, -r, 0]]`, and likewise
//! `M(m3, m2, m1)` along y and `M(ω3, ω2, ω1)` along t.

use crate::error::{Error, Result};
use crate::fields::{
    dot_eta, inv_dx_unchecked, wedge_eta, DerivScheme, Field, ScalarField, VectorField3,
};
use crate::io::Mfld;
use crate::spin_dynamics::SpinParams;

/// Points with `|S_x|` below this are filled from a neighbour.
pub const DEGENERATE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct FrameField {
    pub e1: VectorField3,
    pub e2: VectorField3,
    pub e3: VectorField3,
    pub beta: f64,
    /// Number of points where `e2` was filled rather than computed.
    pub degenerate: usize,
}

impl FrameField {
    /// Largest deviation of the metric Gram matrix from `diag(β, 1, 1)`.
    pub fn gram_deviation(&self) -> f64 {
        let b = self.beta;
        let mut worst = 0.0f64;
        for n in 0..self.e1.data.len() {
            let e = [&self.e1.data[n], &self.e2.data[n], &self.e3.data[n]];
            for i in 0..3 {
                for j in 0..3 {
                    let target = match (i, j) {
                        (0, 0) => b,
                        (a, c) if a == c => 1.0,
                        _ => 0.0,
                    };
                    worst = worst.max((dot_eta(b, e[i], e[j]) - target).abs());
                }
            }
        }
        worst
    }

    /// Largest `|e3 - e1 ^ e2|`.
    pub fn handedness_deviation(&self) -> f64 {
        let w = self.e1.wedge(&self.e2, self.beta);
        w.max_dist(&self.e3)
    }

    pub fn degenerate_fraction(&self) -> f64 {
        self.degenerate as f64 / self.e1.data.len() as f64
    }

    /// Dump as MFLD1 with `ncomp = 9` (e1, e2, e3 interleaved).
    pub fn to_mfld(&self) -> Mfld {
        let mut data = Vec::with_capacity(9 * self.e1.data.len());
        for n in 0..self.e1.data.len() {
            data.extend_from_slice(&self.e1.data[n]);
            data.extend_from_slice(&self.e2.data[n]);
            data.extend_from_slice(&self.e3.data[n]);
        }
        Mfld { grid: self.e1.grid, ncomp: 9, data }
    }
}

fn project_tangent(beta: f64, s: &[f64; 3], a: &[f64; 3]) -> Option<[f64; 3]> {
    let w = dot_eta(beta, s, a) / dot_eta(beta, s, s);
    let t = [a[0] - w * s[0], a[1] - w * s[1], a[2] - w * s[2]];
    let n2 = dot_eta(beta, &t, &t);
    if n2 > 1e-12 {
        let n = n2.sqrt();
        Some([t[0] / n, t[1] / n, t[2] / n])
    } else {
        None
    }
}

/// Frenet frame `e1 = S`, `e2 = S_x/|S_x|`, `e3 = e1 ^ e2`.
///
/// Degenerate points take `e2` from the nearest regular point to their
/// left in the same row (cyclically), projected onto the local tangent
/// plane; rows without any regular point fall back to a coordinate axis.
pub fn frame_from_spin(s: &VectorField3, scheme: DerivScheme, beta: f64) -> Result<FrameField> {
    if !s.all_finite() {
        return Err(Error::NonFinite("frame_from_spin"));
    }
    let g = s.grid;
    let sx = s.dx(scheme);
    let mut e2 = VectorField3::constant(g, [0.0; 3]);
    let mut regular = vec![false; g.len()];
    let mut degenerate = 0;
    for n in 0..g.len() {
        let a = &sx.data[n];
        let k2 = dot_eta(beta, a, a);
        // Discrete derivatives are tangent only up to truncation error.
        match project_tangent(beta, &s.data[n], a) {
            Some(t) if k2 > DEGENERATE_TOL * DEGENERATE_TOL => {
                e2.data[n] = t;
                regular[n] = true;
            }
            _ => degenerate += 1,
        }
    }
    if 2 * degenerate > g.len() {
        return Err(Error::DegenerateSpin { fraction: 100.0 * degenerate as f64 / g.len() as f64 });
    }
    for j in 0..g.ny {
        for i in 0..g.nx {
            let n = g.idx(i, j);
            if regular[n] {
                continue;
            }
            let sn = s.data[n];
            let donor = (1..=g.nx)
                .map(|o| g.idx((i + g.nx - o % g.nx) % g.nx, j))
                .find(|&m| regular[m] && m != n)
                .and_then(|m| project_tangent(beta, &sn, &e2.data[m]));
            let filled = donor
                .or_else(|| project_tangent(beta, &sn, &[1.0, 0.0, 0.0]))
                .or_else(|| project_tangent(beta, &sn, &[0.0, 1.0, 0.0]))
                .expect("one coordinate axis is never parallel to S");
            e2.data[n] = filled;
        }
    }
    let e3 = s.wedge(&e2, beta);
    Ok(FrameField { e1: s.clone(), e2, e3, beta, degenerate })
}

/// Time derivatives of a frame, typically from a central difference.
#[derive(Clone, Debug)]
pub struct FrameRates {
    pub e1t: VectorField3,
    pub e2t: VectorField3,
    pub e3t: VectorField3,
}

impl FrameRates {
    /// `(next - prev) / span`.
    pub fn central(prev: &FrameField, next: &FrameField, span: f64) -> Self {
        let d = |a: &VectorField3, b: &VectorField3| b.sub(a).scale(1.0 / span);
        Self { e1t: d(&prev.e1, &next.e1), e2t: d(&prev.e2, &next.e2), e3t: d(&prev.e3, &next.e3) }
    }
}

/// Coefficient triple `(p, q, r)` of a connection matrix `M(p, q, r)`.
#[derive(Clone, Debug)]
pub struct Triple {
    pub p: ScalarField,
    pub q: ScalarField,
    pub r: ScalarField,
}

impl Triple {
    pub fn deriv(&self, axis: crate::fields::Axis, scheme: DerivScheme) -> Triple {
        let s = match axis {
            crate::fields::Axis::X => scheme.x,
            crate::fields::Axis::Y => scheme.y,
        };
        Triple { p: self.p.deriv(axis, s), q: self.q.deriv(axis, s), r: self.r.deriv(axis, s) }
    }

    pub fn max_abs(&self) -> f64 {
        self.p.max_abs().max(self.q.max_abs()).max(self.r.max_abs())
    }
}

#[derive(Clone, Debug)]
pub struct FrameCoeffs {
    pub k: ScalarField,
    pub sigma: ScalarField,
    pub tau: ScalarField,
    pub m1: ScalarField,
    pub m2: ScalarField,
    pub m3: ScalarField,
    pub w1: ScalarField,
    pub w2: ScalarField,
    pub w3: ScalarField,
}

impl FrameCoeffs {
    pub fn fields(&self) -> [&ScalarField; 9] {
        [&self.k, &self.sigma, &self.tau, &self.m1, &self.m2, &self.m3, &self.w1, &self.w2, &self.w3]
    }

    fn from_array(f: [ScalarField; 9]) -> Self {
        let [k, sigma, tau, m1, m2, m3, w1, w2, w3] = f;
        Self { k, sigma, tau, m1, m2, m3, w1, w2, w3 }
    }

    pub fn map2(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        let a = self.fields();
        let b = other.fields();
        Self::from_array(std::array::from_fn(|i| f(a[i], b[i])))
    }

    /// Entrywise `(next - prev) / span`.
    pub fn central(prev: &Self, next: &Self, span: f64) -> Self {
        prev.map2(next, |a, b| b.sub(a).scale(1.0 / span))
    }

    pub fn x_triple(&self) -> Triple {
        Triple { p: self.k.clone(), q: self.sigma.clone(), r: self.tau.clone() }
    }

    pub fn y_triple(&self) -> Triple {
        Triple { p: self.m3.clone(), q: self.m2.clone(), r: self.m1.clone() }
    }

    pub fn t_triple(&self) -> Triple {
        Triple { p: self.w3.clone(), q: self.w2.clone(), r: self.w1.clone() }
    }

    /// Dump as MFLD1 with `ncomp = 9` in the order k, σ, τ, m1, m2, m3, ω1, ω2, ω3.
    pub fn to_mfld(&self) -> Mfld {
        Mfld::from_components(&self.fields()).expect("coefficients share a grid")
    }
}

/// Project frame derivatives onto the frame.
pub fn coeffs_from_frame(f: &FrameField, scheme: DerivScheme, rates: Option<&FrameRates>) -> FrameCoeffs {
    let b = f.beta;
    let e1x = f.e1.dx(scheme);
    let e2x = f.e2.dx(scheme);
    let e1y = f.e1.dy(scheme);
    let e2y = f.e2.dy(scheme);
    let zero = ScalarField::zeros(f.e1.grid);
    let (w1, w2, w3) = match rates {
        Some(r) => (f.e3.dot(&r.e2t, b), f.e3.dot(&r.e1t, b).scale(-1.0), f.e2.dot(&r.e1t, b)),
        None => (zero.clone(), zero.clone(), zero),
    };
    FrameCoeffs {
        k: f.e2.dot(&e1x, b),
        sigma: f.e3.dot(&e1x, b).scale(-1.0),
        tau: f.e3.dot(&e2x, b),
        m1: f.e3.dot(&e2y, b),
        m2: f.e3.dot(&e1y, b).scale(-1.0),
        m3: f.e2.dot(&e1y, b),
        w1,
        w2,
        w3,
    }
}

/// Rebuild the x-derivatives of the frame from `(k, σ, τ)`.
pub fn rebuild_x_derivatives(f: &FrameField, c: &FrameCoeffs) -> [VectorField3; 3] {
    let b = f.beta;
    let lin = |a: &VectorField3, wa: &ScalarField, bb: &VectorField3, wb: &ScalarField| {
        a.mul_scalar(wa).add(&bb.mul_scalar(wb))
    };
    [
        lin(&f.e2, &c.k, &f.e3, &c.sigma.scale(-1.0)),
        lin(&f.e1, &c.k.scale(-b), &f.e3, &c.tau),
        lin(&f.e1, &c.sigma.scale(b), &f.e2, &c.tau.scale(-1.0)),
    ]
}

/// How the free row constants of `∂_x⁻¹` in `m1`, `m3` are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RowGauge {
    /// Zero x-mean on every row.
    ZeroMean,
    /// Row constants fitted by least squares to the remaining
    /// compatibility condition `σ_y - m2_x + τ m3 - k m1 = 0`.
    #[default]
    Compatible,
}

/// Options for [`m_coeffs_from_spin`].
#[derive(Clone, Copy, Debug)]
pub struct IdentifyOptions {
    pub row_gauge: RowGauge,
    pub max_iter: usize,
    pub tol: f64,
    pub damping: f64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self { row_gauge: RowGauge::Compatible, max_iter: 50, tol: 1e-10, damping: 0.5 }
    }
}

/// Frame coefficients recovered from the spin constraints.
///
/// `k, σ, τ` are projections of the supplied frame; the y and t entries
/// follow from `u`, `v`:
///
/// ```text
/// m1 = u + ∂⁻¹τ_y
/// m2 = (u_x + σ m3) / k
/// m3 = ∂⁻¹(k_y + σ m1 - τ m2)
/// ω2 = -m3_x - τ m2 + u σ + 2l(cl+d) m2 - 4cvσ
/// ω3 =  m2_x - τ m3 + u k + 2l(cl+d) m3 - 4cvk
/// ω1 = (σ_t - ω2_x + τ ω3) / k
/// ```
///
/// with the (m2, m3) coupling resolved by damped fixed-point iteration when
/// σ is not identically zero.
pub fn identify(
    frame: &FrameField,
    u: &ScalarField,
    v: &ScalarField,
    p: &SpinParams,
    sigma_t: Option<&ScalarField>,
    opts: &IdentifyOptions,
) -> Result<FrameCoeffs> {
    if frame.beta != 1.0 {
        return Err(Error::Param("identification is implemented for beta = +1".into()));
    }
    let sc = p.scheme;
    let base = coeffs_from_frame(frame, sc, None);
    let (k, sigma, tau) = (base.k, base.sigma, base.tau);
    let g = k.grid;
    if k.data.iter().filter(|v| v.abs() < DEGENERATE_TOL).count() * 2 > g.len() {
        return Err(Error::DegenerateFrame { fraction: 100.0 * frame.degenerate_fraction() });
    }
    let inv_k = k.map(|v| if v.abs() < DEGENERATE_TOL { 0.0 } else { 1.0 / v });
    let ux = u.dx(sc);
    let ky = k.dy(sc);
    let sy = sigma.dy(sc);
    let m1_base = u.add(&inv_dx_unchecked(&tau.dy(sc)).field);
    let frenet = sigma.max_abs() == 0.0;

    // For fixed row constants (a in m3, b in m1) the coupled (m2, m3)
    // problem is linear and decouples by row.
    let solve_inner = |m1: &ScalarField, a: f64| -> Result<(ScalarField, ScalarField)> {
        let m2_from = |m3: &ScalarField| ux.add(&sigma.mul(m3)).mul(&inv_k);
        let m3_from = |m2: &ScalarField| {
            let src = ky.add(&sigma.mul(m1)).sub(&tau.mul(m2));
            inv_dx_unchecked(&src).field.map(|v| v + a)
        };
        let mut m3 = m3_from(&m2_from(&ScalarField::zeros(g)));
        let mut m2 = m2_from(&m3);
        if frenet {
            return Ok((m2, m3));
        }
        let w = opts.damping;
        let mut update = f64::INFINITY;
        for _ in 0..opts.max_iter {
            let m3_new = m3_from(&m2);
            update = m3_new.sub(&m3).max_abs();
            m3 = m3.scale(1.0 - w).add(&m3_new.scale(w));
            m2 = m2_from(&m3);
            if update < opts.tol {
                return Ok((m2, m3));
            }
        }
        Err(Error::IdentificationDiverged { iterations: opts.max_iter, update })
    };

    let (m2, m3, m1) = match opts.row_gauge {
        RowGauge::ZeroMean => {
            let (m2, m3) = solve_inner(&m1_base, 0.0)?;
            (m2, m3, m1_base)
        }
        RowGauge::Compatible => {
            let m1_b = m1_base.map(|v| v + 1.0);
            let (m2_0, m3_0) = solve_inner(&m1_base, 0.0)?;
            let (m2_a, m3_a) = solve_inner(&m1_base, 1.0)?;
            let (m2_b, m3_b) = solve_inner(&m1_b, 0.0)?;
            let e2 = |m1: &ScalarField, m2: &ScalarField, m3: &ScalarField| {
                sy.sub(&m2.dx(sc)).add(&tau.mul(m3)).sub(&k.mul(m1))
            };
            let r0 = e2(&m1_base, &m2_0, &m3_0);
            let ga = e2(&m1_base, &m2_a, &m3_a).sub(&r0);
            let gb = e2(&m1_b, &m2_b, &m3_b).sub(&r0);
            let consts = fit_row_constants(&r0, &ga, &gb);
            let mix = |base: &ScalarField, da: &ScalarField, db: &ScalarField| {
                let mut out = base.clone();
                for j in 0..g.ny {
                    let (a, b) = consts[j];
                    for i in 0..g.nx {
                        let n = g.idx(i, j);
                        out.data[n] += a * (da.data[n] - base.data[n]) + b * (db.data[n] - base.data[n]);
                    }
                }
                out
            };
            (mix(&m2_0, &m2_a, &m2_b), mix(&m3_0, &m3_a, &m3_b), mix(&m1_base, &m1_base, &m1_b))
        }
    };

    let a = p.advection();
    let cv4 = v.scale(4.0 * p.c);
    let w2 = m3
        .dx(sc)
        .scale(-1.0)
        .sub(&tau.mul(&m2))
        .add(&u.mul(&sigma))
        .add(&m2.scale(a))
        .sub(&cv4.mul(&sigma));
    let w3 = m2.dx(sc).sub(&tau.mul(&m3)).add(&u.mul(&k)).add(&m3.scale(a)).sub(&cv4.mul(&k));
    let st = sigma_t.cloned().unwrap_or_else(|| ScalarField::zeros(g));
    let w1 = st.sub(&w2.dx(sc)).add(&tau.mul(&w3)).mul(&inv_k);
    Ok(FrameCoeffs { k, sigma, tau, m1, m2, m3, w1, w2, w3 })
}

/// Per-row `(a, b)` minimizing `Σ_x (r0 + a ga + b gb)²`.
fn fit_row_constants(r0: &ScalarField, ga: &ScalarField, gb: &ScalarField) -> Vec<(f64, f64)> {
    let g = r0.grid;
    (0..g.ny)
        .map(|j| {
            let (mut saa, mut sbb, mut sab, mut sar, mut sbr) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..g.nx {
                let n = g.idx(i, j);
                let (a, b, r) = (ga.data[n], gb.data[n], r0.data[n]);
                saa += a * a;
                sbb += b * b;
                sab += a * b;
                sar += a * r;
                sbr += b * r;
            }
            solve_sym2(saa, sab, sbb, -sar, -sbr)
        })
        .collect()
}

/// Minimum-norm least-squares solution of a symmetric positive
/// semidefinite 2x2 system.
fn solve_sym2(a: f64, b: f64, c: f64, r0: f64, r1: f64) -> (f64, f64) {
    let tr = a + c;
    if tr <= 0.0 {
        return (0.0, 0.0);
    }
    let det = a * c - b * b;
    if det > 1e-12 * tr * tr {
        return ((c * r0 - b * r1) / det, (a * r1 - b * r0) / det);
    }
    // Rank one: solve along the dominant eigenvector.
    let half = 0.5 * (a - c);
    let lam = 0.5 * tr + (half * half + b * b).sqrt();
    let (vx, vy) = if b.abs() > 1e-300 { (b, lam - a) } else if a >= c { (1.0, 0.0) } else { (0.0, 1.0) };
    let n = (vx * vx + vy * vy).sqrt();
    let (vx, vy) = (vx / n, vy / n);
    let s = (vx * r0 + vy * r1) / lam;
    (s * vx, s * vy)
}

/// Identification from the spin field alone, in the Frenet gauge.
pub fn m_coeffs_from_spin(s: &VectorField3, u: &ScalarField, v: &ScalarField, p: &SpinParams) -> Result<FrameCoeffs> {
    let frame = frame_from_spin(s, p.scheme, p.beta)?;
    identify(&frame, u, v, p, None, &IdentifyOptions::default())
}

/// Residual matrix `X_b - Y_a + [X, Y]` of two connections, returned as the
/// triple `(E1, E2, E3)` of its `M(E1, E2, E3)` form together with the
/// max-norm over all nine entries.
pub fn compatibility(x: &Triple, x_b: &Triple, y: &Triple, y_a: &Triple, beta: f64) -> (Triple, f64) {
    let g = x.p.grid;
    let n = g.len();
    let m = |t: &Triple, i: usize| -> [[f64; 3]; 3] {
        let (p, q, r) = (t.p.data[i], t.q.data[i], t.r.data[i]);
        [[0.0, p, -q], [-beta * p, 0.0, r], [beta * q, -r, 0.0]]
    };
    let mut e = [ScalarField::zeros(g), ScalarField::zeros(g), ScalarField::zeros(g)];
    let mut worst = 0.0f64;
    for i in 0..n {
        let (xm, ym, xb, ya) = (m(x, i), m(y, i), m(x_b, i), m(y_a, i));
        let mut r = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let mut comm = 0.0;
                for c in 0..3 {
                    comm += xm[a][c] * ym[c][b] - ym[a][c] * xm[c][b];
                }
                r[a][b] = xb[a][b] - ya[a][b] + comm;
                worst = worst.max(r[a][b].abs());
            }
        }
        e[0].data[i] = r[0][1];
        e[1].data[i] = -r[0][2];
        e[2].data[i] = r[1][2];
    }
    let [p, q, r] = e;
    (Triple { p, q, r }, worst)
}

/// Max-norms of the three compatibility conditions and the pointwise
/// identities linking them to triple products of the frame vectors.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct MlxiiReport {
    /// `A_y - B_x + [A, B]`.
    pub xy: f64,
    /// `A_t - C_x + [A, C]`, when rates are supplied.
    pub xt: Option<f64>,
    /// `B_t - C_y + [B, C]`, when rates are supplied.
    pub yt: Option<f64>,
    /// `k_y - m3_x - β e3.(e3_x ^ e3_y)`, `σ_y - m2_x - β e2.(e2_x ^ e2_y)`,
    /// `τ_y - m1_x - e1.(e1_x ^ e1_y)`, when the frame is supplied.
    pub identities: Option<[f64; 3]>,
}

/// Evaluate the compatibility residuals for `coeffs` (which must carry ω
/// when `rates` is given); `rates` holds the time derivatives of the
/// coefficients themselves.
pub fn mlxii_residual(
    coeffs: &FrameCoeffs,
    rates: Option<&FrameCoeffs>,
    frame: Option<&FrameField>,
    scheme: DerivScheme,
    beta: f64,
) -> MlxiiReport {
    use crate::fields::Axis;
    let (a, b) = (coeffs.x_triple(), coeffs.y_triple());
    let (_, xy) = compatibility(&a, &a.deriv(Axis::Y, scheme), &b, &b.deriv(Axis::X, scheme), beta);
    let mut report = MlxiiReport { xy, ..Default::default() };
    if let Some(r) = rates {
        let c = coeffs.t_triple();
        let (_, xt) = compatibility(&a, &r.x_triple(), &c, &c.deriv(Axis::X, scheme), beta);
        let (_, yt) = compatibility(&b, &r.y_triple(), &c, &c.deriv(Axis::Y, scheme), beta);
        report.xt = Some(xt);
        report.yt = Some(yt);
    }
    if let Some(f) = frame {
        report.identities = Some(pointwise_identities(f, coeffs, scheme));
    }
    report
}

/// Triple product density `e.(e_x ^ e_y)` under the frame metric.
pub fn triple_density(e: &VectorField3, scheme: DerivScheme, beta: f64) -> ScalarField {
    let ex = e.dx(scheme);
    let ey = e.dy(scheme);
    let data = e
        .data
        .iter()
        .zip(ex.data.iter().zip(&ey.data))
        .map(|(a, (b, c))| dot_eta(beta, a, &wedge_eta(beta, b, c)))
        .collect();
    ScalarField { grid: e.grid, data }
}

fn pointwise_identities(f: &FrameField, c: &FrameCoeffs, sc: DerivScheme) -> [f64; 3] {
    let b = f.beta;
    let lhs = [
        c.k.dy(sc).sub(&c.m3.dx(sc)),
        c.sigma.dy(sc).sub(&c.m2.dx(sc)),
        c.tau.dy(sc).sub(&c.m1.dx(sc)),
    ];
    let rhs = [
        triple_density(&f.e3, sc, b).scale(b),
        triple_density(&f.e2, sc, b).scale(b),
        triple_density(&f.e1, sc, b),
    ];
    std::array::from_fn(|i| lhs[i].sub(&rhs[i]).max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{cross3, norm3, Grid2};
    use crate::init::{modulated_helix, random_smooth_spin, HelixParams};
    use crate::spin_dynamics::{solve_u_with, solve_v};

    const SC: DerivScheme = DerivScheme::SPECTRAL;

    #[test]
    fn great_circle_frame() {
        let g = Grid2::square(32).unwrap();
        let s = VectorField3::from_fn(g, |x, _| [x.sin(), 0.0, x.cos()]);
        let f = frame_from_spin(&s, SC, 1.0).unwrap();
        for j in [0, 7] {
            for i in [0, 5, 17] {
                let n = g.idx(i, j);
                let x = g.x(i);
                let e2 = f.e2.data[n];
                assert!(norm3(&[e2[0] - x.cos(), e2[1], e2[2] + x.sin()]) < 1e-12);
                // Right-handed: e3 = e1 ^ e2 = (0, 1, 0).
                let e3 = f.e3.data[n];
                assert!(norm3(&[e3[0], e3[1] - 1.0, e3[2]]) < 1e-12);
            }
        }
        let c = coeffs_from_frame(&f, SC, None);
        assert!(c.k.map(|v| v - 1.0).max_abs() < 1e-12);
        assert!(c.tau.max_abs() < 1e-12);
        assert!(c.sigma.max_abs() < 1e-12);
    }

    #[test]
    fn constant_spin_is_degenerate() {
        let g = Grid2::square(16).unwrap();
        let s = VectorField3::constant(g, [0.0, 0.0, 1.0]);
        assert!(matches!(frame_from_spin(&s, SC, 1.0), Err(Error::DegenerateSpin { .. })));
    }

    #[test]
    fn constant_frame_has_zero_coefficients() {
        let g = Grid2::square(16).unwrap();
        let f = FrameField {
            e1: VectorField3::constant(g, [1.0, 0.0, 0.0]),
            e2: VectorField3::constant(g, [0.0, 1.0, 0.0]),
            e3: VectorField3::constant(g, [0.0, 0.0, 1.0]),
            beta: 1.0,
            degenerate: 0,
        };
        let c = coeffs_from_frame(&f, SC, None);
        assert!(c.fields().iter().all(|v| v.max_abs() == 0.0));
        let r = mlxii_residual(&c, Some(&c), Some(&f), SC, 1.0);
        assert_eq!(r.xy, 0.0);
        assert_eq!(r.identities.unwrap(), [0.0; 3]);
    }

    #[test]
    fn random_frame_orthonormal_and_rebuilds_derivatives() {
        let g = Grid2::square(128).unwrap();
        let s = random_smooth_spin(g, 21, 2, 0.9);
        let f = frame_from_spin(&s, SC, 1.0).unwrap();
        if f.degenerate == 0 {
            assert!(f.gram_deviation() < 1e-9);
            assert!(f.handedness_deviation() < 1e-12);
        }
        let h = modulated_helix(g, &HelixParams::default());
        let f = frame_from_spin(&h, SC, 1.0).unwrap();
        assert_eq!(f.degenerate, 0);
        assert!(f.gram_deviation() < 1e-9);
        let c = coeffs_from_frame(&f, SC, None);
        let rebuilt = rebuild_x_derivatives(&f, &c);
        let actual = [f.e1.dx(SC), f.e2.dx(SC), f.e3.dx(SC)];
        for j in 0..3 {
            assert!(rebuilt[j].max_dist(&actual[j]) < 1e-8, "{j}");
        }
    }

    #[test]
    fn frenet_matches_classical_formulas() {
        let g = Grid2::square(128).unwrap();
        let s = modulated_helix(g, &HelixParams::default());
        let f = frame_from_spin(&s, SC, 1.0).unwrap();
        let c = coeffs_from_frame(&f, SC, None);
        let sx = s.dx(SC);
        let sxx = sx.dx(SC);
        for n in 0..g.len() {
            let k = norm3(&sx.data[n]);
            let tau = crate::fields::dot3(&s.data[n], &cross3(&sx.data[n], &sxx.data[n])) / (k * k);
            assert!((c.k.data[n] - k).abs() < 1e-9);
            assert!((c.tau.data[n] - tau).abs() < 1e-8);
        }
        assert!(c.sigma.max_abs() < 1e-12);
    }

    #[test]
    fn identification_of_y_independent_field() {
        let g = Grid2::square(32).unwrap();
        let s = VectorField3::from_fn(g, |x, _| [x.sin(), 0.0, x.cos()]);
        let p = SpinParams::m3(0.3, 1.0, 0.5).unwrap();
        let u = ScalarField::zeros(g);
        let c = m_coeffs_from_spin(&s, &u, &u, &p).unwrap();
        assert!(c.m2.max_abs() < 1e-12);
        assert!(c.m3.max_abs() < 1e-12);
    }

    #[test]
    fn identified_m2_matches_projection() {
        let g = Grid2::square(128).unwrap();
        let s = modulated_helix(g, &HelixParams::default());
        let p = SpinParams::m3(0.3, 1.0, 0.5).unwrap();
        let u = solve_u_with(&s, 1.0, SC).field;
        let v = solve_v(&s, &p).unwrap().field;
        let id = m_coeffs_from_spin(&s, &u, &v, &p).unwrap();
        let f = frame_from_spin(&s, SC, 1.0).unwrap();
        let proj = coeffs_from_frame(&f, SC, None);
        assert!(id.m2.sub(&proj.m2).max_abs() < 1e-8);
        // The compatible row gauge also recovers m1 and m3 themselves.
        assert!(id.m3.sub(&proj.m3).max_abs() < 1e-8, "{}", id.m3.sub(&proj.m3).max_abs());
        assert!(id.m1.sub(&proj.m1).max_abs() < 1e-8);
    }

    #[test]
    fn non_frenet_identification_converges() {
        // Rotate the Frenet frame by a small angle about e1 so σ ≠ 0.
        let g = Grid2::square(128).unwrap();
        let s = modulated_helix(g, &HelixParams::default());
        let p = SpinParams::m3(0.3, 1.0, 0.5).unwrap();
        let f0 = frame_from_spin(&s, SC, 1.0).unwrap();
        let th = ScalarField::from_fn(g, |x, y| 0.2 * (x + y).sin());
        let (c, sn) = (th.map(f64::cos), th.map(f64::sin));
        let e2 = f0.e2.mul_scalar(&c).add(&f0.e3.mul_scalar(&sn));
        let e3 = f0.e3.mul_scalar(&c).sub(&f0.e2.mul_scalar(&sn));
        let f = FrameField { e1: f0.e1.clone(), e2, e3, beta: 1.0, degenerate: 0 };
        let u = solve_u_with(&s, 1.0, SC).field;
        let v = solve_v(&s, &p).unwrap().field;
        let id = identify(&f, &u, &v, &p, None, &IdentifyOptions::default()).unwrap();
        let proj = coeffs_from_frame(&f, SC, None);
        assert!(proj.sigma.max_abs() > 0.05);
        assert!(id.m2.sub(&proj.m2).max_abs() < 1e-7, "{}", id.m2.sub(&proj.m2).max_abs());
        assert!(id.m3.sub(&proj.m3).max_abs() < 1e-7);
    }

    #[test]
    fn compatibility_detects_corruption() {
        let g = Grid2::square(128).unwrap();
        let s = modulated_helix(g, &HelixParams::default());
        let f = frame_from_spin(&s, SC, 1.0).unwrap();
        let c = coeffs_from_frame(&f, SC, None);
        let clean = mlxii_residual(&c, None, Some(&f), SC, 1.0);
        assert!(clean.xy < 1e-8, "{}", clean.xy);
        assert!(clean.identities.unwrap().iter().all(|&v| v < 1e-8));
        let mut bad = c.clone();
        bad.m2 = bad.m2.map(|v| v + 0.1);
        let r = mlxii_residual(&bad, None, None, SC, 1.0);
        assert!(r.xy > 0.01 && r.xy < 1.0, "{}", r.xy);
    }

    #[test]
    fn solve_sym2_rank_one() {
        // Rows with τ ∝ k: normal matrix is singular; the solution must
        // still satisfy the consistent equation.
        let (a, b) = solve_sym2(1.0, -2.0, 4.0, 3.0, -6.0);
        assert!((a - 2.0 * b - 3.0).abs() < 1e-12);
        assert!((a * 2.0 + b).abs() < 1e-12);
    }
}
