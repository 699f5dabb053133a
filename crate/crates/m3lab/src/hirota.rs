//! Bilinear representation of a unit spin field and its frame through a
//! pair of complex fields `(f, g)`, with `Λ = |f|² + |g|²`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{Axis, ComplexField, DerivScheme, Field, ScalarField, VectorField3};
use crate::frames::{FrameCoeffs, FrameField};

/// Hirota derivative `D(a∘b) = a' b - a b'` along `axis`.
pub fn hirota_d(a: &ComplexField, b: &ComplexField, axis: Axis, scheme: DerivScheme) -> ComplexField {
    let s = match axis {
        Axis::X => scheme.x,
        Axis::Y => scheme.y,
    };
    let da = a.deriv(axis, s);
    let db = b.deriv(axis, s);
    let mut out = ComplexField::zeros(a.grid);
    for n in 0..out.data.len() {
        out.data[n] = da.data[n] * b.data[n] - a.data[n] * db.data[n];
    }
    out
}

#[derive(Clone, Debug)]
pub struct HirotaPair {
    pub f: ComplexField,
    pub g: ComplexField,
}

impl HirotaPair {
    pub fn new(f: ComplexField, g: ComplexField) -> Result<Self> {
        if f.grid != g.grid {
            return Err(Error::Shape("f and g live on different grids".into()));
        }
        if !f.all_finite() || !g.all_finite() {
            return Err(Error::NonFinite("hirota pair"));
        }
        let p = Self { f, g };
        if p.lambda().data.iter().any(|&l| l < 1e-12) {
            return Err(Error::Param("|f|^2 + |g|^2 vanishes".into()));
        }
        Ok(p)
    }

    pub fn lambda(&self) -> ScalarField {
        ScalarField {
            grid: self.f.grid,
            data: self.f.data.iter().zip(&self.g.data).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect(),
        }
    }

    fn combine(&self, f: impl Fn(Complex64, Complex64, f64) -> [f64; 3]) -> VectorField3 {
        let l = self.lambda();
        VectorField3 {
            grid: self.f.grid,
            data: (0..l.data.len()).map(|n| f(self.f.data[n], self.g.data[n], l.data[n])).collect(),
        }
    }

    /// Gauge-invariant combinations `D(f̄∘f + ḡ∘g)` and `D(g∘f ± ḡ∘f̄)`,
    /// each divided by `Λ`.
    fn derivative_terms(&self, axis: Axis, scheme: DerivScheme) -> [ComplexField; 3] {
        let (f, g) = (&self.f, &self.g);
        let (fb, gb) = (f.conj(), g.conj());
        let l = self.lambda();
        let inv = l.map(|v| 1.0 / v);
        let sum = |a: ComplexField, b: ComplexField, s: f64| a.zip_map(&b, |x, y| x + s * y).mul_real(&inv);
        [
            sum(hirota_d(&fb, f, axis, scheme), hirota_d(&gb, g, axis, scheme), 1.0),
            sum(hirota_d(g, f, axis, scheme), hirota_d(&gb, &fb, axis, scheme), 1.0),
            sum(hirota_d(g, f, axis, scheme), hirota_d(&gb, &fb, axis, scheme), -1.0),
        ]
    }
}

/// `S = (2 Re f̄g, 2 Im f̄g, |f|² - |g|²) / Λ`.
pub fn spin_from_fg(p: &HirotaPair) -> VectorField3 {
    p.combine(|f, g, l| {
        let w = f.conj() * g;
        [2.0 * w.re / l, 2.0 * w.im / l, (f.norm_sqr() - g.norm_sqr()) / l]
    })
}

/// Orthonormal frame with `e1 = S`, built pointwise from `(f, g)`.
pub fn frame_from_fg(p: &HirotaPair) -> FrameField {
    let i = Complex64::new(0.0, 1.0);
    let e2 = p.combine(|f, g, l| {
        let plus = i * (f.conj() * f.conj() + g * g) / l;
        [plus.re, plus.im, -2.0 * (f * g).im / l]
    });
    let e3 = p.combine(|f, g, l| {
        let plus = -(f.conj() * f.conj() - g * g) / l;
        [plus.re, plus.im, 2.0 * (f * g).re / l]
    });
    FrameField { e1: spin_from_fg(p), e2, e3, beta: 1.0, degenerate: 0 }
}

/// Connection coefficients of [`frame_from_fg`] from bilinear derivatives.
/// The time coefficients are left at zero.
pub fn coeffs_from_fg(p: &HirotaPair, scheme: DerivScheme) -> FrameCoeffs {
    let i = Complex64::new(0.0, 1.0);
    let [nx, px, mx] = p.derivative_terms(Axis::X, scheme);
    let [ny, py, my] = p.derivative_terms(Axis::Y, scheme);
    let zero = ScalarField::zeros(p.f.grid);
    FrameCoeffs {
        k: mx.map(|z| -i * z).re(),
        sigma: px.re(),
        tau: nx.map(|z| -i * z).re(),
        m1: ny.map(|z| -i * z).re(),
        m2: py.re(),
        m3: my.map(|z| -i * z).re(),
        w1: zero.clone(),
        w2: zero.clone(),
        w3: zero,
    }
}

/// `max |D_x(f̄∘f + ḡ∘g)|`: zero exactly when τ vanishes.
pub fn gauge_check(p: &HirotaPair, scheme: DerivScheme) -> f64 {
    let a = hirota_d(&p.f.conj(), &p.f, Axis::X, scheme);
    let b = hirota_d(&p.g.conj(), &p.g, Axis::X, scheme);
    a.zip_map(&b, |x, y| x + y).max_abs()
}

/// `u = -i D_y(f̄∘f + ḡ∘g) / Λ`, the y-connection coefficient `m1`, which
/// equals `u` in the gauge `τ = 0`.
pub fn u_from_fg(p: &HirotaPair, scheme: DerivScheme) -> ScalarField {
    let i = Complex64::new(0.0, 1.0);
    let [ny, _, _] = p.derivative_terms(Axis::Y, scheme);
    ny.map(|z| -i * z).re()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid2;
    use crate::frames::coeffs_from_frame;

    fn pair(n: usize) -> HirotaPair {
        let g = Grid2::square(n).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new(1.5 + 0.3 * (x + y).cos(), 0.4 * (2.0 * x).sin() + 0.2 * y.cos()));
        let gg = ComplexField::from_fn(g, |x, y| Complex64::new(0.5 * x.sin(), 0.7 * (x - y).cos()));
        HirotaPair::new(f, gg).unwrap()
    }

    #[test]
    fn frame_is_right_handed_and_orthonormal() {
        let fr = frame_from_fg(&pair(16));
        assert!(fr.gram_deviation() < 1e-14);
        assert!(fr.handedness_deviation() < 1e-14);
    }

    #[test]
    fn bilinear_coefficients_match_projections() {
        let p = pair(128);
        let sc = DerivScheme::SPECTRAL;
        let ref_c = coeffs_from_frame(&frame_from_fg(&p), sc, None);
        let c = coeffs_from_fg(&p, sc);
        for (a, b) in c.fields().iter().zip(ref_c.fields()).take(6) {
            assert!(a.sub(b).max_abs() < 1e-10, "{}", a.sub(b).max_abs());
        }
    }

    #[test]
    fn real_pair_has_zero_torsion() {
        let g = Grid2::square(16).unwrap();
        let f = ComplexField::from_fn(g, |x, _| Complex64::new(1.0 + 0.5 * x.cos(), 0.0));
        let gg = ComplexField::from_fn(g, |x, y| Complex64::new(x.sin() + 0.1 * y.sin(), 0.0));
        let p = HirotaPair::new(f, gg).unwrap();
        assert!(gauge_check(&p, DerivScheme::SPECTRAL) < 1e-12);
        assert!(coeffs_from_fg(&p, DerivScheme::SPECTRAL).tau.max_abs() < 1e-12);
    }

    #[test]
    fn vanishing_pair_is_rejected() {
        let g = Grid2::square(8).unwrap();
        assert!(HirotaPair::new(ComplexField::zeros(g), ComplexField::zeros(g)).is_err());
    }
}
