//! Integrals `K_j` and topological charges `Q_j = K_j / 4π` of a frame.
//!
//! For `β = 1` the triple-product densities have the coefficient forms
//!
//! ```text
//! e1.(e1_x ^ e1_y) = σ m3 - k m2
//! e2.(e2_x ^ e2_y) = k m1 - τ m3
//! e3.(e3_x ^ e3_y) = τ m2 - σ m1
//! ```
//!
//! For fields of nonzero degree the coefficients are not globally smooth,
//! so agreement is checked pointwise, and integrals use the vector forms.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::fields::{integrate2, DerivScheme, Field, ScalarField, VectorField3};
use crate::frames::{triple_density, FrameCoeffs, FrameField};

/// `e.(e_x ^ e_y)` with spectral derivatives.
pub fn charge_density(e: &VectorField3) -> ScalarField {
    triple_density(e, DerivScheme::SPECTRAL, 1.0)
}

/// Coefficient-form densities for `e1`, `e2`, `e3`.
pub fn coefficient_densities(c: &FrameCoeffs) -> [ScalarField; 3] {
    [
        c.sigma.mul(&c.m3).sub(&c.k.mul(&c.m2)),
        c.k.mul(&c.m1).sub(&c.tau.mul(&c.m3)),
        c.tau.mul(&c.m2).sub(&c.sigma.mul(&c.m1)),
    ]
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ChargeReport {
    /// `∬ e_j.(e_jx ^ e_jy)`.
    pub k_vector: [f64; 3],
    /// Integrals of the coefficient forms.
    pub k_coeff: [f64; 3],
    pub q: [f64; 3],
    /// Largest pointwise gap between the two density forms.
    pub density_gap: [f64; 3],
}

pub fn charges(f: &FrameField, c: &FrameCoeffs, scheme: DerivScheme) -> ChargeReport {
    let vec_d = [&f.e1, &f.e2, &f.e3].map(|e| triple_density(e, scheme, f.beta));
    let coef_d = coefficient_densities(c);
    let k_vector: [f64; 3] = std::array::from_fn(|j| integrate2(&vec_d[j]));
    ChargeReport {
        k_vector,
        k_coeff: std::array::from_fn(|j| integrate2(&coef_d[j])),
        q: k_vector.map(|k| k / (4.0 * PI)),
        density_gap: std::array::from_fn(|j| vec_d[j].sub(&coef_d[j]).max_abs()),
    }
}

/// Degree of the spin field alone.
pub fn q1(s: &VectorField3, scheme: DerivScheme) -> f64 {
    integrate2(&triple_density(s, scheme, 1.0)) / (4.0 * PI)
}

/// Time series of charge reports, written as CSV.
#[derive(Clone, Debug, Default)]
pub struct ChargeSeries {
    pub rows: Vec<(f64, ChargeReport)>,
}

impl ChargeSeries {
    pub fn push(&mut self, t: f64, r: ChargeReport) {
        self.rows.push((t, r));
    }

    /// Largest `|Q_j(t) - Q_j(0)|` per component.
    pub fn drift(&self) -> [f64; 3] {
        let Some((_, first)) = self.rows.first() else { return [0.0; 3] };
        let mut out = [0.0f64; 3];
        for (_, r) in &self.rows {
            for j in 0..3 {
                out[j] = out[j].max((r.q[j] - first.q[j]).abs());
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,K1,K2,K3,Q1,Q2,Q3\n");
        for (t, r) in &self.rows {
            let [k1, k2, k3] = r.k_vector;
            let [q1, q2, q3] = r.q;
            writeln!(s, "{t:.17e},{k1:.17e},{k2:.17e},{k3:.17e},{q1:.17e},{q2:.17e},{q3:.17e}").unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid2;
    use crate::frames::{coeffs_from_frame, frame_from_spin};
    use crate::init::{modulated_helix, stereographic_lump, HelixParams, LumpParams};

    #[test]
    fn constant_field_has_no_charge() {
        let g = Grid2::square(16).unwrap();
        let e = VectorField3::constant(g, [0.6, 0.0, 0.8]);
        assert_eq!(charge_density(&e).max_abs(), 0.0);
        let f = FrameField {
            e1: e.clone(),
            e2: VectorField3::constant(g, [0.0, 1.0, 0.0]),
            e3: VectorField3::constant(g, [-0.8, 0.0, 0.6]),
            beta: 1.0,
            degenerate: 0,
        };
        let c = coeffs_from_frame(&f, DerivScheme::SPECTRAL, None);
        let r = charges(&f, &c, DerivScheme::SPECTRAL);
        assert_eq!(r.q, [0.0; 3]);
        assert_eq!(r.k_coeff, [0.0; 3]);
    }

    #[test]
    fn parity_flips_density() {
        // Negation and y-reflection each reverse orientation; together they
        // preserve it.
        let g = Grid2::square(64).unwrap();
        let s = stereographic_lump(g, &LumpParams::default());
        let neg = s.scale(-1.0);
        let refl = |e: &VectorField3| {
            let mut out = e.clone();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    out.data[g.idx(i, j)] = e.data[g.idx(i, (g.ny - j) % g.ny)];
                }
            }
            out
        };
        let d = charge_density(&s);
        assert!(charge_density(&neg).add(&d).max_abs() < 1e-12);
        let back = |f: &ScalarField| {
            let mut out = f.clone();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    out.data[g.idx(i, j)] = f.data[g.idx(i, (g.ny - j) % g.ny)];
                }
            }
            out
        };
        assert!(back(&charge_density(&refl(&s))).add(&d).max_abs() < 1e-9);
        assert!(back(&charge_density(&refl(&neg))).sub(&d).max_abs() < 1e-9);
        let sc = DerivScheme::SPECTRAL;
        assert!((q1(&refl(&neg), sc) - q1(&s, sc)).abs() < 1e-12);
    }

    #[test]
    fn coefficient_forms_match_vector_forms() {
        let g = Grid2::square(128).unwrap();
        let s = modulated_helix(g, &HelixParams::default());
        let f = frame_from_spin(&s, DerivScheme::SPECTRAL, 1.0).unwrap();
        let c = coeffs_from_frame(&f, DerivScheme::SPECTRAL, None);
        let r = charges(&f, &c, DerivScheme::SPECTRAL);
        assert!(r.density_gap.iter().all(|&v| v < 1e-9), "{:?}", r.density_gap);
        assert!(r.q[0].abs() < 1e-9);
    }

    #[test]
    fn series_csv_and_drift() {
        let r = ChargeReport { k_vector: [4.0 * PI, 0.0, 0.0], k_coeff: [0.0; 3], q: [1.0, 0.0, 0.0], density_gap: [0.0; 3] };
        let mut s = ChargeSeries::default();
        s.push(0.0, r);
        s.push(0.1, ChargeReport { q: [1.0 + 2e-5, 0.0, 0.0], ..r });
        assert!((s.drift()[0] - 2e-5).abs() < 1e-15);
        assert_eq!(s.to_csv().lines().count(), 3);
    }
}
