//! Built-in initial data for spin and NLS runs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields::{ComplexField, Grid2, VectorField3};

/// Modulated helix: a warped, tilted closed curve through every row,
/// shifted along x and rotated rigidly as y varies,
/// `S(x, y) = Rx(eps sin Y) Rz(eps/2 cos Y) F(X - shift sin Y)` with
/// `X = 2πx/lx`, `Y = 2πy/ly`.
///
/// The curve `F` is symmetric under `ξ → ξ + π, F → -F`, so every row has
/// zero net torsion, and all row means of curvature quantities are
/// independent of y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HelixParams {
    pub twist: f64,
    pub shift: f64,
    pub warp: f64,
    pub tilt1: f64,
    pub tilt3: f64,
}

impl Default for HelixParams {
    fn default() -> Self {
        Self { twist: 0.4, shift: 0.3, warp: 0.15, tilt1: 0.2, tilt3: 0.1 }
    }
}

fn helix_curve(xi: f64, h: &HelixParams) -> [f64; 3] {
    let ph = xi + h.warp * (2.0 * xi).sin();
    let be = h.tilt1 * ph.sin() + h.tilt3 * (3.0 * ph).sin();
    [ph.cos() * be.cos(), ph.sin() * be.cos(), be.sin()]
}

pub fn modulated_helix(grid: Grid2, h: &HelixParams) -> VectorField3 {
    VectorField3::from_fn(grid, |x, y| {
        let xs = 2.0 * PI * x / grid.lx;
        let ys = 2.0 * PI * y / grid.ly;
        let s0 = helix_curve(xs - h.shift * ys.sin(), h);
        let (t1, t2) = (h.twist * ys.sin(), 0.5 * h.twist * ys.cos());
        let a = t2.cos() * s0[0] - t2.sin() * s0[1];
        let b = t2.sin() * s0[0] + t2.cos() * s0[1];
        [a, t1.cos() * b - t1.sin() * s0[2], t1.sin() * b + t1.cos() * s0[2]]
    })
}

/// Degree-one lump compactified inside a disc: `w = z / (R b(r))` with a
/// smooth bump `b` vanishing at `r_max`, mapped to the sphere so the
/// density `S.(S_x ^ S_y)` is positive. `S = (0, 0, -1)` outside the disc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LumpParams {
    pub radius: f64,
    /// Support radius as a fraction of `min(lx, ly) / 2`.
    pub support: f64,
}

impl Default for LumpParams {
    fn default() -> Self {
        Self { radius: 1.0, support: 0.9 }
    }
}

pub fn stereographic_lump(grid: Grid2, p: &LumpParams) -> VectorField3 {
    let (x0, y0) = (grid.lx / 2.0, grid.ly / 2.0);
    let rmax = p.support * 0.5 * grid.lx.min(grid.ly);
    VectorField3::from_fn(grid, |x, y| {
        let (dx, dy) = (x - x0, y - y0);
        let r = (dx * dx + dy * dy).sqrt();
        if r >= rmax {
            return [0.0, 0.0, -1.0];
        }
        let q = r / rmax;
        let bump = (1.0 - 1.0 / (1.0 - q * q)).exp();
        // |w| = r / (R bump); work with s = 1/|w| where |w| is large.
        let modw = r / (p.radius * bump);
        let (c, s) = if r > 0.0 { (dx / r, dy / r) } else { (1.0, 0.0) };
        if modw <= 1.0 {
            let d = 1.0 + modw * modw;
            [2.0 * modw * c / d, 2.0 * modw * s / d, (1.0 - modw * modw) / d]
        } else {
            let inv = 1.0 / modw;
            let d = inv * inv + 1.0;
            [2.0 * inv * c / d, 2.0 * inv * s / d, (inv * inv - 1.0) / d]
        }
    })
}

/// Random smooth unit field near `(0, 0, 1)` built from Fourier modes up to
/// `modes`, with perturbation size at most `amp < 1`.
pub fn random_smooth_spin(grid: Grid2, seed: u64, modes: usize, amp: f64) -> VectorField3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = modes.max(1) as i64;
    let count = ((2 * m + 1) * (2 * m + 1)) as f64;
    let mut terms = Vec::new();
    for c in 0..3 {
        for kx in -m..=m {
            for ky in -m..=m {
                let a: f64 = rng.gen_range(-1.0..1.0) * amp / count.sqrt() / 3f64.sqrt();
                let ph: f64 = rng.gen_range(0.0..2.0 * PI);
                terms.push((c, kx as f64, ky as f64, a, ph));
            }
        }
    }
    let (wx, wy) = (2.0 * PI / grid.lx, 2.0 * PI / grid.ly);
    VectorField3::from_fn(grid, |x, y| {
        let mut v = [0.0, 0.0, 1.0];
        for &(c, kx, ky, a, ph) in &terms {
            v[c] += a * (kx * wx * x + ky * wy * y + ph).cos();
        }
        let n = crate::fields::norm3(&v);
        [v[0] / n, v[1] / n, v[2] / n]
    })
}

/// Smooth field on the upper sheet of `S1² + S2² - S3² = -1`.
pub fn hyperbolic_smooth_spin(grid: Grid2, seed: u64, amp: f64) -> VectorField3 {
    let base = random_smooth_spin(grid, seed, 2, 0.9);
    VectorField3 {
        grid,
        data: base
            .data
            .iter()
            .map(|a| {
                let (s1, s2) = (amp * a[0], amp * a[1]);
                [s1, s2, (1.0 + s1 * s1 + s2 * s2).sqrt()]
            })
            .collect(),
    }
}

/// Plane wave `amp exp(i(k1 X + k2 Y))` with integer wavenumbers in units
/// of `2π/lx`, `2π/ly`.
pub fn plane_wave(grid: Grid2, amp: f64, k1: i32, k2: i32) -> ComplexField {
    let (w1, w2) = plane_wave_numbers(&grid, k1, k2);
    ComplexField::from_fn(grid, |x, y| Complex64::from_polar(amp, w1 * x + w2 * y))
}

/// Angular wavenumbers of [`plane_wave`].
pub fn plane_wave_numbers(grid: &Grid2, k1: i32, k2: i32) -> (f64, f64) {
    (2.0 * PI * k1 as f64 / grid.lx, 2.0 * PI * k2 as f64 / grid.ly)
}

/// Smooth periodic packet `amp exp((cos X + cos Y - 2) / width²) e^{i k1 X}`.
pub fn periodic_packet(grid: Grid2, amp: f64, width: f64, k1: i32) -> ComplexField {
    ComplexField::from_fn(grid, |x, y| {
        let xs = 2.0 * PI * x / grid.lx - PI;
        let ys = 2.0 * PI * y / grid.ly - PI;
        let env = ((xs.cos() + ys.cos() + 2.0) / (width * width) - 4.0 / (width * width)).exp();
        Complex64::from_polar(amp * env, k1 as f64 * (xs + PI))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_unit() {
        let g = Grid2::square(32).unwrap();
        for f in [
            modulated_helix(g, &HelixParams::default()),
            stereographic_lump(g, &LumpParams::default()),
            random_smooth_spin(g, 1, 3, 0.8),
        ] {
            let dev = f.data.iter().fold(0.0f64, |m, a| m.max((crate::fields::norm3(a) - 1.0).abs()));
            assert!(dev < 1e-14);
        }
        let h = hyperbolic_smooth_spin(g, 2, 0.5);
        assert!(h.data.iter().all(|a| (crate::fields::dot_eta(-1.0, a, a) + 1.0).abs() < 1e-13));
    }

    #[test]
    fn lump_is_constant_far_away() {
        let g = Grid2::square(32).unwrap();
        let s = stereographic_lump(g, &LumpParams::default());
        assert_eq!(s.data[0], [0.0, 0.0, -1.0]);
        let c = s.data[g.idx(16, 16)];
        assert!((c[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_field_is_reproducible() {
        let g = Grid2::square(16).unwrap();
        assert_eq!(random_smooth_spin(g, 9, 2, 0.5), random_smooth_spin(g, 9, 2, 0.5));
        assert_ne!(random_smooth_spin(g, 9, 2, 0.5), random_smooth_spin(g, 10, 2, 0.5));
    }
}
