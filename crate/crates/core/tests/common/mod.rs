//! Brute-force reference computations built directly from wave packets.
//!
//! Nothing here calls the closed forms under test: pointer amplitudes are
//! written out, post-selected packets are assembled from state amplitudes,
//! and every moment is a numerical quadrature.

#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// Gaussian pointer amplitude centered at 0.
pub fn amplitude(q: f64, sigma: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-0.25) * (-q * q / (4.0 * sigma * sigma)).exp()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + k as f64 * h);
    }
    s * h / 3.0
}

/// Linear polarization amplitudes `(cos t, sin t)`.
pub fn linear(theta: f64) -> [Complex64; 2] {
    [Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0)]
}

/// Post-selected branch weights `conj(f_k) i_k` for k in {H, V}.
pub fn branches(pre: [Complex64; 2], post: [Complex64; 2]) -> (Complex64, Complex64) {
    (post[0].conj() * pre[0], post[1].conj() * pre[1])
}

/// Centroid and norm of `z_h f(q - a) + z_v f(q)` by 1D quadrature.
pub fn packet_centroid_1d(z_h: Complex64, z_v: Complex64, a: f64, sigma: f64) -> (f64, f64) {
    let density = |q: f64| (z_h * amplitude(q - a, sigma) + z_v * amplitude(q, sigma)).norm_sqr();
    let (lo, hi) = (a.min(0.0) - 14.0 * sigma, a.max(0.0) + 14.0 * sigma);
    let n = 40_000;
    let norm = simpson(density, lo, hi, n);
    let moment = simpson(|q| q * density(q), lo, hi, n);
    (moment / norm, norm)
}

/// Centroids `(x, y)` and norm of
/// `z_h f(x - a_x) f(y) + z_v f(x) f(y - a_y)` by a full 2D trapezoid sum.
pub fn packet_centroid_2d(
    z_h: Complex64,
    z_v: Complex64,
    a_x: f64,
    a_y: f64,
    sigma: f64,
) -> (f64, f64, f64) {
    let h = 0.25 * sigma;
    let axis = |a: f64| -> Vec<f64> {
        let lo = a.min(0.0) - 13.0 * sigma;
        let hi = a.max(0.0) + 13.0 * sigma;
        let n = ((hi - lo) / h).ceil() as usize;
        (0..=n).map(|k| lo + k as f64 * h).collect()
    };
    let xs = axis(a_x);
    let ys = axis(a_y);
    let (mut norm, mut mx, mut my) = (0.0, 0.0, 0.0);
    for &y in &ys {
        for &x in &xs {
            let psi = z_h * amplitude(x - a_x, sigma) * amplitude(y, sigma)
                + z_v * amplitude(x, sigma) * amplitude(y - a_y, sigma);
            let d = psi.norm_sqr();
            norm += d;
            mx += x * d;
            my += y * d;
        }
    }
    (mx / norm, my / norm, norm * h * h)
}

/// Standard normal CDF by quadrature of the density from a far-left cutoff.
pub fn normal_mass_quadrature(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    let density = |q: f64| (-(q - mean).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt());
    simpson(density, lo, hi, 2_000)
}
