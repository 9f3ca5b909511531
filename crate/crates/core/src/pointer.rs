//! Gaussian transverse pointer.
//!
//! The pointer amplitude is `f(q) = (2 pi sigma^2)^(-1/4) exp(-(q - c)^2 / 4 sigma^2)`,
//! so `|f|^2` is a normal density with standard deviation `sigma`. A walk-off
//! by `a` pixels turns `f(q)` into `f(q - a)`; everything the meter model and
//! the detector need reduces to three closed forms:
//!
//! - overlap `kappa(a) = <f|f_a> = exp(-a^2 / 8 sigma^2)`,
//! - first moment `<f|Q|f_a> = (c + a/2) kappa(a)`,
//! - cross density `f(q) f(q - a) = kappa(a) N(q; c + a/2, sigma^2)`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPointer {
    sigma: f64,
    center: f64,
}

/// Per-bin integrals of the three terms of a two-branch pointer intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinIntegrals {
    /// `int_bin |f(q)|^2 dq`
    pub zero: f64,
    /// `int_bin |f(q - a)|^2 dq`
    pub shift: f64,
    /// `int_bin f(q) f(q - a) dq`
    pub cross: f64,
}

impl GaussianPointer {
    pub fn new(sigma: f64) -> Result<Self> {
        Self::centered_at(sigma, 0.0)
    }

    pub fn centered_at(sigma: f64, center: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if !center.is_finite() {
            return Err(invalid("pointer center must be finite"));
        }
        Ok(Self { sigma, center })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Amplitude `f(q)`.
    pub fn amplitude(&self, q: f64) -> f64 {
        let d = q - self.center;
        (2.0 * PI * self.sigma * self.sigma).powf(-0.25)
            * (-d * d / (4.0 * self.sigma * self.sigma)).exp()
    }

    pub fn intensity(&self, q: f64) -> f64 {
        self.amplitude(q).powi(2)
    }

    /// `<f|f_a>`; independent of the center.
    pub fn overlap(&self, shift: f64) -> f64 {
        kappa(shift, self.sigma)
    }

    /// `<f|Q|f_a>`, the position matrix element between the unshifted and shifted modes.
    pub fn first_moment(&self, shift: f64) -> f64 {
        (self.center + 0.5 * shift) * kappa(shift, self.sigma)
    }

    pub fn bin_integrals(&self, shift: f64, lo: f64, hi: f64) -> Result<BinIntegrals> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(invalid(format!("degenerate bin [{lo}, {hi})")));
        }
        let c = self.center;
        let s = self.sigma;
        Ok(BinIntegrals {
            zero: normal_mass(lo, hi, c, s),
            shift: normal_mass(lo, hi, c + shift, s),
            cross: kappa(shift, s) * normal_mass(lo, hi, c + 0.5 * shift, s),
        })
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("sigma must be positive and finite, got {sigma}")))
    }
}

fn kappa(shift: f64, sigma: f64) -> f64 {
    (-shift * shift / (8.0 * sigma * sigma)).exp()
}

/// Overlap `<f(q)|f(q - a)>` of a Gaussian mode with its shifted copy.
pub fn overlap_kappa(shift_a: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(kappa(shift_a, sigma))
}

/// `<f|Q e^{-iaP}|f> = (a/2) kappa(a)` for the centered real Gaussian.
pub fn shifted_first_moment(shift_a: f64, sigma: f64) -> Result<f64> {
    Ok(GaussianPointer::new(sigma)?.first_moment(shift_a))
}

/// Bin integrals for the pointer centered at 0.
pub fn bin_integrals(shift_a: f64, sigma: f64, bin_lo: f64, bin_hi: f64) -> Result<BinIntegrals> {
    GaussianPointer::new(sigma)?.bin_integrals(shift_a, bin_lo, bin_hi)
}

/// Probability mass of `N(mean, sd^2)` on `[lo, hi]`.
///
/// The difference is taken between complementary error functions on the
/// same side of the mean, so tail bins keep full relative precision.
pub fn normal_mass(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    let zl = (lo - mean) / (sd * SQRT_2);
    let zh = (hi - mean) / (sd * SQRT_2);
    if zl >= 0.0 {
        0.5 * (libm::erfc(zl) - libm::erfc(zh))
    } else if zh <= 0.0 {
        0.5 * (libm::erfc(-zh) - libm::erfc(-zl))
    } else {
        1.0 - 0.5 * (libm::erfc(zh) + libm::erfc(-zl))
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        assert_eq!(overlap_kappa(0.0, 4.3).unwrap(), 1.0);
        assert!((overlap_kappa(0.7, 4.3).unwrap() - 0.996693).abs() < 5e-7);
        assert!((overlap_kappa(1.7, 4.3).unwrap() - 0.980652).abs() < 5e-7);
        assert_eq!(overlap_kappa(-1.7, 4.3).unwrap(), overlap_kappa(1.7, 4.3).unwrap());
    }

    #[test]
    fn moment_examples() {
        assert_eq!(shifted_first_moment(0.0, 4.3).unwrap(), 0.0);
        assert!((shifted_first_moment(0.7, 4.3).unwrap() - 0.348843).abs() < 5e-7);
        assert!((shifted_first_moment(1.7, 4.3).unwrap() - 0.833554).abs() < 5e-7);
        assert_eq!(
            shifted_first_moment(-1.7, 4.3).unwrap(),
            -shifted_first_moment(1.7, 4.3).unwrap()
        );
    }

    #[test]
    fn non_positive_sigma_rejected() {
        assert!(overlap_kappa(1.0, 0.0).is_err());
        assert!(shifted_first_moment(1.0, -2.0).is_err());
        assert!(bin_integrals(1.0, f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn degenerate_bin_rejected() {
        assert!(bin_integrals(1.0, 4.3, 1.0, 1.0).is_err());
        assert!(bin_integrals(1.0, 4.3, 2.0, 1.0).is_err());
    }

    #[test]
    fn unshifted_terms_coincide() {
        let b = bin_integrals(0.0, 4.3, 1.25, 2.5).unwrap();
        assert_eq!(b.zero, b.shift);
        assert_eq!(b.zero, b.cross);
    }

    #[test]
    fn whole_line_masses() {
        let b = bin_integrals(1.7, 4.3, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(b.zero, 1.0);
        assert_eq!(b.shift, 1.0);
        assert!((b.cross - 0.980652).abs() < 5e-7);
    }

    #[test]
    fn symmetric_bin_cross_term() {
        // 2 Phi(0.85 / 4.3) - 1 = 0.15670019424735...
        let b = bin_integrals(1.7, 4.3, 0.0, 1.7).unwrap();
        let mass = 2.0 * normal_cdf(0.85 / 4.3) - 1.0;
        assert!((mass - 0.156700194247).abs() < 1e-11);
        assert!((b.cross - 0.153668364195).abs() < 1e-11);
    }

    #[test]
    fn normal_cdf_reference_values() {
        // Reference values to 16 digits.
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-15);
        assert!((normal_cdf(-3.0) - 0.0013498980316301).abs() < 1e-16);
        let tail = normal_cdf(-8.0);
        assert!((tail / 6.220960574271784e-16 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_bins_keep_relative_precision() {
        // Far-tail bin: relative accuracy is what matters for the dark-count floor.
        let m = normal_mass(30.0, 31.0, 0.0, 4.3);
        let expect = 0.5 * (libm::erfc(30.0 / (4.3 * SQRT_2)) - libm::erfc(31.0 / (4.3 * SQRT_2)));
        assert!(m > 0.0 && (m / expect - 1.0).abs() < 1e-12);
        let mirrored = normal_mass(-31.0, -30.0, 0.0, 4.3);
        assert_eq!(m, mirrored);
    }

    #[test]
    fn cauchy_schwarz_per_bin() {
        for i in -20..20 {
            let lo = i as f64;
            let b = bin_integrals(1.9, 4.3, lo, lo + 1.0).unwrap();
            assert!(b.cross * b.cross <= b.zero * b.shift * (1.0 + 1e-12));
        }
    }

    #[test]
    fn centered_pointer_moves_everything() {
        let p = GaussianPointer::centered_at(4.3, 15.5).unwrap();
        assert!((p.first_moment(0.0) - 15.5).abs() < 1e-15);
        let b = p.bin_integrals(1.0, 15.5, 16.5).unwrap();
        let b0 = bin_integrals(1.0, 4.3, 0.0, 1.0).unwrap();
        assert!((b.zero - b0.zero).abs() < 1e-15 && (b.cross - b0.cross).abs() < 1e-15);
    }
}
