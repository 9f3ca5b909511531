//! Two-level polarization algebra over the `{H, V}` basis.
//!
//! States are kept as complex amplitude pairs. The experiment only ever uses
//! real linear states `cos(theta)|H> + sin(theta)|V>`, but weak values are
//! defined for arbitrary pairs, so nothing here assumes reality; callers that
//! need a real weak value check the imaginary part themselves.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Default bound on `|<psi_f|psi_i>|` below which the weak value is treated as divergent.
pub const DEFAULT_DIVERGENCE_TOLERANCE: f64 = 1e-10;

const NORM_TOLERANCE: f64 = 1e-12;

/// A normalized pure polarization state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    amp_h: Complex64,
    amp_v: Complex64,
}

impl PolarizationState {
    pub const H: Self = Self {
        amp_h: Complex64::new(1.0, 0.0),
        amp_v: Complex64::new(0.0, 0.0),
    };
    pub const V: Self = Self {
        amp_h: Complex64::new(0.0, 0.0),
        amp_v: Complex64::new(1.0, 0.0),
    };

    /// The linear state `cos(theta)|H> + sin(theta)|V>`.
    pub fn linear(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(invalid(format!("polarization angle must be finite, got {theta}")));
        }
        let (sin, cos) = theta.sin_cos();
        Ok(Self {
            amp_h: Complex64::new(cos, 0.0),
            amp_v: Complex64::new(sin, 0.0),
        })
    }

    /// Builds a state from amplitudes that must already be normalized to 1e-12.
    pub fn from_amplitudes(amp_h: Complex64, amp_v: Complex64) -> Result<Self> {
        if !(amp_h.is_finite() && amp_v.is_finite()) {
            return Err(invalid("amplitudes must be finite"));
        }
        let norm = amp_h.norm_sqr() + amp_v.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(invalid(format!("state is not normalized: |h|^2 + |v|^2 = {norm}")));
        }
        Ok(Self { amp_h, amp_v })
    }

    /// Builds a state from arbitrary nonzero amplitudes, rescaling to unit norm.
    pub fn normalized(amp_h: Complex64, amp_v: Complex64) -> Result<Self> {
        let norm = (amp_h.norm_sqr() + amp_v.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("cannot normalize a zero or non-finite amplitude pair"));
        }
        Ok(Self {
            amp_h: amp_h / norm,
            amp_v: amp_v / norm,
        })
    }

    pub fn amp_h(&self) -> Complex64 {
        self.amp_h
    }

    pub fn amp_v(&self) -> Complex64 {
        self.amp_v
    }

    pub fn amplitude(&self, axis: Axis) -> Complex64 {
        match axis {
            Axis::H => self.amp_h,
            Axis::V => self.amp_v,
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amp_h.conj() * other.amp_h + self.amp_v.conj() * other.amp_v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    H,
    V,
}

impl Axis {
    pub fn other(self) -> Self {
        match self {
            Axis::H => Axis::V,
            Axis::V => Axis::H,
        }
    }
}

/// Rank-one projector `|axis><axis|` onto a basis polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Projector {
    pub axis: Axis,
}

impl Projector {
    pub const H: Self = Self { axis: Axis::H };
    pub const V: Self = Self { axis: Axis::V };

    /// Applies the projector, returning the (unnormalized) amplitude pair `(h, v)`.
    pub fn apply(&self, state: &PolarizationState) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        match self.axis {
            Axis::H => (state.amp_h, zero),
            Axis::V => (zero, state.amp_v),
        }
    }

    /// `<bra|P|ket>`.
    pub fn matrix_element(&self, bra: &PolarizationState, ket: &PolarizationState) -> Complex64 {
        bra.amplitude(self.axis).conj() * ket.amplitude(self.axis)
    }
}

/// Weak value together with the pre/post overlap it was divided by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    pub value: Complex64,
    /// `z = <psi_f|psi_i>`.
    pub overlap_z: Complex64,
}

impl WeakValue {
    /// Real part, or [`Error::UnsupportedImaginary`] if the imaginary part exceeds `tol`.
    pub fn real(&self, tol: f64) -> Result<f64> {
        if self.value.im.abs() > tol {
            return Err(Error::UnsupportedImaginary { imag: self.value.im });
        }
        Ok(self.value.re)
    }
}

/// `<psi_f|psi_i>`.
pub fn inner_product(psi_f: &PolarizationState, psi_i: &PolarizationState) -> Complex64 {
    psi_f.inner(psi_i)
}

/// `<psi_f|P|psi_i> / <psi_f|psi_i>` with the default divergence tolerance.
pub fn weak_value(
    obs: Projector,
    psi_i: &PolarizationState,
    psi_f: &PolarizationState,
) -> Result<WeakValue> {
    weak_value_with_tolerance(obs, psi_i, psi_f, DEFAULT_DIVERGENCE_TOLERANCE)
}

pub fn weak_value_with_tolerance(
    obs: Projector,
    psi_i: &PolarizationState,
    psi_f: &PolarizationState,
    tolerance: f64,
) -> Result<WeakValue> {
    let z = inner_product(psi_f, psi_i);
    if z.norm() <= tolerance {
        return Err(Error::DivergentWeakValue { overlap: z.norm() });
    }
    Ok(WeakValue {
        value: obs.matrix_element(psi_f, psi_i) / z,
        overlap_z: z,
    })
}

/// Splits the overlap into its `|H>` and `|V>` paths:
/// `z_H = <psi_f|H><H|psi_i>`, `z_V = <psi_f|V><V|psi_i>`, with `z_H + z_V = z`.
pub fn branch_amplitudes(
    psi_i: &PolarizationState,
    psi_f: &PolarizationState,
) -> (Complex64, Complex64) {
    (
        Projector::H.matrix_element(psi_f, psi_i),
        Projector::V.matrix_element(psi_f, psi_i),
    )
}

/// Linear post-selection angle that gives `<Pi_H>_w = target` for the linear
/// pre-selection at `theta_i`.
///
/// For linear states `<Pi_H>_w = 1 / (1 + tan(theta_i) tan(theta_f))`, so
/// `tan(theta_f) = (1 - A) / (A tan(theta_i))`. The returned angle lies in
/// `(-pi/2, pi/2]`.
pub fn postselection_angle_for(target: f64, theta_i: f64) -> Result<f64> {
    if !(target.is_finite() && theta_i.is_finite()) {
        return Err(invalid("target weak value and theta_i must be finite"));
    }
    let (sin_i, cos_i) = theta_i.sin_cos();
    let y = (1.0 - target) * cos_i;
    let x = target * sin_i;
    if x == 0.0 && y == 0.0 {
        return Err(invalid(format!(
            "weak value {target} is not reachable from theta_i = {theta_i}"
        )));
    }
    let mut theta_f = y.atan2(x);
    if theta_f > FRAC_PI_2 {
        theta_f -= std::f64::consts::PI;
    } else if theta_f <= -FRAC_PI_2 {
        theta_f += std::f64::consts::PI;
    }

    let reached = weak_value(
        Projector::H,
        &PolarizationState::linear(theta_i)?,
        &PolarizationState::linear(theta_f)?,
    )
    .map(|w| w.value.re);
    match reached {
        Ok(v) if (v - target).abs() <= 1e-9 * target.abs().max(1.0) => Ok(theta_f),
        _ => Err(invalid(format!(
            "weak value {target} is not reachable from theta_i = {theta_i}"
        ))),
    }
}
