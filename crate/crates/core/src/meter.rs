//! Meter response of a von Neumann polarization measurement after post-selection.
//!
//! For a projector `Pi`, `exp(-i a Pi P) = I + Pi (exp(-i a P) - I)` holds
//! exactly, so after post-selection the pointer is a superposition of two
//! copies of the Gaussian mode: one left in place, one displaced by `a`.
//! Every centroid in this module is evaluated from that two-branch state with
//! the closed-form overlaps of [`crate::pointer`]; nothing is truncated.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::pointer::GaussianPointer;
use crate::polarization::{branch_amplitudes, PolarizationState};

/// Calibrated walk-off of the 1 mm crystal pair, in pixels.
pub const THIN_SHIFT: (f64, f64) = (0.7, 0.7);
/// Calibrated walk-off `(a_x, a_y)` of the 2.5 mm crystal pair, in pixels.
pub const THICK_SHIFT: (f64, f64) = (1.9, 1.7);
/// Measured beam width parameter, in pixels.
pub const BEAM_SIGMA: f64 = 4.3;

/// `g^2` at or above which a coupling is flagged as leaving the weak regime.
pub const WEAK_REGIME_G2: f64 = 0.25;

/// Smallest post-selection probability the sequential model conditions on.
pub const MIN_POSTSELECTION: f64 = 1e-12;

/// Pre-selection angle used throughout the experiment: `(|H> + |V>)/sqrt(2)`.
pub const DIAGONAL_PRESELECTION: f64 = FRAC_PI_4;

const IMAGINARY_TOLERANCE: f64 = 1e-12;

/// Walk-off shifts of the two crystals and the beam width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConfig {
    a_x: f64,
    a_y: f64,
    sigma: f64,
}

impl CouplingConfig {
    pub fn new(a_x: f64, a_y: f64, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        for (name, v) in [("a_x", a_x), ("a_y", a_y)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(Self { a_x, a_y, sigma })
    }

    /// The 1 mm crystal pair.
    pub fn thin() -> Self {
        Self { a_x: THIN_SHIFT.0, a_y: THIN_SHIFT.1, sigma: BEAM_SIGMA }
    }

    /// The 2.5 mm crystal pair.
    pub fn thick() -> Self {
        Self { a_x: THICK_SHIFT.0, a_y: THICK_SHIFT.1, sigma: BEAM_SIGMA }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "thin" => Some(Self::thin()),
            "thick" => Some(Self::thick()),
            _ => None,
        }
    }

    pub fn a_x(&self) -> f64 {
        self.a_x
    }

    pub fn a_y(&self) -> f64 {
        self.a_y
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn g_x(&self) -> f64 {
        self.a_x / self.sigma
    }

    pub fn g_y(&self) -> f64 {
        self.a_y / self.sigma
    }

    /// True once `max(g_x^2, g_y^2)` reaches [`WEAK_REGIME_G2`].
    pub fn weak_regime_advisory(&self) -> bool {
        self.g_x().powi(2).max(self.g_y().powi(2)) >= WEAK_REGIME_G2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    Exact,
    First,
    Third,
}

impl Order {
    pub fn as_str(&self) -> &'static str {
        match self {
            Order::Exact => "exact",
            Order::First => "order1",
            Order::Third => "order3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbativeOrder {
    First,
    Third,
}

impl TryFrom<u32> for PerturbativeOrder {
    type Error = Error;

    fn try_from(order: u32) -> Result<Self> {
        match order {
            1 => Ok(Self::First),
            3 => Ok(Self::Third),
            n => Err(invalid(format!("perturbative order must be 1 or 3, got {n}"))),
        }
    }
}

impl From<PerturbativeOrder> for Order {
    fn from(o: PerturbativeOrder) -> Self {
        match o {
            PerturbativeOrder::First => Order::First,
            PerturbativeOrder::Third => Order::Third,
        }
    }
}

/// Whether a single-axis centroid is divided by the post-selected norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Centroid of the post-selected photons (what a counting detector measures).
    #[default]
    Normalized,
    /// `<Psi_f|Q|Psi_f>` per unit `|z|^2`, without dividing by `<Psi_f|Psi_f>`.
    Unnormalized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterPrediction {
    pub x_centroid: f64,
    pub y_centroid: f64,
    /// Exact post-selection probability, also carried by perturbative predictions.
    pub postselection_probability: f64,
    pub order: Order,
}

/// Pointer state `shifted |f_a> + rest |f>` where the two copies overlap by `overlap`.
///
/// Returns `(norm, centroid * norm)` along the displacement axis. `overlap`
/// includes the overlap along any other axis the branches differ on.
fn two_branch_moments(
    shifted: Complex64,
    rest: Complex64,
    shift: f64,
    overlap: f64,
) -> (f64, f64) {
    let interference = 2.0 * (shifted.conj() * rest).re * overlap;
    let norm = shifted.norm_sqr() + rest.norm_sqr() + interference;
    // <f_a|Q|f_a> = a, <f|Q|f> = 0, Re<f_a|Q|f> = (a/2) <f_a|f>.
    let moment = shift * shifted.norm_sqr() + 0.5 * shift * interference;
    (norm, moment)
}

fn require_real(weak_value: Complex64) -> Result<f64> {
    if !weak_value.is_finite() {
        return Err(invalid("weak value must be finite"));
    }
    if weak_value.im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::UnsupportedImaginary { imag: weak_value.im });
    }
    Ok(weak_value.re)
}

/// Exact meter centroid for a single projector coupling with real weak value `A`.
///
/// Normalized: `a [A^2 + A(1-A) kappa] / [(1-A)^2 + A^2 + 2A(1-A) kappa]`.
/// The denominator is at least 1/2 for real `A`.
pub fn exact_meter_single(
    weak_value: impl Into<Complex64>,
    shift: f64,
    sigma: f64,
    normalization: Normalization,
) -> Result<f64> {
    let aw = require_real(weak_value.into())?;
    let pointer = GaussianPointer::new(sigma)?;
    let kappa = pointer.overlap(shift);
    match normalization {
        Normalization::Normalized => {
            // |Psi_f> / z = (1 - A)|f> + A|f_a>
            let (norm, moment) = two_branch_moments(
                Complex64::new(aw, 0.0),
                Complex64::new(1.0 - aw, 0.0),
                shift,
                kappa,
            );
            Ok(moment / norm)
        }
        Normalization::Unnormalized => {
            // 2 Re[A m] + |A|^2 (a - 2 Re m), m = <f|Q e^{-iaP}|f>
            let m = pointer.first_moment(shift);
            Ok(2.0 * aw * m + aw * aw * (shift - 2.0 * m))
        }
    }
}

/// First- or third-order weak-coupling approximation of the normalized centroid.
///
/// Order 1 is `a A`. Order 3 adds `(a^3 / 8 sigma^2) A (1 - A)(2A - 1)`; the
/// second-order term vanishes because the exact response is odd in `a`.
pub fn perturbative_meter(
    weak_value: f64,
    shift: f64,
    sigma: f64,
    order: PerturbativeOrder,
) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    let first = shift * weak_value;
    Ok(match order {
        PerturbativeOrder::First => first,
        PerturbativeOrder::Third => first + third_order_term(weak_value, shift, sigma),
    })
}

pub(crate) fn third_order_term(aw: f64, shift: f64, sigma: f64) -> f64 {
    shift.powi(3) / (8.0 * sigma * sigma) * aw * (1.0 - aw) * (2.0 * aw - 1.0)
}

/// Large-`|A|` limit of the exact normalized centroid: `a / 2`.
///
/// The exact response is not monotone in `A`: past the region where it tracks
/// `a A` it peaks and then relaxes back to this value from either side.
pub fn saturation_limit(shift: f64) -> f64 {
    0.5 * shift
}

/// Exact centroids of the two-crystal chain.
///
/// The post-selected pointer is `z_H |f(x - a_x)>|f(y)> + z_V |f(x)>|f(y - a_y)>`.
/// Both branches are displaced relative to each other along both axes, so the
/// interference term on each axis carries `kappa_x kappa_y`.
pub fn sequential_meter(
    psi_i: &PolarizationState,
    psi_f: &PolarizationState,
    config: &CouplingConfig,
) -> Result<MeterPrediction> {
    let (z_h, z_v) = branch_amplitudes(psi_i, psi_f);
    // Im<Pi_H>_w = 0 exactly when z_H conj(z_V) is real; this form survives z = 0.
    let phase = (z_h * z_v.conj()).im;
    if phase.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::UnsupportedImaginary { imag: phase });
    }
    let pointer = GaussianPointer::new(config.sigma)?;
    let overlap = pointer.overlap(config.a_x) * pointer.overlap(config.a_y);
    let (norm, mx) = two_branch_moments(z_h, z_v, config.a_x, overlap);
    let (_, my) = two_branch_moments(z_v, z_h, config.a_y, overlap);
    if !(norm > MIN_POSTSELECTION) {
        return Err(Error::VanishingPostselection { probability: norm });
    }
    Ok(MeterPrediction {
        x_centroid: mx / norm,
        y_centroid: my / norm,
        postselection_probability: norm,
        order: Order::Exact,
    })
}

/// Sequential prediction at the requested order.
///
/// Perturbative orders apply [`perturbative_meter`] per axis with `<Pi_H>_w`
/// on X and `<Pi_V>_w` on Y, and carry the exact post-selection probability.
pub fn sequential_prediction(
    psi_i: &PolarizationState,
    psi_f: &PolarizationState,
    config: &CouplingConfig,
    order: Order,
) -> Result<MeterPrediction> {
    let exact = sequential_meter(psi_i, psi_f, config)?;
    let perturbative = match order {
        Order::Exact => return Ok(exact),
        Order::First => PerturbativeOrder::First,
        Order::Third => PerturbativeOrder::Third,
    };
    let (z_h, z_v) = branch_amplitudes(psi_i, psi_f);
    let z = z_h + z_v;
    if z.norm() <= crate::polarization::DEFAULT_DIVERGENCE_TOLERANCE {
        return Err(Error::DivergentWeakValue { overlap: z.norm() });
    }
    let aw_h = require_real(z_h / z)?;
    let aw_v = require_real(z_v / z)?;
    Ok(MeterPrediction {
        x_centroid: perturbative_meter(aw_h, config.a_x, config.sigma, perturbative)?,
        y_centroid: perturbative_meter(aw_v, config.a_y, config.sigma, perturbative)?,
        postselection_probability: exact.postselection_probability,
        order,
    })
}

/// Shortcut for linear pre/post-selection angles.
pub fn sequential_meter_linear(
    theta_i: f64,
    theta_f: f64,
    config: &CouplingConfig,
) -> Result<MeterPrediction> {
    sequential_meter(
        &PolarizationState::linear(theta_i)?,
        &PolarizationState::linear(theta_f)?,
        config,
    )
}
