//! Simulation and analysis of weak-value measurements of photon polarization.
//!
//! A heralded photon is prepared in a linear polarization state, weakly coupled
//! to its own transverse position by two birefringent crystals (one shifting
//! `|V>` along Y, one shifting `|H>` along X), post-selected onto a second
//! polarization state and finally counted on a 32x32 SPAD array. The meter
//! readout is the centroid of the post-selected beam.
//!
//! Modules, bottom-up:
//!
//! - [`polarization`]: two-level state algebra, projectors, weak values.
//! - [`pointer`]: the Gaussian transverse pointer and its closed-form integrals.
//! - [`meter`]: exact and perturbative meter response, single and sequential.
//! - [`detector`]: pixel probabilities, count sampling, centroid estimation.
//! - [`analysis`]: weak-value extraction, bias, validity regions and sweeps.
//!
//! All lengths are in detector pixels.

pub mod analysis;
pub mod detector;
mod error;
pub mod meter;
pub mod pointer;
pub mod polarization;

pub use error::{Error, Result};

pub use analysis::{
    bias_curve, extract_weak_value, normalized_deviation, sweep_postselection, validity_region,
    weak_value_grid, write_sweep_csv, BiasRow, Interval, SweepRow, ValidityReport,
};
pub use detector::{
    calibrate_shifts, centroid_estimate, pixel_probability_map, simulate_counts, Centroid,
    CountMap, DetectionConfig, PixelGrid, ProbabilityMap, ShiftCalibration,
};
pub use meter::{
    exact_meter_single, perturbative_meter, saturation_limit, sequential_meter,
    sequential_prediction, CouplingConfig,
    MeterPrediction, Normalization, Order, PerturbativeOrder,
};
pub use pointer::{bin_integrals, overlap_kappa, shifted_first_moment, BinIntegrals, GaussianPointer};
pub use polarization::{
    branch_amplitudes, inner_product, postselection_angle_for, weak_value, Axis,
    PolarizationState, Projector, WeakValue,
};
