//! Weak-value-amplified Faraday magnetometry: a simulator and design tool.
//!
//! A weak magnetic field rotates the polarization of light in a
//! magneto-optic medium by a phase far too small to read directly. Placing
//! that interaction between a carefully chosen preparation (*preselection*,
//! offset `β` from the dark port) and a nearly orthogonal projection
//! (*postselection*) multiplies the effect on the surviving photons by the
//! complex *weak value* `A_w`, whose imaginary part scales like `1/β` —
//! at the price of keeping only a fraction `sin²β` of the light. The
//! imaginary part displaces the *spectrum* of the surviving light: a probe
//! line of width `W` centered at `λ₀` shifts by
//! `δλ₀ = −(4π·W²/λ₀)·Im A_w`, nanometers of shift for sub-nanotesla
//! fields.
//!
//! The crate models that chain end to end:
//!
//! - [`polarization`] — states, selections, weak values, postselection
//!   probability;
//! - [`faraday`] — field → phase under three interaction geometries, and
//!   the interferometer phase budget with compensator calibration;
//! - [`spectrum`] — probe spectra, postselected-spectrum synthesis, the
//!   analytic shift;
//! - [`spectrometer`] — binning, deterministic seeded noise, saturation,
//!   detection floor;
//! - [`fit`] — Gaussian peak fitting (moment seed + damped least squares);
//! - [`sensitivity`] — field sweeps, sensitivity `k = d|δλ₀|/dB`,
//!   trade-off-aware design recommendation;
//! - [`config`] / [`cli`] — TOML-driven experiment runner (`weakmag`
//!   binary).
//!
//! Everything is pure and deterministic: noise comes from a counter-based
//! generator keyed by `(seed, draw index)`, so identical inputs produce
//! byte-identical outputs on every platform and thread schedule.
//!
//! # Example
//!
//! Reproduce the headline numbers of the reference configuration — a
//! 1000 m fiber coil in a 1 nT field read out at `β = 0.010`:
//!
//! ```
//! use weakmag::{faraday_phase, postselection_probability, predicted_shift, weak_value};
//! use weakmag::ExperimentSetup;
//!
//! let setup = ExperimentSetup::fiber_reference();
//! let phi = faraday_phase(&setup.geometry, &setup.medium, 1e-9)?;
//! assert!((phi - 3.2e-5).abs() < 1e-15);
//!
//! let wv = weak_value(0.010, phi)?;
//! assert!((wv.imaginary() - 0.3199).abs() < 5e-4);
//!
//! let shift = predicted_shift(&setup.probe, &wv);
//! assert!((shift + 12.06).abs() < 0.15);
//!
//! let survival = postselection_probability(0.010, 0.0);
//! assert!((survival - 1.0e-4).abs() < 1e-6);
//! # Ok::<(), weakmag::Error>(())
//! ```

// Validators negate comparisons (`!(a < b)`) on purpose: NaN fails the
// comparison and therefore takes the rejection branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod faraday;
pub mod fit;
pub mod polarization;
pub mod sensitivity;
pub mod spectrometer;
pub mod spectrum;

pub use error::{Error, Result};
pub use faraday::{faraday_phase, FaradayGeometry, MagnetoOpticMedium, PhaseBudget};
pub use fit::{fit_gaussian, measured_shift, GaussianFit};
pub use polarization::{
    postselection_probability, preselect, postselect, weak_value, weak_value_with_guard,
    Observable, PolarizationState, WeakValue, ORTHOGONALITY_EPSILON,
};
pub use sensitivity::{
    minimum_detectable_field, recommend_design, sensitivity, sensitivity_table, shift_curve,
    zero_field_sensitivity, BetaSearch, DesignConstraints, DesignRecommendation, ExperimentSetup,
    Readout, SensitivityResult, ShiftCurve,
};
pub use spectrometer::{apply_spectrometer, NoiseModel, SpectrometerModel};
pub use spectrum::{
    predicted_shift, sample_probe, synthesize_final_spectrum, CouplingModel, GaussianProbe,
    GridSpec, SpectrumGrid, WidthConvention,
};
