//! Magneto-optic phase accumulation and the interferometer phase budget.
//!
//! A magnetic field component `B` along the light path rotates the
//! polarization by `V·B·L_eff`, where `V` is the Verdet constant of the
//! medium and `L_eff` the effective interaction length of the chosen
//! geometry: a single pass through a slab, a multi-reflection cell that
//! folds the path (Faraday rotation is nonreciprocal, so the rotation adds
//! on every bounce), or a fiber coil where the length is turns × loop
//! length. The field is modeled as uniform along the path, so the path
//! integral collapses to these products.
//!
//! The total phase seen by the analyzer also contains a Soleil–Babinet
//! compensator offset and the optical path difference of the interferometer;
//! [`PhaseBudget::calibrate_sbc`] sets the compensator so those two cancel
//! exactly and only the magneto-optic phase survives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A magneto-optic medium, characterized by its Verdet constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetoOpticMedium {
    /// Verdet constant, rad/(T·m). Signed: some fibers rotate the other way.
    pub verdet_rad_per_tesla_meter: f64,
}

impl MagnetoOpticMedium {
    /// Builds a medium, rejecting a zero or non-finite Verdet constant.
    pub fn new(verdet_rad_per_tesla_meter: f64) -> Result<Self> {
        let m = Self {
            verdet_rad_per_tesla_meter,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks the Verdet constant is finite and nonzero.
    pub fn validate(&self) -> Result<()> {
        let v = self.verdet_rad_per_tesla_meter;
        if !v.is_finite() || v == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "Verdet constant must be finite and nonzero (got {v})"
            )));
        }
        Ok(())
    }
}

/// The geometry the light traverses while it accumulates Faraday rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FaradayGeometry {
    /// One pass through a slab of the medium.
    SinglePass {
        /// Slab thickness along the field (m).
        thickness_m: f64,
    },
    /// A slab traversed `reflections` times between mirrors; the rotation
    /// accumulates on every traversal.
    MultiReflection {
        /// Number of traversals.
        reflections: u32,
        /// Slab thickness along the field (m).
        thickness_m: f64,
    },
    /// An optical fiber wound into a coil.
    FiberCoil {
        /// Number of turns in the coil.
        turns: u32,
        /// Fiber length per turn (m).
        loop_length_m: f64,
    },
}

impl FaradayGeometry {
    /// Total interaction length: `D`, `N·D`, or `M·L` (m).
    pub fn effective_length_m(&self) -> f64 {
        match *self {
            FaradayGeometry::SinglePass { thickness_m } => thickness_m,
            FaradayGeometry::MultiReflection {
                reflections,
                thickness_m,
            } => f64::from(reflections) * thickness_m,
            FaradayGeometry::FiberCoil {
                turns,
                loop_length_m,
            } => f64::from(turns) * loop_length_m,
        }
    }

    /// Checks all lengths are positive and finite and all counts ≥ 1.
    pub fn validate(&self) -> Result<()> {
        let (count, length) = match *self {
            FaradayGeometry::SinglePass { thickness_m } => (1, thickness_m),
            FaradayGeometry::MultiReflection {
                reflections,
                thickness_m,
            } => (reflections, thickness_m),
            FaradayGeometry::FiberCoil {
                turns,
                loop_length_m,
            } => (turns, loop_length_m),
        };
        if count < 1 {
            return Err(Error::InvalidArgument(format!(
                "geometry count must be ≥ 1 (got {count})"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "geometry length must be positive and finite (got {length} m)"
            )));
        }
        Ok(())
    }
}

/// Magneto-optic phase `φ_mom = V·B·L_eff` (rad) accumulated by field
/// `b_tesla` in `medium` over `geometry`.
///
/// Linear in `B` (sign included); errors on an invalid geometry or medium,
/// or non-finite `B`.
pub fn faraday_phase(
    geometry: &FaradayGeometry,
    medium: &MagnetoOpticMedium,
    b_tesla: f64,
) -> Result<f64> {
    geometry.validate()?;
    medium.validate()?;
    if !b_tesla.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "magnetic field must be finite (got {b_tesla} T)"
        )));
    }
    Ok(medium.verdet_rad_per_tesla_meter * b_tesla * geometry.effective_length_m())
}

/// The three phase contributions between the interferometer arms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseBudget {
    /// Soleil–Babinet compensator phase (rad).
    pub phi_sbc: f64,
    /// Optical-path-difference phase (rad); a free nuisance parameter, not
    /// derived from geometry.
    pub phi_opd: f64,
    /// Magneto-optic phase (rad), the signal term.
    pub phi_mom: f64,
}

impl PhaseBudget {
    /// A budget with only the magneto-optic contribution set.
    pub fn from_phi_mom(phi_mom: f64) -> Self {
        Self {
            phi_sbc: 0.0,
            phi_opd: 0.0,
            phi_mom,
        }
    }

    /// Sets the compensator so it cancels the optical path difference:
    /// `phi_sbc := −phi_opd`, leaving `phi_mom` untouched. Idempotent.
    #[must_use]
    pub fn calibrate_sbc(self) -> Self {
        Self {
            phi_sbc: -self.phi_opd,
            ..self
        }
    }

    /// `true` once `phi_sbc + phi_opd` cancels exactly.
    pub fn is_calibrated(&self) -> bool {
        self.phi_sbc + self.phi_opd == 0.0
    }

    /// Replaces the magneto-optic contribution, e.g. with the output of
    /// [`faraday_phase`] at a new field value.
    #[must_use]
    pub fn with_phi_mom(self, phi_mom: f64) -> Self {
        Self { phi_mom, ..self }
    }

    /// Total accumulated phase `phi_sbc + phi_opd + phi_mom` (rad).
    ///
    /// Summed left to right, so after calibration the cancelling pair
    /// contributes exactly zero and the total equals `phi_mom` exactly.
    pub fn total_phase(&self) -> f64 {
        (self.phi_sbc + self.phi_opd) + self.phi_mom
    }
}
