//! Declarative experiment configuration (TOML).
//!
//! A config file mirrors the library types section by section; every
//! physical quantity carries its unit in the key name (`w_nm`,
//! `verdet_rad_per_T_m`) so unit mistakes surface as unknown-key errors
//! instead of silently wrong numbers. Every section has documented defaults
//! — an empty file loads the reference fiber-coil configuration — and all
//! invariants are re-validated at load time with the offending key path in
//! the error message.
//!
//! See `examples/reference_fiber.toml` for a fully spelled-out file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::faraday::{FaradayGeometry, MagnetoOpticMedium, PhaseBudget};
use crate::sensitivity::{BetaSearch, DesignConstraints, ExperimentSetup, Readout};
use crate::spectrometer::{NoiseModel, SpectrometerModel};
use crate::spectrum::{CouplingModel, GaussianProbe, GridSpec, WidthConvention};

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

fn require_positive(key: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(config_err(
            key,
            format!("must be positive and finite (got {value})"),
        ));
    }
    Ok(())
}

fn require_finite(key: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(config_err(key, format!("must be finite (got {value})")));
    }
    Ok(())
}

fn require_nonnegative(key: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(config_err(
            key,
            format!("must be nonnegative and finite (got {value})"),
        ));
    }
    Ok(())
}

/// `[probe]` — the Gaussian source line.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Peak intensity (arbitrary units).
    pub i0: f64,
    /// Carrier wavelength (nm).
    pub lambda0_nm: f64,
    /// Width parameter (nm).
    pub w_nm: f64,
    /// Width convention: `"variance"` (default) or `"squared-width"`.
    pub convention: WidthConvention,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            i0: 1.0,
            lambda0_nm: 833.0,
            w_nm: 50.0,
            convention: WidthConvention::Variance,
        }
    }
}

/// `[coupling]` — pointer coupling override.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    /// Coupling constant (nm); defaults to the probe carrier wavelength.
    pub g_nm: Option<f64>,
}

/// `[medium]` — the magneto-optic medium.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    /// Verdet constant, rad/(T·m).
    #[serde(rename = "verdet_rad_per_T_m")]
    pub verdet_rad_per_t_m: f64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            verdet_rad_per_t_m: 32.0,
        }
    }
}

/// `[budget]` — static interferometer phases (rad). The magneto-optic term
/// comes from the field sweep; the compensator is calibrated against the
/// path difference at build time.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    /// Compensator phase (rad) before calibration.
    pub phi_sbc_rad: f64,
    /// Optical-path-difference phase (rad).
    pub phi_opd_rad: f64,
}

/// `[spectrometer]` — optional instrument model.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrometerConfig {
    /// Lower window edge (nm).
    pub lambda_min_nm: f64,
    /// Upper window edge (nm).
    pub lambda_max_nm: f64,
    /// Bin width (nm).
    pub bin_width_nm: f64,
    /// Detection floor (intensity units).
    pub intensity_floor: f64,
    /// Saturation level (intensity units); defaults to unbounded.
    pub saturation: f64,
    /// Noise model: `{ kind = "none" }`, `{ kind = "shot", scale = … }`, or
    /// `{ kind = "gaussian", sigma = … }`.
    pub noise: NoiseModel,
    /// Noise seed; defaults to the top-level run seed.
    pub seed: Option<u64>,
}

impl Default for SpectrometerConfig {
    fn default() -> Self {
        Self {
            lambda_min_nm: 633.0,
            lambda_max_nm: 1033.0,
            bin_width_nm: 1.0,
            intensity_floor: 0.0,
            saturation: f64::INFINITY,
            noise: NoiseModel::None,
            seed: None,
        }
    }
}

/// `[sweep]` — analyzer offsets and the field range.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Analyzer offsets (rad), one shift curve each.
    pub betas_rad: Vec<f64>,
    /// First field value (T).
    pub b_min_tesla: f64,
    /// Last field value (T).
    pub b_max_tesla: f64,
    /// Number of field values, endpoints included.
    pub steps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            betas_rad: vec![0.007, 0.010, 0.013],
            b_min_tesla: 0.0,
            b_max_tesla: 2e-9,
            steps: 21,
        }
    }
}

/// `[design]` — instrument constraints and the offset search grid for the
/// design recommendation.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    /// Available source peak intensity.
    pub i0_max: f64,
    /// Spectrometer detection floor.
    pub intensity_floor: f64,
    /// Smallest resolvable shift (nm).
    pub wavelength_resolution_nm: f64,
    /// Field accuracy the design must reach (T).
    pub target_field_accuracy_tesla: f64,
    /// Smallest offset searched (rad).
    #[serde(default = "default_beta_min")]
    pub beta_min_rad: f64,
    /// Largest offset searched (rad).
    #[serde(default = "default_beta_max")]
    pub beta_max_rad: f64,
    /// Search grid step (rad).
    #[serde(default = "default_beta_step")]
    pub beta_step_rad: f64,
}

fn default_beta_min() -> f64 {
    BetaSearch::default().min_rad
}

fn default_beta_max() -> f64 {
    BetaSearch::default().max_rad
}

fn default_beta_step() -> f64 {
    BetaSearch::default().step_rad
}

/// `[readout]` — how shifts are extracted.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutConfig {
    /// `"analytic"` (closed form) or `"synthetic"` (synthesize + fit).
    pub mode: ReadoutMode,
    /// Synthesis grid point count.
    pub grid_points: usize,
    /// Synthesis grid half-span in probe widths around the carrier.
    pub grid_half_widths: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            mode: ReadoutMode::Analytic,
            grid_points: 4001,
            grid_half_widths: 5.0,
        }
    }
}

/// Readout selector in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutMode {
    /// Closed-form shift.
    #[default]
    Analytic,
    /// Synthesized spectra + Gaussian fits.
    Synthetic,
}

/// `[output]` — where result files land.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output directory; created if missing.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// A parsed experiment configuration. Every section is optional in the
/// file; omitted sections take the reference-configuration defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// The Gaussian source line.
    pub probe: ProbeConfig,
    /// Pointer coupling override.
    pub coupling: CouplingConfig,
    /// Faraday interaction geometry (`kind = "single-pass" | "multi-reflection"
    /// | "fiber-coil"` plus the matching dimensions).
    pub geometry: Option<FaradayGeometry>,
    /// Magneto-optic medium.
    pub medium: MediumConfig,
    /// Static interferometer phases.
    pub budget: BudgetConfig,
    /// Optional instrument model.
    pub spectrometer: Option<SpectrometerConfig>,
    /// Sweep definition.
    pub sweep: SweepConfig,
    /// Optional design constraints.
    pub design: Option<DesignConfig>,
    /// Shift readout path.
    pub readout: ReadoutConfig,
    /// Output locations.
    pub output: OutputConfig,
    /// Run seed; feeds every deterministic noise stream unless the
    /// spectrometer pins its own.
    pub seed: u64,
}

impl RunConfig {
    /// Parses a TOML string.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)
            .map_err(|e| config_err("(config)", e.to_string().trim().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and parses a TOML file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            config_err("(config)", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Re-checks every invariant, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        require_positive("probe.i0", self.probe.i0)?;
        require_positive("probe.lambda0_nm", self.probe.lambda0_nm)?;
        require_positive("probe.w_nm", self.probe.w_nm)?;
        if let Some(g) = self.coupling.g_nm {
            require_positive("coupling.g_nm", g)?;
        }
        let verdet = self.medium.verdet_rad_per_t_m;
        if !verdet.is_finite() || verdet == 0.0 {
            return Err(config_err(
                "medium.verdet_rad_per_T_m",
                format!("must be finite and nonzero (got {verdet})"),
            ));
        }
        if let Some(geometry) = &self.geometry {
            let key = match geometry {
                FaradayGeometry::SinglePass { .. } => "geometry.thickness_m",
                FaradayGeometry::MultiReflection { reflections, .. } => {
                    if *reflections < 1 {
                        return Err(config_err("geometry.reflections", "must be ≥ 1"));
                    }
                    "geometry.thickness_m"
                }
                FaradayGeometry::FiberCoil { turns, .. } => {
                    if *turns < 1 {
                        return Err(config_err("geometry.turns", "must be ≥ 1"));
                    }
                    "geometry.loop_length_m"
                }
            };
            geometry
                .validate()
                .map_err(|e| config_err(key, e.to_string()))?;
        }
        require_finite("budget.phi_sbc_rad", self.budget.phi_sbc_rad)?;
        require_finite("budget.phi_opd_rad", self.budget.phi_opd_rad)?;
        if let Some(sp) = &self.spectrometer {
            sp.to_model(0).validate().map_err(|e| {
                config_err("spectrometer", e.to_string())
            })?;
        }
        if self.sweep.betas_rad.is_empty() {
            return Err(config_err("sweep.betas_rad", "must not be empty"));
        }
        for beta in &self.sweep.betas_rad {
            require_finite("sweep.betas_rad", *beta)?;
        }
        require_finite("sweep.b_min_tesla", self.sweep.b_min_tesla)?;
        require_finite("sweep.b_max_tesla", self.sweep.b_max_tesla)?;
        if self.sweep.steps < 2 {
            return Err(config_err(
                "sweep.steps",
                format!("must be ≥ 2 (got {})", self.sweep.steps),
            ));
        }
        if !(self.sweep.b_min_tesla < self.sweep.b_max_tesla) {
            return Err(config_err(
                "sweep.b_max_tesla",
                format!(
                    "must exceed b_min_tesla (got [{}, {}])",
                    self.sweep.b_min_tesla, self.sweep.b_max_tesla
                ),
            ));
        }
        if let Some(design) = &self.design {
            require_positive("design.i0_max", design.i0_max)?;
            require_nonnegative("design.intensity_floor", design.intensity_floor)?;
            require_nonnegative(
                "design.wavelength_resolution_nm",
                design.wavelength_resolution_nm,
            )?;
            require_positive(
                "design.target_field_accuracy_tesla",
                design.target_field_accuracy_tesla,
            )?;
            design.beta_search().validate().map_err(|e| {
                config_err("design.beta_min_rad", e.to_string())
            })?;
        }
        if self.readout.grid_points < 32 {
            return Err(config_err(
                "readout.grid_points",
                format!("must be ≥ 32 (got {})", self.readout.grid_points),
            ));
        }
        require_positive("readout.grid_half_widths", self.readout.grid_half_widths)?;
        Ok(())
    }

    /// The configured geometry, or the reference fiber coil.
    pub fn geometry(&self) -> FaradayGeometry {
        self.geometry.unwrap_or(FaradayGeometry::FiberCoil {
            turns: 1000,
            loop_length_m: 1.0,
        })
    }

    /// The synthesis grid implied by `[readout]` (also used for spectrum
    /// files when the readout is analytic).
    pub fn grid(&self) -> GridSpec {
        GridSpec::span_widths(
            &self.probe_model(),
            self.readout.grid_half_widths,
            self.readout.grid_points,
        )
    }

    /// The field values implied by `[sweep]`.
    pub fn field_values(&self) -> Vec<f64> {
        crate::sensitivity::linspace(
            self.sweep.b_min_tesla,
            self.sweep.b_max_tesla,
            self.sweep.steps,
        )
    }

    /// Design constraints and search grid, when `[design]` is present.
    pub fn design_inputs(&self) -> Option<(DesignConstraints, BetaSearch)> {
        self.design.as_ref().map(|d| {
            (
                DesignConstraints {
                    i0_max: d.i0_max,
                    intensity_floor: d.intensity_floor,
                    wavelength_resolution_nm: d.wavelength_resolution_nm,
                    target_field_accuracy_tesla: d.target_field_accuracy_tesla,
                },
                d.beta_search(),
            )
        })
    }

    fn probe_model(&self) -> GaussianProbe {
        GaussianProbe {
            i0: self.probe.i0,
            lambda0_nm: self.probe.lambda0_nm,
            w_nm: self.probe.w_nm,
        }
    }

    /// Builds the experiment setup this config describes. The budget is
    /// calibrated here; the spectrometer inherits `seed` unless it pins its
    /// own.
    pub fn build(&self) -> Result<ExperimentSetup> {
        self.validate()?;
        let probe = self.probe_model();
        let mut coupling = CouplingModel::for_probe(&probe);
        if let Some(g) = self.coupling.g_nm {
            coupling.coupling_nm = g;
        }
        coupling = coupling.with_convention(self.probe.convention);
        let budget = PhaseBudget {
            phi_sbc: self.budget.phi_sbc_rad,
            phi_opd: self.budget.phi_opd_rad,
            phi_mom: 0.0,
        }
        .calibrate_sbc();
        let readout = match self.readout.mode {
            ReadoutMode::Analytic => Readout::Analytic,
            ReadoutMode::Synthetic => Readout::Synthetic { grid: self.grid() },
        };
        let setup = ExperimentSetup {
            probe,
            coupling,
            geometry: self.geometry(),
            medium: MagnetoOpticMedium {
                verdet_rad_per_tesla_meter: self.medium.verdet_rad_per_t_m,
            },
            budget,
            spectrometer: self.spectrometer.as_ref().map(|sp| sp.to_model(self.seed)),
            readout,
        };
        setup.validate()?;
        Ok(setup)
    }
}

impl DesignConfig {
    fn beta_search(&self) -> BetaSearch {
        BetaSearch {
            min_rad: self.beta_min_rad,
            max_rad: self.beta_max_rad,
            step_rad: self.beta_step_rad,
        }
    }
}

impl SpectrometerConfig {
    /// The instrument model, with `fallback_seed` when the section did not
    /// pin one.
    pub fn to_model(&self, fallback_seed: u64) -> SpectrometerModel {
        SpectrometerModel {
            lambda_min_nm: self.lambda_min_nm,
            lambda_max_nm: self.lambda_max_nm,
            bin_width_nm: self.bin_width_nm,
            intensity_floor: self.intensity_floor,
            saturation: self.saturation,
            noise: self.noise,
            seed: self.seed.unwrap_or(fallback_seed),
        }
    }
}
