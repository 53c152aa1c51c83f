//! Field sweeps, sensitivity extraction, and constrained design.
//!
//! A [`ShiftCurve`] records the pointer shift against the applied magnetic
//! field at a fixed analyzer offset `β`. Its least-squares slope magnitude
//! `k = d|δλ₀|/dB` (nm/T) is the sensitivity figure of merit; it grows as
//! `β` shrinks while the postselected flux `sin²β` falls, and
//! [`recommend_design`] negotiates that trade-off against instrument
//! constraints.
//!
//! Two readout paths produce shifts: the analytic path evaluates the
//! closed-form displacement, and the synthetic path synthesizes the
//! postselected spectrum (optionally degraded by a spectrometer model) and
//! recovers the displacement by Gaussian fitting. The two agree to first
//! order in the accumulated phase and are cross-checked in the test suite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faraday::{faraday_phase, FaradayGeometry, MagnetoOpticMedium, PhaseBudget};
use crate::fit::{fit_gaussian, measured_shift, GaussianFit};
use crate::polarization::{postselection_probability, weak_value};
use crate::spectrometer::{apply_spectrometer, derive_seed, SpectrometerModel};
use crate::spectrum::{
    predicted_shift, sample_probe, synthesize_final_spectrum, CouplingModel, GaussianProbe,
    GridSpec, SpectrumGrid,
};

/// How shifts are read out of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Readout {
    /// Closed-form displacement from the weak value. Fast and noiseless;
    /// ignores any spectrometer model.
    Analytic,
    /// Synthesize spectra on `grid`, pass them through the spectrometer
    /// model when one is configured, and fit Gaussians.
    Synthetic {
        /// Wavelength grid the spectra are synthesized on.
        grid: GridSpec,
    },
}

/// Everything needed to evaluate shifts: probe, coupling, geometry, medium,
/// phase budget, optional instrument, and the readout path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSetup {
    /// The Gaussian probe line.
    pub probe: GaussianProbe,
    /// Pointer coupling constants and width convention.
    pub coupling: CouplingModel,
    /// Faraday interaction geometry.
    pub geometry: FaradayGeometry,
    /// Magneto-optic medium.
    pub medium: MagnetoOpticMedium,
    /// Phase budget; must be calibrated (compensator cancels the static
    /// path difference) so the zero-field phase is exactly zero.
    pub budget: PhaseBudget,
    /// Instrument model applied in synthetic readout, if any.
    pub spectrometer: Option<SpectrometerModel>,
    /// Shift readout path.
    pub readout: Readout,
}

impl ExperimentSetup {
    /// The reference configuration used throughout the documentation: unit
    /// peak intensity, 833 nm carrier, 50 nm width (variance convention),
    /// Verdet constant 32 rad/(T·m), a 1000-turn fiber coil of 1 m loops,
    /// calibrated budget, analytic readout, no spectrometer.
    pub fn fiber_reference() -> Self {
        let probe = GaussianProbe {
            i0: 1.0,
            lambda0_nm: 833.0,
            w_nm: 50.0,
        };
        Self {
            probe,
            coupling: CouplingModel::for_probe(&probe),
            geometry: FaradayGeometry::FiberCoil {
                turns: 1000,
                loop_length_m: 1.0,
            },
            medium: MagnetoOpticMedium {
                verdet_rad_per_tesla_meter: 32.0,
            },
            budget: PhaseBudget::default(),
            spectrometer: None,
            readout: Readout::Analytic,
        }
    }

    /// Validates every component and the calibration invariant.
    pub fn validate(&self) -> Result<()> {
        self.probe.validate()?;
        self.coupling.validate()?;
        self.geometry.validate()?;
        self.medium.validate()?;
        if !self.budget.is_calibrated() {
            return Err(Error::InvalidArgument(format!(
                "phase budget is not calibrated: phi_sbc + phi_opd = {} rad \
                 (run calibrate_sbc first)",
                self.budget.phi_sbc + self.budget.phi_opd
            )));
        }
        if let Some(spectrometer) = &self.spectrometer {
            spectrometer.validate()?;
        }
        if let Readout::Synthetic { grid } = &self.readout {
            grid.validate()?;
        }
        Ok(())
    }

    /// Total accumulated phase (rad) at field `b_tesla`.
    pub fn phase_at(&self, b_tesla: f64) -> Result<f64> {
        let phi_mom = faraday_phase(&self.geometry, &self.medium, b_tesla)?;
        Ok(self.budget.with_phi_mom(phi_mom).total_phase())
    }
}

/// One evaluated sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Applied magnetic field (T).
    pub b_tesla: f64,
    /// Pointer shift (nm) relative to the probe carrier.
    pub shift_nm: f64,
}

/// Pointer shift versus magnetic field at a fixed analyzer offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftCurve {
    /// Analyzer offset (rad) the curve was swept at.
    pub beta: f64,
    /// Evaluated points, in increasing field order.
    pub points: Vec<CurvePoint>,
}

impl ShiftCurve {
    /// Writes the curve as CSV with header `B_tesla,shift_nm`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "B_tesla,shift_nm")?;
        for point in &self.points {
            writeln!(out, "{},{}", point.b_tesla, point.shift_nm)?;
        }
        Ok(())
    }

    /// The CSV serialization as a string.
    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Sweeps the field values and records the shift at each.
///
/// `b_values` must be nonempty and strictly increasing (negative fields are
/// fine). Per-point failures — orthogonal selection, fit failures — are
/// tagged with the offending field value. In synthetic readout with a
/// spectrometer, each point uses noise streams derived from the instrument
/// seed and the point index, so results are independent of evaluation
/// order.
pub fn shift_curve(setup: &ExperimentSetup, beta: f64, b_values: &[f64]) -> Result<ShiftCurve> {
    setup.validate()?;
    if b_values.is_empty() {
        return Err(Error::InvalidArgument(
            "field sweep needs at least one value".into(),
        ));
    }
    if b_values.windows(2).any(|pair| !(pair[1] > pair[0])) {
        return Err(Error::InvalidArgument(
            "field sweep values must be strictly increasing".into(),
        ));
    }

    // Without per-point noise the initial spectrum and its fit are the same
    // for every point; hoist them out of the loop.
    let shared_initial_fit = match (&setup.readout, &setup.spectrometer) {
        (Readout::Synthetic { grid }, None) => {
            let initial = sample_probe(&setup.probe, &setup.coupling, grid)?;
            Some(fit_gaussian(&initial)?)
        }
        _ => None,
    };

    let mut points = Vec::with_capacity(b_values.len());
    for (index, &b) in b_values.iter().enumerate() {
        let shift = point_shift(setup, beta, b, index, shared_initial_fit.as_ref())
            .map_err(|e| e.at_field(b))?;
        points.push(CurvePoint {
            b_tesla: b,
            shift_nm: shift,
        });
    }
    Ok(ShiftCurve { beta, points })
}

fn point_shift(
    setup: &ExperimentSetup,
    beta: f64,
    b_tesla: f64,
    index: usize,
    shared_initial_fit: Option<&GaussianFit>,
) -> Result<f64> {
    let phi = setup.phase_at(b_tesla)?;
    match &setup.readout {
        Readout::Analytic => {
            let wv = weak_value(beta, phi)?;
            Ok(predicted_shift(&setup.probe, &wv))
        }
        Readout::Synthetic { grid } => {
            let final_spectrum =
                synthesize_final_spectrum(&setup.probe, &setup.coupling, beta, phi, grid)?;
            let (initial_fit, final_fit) = match &setup.spectrometer {
                None => {
                    let initial_fit = match shared_initial_fit {
                        Some(fit) => *fit,
                        None => {
                            let initial = sample_probe(&setup.probe, &setup.coupling, grid)?;
                            fit_gaussian(&initial)?
                        }
                    };
                    (initial_fit, fit_gaussian(&final_spectrum)?)
                }
                Some(spectrometer) => {
                    let initial = sample_probe(&setup.probe, &setup.coupling, grid)?;
                    let index = index as u64;
                    let through_initial = apply_spectrometer(
                        &initial,
                        &spectrometer.with_seed(derive_seed(spectrometer.seed, 2 * index)),
                    )?;
                    let through_final = apply_spectrometer(
                        &final_spectrum,
                        &spectrometer.with_seed(derive_seed(spectrometer.seed, 2 * index + 1)),
                    )?;
                    (fit_gaussian(&through_initial)?, fit_gaussian(&through_final)?)
                }
            };
            measured_shift(&initial_fit, &final_fit)
        }
    }
}

/// Sensitivity extracted from a shift curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    /// Analyzer offset (rad).
    pub beta_rad: f64,
    /// Magnitude of the least-squares slope of |shift| vs field (nm/T).
    pub k_nm_per_tesla: f64,
    /// Coefficient of determination of that regression.
    pub r_squared: f64,
    /// Postselection probability at zero field, `sin²β`.
    pub zero_field_probability: f64,
}

/// Ordinary least squares of |shift| against field over the curve.
///
/// `k` is the absolute slope; `r²` comes from the same regression and is
/// reported as 1 for a degenerate all-equal response. At least two points
/// are required.
pub fn sensitivity(curve: &ShiftCurve) -> Result<SensitivityResult> {
    let n = curve.points.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "sensitivity regression needs at least 2 points (got {n})"
        )));
    }
    let mean_b = curve.points.iter().map(|p| p.b_tesla).sum::<f64>() / n as f64;
    let mean_s = curve.points.iter().map(|p| p.shift_nm.abs()).sum::<f64>() / n as f64;
    let mut covariance = 0.0;
    let mut variance_b = 0.0;
    for point in &curve.points {
        let db = point.b_tesla - mean_b;
        covariance += db * (point.shift_nm.abs() - mean_s);
        variance_b += db * db;
    }
    let slope = covariance / variance_b;
    let intercept = mean_s - slope * mean_b;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for point in &curve.points {
        let predicted = slope * point.b_tesla + intercept;
        ss_res += (point.shift_nm.abs() - predicted).powi(2);
        ss_tot += (point.shift_nm.abs() - mean_s).powi(2);
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        // A perfectly flat response is fit exactly by the flat regression
        // line.
        1.0
    };
    Ok(SensitivityResult {
        beta_rad: curve.beta,
        k_nm_per_tesla: slope.abs(),
        r_squared,
        zero_field_probability: postselection_probability(curve.beta, 0.0),
    })
}

/// Analyzer offsets of the reference sensitivity table.
pub const REFERENCE_BETAS: [f64; 3] = [0.007, 0.010, 0.013];

/// The reference field sweep: 21 points over [0, 2e-9] T. The range keeps
/// the accumulated phase small against every tabulated `β`, so the shift is
/// linear in the field well below the regression tolerances.
pub fn reference_field_sweep() -> Vec<f64> {
    linspace(0.0, 2e-9, 21)
}

/// Uniformly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let step = (end - start) / (points - 1) as f64;
    (0..points).map(|i| start + i as f64 * step).collect()
}

/// Runs the reference field sweep at each analyzer offset and extracts
/// sensitivities — one summary row per `β`.
pub fn sensitivity_table(setup: &ExperimentSetup, betas: &[f64]) -> Result<Vec<SensitivityResult>> {
    let b_values = reference_field_sweep();
    betas
        .iter()
        .map(|&beta| sensitivity(&shift_curve(setup, beta, &b_values)?))
        .collect()
}

/// Writes sensitivity rows as CSV with header
/// `beta_rad,k_nm_per_T,r2,p_postselect`.
pub fn summary_to_csv(rows: &[SensitivityResult]) -> String {
    let mut out = String::from("beta_rad,k_nm_per_T,r2,p_postselect\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.beta_rad, row.k_nm_per_tesla, row.r_squared, row.zero_field_probability
        ));
    }
    out
}

/// Instrument constraints a design must respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignConstraints {
    /// Available source peak intensity.
    pub i0_max: f64,
    /// Spectrometer detection floor (intensity units).
    pub intensity_floor: f64,
    /// Smallest resolvable wavelength shift (nm).
    pub wavelength_resolution_nm: f64,
    /// Field accuracy the design must reach (T).
    pub target_field_accuracy_tesla: f64,
}

impl DesignConstraints {
    /// Checks signs: intensity and accuracy strictly positive, floor and
    /// resolution nonnegative (zero makes the matching constraint vacuous).
    pub fn validate(&self) -> Result<()> {
        if !(self.i0_max.is_finite() && self.i0_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "available intensity must be positive and finite (got {})",
                self.i0_max
            )));
        }
        if !(self.target_field_accuracy_tesla.is_finite()
            && self.target_field_accuracy_tesla > 0.0)
        {
            return Err(Error::InvalidArgument(format!(
                "target field accuracy must be positive and finite (got {} T)",
                self.target_field_accuracy_tesla
            )));
        }
        if !(self.intensity_floor.is_finite() && self.intensity_floor >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "intensity floor must be nonnegative and finite (got {})",
                self.intensity_floor
            )));
        }
        if !(self.wavelength_resolution_nm.is_finite() && self.wavelength_resolution_nm >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "wavelength resolution must be nonnegative and finite (got {} nm)",
                self.wavelength_resolution_nm
            )));
        }
        Ok(())
    }
}

/// Grid over analyzer offsets searched by [`recommend_design`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSearch {
    /// Smallest offset searched (rad).
    pub min_rad: f64,
    /// Largest offset searched (rad).
    pub max_rad: f64,
    /// Grid step (rad).
    pub step_rad: f64,
}

impl Default for BetaSearch {
    /// `[1e-3, 0.05]` in steps of `1e-5` — brackets every working point the
    /// reference configuration can resolve.
    fn default() -> Self {
        Self {
            min_rad: 1e-3,
            max_rad: 0.05,
            step_rad: 1e-5,
        }
    }
}

impl BetaSearch {
    /// Checks the interval sits inside `(0, π/4)` with a positive step.
    pub fn validate(&self) -> Result<()> {
        let quarter = std::f64::consts::FRAC_PI_4;
        if !(self.min_rad.is_finite()
            && self.max_rad.is_finite()
            && self.min_rad > 0.0
            && self.min_rad <= self.max_rad
            && self.max_rad < quarter)
        {
            return Err(Error::InvalidArgument(format!(
                "search interval must satisfy 0 < min ≤ max < π/4 \
                 (got [{}, {}] rad)",
                self.min_rad, self.max_rad
            )));
        }
        if !(self.step_rad.is_finite() && self.step_rad > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "search step must be positive and finite (got {} rad)",
                self.step_rad
            )));
        }
        Ok(())
    }

    /// The searched grid points, `min, min+step, …` up to `max` inclusive.
    fn grid(&self) -> Vec<f64> {
        let mut values = Vec::new();
        let mut i = 0u64;
        loop {
            let beta = self.min_rad + i as f64 * self.step_rad;
            // Snap against accumulated rounding at the top endpoint.
            if beta > self.max_rad * (1.0 + 1e-12) {
                break;
            }
            values.push(beta);
            i += 1;
        }
        values
    }
}

/// A design recommendation; `feasible = false` means no searched offset
/// satisfies the constraints and the remaining fields are absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignRecommendation {
    /// Whether any searched offset satisfies the constraints.
    pub feasible: bool,
    /// The contiguous feasible interval `[lo, hi]` (rad) containing the
    /// most sensitive feasible offset.
    pub feasible_beta_rad: Option<(f64, f64)>,
    /// Recommended offset: the smallest feasible one, which maximizes
    /// sensitivity.
    pub chosen_beta_rad: Option<f64>,
    /// Zero-field sensitivity at the chosen offset (nm/T).
    pub expected_k_nm_per_tesla: Option<f64>,
    /// Zero-field postselection probability at the chosen offset.
    pub expected_probability: Option<f64>,
}

impl DesignRecommendation {
    fn empty() -> Self {
        Self {
            feasible: false,
            feasible_beta_rad: None,
            chosen_beta_rad: None,
            expected_k_nm_per_tesla: None,
            expected_probability: None,
        }
    }
}

/// Sensitivity below which a working point is declared not detectable:
/// even a kilometer-scale resolution target would demand an absurd field.
/// The null-amplification line `β = π/4` lands ~16 orders below any
/// physical working point, so only genuinely vanishing sensitivities trip
/// this.
pub const NEGLIGIBLE_SENSITIVITY_NM_PER_TESLA: f64 = 1e-6;

/// Closed-form zero-field sensitivity
/// `k₀(β) = (4π·W²/λ₀)·(cos 2β / sin²β)·|V|·L_eff` (nm/T).
///
/// This is the slope of |shift| in the field at `B = 0`; the sweep-based
/// [`sensitivity`] converges to it as the sweep range shrinks. `beta` must
/// lie in `(0, π/2)`.
pub fn zero_field_sensitivity(setup: &ExperimentSetup, beta: f64) -> Result<f64> {
    setup.validate()?;
    if !(beta.is_finite() && beta > 0.0 && beta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!(
            "zero-field sensitivity needs beta in (0, π/2) (got {beta} rad)"
        )));
    }
    let probe = &setup.probe;
    let shift_coefficient =
        4.0 * std::f64::consts::PI * probe.w_nm * probe.w_nm / probe.lambda0_nm;
    let sb = beta.sin();
    let lever = (2.0 * beta).cos() / (sb * sb);
    let phase_per_tesla =
        setup.medium.verdet_rad_per_tesla_meter * setup.geometry.effective_length_m();
    Ok((shift_coefficient * lever * phase_per_tesla).abs())
}

/// Searches the offset grid for working points satisfying both instrument
/// constraints and recommends the most sensitive one.
///
/// An offset `β` is feasible iff the postselected peak is detectable,
/// `i0_max·sin²β ≥ intensity_floor`, and the target field moves the
/// spectrum by at least the instrument resolution,
/// `k₀(β)·target_field_accuracy ≥ wavelength_resolution`. The returned
/// interval is the contiguous feasible run containing the smallest (most
/// sensitive) feasible offset; an empty feasible set is a valid
/// recommendation, not an error.
pub fn recommend_design(
    constraints: &DesignConstraints,
    setup: &ExperimentSetup,
    search: &BetaSearch,
) -> Result<DesignRecommendation> {
    constraints.validate()?;
    setup.validate()?;
    search.validate()?;

    let mut run_start: Option<f64> = None;
    let mut run_end = 0.0;
    for beta in search.grid() {
        let flux_ok =
            constraints.i0_max * postselection_probability(beta, 0.0) >= constraints.intensity_floor;
        let resolvable = zero_field_sensitivity(setup, beta)?
            * constraints.target_field_accuracy_tesla
            >= constraints.wavelength_resolution_nm;
        if flux_ok && resolvable {
            run_start.get_or_insert(beta);
            run_end = beta;
        } else if run_start.is_some() {
            // The run containing the smallest feasible β has ended; later
            // runs are less sensitive.
            break;
        }
    }

    let Some(lo) = run_start else {
        return Ok(DesignRecommendation::empty());
    };
    Ok(DesignRecommendation {
        feasible: true,
        feasible_beta_rad: Some((lo, run_end)),
        chosen_beta_rad: Some(lo),
        expected_k_nm_per_tesla: Some(zero_field_sensitivity(setup, lo)?),
        expected_probability: Some(postselection_probability(lo, 0.0)),
    })
}

/// Smallest field whose shift the instrument can resolve at `beta`:
/// `wavelength_resolution / k₀(β)` (T).
///
/// Errors with a not-detectable diagnostic when the sensitivity is
/// negligible (below [`NEGLIGIBLE_SENSITIVITY_NM_PER_TESLA`], e.g. on the
/// null-amplification line `β = π/4`).
pub fn minimum_detectable_field(
    setup: &ExperimentSetup,
    beta: f64,
    constraints: &DesignConstraints,
) -> Result<f64> {
    constraints.validate()?;
    let k = zero_field_sensitivity(setup, beta)?;
    if k < NEGLIGIBLE_SENSITIVITY_NM_PER_TESLA {
        return Err(Error::NotDetectable {
            beta,
            k_nm_per_tesla: k,
        });
    }
    Ok(constraints.wavelength_resolution_nm / k)
}

/// Convenience: the spectrum a configured experiment would record at field
/// `b_tesla`, before any fitting — the initial probe spectrum and the
/// postselected one, both passed through the spectrometer when present.
pub fn record_spectra(
    setup: &ExperimentSetup,
    beta: f64,
    b_tesla: f64,
    grid: &GridSpec,
) -> Result<(SpectrumGrid, SpectrumGrid)> {
    setup.validate()?;
    let phi = setup.phase_at(b_tesla)?;
    let initial = sample_probe(&setup.probe, &setup.coupling, grid)?;
    let final_spectrum =
        synthesize_final_spectrum(&setup.probe, &setup.coupling, beta, phi, grid)?;
    match &setup.spectrometer {
        None => Ok((initial, final_spectrum)),
        Some(spectrometer) => {
            let through_initial = apply_spectrometer(
                &initial,
                &spectrometer.with_seed(derive_seed(spectrometer.seed, 0)),
            )?;
            let through_final = apply_spectrometer(
                &final_spectrum,
                &spectrometer.with_seed(derive_seed(spectrometer.seed, 1)),
            )?;
            Ok((through_initial, through_final))
        }
    }
}
