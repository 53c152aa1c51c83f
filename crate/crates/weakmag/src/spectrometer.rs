//! Spectrometer model: rebinning, deterministic noise, saturation, and the
//! detection floor.
//!
//! [`apply_spectrometer`] turns an ideal synthesized spectrum into what an
//! instrument would record: intensities are averaged into the instrument's
//! bins, per-bin noise is added, values are clamped at saturation, and bins
//! below the detection floor read zero.
//!
//! Noise is generated without any RNG state: every draw is a pure function
//! of `(seed, bin index)` through a SplitMix64 hash, so outputs are
//! bit-identical across runs, platforms, and evaluation order, and
//! independent spectra can be evaluated concurrently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SpectrumGrid;

/// Per-bin noise added by the instrument.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Ideal noiseless detector.
    #[default]
    None,
    /// Shot noise: standard deviation `scale·√intensity`, so the variance is
    /// proportional to the intensity.
    Shot {
        /// Noise scale in √intensity units.
        scale: f64,
    },
    /// Additive Gaussian noise with a fixed standard deviation.
    Gaussian {
        /// Standard deviation in intensity units.
        sigma: f64,
    },
}

impl NoiseModel {
    fn validate(&self) -> Result<()> {
        let (name, value) = match *self {
            NoiseModel::None => return Ok(()),
            NoiseModel::Shot { scale } => ("shot scale", scale),
            NoiseModel::Gaussian { sigma } => ("gaussian sigma", sigma),
        };
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be nonnegative and finite (got {value})"
            )));
        }
        Ok(())
    }

    /// Noise sample for a recorded intensity `intensity` at draw `index`.
    fn sample(&self, seed: u64, index: u64, intensity: f64) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Shot { scale } => {
                scale * intensity.max(0.0).sqrt() * standard_normal(seed, index)
            }
            NoiseModel::Gaussian { sigma } => sigma * standard_normal(seed, index),
        }
    }
}

/// An idealized grating spectrometer: a wavelength window divided into
/// uniform bins, with noise, saturation, and a detection floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrometerModel {
    /// Lower edge of the recorded window (nm).
    pub lambda_min_nm: f64,
    /// Upper edge of the recorded window (nm).
    pub lambda_max_nm: f64,
    /// Width of one bin (nm).
    pub bin_width_nm: f64,
    /// Intensities below this read as zero (detection limit).
    pub intensity_floor: f64,
    /// Maximum recordable intensity; bins clamp here.
    pub saturation: f64,
    /// Per-bin noise model.
    pub noise: NoiseModel,
    /// Seed for the deterministic noise stream.
    pub seed: u64,
}

impl SpectrometerModel {
    /// An ideal spectrometer over `[lambda_min_nm, lambda_max_nm]`:
    /// noiseless, zero floor, unbounded saturation.
    pub fn ideal(lambda_min_nm: f64, lambda_max_nm: f64, bin_width_nm: f64) -> Self {
        Self {
            lambda_min_nm,
            lambda_max_nm,
            bin_width_nm,
            intensity_floor: 0.0,
            saturation: f64::INFINITY,
            noise: NoiseModel::None,
            seed: 0,
        }
    }

    /// Same instrument with a different noise seed.
    #[must_use]
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Checks the window, bin width, floor, and saturation invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min_nm.is_finite()
            && self.lambda_max_nm.is_finite()
            && self.lambda_min_nm < self.lambda_max_nm)
        {
            return Err(Error::InvalidArgument(format!(
                "spectrometer window must be finite with min < max (got [{}, {}] nm)",
                self.lambda_min_nm, self.lambda_max_nm
            )));
        }
        if !(self.bin_width_nm.is_finite() && self.bin_width_nm > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bin width must be positive and finite (got {} nm)",
                self.bin_width_nm
            )));
        }
        if !(self.intensity_floor.is_finite() && self.intensity_floor >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "intensity floor must be nonnegative and finite (got {})",
                self.intensity_floor
            )));
        }
        if !(self.saturation > self.intensity_floor) {
            return Err(Error::InvalidArgument(format!(
                "saturation ({}) must exceed the intensity floor ({})",
                self.saturation, self.intensity_floor
            )));
        }
        self.noise.validate()
    }

    /// Number of complete bins in the window.
    fn bin_count(&self) -> usize {
        let span = self.lambda_max_nm - self.lambda_min_nm;
        // Snap against float fuzz so a window meant to hold k bins exactly
        // does not round down to k − 1.
        ((span / self.bin_width_nm) * (1.0 + 1e-12)).floor() as usize
    }
}

/// Records `spectrum` through `model`: rebin by interval-averaging, add
/// per-bin noise, clamp to saturation, zero bins below the floor.
///
/// Bin `j` spans `[λ_min + j·Δ, λ_min + (j+1)·Δ)` and is reported at its
/// center. Bins holding input samples take their mean; empty bins inside
/// the input support take the linear interpolant at bin center; bins outside
/// the support read zero before noise. A window disjoint from the spectrum
/// support is an error.
pub fn apply_spectrometer(
    spectrum: &SpectrumGrid,
    model: &SpectrometerModel,
) -> Result<SpectrumGrid> {
    model.validate()?;
    let wavelengths = spectrum.wavelengths_nm();
    let intensities = spectrum.intensities();
    let support_min = wavelengths[0];
    let support_max = wavelengths[wavelengths.len() - 1];
    if support_max < model.lambda_min_nm || support_min > model.lambda_max_nm {
        return Err(Error::EmptyOverlap {
            window_min_nm: model.lambda_min_nm,
            window_max_nm: model.lambda_max_nm,
            support_min_nm: support_min,
            support_max_nm: support_max,
        });
    }
    let bins = model.bin_count();
    if bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "spectrometer window [{}, {}] nm holds {bins} complete bin(s) of \
             width {} nm; at least 2 are required",
            model.lambda_min_nm, model.lambda_max_nm, model.bin_width_nm
        )));
    }

    let step = spectrum.spacing_nm();
    // Index of the first input sample at or past `lambda`.
    let first_sample_at = |lambda: f64| -> usize {
        let t = (lambda - support_min) / step;
        (t.ceil().max(0.0) as usize).min(wavelengths.len())
    };
    // Linear interpolation of the input spectrum at `lambda` (inside support).
    let interpolate = |lambda: f64| -> f64 {
        let t = (lambda - support_min) / step;
        let k = (t.floor().max(0.0) as usize).min(wavelengths.len() - 2);
        let frac = t - k as f64;
        intensities[k] + frac * (intensities[k + 1] - intensities[k])
    };

    let mut centers = Vec::with_capacity(bins);
    let mut recorded = Vec::with_capacity(bins);
    for j in 0..bins {
        let lo = model.lambda_min_nm + j as f64 * model.bin_width_nm;
        let hi = model.lambda_min_nm + (j + 1) as f64 * model.bin_width_nm;
        let center = model.lambda_min_nm + (j as f64 + 0.5) * model.bin_width_nm;
        let (start, end) = (first_sample_at(lo), first_sample_at(hi));
        let mut value = if end > start {
            intensities[start..end].iter().sum::<f64>() / (end - start) as f64
        } else if center >= support_min && center <= support_max {
            interpolate(center)
        } else {
            0.0
        };
        value += model.noise.sample(model.seed, j as u64, value);
        value = value.min(model.saturation);
        // The floor is nonnegative, so this also folds noise-driven negative
        // readings to zero.
        if value < model.intensity_floor {
            value = 0.0;
        }
        centers.push(center);
        recorded.push(value);
    }
    SpectrumGrid::from_parts(centers, recorded)
}

/// Standard normal draw `index` of the stream identified by `seed`.
///
/// A pure function of its arguments (SplitMix64 hash + Box–Muller), so any
/// draw can be evaluated independently of the others.
pub fn standard_normal(seed: u64, index: u64) -> f64 {
    let key = mix_key(seed, index);
    let u1 = u64_to_open_unit_f64(splitmix64(key));
    let u2 = u64_to_unit_f64(splitmix64(key ^ 0x94D0_49BB_1331_11EB));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Derives an independent child seed, e.g. one noise stream per sweep point.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ stream.wrapping_mul(0xBF58_476D_1CE4_E5B9))
}

#[inline]
fn mix_key(seed: u64, index: u64) -> u64 {
    // SplitMix64 stream selection via a stable integer mix.
    seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Top 53 bits to a double in `[0, 1)`; platform-independent.
#[inline]
fn u64_to_unit_f64(x: u64) -> f64 {
    let mantissa = x >> 11;
    (mantissa as f64) * (1.0 / ((1u64 << 53) as f64))
}

/// Top 53 bits to a double in `(0, 1)`, safe to pass to `ln`.
#[inline]
fn u64_to_open_unit_f64(x: u64) -> f64 {
    let mantissa = x >> 11;
    ((mantissa as f64) + 0.5) * (1.0 / ((1u64 << 53) as f64))
}

#[cfg(test)]
mod tests {
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    use super::*;

    fn grid(wavelengths: Vec<f64>, intensities: Vec<f64>) -> SpectrumGrid {
        SpectrumGrid::from_parts(wavelengths, intensities).unwrap()
    }

    #[test]
    fn matched_grids_record_the_input_exactly() {
        let wavelengths: Vec<f64> = (0..400).map(|i| 633.5 + i as f64).collect();
        let intensities: Vec<f64> = wavelengths
            .iter()
            .map(|l| (-0.5 * ((l - 833.0) / 50.0) * ((l - 833.0) / 50.0)).exp())
            .collect();
        let spectrum = grid(wavelengths.clone(), intensities.clone());
        let model = SpectrometerModel::ideal(633.0, 1033.0, 1.0);
        let recorded = apply_spectrometer(&spectrum, &model).unwrap();
        assert_eq!(recorded.wavelengths_nm(), wavelengths.as_slice());
        assert_eq!(recorded.intensities(), intensities.as_slice());
    }

    #[test]
    fn oversampled_bins_take_the_sample_mean() {
        let spectrum = grid(vec![0.25, 0.75, 1.25, 1.75], vec![1.0, 2.0, 3.0, 4.0]);
        let model = SpectrometerModel::ideal(0.0, 2.0, 1.0);
        let recorded = apply_spectrometer(&spectrum, &model).unwrap();
        assert_eq!(recorded.wavelengths_nm(), &[0.5, 1.5]);
        assert_eq!(recorded.intensities(), &[1.5, 3.5]);
    }

    #[test]
    fn empty_bins_inside_the_support_interpolate() {
        // The input is the line y = λ, so interpolation is exact.
        let spectrum = grid(vec![0.0, 2.0], vec![0.0, 2.0]);
        let model = SpectrometerModel::ideal(0.0, 2.0, 0.5);
        let recorded = apply_spectrometer(&spectrum, &model).unwrap();
        assert_eq!(recorded.wavelengths_nm(), &[0.25, 0.75, 1.25, 1.75]);
        assert_eq!(recorded.intensities(), &[0.0, 0.75, 1.25, 1.75]);
    }

    #[test]
    fn bins_outside_the_support_read_zero() {
        let spectrum = grid(vec![0.0, 1.0, 2.0], vec![2.0, 2.0, 2.0]);
        let model = SpectrometerModel::ideal(0.0, 4.0, 1.0);
        let recorded = apply_spectrometer(&spectrum, &model).unwrap();
        assert_eq!(recorded.intensities()[3], 0.0);
    }

    #[test]
    fn saturation_clamps_and_the_floor_zeroes() {
        let spectrum = grid(
            vec![0.5, 1.5, 2.5, 3.5],
            vec![0.1, 1.0, 5.0, 0.4],
        );
        let mut model = SpectrometerModel::ideal(0.0, 4.0, 1.0);
        model.saturation = 2.0;
        model.intensity_floor = 0.25;
        let recorded = apply_spectrometer(&spectrum, &model).unwrap();
        assert_eq!(recorded.intensities(), &[0.0, 1.0, 2.0, 0.4]);
    }

    #[test]
    fn floor_cuts_the_line_near_half_maximum() {
        let wavelengths: Vec<f64> = (0..=4000).map(|i| 633.0 + 0.1 * i as f64).collect();
        let intensities: Vec<f64> = wavelengths
            .iter()
            .map(|l| (-0.5 * ((l - 833.0) / 50.0) * ((l - 833.0) / 50.0)).exp())
            .collect();
        let spectrum = grid(wavelengths, intensities);
        let mut model = SpectrometerModel::ideal(633.0, 1033.0, 1.0);
        model.intensity_floor = 0.5;
        let recorded = apply_spectrometer(&spectrum, &model).unwrap();
        // Half maximum sits W·√(2 ln 2) ≈ 58.87 nm from the carrier; allow
        // one bin of slack for bin-center placement.
        let half_width = 58.870_501_125_773_735;
        for (c, i) in recorded.wavelengths_nm().iter().zip(recorded.intensities()) {
            let distance = (c - 833.0).abs();
            if distance < half_width - 1.0 {
                assert!(*i > 0.0, "bin at {c} nm unexpectedly floored");
            }
            if distance > half_width + 1.0 {
                assert_eq!(*i, 0.0, "bin at {c} nm should read zero");
            }
        }
    }

    #[test]
    fn disjoint_window_is_an_error() {
        let spectrum = grid(vec![633.0, 634.0], vec![1.0, 1.0]);
        let model = SpectrometerModel::ideal(700.0, 800.0, 1.0);
        match apply_spectrometer(&spectrum, &model) {
            Err(Error::EmptyOverlap {
                window_min_nm,
                support_max_nm,
                ..
            }) => {
                assert_eq!(window_min_nm, 700.0);
                assert_eq!(support_max_nm, 634.0);
            }
            other => panic!("expected empty-overlap error, got {other:?}"),
        }
    }

    #[test]
    fn windows_holding_few_complete_bins_are_rejected() {
        let spectrum = grid(vec![0.0, 1.0], vec![1.0, 1.0]);
        let model = SpectrometerModel::ideal(0.0, 1.0, 0.8);
        assert!(apply_spectrometer(&spectrum, &model).is_err());
    }

    #[test]
    fn bin_count_survives_inexact_window_ratios() {
        // 0.3 / 0.1 rounds below 3 in floating point; the snap keeps 3 bins.
        let spectrum = grid(vec![0.0, 0.1, 0.2, 0.3], vec![1.0, 1.0, 1.0, 1.0]);
        let model = SpectrometerModel::ideal(0.0, 0.3, 0.1);
        let recorded = apply_spectrometer(&spectrum, &model).unwrap();
        assert_eq!(recorded.len(), 3);
    }

    #[test]
    fn noisy_recordings_are_bit_identical_across_runs() {
        let wavelengths: Vec<f64> = (0..200).map(|i| 633.0 + 2.0 * i as f64).collect();
        let intensities: Vec<f64> = wavelengths.iter().map(|l| 1.0 + (l / 90.0).sin().abs()).collect();
        let spectrum = grid(wavelengths, intensities);
        let mut model = SpectrometerModel::ideal(633.0, 1033.0, 1.0);
        model.noise = NoiseModel::Shot { scale: 1e-2 };
        model = model.with_seed(42);
        let first = apply_spectrometer(&spectrum, &model).unwrap();
        let second = apply_spectrometer(&spectrum, &model).unwrap();
        assert_eq!(first.intensities(), second.intensities());

        let reseeded = apply_spectrometer(&spectrum, &model.with_seed(43)).unwrap();
        assert_ne!(first.intensities(), reseeded.intensities());
    }

    #[test]
    fn standard_normal_is_a_pure_function_with_unit_moments() {
        assert_eq!(standard_normal(42, 7), standard_normal(42, 7));
        assert_ne!(standard_normal(42, 7), standard_normal(42, 8));
        assert_ne!(standard_normal(42, 7), standard_normal(43, 7));

        let n = 20_000u64;
        let draws: Vec<f64> = (0..n).map(|i| standard_normal(1, i)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 0.02);
        assert_relative_eq!(var, 1.0, max_relative = 0.03);
        assert!(draws.iter().all(|z| z.is_finite()));
    }

    #[test]
    fn shot_noise_spread_scales_with_the_square_root_of_intensity() {
        let noise = NoiseModel::Shot { scale: 1e-3 };
        let spread = |intensity: f64| -> f64 {
            let n = 4000u64;
            let samples: Vec<f64> = (0..n).map(|i| noise.sample(5, i, intensity)).collect();
            let mean = samples.iter().sum::<f64>() / n as f64;
            (samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64).sqrt()
        };
        let ratio = spread(4.0) / spread(1.0);
        assert_relative_eq!(ratio, 2.0, max_relative = 0.05);
    }

    #[test]
    fn derived_seeds_are_distinct_streams() {
        let mut seeds: Vec<u64> = (0..64).map(|i| derive_seed(42, i)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 64);
        assert_ne!(derive_seed(42, 0), derive_seed(43, 0));
    }

    #[test]
    fn invalid_models_are_rejected() {
        let ok = SpectrometerModel::ideal(633.0, 1033.0, 1.0);
        assert!(ok.validate().is_ok());
        assert!(SpectrometerModel { lambda_max_nm: 633.0, ..ok }.validate().is_err());
        assert!(SpectrometerModel { bin_width_nm: 0.0, ..ok }.validate().is_err());
        assert!(SpectrometerModel { intensity_floor: -1.0, ..ok }.validate().is_err());
        assert!(SpectrometerModel {
            intensity_floor: 2.0,
            saturation: 1.0,
            ..ok
        }
        .validate()
        .is_err());
        assert!(SpectrometerModel {
            noise: NoiseModel::Shot { scale: -0.5 },
            ..ok
        }
        .validate()
        .is_err());
    }
}
