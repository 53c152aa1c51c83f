//! Randomized invariant checks for the polarization, phase, spectrum, and
//! fitting layers.

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use weakmag::faraday::{faraday_phase, FaradayGeometry, MagnetoOpticMedium, PhaseBudget};
use weakmag::fit::fit_gaussian;
use weakmag::polarization::{
    postselect, postselection_probability, preselect, weak_value, Observable,
    ORTHOGONALITY_EPSILON,
};
use weakmag::spectrometer::{apply_spectrometer, SpectrometerModel};
use weakmag::spectrum::{
    sample_probe, synthesize_final_spectrum, CouplingModel, GaussianProbe, GridSpec,
    SpectrumGrid,
};

/// Selection angles around the working region of the analyzer.
fn angle() -> impl Strategy<Value = f64> {
    -0.3f64..0.3f64
}

proptest! {
    #[test]
    fn selection_states_are_unit_norm(angle in angle()) {
        let pre = preselect(angle).unwrap();
        let post = postselect(angle).unwrap();
        prop_assert!((pre.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((post.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_first_principles(beta in angle(), phi in angle()) {
        let p = postselection_probability(beta, phi);
        // Jointly near-orthogonal selections are excluded: both forms are
        // guarded there.
        prop_assume!(p > 1e-20);
        let closed = weak_value(beta, phi).unwrap().value;
        let pre = preselect(beta).unwrap();
        let post = postselect(phi).unwrap();
        let halved = Observable::hv_half_difference()
            .weak_value(&pre, &post, ORTHOGONALITY_EPSILON)
            .unwrap();
        let first_principles = 2.0 * halved;
        let scale = closed.norm().max(1e-12);
        prop_assert!(
            (closed - first_principles).norm() <= 1e-12 * scale,
            "closed = {closed}, first principles = {first_principles}"
        );
    }

    #[test]
    fn postselection_probability_is_bounded(beta in angle(), phi in angle()) {
        let p = postselection_probability(beta, phi);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn zero_phase_probability_is_exactly_sine_squared(beta in angle()) {
        let sb = beta.sin();
        prop_assert_eq!(postselection_probability(beta, 0.0), sb * sb);
    }

    #[test]
    fn imaginary_part_is_odd_in_the_phase(beta in angle(), phi in angle()) {
        prop_assume!(postselection_probability(beta, phi) > 1e-20);
        let plus = weak_value(beta, phi).unwrap().imaginary();
        let minus = weak_value(beta, -phi).unwrap().imaginary();
        prop_assert!(
            (plus + minus).abs() <= 1e-12 * plus.abs().max(1e-12),
            "Im at +phi = {plus}, at -phi = {minus}"
        );
    }

    #[test]
    fn imaginary_part_is_even_in_the_offset(beta in angle(), phi in angle()) {
        prop_assume!(postselection_probability(beta, phi) > 1e-20);
        let plus = weak_value(beta, phi).unwrap().imaginary();
        let minus = weak_value(-beta, phi).unwrap().imaginary();
        prop_assert!(
            (plus - minus).abs() <= 1e-12 * plus.abs().max(1e-12),
            "Im at +beta = {plus}, at -beta = {minus}"
        );
    }

    #[test]
    fn balanced_diagonal_never_amplifies(phi in angle()) {
        prop_assume!(phi.abs() > 1e-6);
        let wv = weak_value(std::f64::consts::FRAC_PI_4, phi).unwrap();
        prop_assert!(wv.imaginary().abs() < 1e-12);
    }

    #[test]
    fn accumulated_phase_is_linear_in_the_field(
        b in -1e-6f64..1e-6f64,
        scale in -4.0f64..4.0f64,
    ) {
        let medium = MagnetoOpticMedium { verdet_rad_per_tesla_meter: 32.0 };
        let geometry = FaradayGeometry::FiberCoil { turns: 1000, loop_length_m: 1.0 };
        let base = faraday_phase(&geometry, &medium, b).unwrap();
        let scaled = faraday_phase(&geometry, &medium, scale * b).unwrap();
        prop_assert!(
            (scaled - scale * base).abs() <= 1e-14 * (scale * base).abs().max(1e-300),
            "phase({}) = {scaled}, expected {}",
            scale * b,
            scale * base
        );
    }

    #[test]
    fn geometries_with_equal_lengths_are_interchangeable(
        b in -1e-6f64..1e-6f64,
        thickness in 1e-3f64..10.0f64,
        count in 1u32..2000,
    ) {
        let medium = MagnetoOpticMedium { verdet_rad_per_tesla_meter: 32.0 };
        let folded = FaradayGeometry::MultiReflection { reflections: count, thickness_m: thickness };
        let coiled = FaradayGeometry::FiberCoil { turns: count, loop_length_m: thickness };
        let slab = FaradayGeometry::SinglePass {
            thickness_m: f64::from(count) * thickness,
        };
        let a = faraday_phase(&folded, &medium, b).unwrap();
        let c = faraday_phase(&coiled, &medium, b).unwrap();
        let s = faraday_phase(&slab, &medium, b).unwrap();
        prop_assert_eq!(a, c);
        prop_assert!((a - s).abs() <= 1e-15 * a.abs().max(1e-300));
    }

    #[test]
    fn budget_calibration_is_idempotent(
        sbc in -10.0f64..10.0,
        opd in -10.0f64..10.0,
        mom in -1.0f64..1.0,
    ) {
        let budget = PhaseBudget { phi_sbc: sbc, phi_opd: opd, phi_mom: mom };
        let once = budget.calibrate_sbc();
        let twice = once.calibrate_sbc();
        prop_assert_eq!(once, twice);
        prop_assert!(once.is_calibrated());
        prop_assert_eq!(once.total_phase(), mom);
    }

    #[test]
    fn zero_phase_synthesis_is_pure_attenuation(beta in 1e-3f64..0.3) {
        let probe = GaussianProbe::new(1.0, 833.0, 50.0).unwrap();
        let model = CouplingModel::for_probe(&probe);
        let grid = GridSpec { min_nm: 633.0, max_nm: 1033.0, points: 64 };
        let initial = sample_probe(&probe, &model, &grid).unwrap();
        let final_spectrum =
            synthesize_final_spectrum(&probe, &model, beta, 0.0, &grid).unwrap();
        let attenuation = beta.sin() * beta.sin();
        for (f, i) in final_spectrum.intensities().iter().zip(initial.intensities()) {
            prop_assert_eq!(*f, attenuation * i);
        }
    }

    #[test]
    fn synthesis_is_deterministic(beta in 1e-3f64..0.05, b_scale in 0.0f64..2.0) {
        let probe = GaussianProbe::new(1.0, 833.0, 50.0).unwrap();
        let model = CouplingModel::for_probe(&probe);
        let grid = GridSpec { min_nm: 633.0, max_nm: 1033.0, points: 128 };
        let phi = 3.2e-5 * b_scale;
        let first = synthesize_final_spectrum(&probe, &model, beta, phi, &grid).unwrap();
        let second = synthesize_final_spectrum(&probe, &model, beta, phi, &grid).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn rebinning_matched_grids_is_the_identity(
        seed_intensities in proptest::collection::vec(0.0f64..10.0, 50..50usize + 1),
    ) {
        let wavelengths: Vec<f64> = (0..50).map(|i| 700.5 + i as f64).collect();
        let spectrum =
            SpectrumGrid::from_parts(wavelengths.clone(), seed_intensities.clone()).unwrap();
        let model = SpectrometerModel::ideal(700.0, 750.0, 1.0);
        let recorded = apply_spectrometer(&spectrum, &model).unwrap();
        prop_assert_eq!(recorded.wavelengths_nm(), wavelengths.as_slice());
        prop_assert_eq!(recorded.intensities(), seed_intensities.as_slice());
    }

    #[test]
    fn gaussian_fits_recover_their_generator(
        amplitude in 0.1f64..10.0,
        center in 750.0f64..900.0,
        width in 20.0f64..80.0,
        baseline in 0.0f64..0.5,
    ) {
        let wavelengths: Vec<f64> = (0..=1000).map(|i| 633.0 + 0.4 * i as f64).collect();
        let intensities: Vec<f64> = wavelengths
            .iter()
            .map(|l| {
                let u = (l - center) / width;
                amplitude * (-0.5 * u * u).exp() + baseline
            })
            .collect();
        let spectrum = SpectrumGrid::from_parts(wavelengths, intensities).unwrap();
        let fit = fit_gaussian(&spectrum).unwrap();
        prop_assert!(fit.converged, "fit did not converge: {fit:?}");
        prop_assert!((fit.center_nm - center).abs() < 1e-6, "center {} vs {center}", fit.center_nm);
        prop_assert!((fit.width_nm - width).abs() < 1e-4, "width {} vs {width}", fit.width_nm);
        prop_assert!((fit.amplitude - amplitude).abs() < 1e-5 * amplitude);
        prop_assert!((fit.baseline - baseline).abs() < 1e-5);
    }
}

#[test]
fn synthesized_shift_tracks_the_prediction_across_the_working_region() {
    // Dense cross-check on a fixed grid of working points: the fitted center
    // displacement of a synthesized spectrum must track the closed-form
    // displacement.
    let probe = GaussianProbe::new(1.0, 833.0, 50.0).unwrap();
    let model = CouplingModel::for_probe(&probe);
    let grid = GridSpec {
        min_nm: 433.0,
        max_nm: 1233.0,
        points: 4001,
    };
    let initial = sample_probe(&probe, &model, &grid).unwrap();
    let initial_fit = fit_gaussian(&initial).unwrap();
    for beta in [0.007, 0.010, 0.013] {
        for ratio in [0.001, 0.01, 0.05] {
            let phi = beta * ratio;
            let wv = weak_value(beta, phi).unwrap();
            let predicted = weakmag::spectrum::predicted_shift(&probe, &wv);
            let final_spectrum =
                synthesize_final_spectrum(&probe, &model, beta, phi, &grid).unwrap();
            let final_fit = fit_gaussian(&final_spectrum).unwrap();
            let measured = weakmag::fit::measured_shift(&initial_fit, &final_fit).unwrap();
            assert_abs_diff_eq!(measured, predicted, epsilon = 1e-6);
        }
    }
}
