//! Polarization states, pre-/post-selection, and weak values.
//!
//! States live in the horizontal/vertical Jones basis. The preselection
//! optics prepare `sin(β+π/4)|H⟩ + i·cos(β+π/4)|V⟩`, where `β` is the
//! analyzer offset from the crossed (dark-port) configuration; the
//! postselection analyzer projects onto `i·e^{iφ}/√2·|H⟩ + e^{−iφ}/√2·|V⟩`,
//! where `φ` is the accumulated magneto-optic phase. The observable coupled
//! to the spectral pointer is the half-difference polarization operator
//! `Â = (|H⟩⟨H| − |V⟩⟨V|)/2`.
//!
//! The amplification factor has the closed form
//!
//! ```text
//!         sin φ sin β + i cos φ cos β
//! A_w  =  ---------------------------
//!         sin φ cos β + i sin β cos φ
//! ```
//!
//! and the squared modulus of its denominator is the postselection
//! probability `p = sin²φ cos²β + sin²β cos²φ`. This un-halved form is the
//! crate-wide convention — it is the factor the pointer shift is linear in.
//! The first-principles ratio `⟨post|Â|pre⟩/⟨post|pre⟩` evaluates to exactly
//! half of it (the observable's eigenvalues are ±½) and is exposed through
//! [`Observable::weak_value`] for cross-checking.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Guard on the squared overlap `|⟨post|pre⟩|²` below which the selection is
/// treated as orthogonal and the weak value as undefined. Far below any
/// usable postselection probability, yet keeps the division finite.
pub const ORTHOGONALITY_EPSILON: f64 = 1e-30;

/// A polarization state in the H/V basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    /// Coefficient of `|H⟩`.
    pub h: Complex64,
    /// Coefficient of `|V⟩`.
    pub v: Complex64,
}

impl PolarizationState {
    /// Builds a state from its H/V amplitudes.
    ///
    /// Errors if any component is non-finite.
    pub fn new(h: Complex64, v: Complex64) -> Result<Self> {
        if !(h.re.is_finite() && h.im.is_finite() && v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "polarization amplitudes must be finite (got h = {h}, v = {v})"
            )));
        }
        Ok(Self { h, v })
    }

    /// Inner product `⟨self|other⟩` (`self` is conjugated).
    pub fn inner(&self, other: &PolarizationState) -> Complex64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    /// Squared norm `|h|² + |v|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }
}

/// Preselected state `sin(β+π/4)|H⟩ + i·cos(β+π/4)|V⟩` for analyzer offset
/// `beta` (rad). Unit norm for every finite `beta`.
///
/// `beta = 0` gives `(|H⟩ + i|V⟩)/√2`; `beta = π/4` gives pure `|H⟩`.
/// Errors on non-finite `beta`.
pub fn preselect(beta: f64) -> Result<PolarizationState> {
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "preselection angle must be finite (got {beta})"
        )));
    }
    let (s, c) = (beta + std::f64::consts::FRAC_PI_4).sin_cos();
    PolarizationState::new(Complex64::new(s, 0.0), Complex64::new(0.0, c))
}

/// Postselected (analyzer) state `i·e^{iφ}/√2·|H⟩ + e^{−iφ}/√2·|V⟩` for
/// accumulated phase `phi` (rad). Unit norm for every finite `phi`.
///
/// At `phi = 0` this is `(i|H⟩ + |V⟩)/√2`, exactly orthogonal to
/// `preselect(0.0)` — the dark port. Errors on non-finite `phi`.
pub fn postselect(phi: f64) -> Result<PolarizationState> {
    if !phi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "postselection phase must be finite (got {phi})"
        )));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let e = Complex64::from_polar(r, phi);
    PolarizationState::new(Complex64::new(0.0, 1.0) * e, e.conj())
}

/// A 2×2 Hermitian observable on the H/V polarization space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable {
    m: [[Complex64; 2]; 2],
}

impl Observable {
    /// The half-difference polarization operator `(|H⟩⟨H| − |V⟩⟨V|)/2`,
    /// i.e. `diag(+1/2, −1/2)` — the generator coupled to the pointer.
    pub fn hv_half_difference() -> Self {
        Self {
            m: [
                [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(-0.5, 0.0)],
            ],
        }
    }

    /// Matrix elements, row-major.
    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    /// Applies the operator to a state, returning the raw (unnormalized)
    /// image `Â|state⟩` as an (H, V) amplitude pair.
    pub fn apply(&self, state: &PolarizationState) -> (Complex64, Complex64) {
        (
            self.m[0][0] * state.h + self.m[0][1] * state.v,
            self.m[1][0] * state.h + self.m[1][1] * state.v,
        )
    }

    /// First-principles weak value `⟨post|Â|pre⟩ / ⟨post|pre⟩` of this
    /// observable, guarded by `epsilon` on the squared overlap.
    ///
    /// For [`Observable::hv_half_difference`] this is exactly **half** the
    /// crate-wide convention returned by [`weak_value`]; see the module docs.
    pub fn weak_value(
        &self,
        pre: &PolarizationState,
        post: &PolarizationState,
        epsilon: f64,
    ) -> Result<Complex64> {
        let overlap = post.inner(pre);
        let p = overlap.norm_sqr();
        if p < epsilon {
            return Err(Error::InvalidArgument(format!(
                "states are orthogonal: |⟨post|pre⟩|² = {p:.3e} < {epsilon:.0e}"
            )));
        }
        let (ah, av) = self.apply(pre);
        let numerator = post.h.conj() * ah + post.v.conj() * av;
        Ok(numerator / overlap)
    }
}

/// A weak value together with the selection angles that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    /// The complex amplification factor `A_w`.
    pub value: Complex64,
    /// Analyzer offset (rad) it was evaluated at.
    pub beta: f64,
    /// Accumulated phase (rad) it was evaluated at.
    pub phi: f64,
}

impl WeakValue {
    /// Real part of `A_w`.
    pub fn real(&self) -> f64 {
        self.value.re
    }

    /// Imaginary part of `A_w` — the part that displaces the pointer
    /// spectrum.
    pub fn imaginary(&self) -> f64 {
        self.value.im
    }
}

/// Closed-form weak value in the un-halved crate convention (see module
/// docs), guarded by [`ORTHOGONALITY_EPSILON`].
///
/// At `phi = 0` the result is purely real, `cot β`; at `beta = 0` it is
/// `i·cot φ` — near the dark port the imaginary part is the amplification
/// lever. Only the jointly-orthogonal case (probability below the guard)
/// errors.
pub fn weak_value(beta: f64, phi: f64) -> Result<WeakValue> {
    weak_value_with_guard(beta, phi, ORTHOGONALITY_EPSILON)
}

/// [`weak_value`] with a caller-chosen orthogonality guard on `|⟨post|pre⟩|²`.
pub fn weak_value_with_guard(beta: f64, phi: f64, epsilon: f64) -> Result<WeakValue> {
    if !beta.is_finite() || !phi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "selection angles must be finite (got beta = {beta}, phi = {phi})"
        )));
    }
    // Separate sin/cos calls (not sin_cos): libm's fused sincos may differ
    // from sin by an ulp, and downstream identities are pinned to the plain
    // calls.
    let (sb, cb) = (beta.sin(), beta.cos());
    let (sp, cp) = (phi.sin(), phi.cos());
    // The direct overlap ⟨post|pre⟩ is −(sin φ cos β + i sin β cos φ); the
    // global sign cancels in the ratio, so the denominator below is the
    // overlap up to phase and its squared modulus is the postselection
    // probability.
    let denominator = Complex64::new(sp * cb, sb * cp);
    let p = denominator.norm_sqr();
    if p < epsilon {
        return Err(Error::OrthogonalSelection {
            beta,
            phi,
            probability: p,
            epsilon,
        });
    }
    let numerator = Complex64::new(sp * sb, cp * cb);
    Ok(WeakValue {
        value: numerator / denominator,
        beta,
        phi,
    })
}

/// Probability `|⟨post|pre⟩|² = sin²φ cos²β + sin²β cos²φ` that a photon
/// survives postselection.
///
/// Total over finite angles, lies in `[0, 1]`, and reduces to `sin²β`
/// exactly at `phi = 0`.
pub fn postselection_probability(beta: f64, phi: f64) -> f64 {
    let (sb, cb) = (beta.sin(), beta.cos());
    let (sp, cp) = (phi.sin(), phi.cos());
    let p = sp * sp * cb * cb + sb * sb * cp * cp;
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    // Reference values are kept with every digit their high-precision
    // computation printed; shorter spellings round to the same f64 but
    // invite transcription slips.
    #![allow(clippy::excessive_precision)]

    use approx::{assert_abs_diff_eq, assert_relative_eq};

    use super::*;

    #[test]
    fn preselect_reference_amplitudes() {
        let s = preselect(0.010).unwrap();
        assert_relative_eq!(s.h.re, 0.714_142_376_103_439_57, max_relative = 1e-15);
        assert_abs_diff_eq!(s.h.im, 0.0);
        assert_abs_diff_eq!(s.v.re, 0.0);
        assert_relative_eq!(s.v.im, 0.700_000_476_180_790_51, max_relative = 1e-15);
    }

    #[test]
    fn preselect_balanced_at_zero_offset() {
        let s = preselect(0.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(s.h.re, r, max_relative = 1e-15);
        assert_relative_eq!(s.v.im, r, max_relative = 1e-15);
    }

    #[test]
    fn preselect_pure_horizontal_at_quarter_pi() {
        let s = preselect(std::f64::consts::FRAC_PI_4).unwrap();
        assert_relative_eq!(s.h.re, 1.0, max_relative = 1e-15);
        assert_abs_diff_eq!(s.v.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn postselect_reference_amplitudes() {
        let s = postselect(3.2e-5).unwrap();
        assert_relative_eq!(s.h.re, -2.262_741_699_410_777_5e-5, max_relative = 1e-13);
        assert_relative_eq!(s.h.im, 0.707_106_780_824_508_85, max_relative = 1e-15);
        assert_relative_eq!(s.v.re, 0.707_106_780_824_508_85, max_relative = 1e-15);
        assert_relative_eq!(s.v.im, -2.262_741_699_410_777_5e-5, max_relative = 1e-13);
    }

    #[test]
    fn selections_are_unit_norm() {
        for angle in [-0.3, -0.013, 0.0, 3.2e-5, 0.010, 0.25, 1.4] {
            assert_relative_eq!(preselect(angle).unwrap().norm_sqr(), 1.0, max_relative = 1e-14);
            assert_relative_eq!(postselect(angle).unwrap().norm_sqr(), 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn dark_port_overlap_is_purely_imaginary() {
        let pre = preselect(0.010).unwrap();
        let post = postselect(0.0).unwrap();
        let overlap = post.inner(&pre);
        assert_abs_diff_eq!(overlap.re, 0.0, epsilon = 1e-18);
        assert_relative_eq!(overlap.im, -0.009_999_833_334_166_664_7, max_relative = 1e-12);
    }

    #[test]
    fn crossed_analyzers_are_orthogonal() {
        let pre = preselect(0.0).unwrap();
        let post = postselect(0.0).unwrap();
        assert!(post.inner(&pre).norm_sqr() < ORTHOGONALITY_EPSILON);
    }

    #[test]
    fn weak_value_is_cot_beta_at_zero_phase() {
        let wv = weak_value(0.010, 0.0).unwrap();
        assert_relative_eq!(wv.real(), 99.996_666_644_444_233, max_relative = 1e-13);
        assert_abs_diff_eq!(wv.imaginary(), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn weak_value_reference_point() {
        let wv = weak_value(0.010, 3.2e-5).unwrap();
        assert_relative_eq!(wv.real(), 99.995_642_859_720_247, max_relative = 1e-13);
        assert_relative_eq!(wv.imaginary(), 0.319_943_390_987_298_41, max_relative = 1e-13);
        assert_eq!(wv.beta, 0.010);
        assert_eq!(wv.phi, 3.2e-5);
    }

    #[test]
    fn weak_value_is_imaginary_cot_phi_at_zero_offset() {
        let wv = weak_value(0.0, 0.1).unwrap();
        assert_abs_diff_eq!(wv.real(), 0.0, epsilon = 1e-16);
        assert_relative_eq!(wv.imaginary(), 9.966_644_423_259_237_9, max_relative = 1e-14);
    }

    #[test]
    fn weak_value_imaginary_part_vanishes_on_balanced_diagonal() {
        let wv = weak_value(std::f64::consts::FRAC_PI_4, 0.1).unwrap();
        assert_abs_diff_eq!(wv.imaginary(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn weak_value_errors_at_the_dark_port() {
        match weak_value(0.0, 0.0) {
            Err(Error::OrthogonalSelection { probability, .. }) => {
                assert!(probability < ORTHOGONALITY_EPSILON);
            }
            other => panic!("expected orthogonality error, got {other:?}"),
        }
    }

    #[test]
    fn weak_value_rejects_non_finite_angles() {
        assert!(matches!(
            weak_value(f64::NAN, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            weak_value(0.010, f64::INFINITY),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn first_principles_ratio_is_half_the_closed_form() {
        let observable = Observable::hv_half_difference();
        for (beta, phi) in [(0.010, 3.2e-5), (0.007, 3.2e-6), (0.013, 1.6e-5), (0.1, 0.05)] {
            let pre = preselect(beta).unwrap();
            let post = postselect(phi).unwrap();
            let halved = observable.weak_value(&pre, &post, ORTHOGONALITY_EPSILON).unwrap();
            let full = weak_value(beta, phi).unwrap().value;
            assert_relative_eq!(2.0 * halved.re, full.re, max_relative = 1e-12);
            assert_relative_eq!(2.0 * halved.im, full.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn half_difference_observable_splits_the_basis() {
        let observable = Observable::hv_half_difference();
        let m = observable.matrix();
        assert_eq!(m[0][0], Complex64::new(0.5, 0.0));
        assert_eq!(m[1][1], Complex64::new(-0.5, 0.0));
        assert_eq!(m[0][1], Complex64::new(0.0, 0.0));

        let s = preselect(0.010).unwrap();
        let (h, v) = observable.apply(&s);
        assert_eq!(h, 0.5 * s.h);
        assert_eq!(v, -0.5 * s.v);
    }

    #[test]
    fn observable_weak_value_rejects_orthogonal_states() {
        let observable = Observable::hv_half_difference();
        let pre = preselect(0.0).unwrap();
        let post = postselect(0.0).unwrap();
        assert!(matches!(
            observable.weak_value(&pre, &post, ORTHOGONALITY_EPSILON),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn postselection_probability_reference_values() {
        assert_relative_eq!(
            postselection_probability(0.007, 0.0),
            4.899_919_967_189_549_3e-5,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            postselection_probability(0.010, 0.0),
            9.999_666_671_111_079_4e-5,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            postselection_probability(0.013, 0.0),
            1.689_904_798_811_889_2e-4,
            max_relative = 1e-13
        );
    }

    #[test]
    fn postselection_probability_is_sine_squared_at_zero_phase() {
        for beta in [1e-4f64, 0.007, 0.010, 0.013, 0.05, 0.3] {
            let sb = beta.sin();
            assert_eq!(postselection_probability(beta, 0.0), sb * sb);
        }
    }

    #[test]
    fn state_construction_rejects_non_finite_amplitudes() {
        assert!(PolarizationState::new(
            Complex64::new(f64::NAN, 0.0),
            Complex64::new(0.0, 0.0)
        )
        .is_err());
        assert!(preselect(f64::NAN).is_err());
        assert!(postselect(f64::NEG_INFINITY).is_err());
    }
}
