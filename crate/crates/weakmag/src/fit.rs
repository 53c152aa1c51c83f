//! Gaussian peak fitting for spectra.
//!
//! The model is `I(λ) = a·exp(−(λ−c)²/(2w²)) + b` with free parameters
//! amplitude `a`, center `c`, width `w`, and baseline `b`. Fitting runs in
//! two stages: a moment seed (baseline from the minimum sample, centroid and
//! second central moment of the baseline-subtracted intensities), then a
//! damped least-squares refinement with an analytic Jacobian. The damping
//! factor starts at 1e-3 and is multiplied by 0.3 after a step that lowers
//! the residual sum of squares and by 10 after one that does not; the
//! refinement stops when the accepted step's parameter change is below
//! 1e-10 in relative vector norm, or after 100 iterations (reported via
//! `converged`).
//!
//! Intensities are normalized by the peak value internally, so the
//! convergence behavior is independent of the absolute intensity scale;
//! reported parameters and residuals are in the original units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SpectrumGrid;

/// Result of a Gaussian peak fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    /// Fitted peak center (nm).
    pub center_nm: f64,
    /// Fitted Gaussian width parameter (nm), always positive.
    pub width_nm: f64,
    /// Fitted peak amplitude above baseline (intensity units).
    pub amplitude: f64,
    /// Fitted constant baseline (intensity units).
    pub baseline: f64,
    /// Residual sum of squares at the reported parameters.
    pub rss: f64,
    /// Whether the refinement met the parameter-change criterion.
    pub converged: bool,
    /// Number of refinement iterations performed.
    pub iterations: u32,
}

/// Initial damping for the refinement.
const INITIAL_DAMPING: f64 = 1e-3;
/// Damping multiplier after a residual-decreasing step.
const DAMPING_DECREASE: f64 = 0.3;
/// Damping multiplier after a rejected step.
const DAMPING_INCREASE: f64 = 10.0;
/// Relative parameter-change threshold declaring convergence.
const PARAMETER_TOLERANCE: f64 = 1e-10;
/// Iteration cap for the refinement.
const MAX_ITERATIONS: u32 = 100;
/// Give up raising the damping once it exceeds this; the step has shrunk to
/// nothing, i.e. the parameters are stationary at working precision.
const MAX_DAMPING: f64 = 1e12;

/// Fits a Gaussian peak to a spectrum.
///
/// Requires at least 5 samples carrying signal above the numerical noise
/// floor of the peak (a constant or empty spectrum is an
/// insufficient-signal error). Non-convergence within the iteration budget
/// is not an error: the best parameters found are returned with
/// `converged = false`.
pub fn fit_gaussian(spectrum: &SpectrumGrid) -> Result<GaussianFit> {
    let lambdas = spectrum.wavelengths_nm();
    let raw = spectrum.intensities();
    let n = raw.len();

    let peak = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let base = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = peak - base;
    let signal_threshold = 10.0 * f64::EPSILON * range;
    let carrying_signal = raw
        .iter()
        .filter(|&&y| y - base > signal_threshold)
        .count();
    if !(range > 0.0) || carrying_signal < 5 {
        return Err(Error::InsufficientSignal(format!(
            "{carrying_signal} of {n} samples rise above the baseline; \
             at least 5 are required"
        )));
    }

    // Work on intensities normalized by the peak so the refinement sees
    // order-one numbers regardless of the input scale.
    let scale = peak.abs();
    let y: Vec<f64> = raw.iter().map(|&v| v / scale).collect();

    // Stage 1: moment seed from the baseline-subtracted intensities.
    let base_n = base / scale;
    let weight_sum: f64 = y.iter().map(|&v| v - base_n).sum();
    let centroid = lambdas
        .iter()
        .zip(&y)
        .map(|(&l, &v)| l * (v - base_n))
        .sum::<f64>()
        / weight_sum;
    let second_moment = lambdas
        .iter()
        .zip(&y)
        .map(|(&l, &v)| (l - centroid).powi(2) * (v - base_n))
        .sum::<f64>()
        / weight_sum;
    let spacing = spectrum.spacing_nm();
    let mut p = [
        (peak - base) / scale,               // amplitude
        centroid,                            // center
        second_moment.max(0.0).sqrt().max(spacing), // width
        base_n,                              // baseline
    ];

    // Stage 2: damped least-squares refinement.
    let residual_sum = |p: &[f64; 4]| -> f64 {
        lambdas
            .iter()
            .zip(&y)
            .map(|(&l, &v)| {
                let u = (l - p[1]) / p[2];
                let r = p[0] * (-0.5 * u * u).exp() + p[3] - v;
                r * r
            })
            .sum()
    };

    let mut rss = residual_sum(&p);
    let mut damping = INITIAL_DAMPING;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;

        // Normal equations JᵀJ·δ = Jᵀr from the analytic Jacobian.
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        for (&l, &v) in lambdas.iter().zip(&y) {
            let u = (l - p[1]) / p[2];
            let e = (-0.5 * u * u).exp();
            let model = p[0] * e + p[3];
            let row = [e, p[0] * e * u / p[2], p[0] * e * u * u / p[2], 1.0];
            let r = v - model;
            for i in 0..4 {
                jtr[i] += row[i] * r;
                for k in 0..4 {
                    jtj[i][k] += row[i] * row[k];
                }
            }
        }

        // Try steps at increasing damping until the residual decreases.
        let mut accepted = None;
        while damping <= MAX_DAMPING {
            let mut lhs = jtj;
            for i in 0..4 {
                // Scale-invariant damping on the normal-equation diagonal,
                // floored to stay solvable when a row vanishes.
                lhs[i][i] += damping * jtj[i][i].max(1e-30);
            }
            if let Some(step) = solve4(lhs, jtr) {
                let candidate = [
                    p[0] + step[0],
                    p[1] + step[1],
                    p[2] + step[2],
                    p[3] + step[3],
                ];
                let candidate_rss = residual_sum(&candidate);
                if candidate_rss.is_finite() && candidate_rss <= rss {
                    accepted = Some((candidate, candidate_rss, step));
                    break;
                }
            }
            damping *= DAMPING_INCREASE;
        }

        let Some((next, next_rss, step)) = accepted else {
            // No damping level lowers the residual: the parameters are
            // stationary at working precision.
            converged = true;
            break;
        };
        p = next;
        rss = next_rss;
        damping = (damping * DAMPING_DECREASE).max(f64::MIN_POSITIVE);

        let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        let param_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if step_norm < PARAMETER_TOLERANCE * (param_norm + PARAMETER_TOLERANCE) {
            converged = true;
            break;
        }
    }

    Ok(GaussianFit {
        center_nm: p[1],
        width_nm: p[2].abs(),
        amplitude: p[0] * scale,
        baseline: p[3] * scale,
        rss: rss * scale * scale,
        converged,
        iterations,
    })
}

/// Difference of fitted centers, `final − initial` (nm).
///
/// Both fits must have converged; otherwise the comparison would read
/// fitting artifacts as a physical displacement.
pub fn measured_shift(initial: &GaussianFit, final_fit: &GaussianFit) -> Result<f64> {
    if !initial.converged || !final_fit.converged {
        return Err(Error::InvalidArgument(
            "measured_shift requires both fits to have converged".into(),
        ));
    }
    Ok(final_fit.center_nm - initial.center_nm)
}

/// Solves a 4×4 linear system by Gaussian elimination with partial
/// pivoting; `None` if the matrix is numerically singular.
#[allow(clippy::needless_range_loop)] // index math over two rows of `a`
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot_row = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..4 {
            let factor = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 4];
    for col in (0..4).rev() {
        let mut sum = b[col];
        for k in (col + 1)..4 {
            sum -= a[col][k] * x[k];
        }
        x[col] = sum / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}
