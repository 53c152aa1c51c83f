//! Error type shared across the crate.
//!
//! Errors split into two families: *usage* errors (bad arguments or a bad
//! config file, the caller can fix the input) and *computation* errors (a
//! physically degenerate regime or a numerical failure). [`Error::exit_code`]
//! maps the family onto the CLI exit-status convention.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Pre- and post-selection are (numerically) orthogonal: the weak value
    /// is undefined because the postselected ensemble is empty.
    #[error(
        "orthogonal selection at beta = {beta} rad, phi = {phi} rad: \
         postselection probability {probability:.3e} is below {epsilon:.0e}"
    )]
    OrthogonalSelection {
        /// Postselection offset angle (rad).
        beta: f64,
        /// Total accumulated phase (rad).
        phi: f64,
        /// Squared overlap |<post|pre>|^2 that failed the guard.
        probability: f64,
        /// Guard threshold the overlap was compared against.
        epsilon: f64,
    },

    /// The spectrometer window does not overlap the spectrum support.
    #[error(
        "spectrometer window [{window_min_nm}, {window_max_nm}] nm does not \
         overlap the spectrum support [{support_min_nm}, {support_max_nm}] nm"
    )]
    EmptyOverlap {
        /// Lower edge of the spectrometer window (nm).
        window_min_nm: f64,
        /// Upper edge of the spectrometer window (nm).
        window_max_nm: f64,
        /// First wavelength sample of the spectrum (nm).
        support_min_nm: f64,
        /// Last wavelength sample of the spectrum (nm).
        support_max_nm: f64,
    },

    /// A spectrum does not carry enough signal to fit a peak.
    #[error("insufficient signal for a peak fit: {0}")]
    InsufficientSignal(String),

    /// The configuration requested a working point with (numerically) zero
    /// field sensitivity, so no field is detectable there.
    #[error(
        "field is not detectable at beta = {beta} rad: zero-field sensitivity \
         {k_nm_per_tesla:.3e} nm/T is negligible"
    )]
    NotDetectable {
        /// Postselection offset angle (rad).
        beta: f64,
        /// The vanishing sensitivity that triggered the error.
        k_nm_per_tesla: f64,
    },

    /// A config value is missing, malformed, or out of range.
    #[error("config key `{key}`: {reason}")]
    Config {
        /// Dotted path of the offending key, e.g. `probe.w_nm`.
        key: String,
        /// What was wrong with it.
        reason: String,
    },

    /// A sweep point failed; wraps the underlying error with the field value.
    #[error("at B = {b_tesla:e} T: {source}")]
    AtField {
        /// Magnetic field (T) of the sweep point that failed.
        b_tesla: f64,
        /// The underlying failure.
        #[source]
        source: Box<Error>,
    },

    /// Reading or writing a file failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit status for the CLI: `2` for usage errors (bad flags or config),
    /// `1` for computation errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config { .. } => 2,
            Error::AtField { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    /// Tags an error with the sweep field value it occurred at.
    pub(crate) fn at_field(self, b_tesla: f64) -> Error {
        Error::AtField {
            b_tesla,
            source: Box::new(self),
        }
    }
}
