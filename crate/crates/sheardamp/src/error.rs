//! Error taxonomy shared across the library.

use thiserror::Error;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Profile derivative drops to zero or below somewhere on the channel.
    #[error("profile is not monotone: min u' = {min_du} at y = {at}")]
    NonMonotone {
        /// Smallest sampled derivative value.
        min_du: f64,
        /// Location of the minimum.
        at: f64,
    },

    /// Profile parameters outside their documented ranges.
    #[error("bad profile parameters: {0}")]
    BadParams(String),

    /// Spectral parameter outside the range of the profile.
    #[error("c = {c} outside [{lo}, {hi}]")]
    OutOfRange {
        /// Requested value.
        c: f64,
        /// Lower end of the admissible interval.
        lo: f64,
        /// Upper end of the admissible interval.
        hi: f64,
    },

    /// Principal-value pole placed on (or too near) an interval endpoint.
    #[error("pole at c = {c} is within {dist:.3e} of an interval endpoint")]
    PoleAtEndpoint {
        /// Pole location.
        c: f64,
        /// Distance to the nearest endpoint.
        dist: f64,
    },

    /// Series iteration exhausted its term budget.
    #[error("series did not converge: residual {residual:.3e} after {terms} terms")]
    NoConvergence {
        /// Sup-norm of the last computed term.
        residual: f64,
        /// Number of terms consumed.
        terms: usize,
    },

    /// Critical layer collides with the channel boundary.
    #[error("critical layer at y_c = {yc:.6e} is inside the endpoint layer")]
    EndpointLayer {
        /// Critical-layer position.
        yc: f64,
    },

    /// Complex spectral parameter too close to the continuous spectrum.
    #[error("c = {re}+{im}i is within {dist:.3e} of the spectral segment")]
    TooCloseToSpectrum {
        /// Real part.
        re: f64,
        /// Imaginary part.
        im: f64,
        /// Distance to the segment.
        dist: f64,
    },

    /// Winding contour crosses a near-zero of the Wronskian.
    #[error("contour passes within {min_abs:.3e} of a Wronskian zero; perturb R or eps1")]
    ContourThroughZero {
        /// Smallest |W| seen on the contour.
        min_abs: f64,
    },

    /// Embedding eigenvalue detected on the spectral grid.
    #[error("embedding eigenvalue flagged at c = {c}: A^2+B^2 = {ab2:.3e}")]
    EmbeddingEigenvalue {
        /// Flagged spectral node.
        c: f64,
        /// Size of A^2+B^2 there.
        ab2: f64,
    },

    /// Discrete spectrum present; damping pipeline refuses to run.
    #[error("winding number {winding} != 0: discrete eigenvalues present")]
    DiscreteSpectrumPresent {
        /// Computed winding count.
        winding: i64,
    },

    /// Too few time samples (or too short a span) for a decay fit.
    #[error("decay fit needs >= {need} samples over a decade; got {got}")]
    InsufficientWindow {
        /// Required sample count.
        need: usize,
        /// Available sample count.
        got: usize,
    },

    /// Requested time step violates the stability budget.
    #[error("dt = {dt:.3e} exceeds stability budget {budget:.3e}")]
    StepTooLarge {
        /// Requested step.
        dt: f64,
        /// Largest admissible step.
        budget: f64,
    },

    /// Operation undefined for this profile (e.g. curvature identically zero).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Elliptic solve hit a non-positive pivot (should never happen).
    #[error("singular elliptic system at row {row}")]
    SingularSystem {
        /// Offending pivot row.
        row: usize,
    },

    /// Configuration file rejected.
    #[error("config error: {0}")]
    ConfigError(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
