//! Error type shared by all modules.

use thiserror::Error;

/// Everything that can go wrong outside of plain programmer error.
///
/// Numerical non-convergence is deliberately *not* here: the feedback
/// iteration reports it through `ModeExtractionResult::converged` so partial
/// results stay available.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two fields (or a field and a kernel axis) live on different grids.
    #[error("grid mismatch: {context}")]
    GridMismatch {
        /// Which operation detected the mismatch.
        context: &'static str,
    },

    /// A grid failed its construction invariants.
    #[error("invalid grid: {reason}")]
    InvalidGrid {
        /// Violated invariant.
        reason: String,
    },

    /// An operation received a field with (numerically) zero norm.
    #[error("zero-norm field in {context}")]
    ZeroNorm {
        /// Which operation rejected the field.
        context: &'static str,
    },

    /// A mode or matrix index beyond the retained count.
    #[error("index {index} out of range ({len} available)")]
    IndexOutOfRange {
        /// Requested index.
        index: usize,
        /// Number of entries actually available.
        len: usize,
    },

    /// A scalar parameter violated its documented range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter {
        /// Parameter name as written in the API.
        name: &'static str,
        /// Violated requirement.
        reason: String,
    },

    /// Kernel entries came out non-finite (bad dispersion input, overflow).
    #[error("non-finite kernel entries: {context}")]
    NonFiniteKernel {
        /// Which constructor or operation produced them.
        context: &'static str,
    },

    /// A spectral window selected no grid points or no kernel support.
    #[error("empty band: {context}")]
    EmptyBand {
        /// Which operation rejected the band.
        context: &'static str,
    },

    /// The seed's component orthogonal to the already-extracted modes fell
    /// below the degenerate-remainder floor, so the iteration has nothing to
    /// amplify.
    #[error("seed depleted: orthogonal component below floor while extracting mode {mode_index}")]
    SeedDepleted {
        /// 1-based order of the mode being extracted.
        mode_index: usize,
    },

    /// Mode-number extraction was asked to invert a gain at or below 1, where
    /// arccosh(√gain) is zero or undefined — the pump is too weak for the
    /// method to distinguish modes.
    #[error("power gain {gain} not above 1; mode-number extraction needs amplification")]
    GainNotAboveUnity {
        /// Offending power gain, as a displayable value.
        gain: f64,
    },

    /// A basis handed to homodyne detection or projection was not orthonormal
    /// within the documented tolerance.
    #[error("basis not orthonormal: {context}")]
    BasisNotOrthonormal {
        /// Which operation rejected the basis.
        context: &'static str,
    },

    /// An efficiency correction produced a non-positive source variance: the
    /// supplied η is impossible for the measured value.
    #[error("efficiency correction unphysical: measured {measured_db} dB with eta {eta}")]
    UnphysicalCorrection {
        /// Measured (observed) level in dB.
        measured_db: f64,
        /// Supplied detection efficiency.
        eta: f64,
    },

    /// Monte Carlo sample budget below the minimum needed for meaningful
    /// standard errors.
    #[error("sample count {samples} below the minimum of {min}")]
    TooFewSamples {
        /// Requested sample count.
        samples: usize,
        /// Smallest accepted count.
        min: usize,
    },

    /// Serialization or deserialization of one of the portable formats failed.
    #[error("format error: {reason}")]
    Format {
        /// Human-readable description with the offending location.
        reason: String,
    },

    /// Filesystem input/output failed while reading or writing artifacts.
    #[error("io error: {reason}")]
    Io {
        /// Underlying operating-system error, with the path when known.
        reason: String,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
