//! Temporal-mode analysis of a pulse-pumped parametric amplifier.
//!
//! The crate models the amplifier as a discretized joint-spectral kernel
//! F(ω₁, ω₂) = G·Σ_k r_k ψ_k(ω₁) φ_k(ω₂) and provides two independent ways of
//! reaching its eigen temporal modes:
//!
//! - [`schmidt`]: the exact oracle — singular value decomposition of the
//!   quadrature-weighted kernel, giving mode numbers {r_k}, mode functions
//!   {ψ_k}, {φ_k}, and per-mode gains G_k = r_k·G;
//! - [`iteration`]: the measurement procedure — seeded amplification with
//!   attenuated feedback and Gram-Schmidt deflation, in a full-complex variant
//!   and an intensity-only variant that rebuilds the field from a measured
//!   spectrum with a π sign jump at each spectral zero.
//!
//! Around those sit [`jsf`] (analytic double-Gaussian and fiber-NLI kernel
//! builders), [`amplifier`] (classical seeded propagation and spectral
//! intensity measurement), [`quantum`] (two-mode-squeezing quadrature
//! statistics, homodyne variances, covariance matrices, Duan inseparability),
//! and [`io`] (portable CSV/JSON exchange formats).
//!
//! All frequencies are dimensionless, in units of the pump bandwidth σ_p;
//! conversion to physical units is the caller's concern. Quadrature
//! normalization: vacuum variance is 1 for X = a + a† and Y = (a − a†)/i, so
//! the Duan separability bound is I < 2.
//!
//! Every numeric routine is generic over the scalar via [`Real`]; `f64`
//! aliases for the main types live at the crate root ([`Grid64`], [`Field64`],
//! …). Operations that call into dense linear algebra additionally require
//! `nalgebra::RealField`, satisfied by both `f32` and `f64`.

// Validation guards below use the `!(x > T::zero())` form on purpose: unlike
// the inverted comparison, it rejects NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::{Debug, Display};
use std::iter::{Product, Sum};

use num_traits::{Float, FloatConst, NumAssign};

pub mod amplifier;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod iteration;
pub mod jsf;
pub mod quantum;
pub mod schmidt;

pub use amplifier::{amplify_seed, measure_spectrum, measure_spectrum_with, SeededOutput};
pub use error::{Error, Result};
pub use field::{
    gram_schmidt_project_out, gram_schmidt_project_out_with_floor, inner_product, to_temporal,
    ProjectedField, SpectralField, TemporalProfile, DEGENERATE_REMAINDER_FLOOR,
};
pub use grid::FrequencyGrid;
pub use iteration::{
    default_seed, extract_all_modes, extract_mode, extract_mode_numbers, extract_modes_of,
    AttenuationPolicy, ExtractionFlag, FeedbackMode, IterationConfig, ModeExtractionResult,
};
pub use jsf::{
    build_gaussian_jsf, build_nli_jsf, chirped_gaussian_preset, island_count,
    nli_fiber_preset, nli_interference_factor, restrict_to_island, GvdParameters,
    IslandRestriction, JointSpectralKernel, NliFiberPreset, NliSpec, PumpSpec,
};
pub use quantum::{
    analytic_moments, build_covariance_matrix, duan_criterion, duan_from_db, efficiency_correct,
    homodyne_variance, infer_efficiency, Beam, CovarianceMethod, CovarianceReport, ModeLabel,
    PairMoments, Quadrature, QuadratureModel,
};
pub use schmidt::{decompose, BogoliubovKernels, SchmidtDecomposition};

/// Scalar abstraction for all numerical routines: a floating-point type with
/// the usual transcendental functions, constants, and assignment operators.
///
/// Blanket-implemented, so `f32` and `f64` (and any compatible float type)
/// qualify automatically.
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Product + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + NumAssign + Sum + Product + Debug + Display + Send + Sync + 'static
{
}

/// Convert an `f64` constant into the working scalar type.
///
/// Panics only if `T` cannot represent any `f64` at all, which no `Real`
/// in practical use exhibits; magnitudes beyond `T`'s range saturate the way
/// `as` casts do.
pub(crate) fn rc<T: Real>(x: f64) -> T {
    T::from(x).expect("f64 constant must convert into the scalar type")
}

/// `f64` frequency grid.
pub type Grid64 = FrequencyGrid<f64>;
/// `f64` complex spectral field.
pub type Field64 = SpectralField<f64>;
/// `f64` temporal profile.
pub type Temporal64 = TemporalProfile<f64>;
/// `f64` joint spectral kernel.
pub type Kernel64 = JointSpectralKernel<f64>;
/// `f64` Schmidt decomposition.
pub type Schmidt64 = SchmidtDecomposition<f64>;
/// `f64` iteration configuration.
pub type IterationConfig64 = IterationConfig<f64>;
/// `f64` mode-extraction result.
pub type ModeExtraction64 = ModeExtractionResult<f64>;
/// `f64` quadrature model.
pub type QuadratureModel64 = QuadratureModel<f64>;
/// `f64` covariance report.
pub type CovarianceReport64 = CovarianceReport<f64>;
