//! Error taxonomy shared by every module. Each variant corresponds to one
//! failure mode a caller can act on; the CLI maps them onto exit codes.

use num_complex::Complex;
use thiserror::Error;

use crate::fexpr::{EvalError, ParseError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error<T: Real> {
    /// A computation produced NaN or an infinity.
    #[error("non-finite value at {at}")]
    NonFiniteValue { at: Complex<T> },

    /// An intermediate or forward value left the target domain.
    #[error("value {value} escaped the domain at {point}")]
    DomainEscape { point: Complex<T>, value: Complex<T> },

    /// The adaptive composition hit its truncation ceiling without meeting
    /// both stopping criteria.
    #[error("composition not converged after {n_max} terms (last difference {last_diff})")]
    TruncationLimit { n_max: usize, last_diff: T },

    /// No left cutoff up to the search ceiling brings the Lipschitz estimate
    /// under the contraction target.
    #[error("Lipschitz estimate {lambda} not below target for any cutoff up to {cutoff}")]
    HypothesisFailure { lambda: T, cutoff: T },

    /// The sampled tail norms show no summable decay, so the far-left
    /// anchor substitution has no justified depth.
    #[error("tail norms do not decay (rho = {last_rho} after {probed} indices)")]
    DecayFailure { last_rho: T, probed: usize },

    /// The level iteration exhausted its budget.
    #[error("no convergence in {levels} levels (last difference {last_diff})")]
    NoConvergence { levels: usize, last_diff: T },

    /// Measured level-difference ratios sat at or above 1.
    #[error("contraction ratio estimate {mu} is not below 1")]
    ContractionViolation { mu: T },

    /// Query point outside the open strip.
    #[error("point {point} outside the strip of half-height {half_height}")]
    OutsideStrip { point: Complex<T>, half_height: T },

    /// Invalid construction data (non-positive tolerance, anchor on the
    /// domain boundary, wrong parameter count, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),
}
