//! Numerical construction of holomorphic solutions to order-k transfer
//! equations `y(s + k) = F(s, y(s), y(s + 1), ..., y(s + k - 1))` on
//! horizontal strips of the complex plane.
//!
//! The construction runs in three stages:
//!
//! 1. **Seed.** Far enough left of a cutoff line the maps
//!    `H_j(s, z) = F(s - jk, z, w_2, ..., w_k)` (trailing arguments frozen at
//!    chosen parameters) decay toward an anchor point of the domain, and
//!    their infinite nested composition converges. [`omega`] evaluates such
//!    compositions with an adaptive truncation; the resulting function of
//!    `s` is the seed `y_0`.
//! 2. **Levels.** [`solver`] rewires the trailing arguments to read the
//!    previous level at shifted lattice points and iterates. A sampled
//!    Lipschitz bound certifies the iteration as a contraction
//!    (`lambda < 1/k` after the cutoff adjustment of
//!    [`solver::ensure_contractive`]), so the levels converge geometrically
//!    to a function satisfying the equation on the far-left lattice.
//! 3. **Continuation.** [`continuation`] extends the converged lattice
//!    values to the whole strip by iterating the equation forward, memoizing
//!    as it goes, and failing loudly if the orbit leaves the domain.
//!
//! [`verify`] closes the loop: sampled decay checks, equation residuals,
//! start-value independence of the deep compositions, contraction
//! diagnostics, closed-form and asymptotic cross-checks, and a contour
//! probe of holomorphy.
//!
//! Everything is generic over the scalar ([`scalar::Real`]); the `*64`
//! aliases fix `f64` for ordinary use.

pub mod continuation;
pub mod domain;
pub mod error;
pub mod fexpr;
pub mod omega;
pub mod scalar;
pub mod solver;
pub mod verify;

pub use continuation::{evaluate, evaluate_grid, residual, EvalGrid, GridRow};
pub use domain::{
    CompactSample, DomainSpec, LeftCutoff, Shape, Strip, Tolerances, DEFAULT_SAMPLE_DENSITY,
};
pub use error::Error;
pub use fexpr::{parse, EvalError, Expr, ParseError};
pub use omega::{compose_adaptive, compose_finite, estimate_rho, CompositionSequence, TailEstimate};
pub use scalar::Real;
pub use solver::{
    ensure_contractive, estimate_lambda, lambda_samples, level_value, seed_sequence, seed_value,
    solve, LatticeCache, ProblemSpec, SolutionHandle,
};
pub use verify::{
    binet, check_asymptotics, check_decay, check_z_independence, contour_defect, decay_samples,
    holomorphy_probe, report, DecayCheck, Verdict, VerificationReport,
};

/// Complex double-precision scalar.
pub type C64 = num_complex::Complex<f64>;

/// [`ProblemSpec`] over `f64`.
pub type Problem64 = ProblemSpec<f64>;

/// [`SolutionHandle`] over `f64`.
pub type Handle64 = SolutionHandle<f64>;

/// [`Error`] over `f64`.
pub type Error64 = Error<f64>;

/// [`EvalGrid`] over `f64`.
pub type Grid64 = EvalGrid<f64>;

/// [`VerificationReport`] over `f64`.
pub type Report64 = VerificationReport<f64>;
