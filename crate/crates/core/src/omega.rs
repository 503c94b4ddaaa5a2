//! Nested-composition engine: finite compositions
//! `H_a(s, H_{a+1}(s, ... H_b(s, z)))`, sampled tail norms
//! `rho_j = max |H_j - A|`, and the adaptive truncation used everywhere a
//! composition has to stand in for its infinite limit.
//!
//! Evaluation runs inner-to-outer (apply `H_b` first), so the recursion depth
//! is O(1) regardless of the truncation index.

use num_complex::Complex;

use crate::domain::{CompactSample, DomainSpec, LeftCutoff};
use crate::error::Error;
use crate::scalar::Real;

/// Generator of the j-th map in the sequence: `(j, s, z) -> H_j(s, z)`.
pub type Term<'a, T> =
    dyn Fn(usize, Complex<T>, Complex<T>) -> Result<Complex<T>, Error<T>> + 'a;

/// A sequence of maps `H_j : S x G -> G` (j >= 1) with its target domain and
/// the left cutoff it is valid on. Generators must be pure: same `(j, s, z)`,
/// same value.
pub struct CompositionSequence<'a, T: Real> {
    term: Box<Term<'a, T>>,
    domain: DomainSpec<T>,
    cutoff: LeftCutoff<T>,
    check_domain: bool,
}

impl<'a, T: Real> CompositionSequence<'a, T> {
    pub fn new(
        term: impl Fn(usize, Complex<T>, Complex<T>) -> Result<Complex<T>, Error<T>> + 'a,
        domain: DomainSpec<T>,
        cutoff: LeftCutoff<T>,
    ) -> Self {
        Self { term: Box::new(term), domain, cutoff, check_domain: true }
    }

    /// Disable per-value domain checks (for validated inner loops).
    pub fn with_domain_checks(mut self, on: bool) -> Self {
        self.check_domain = on;
        self
    }

    pub fn domain(&self) -> &DomainSpec<T> {
        &self.domain
    }

    pub fn cutoff(&self) -> &LeftCutoff<T> {
        &self.cutoff
    }

    /// Evaluate `H_j(s, z)` with a finiteness check; no domain check here
    /// (tail estimation deliberately measures values wherever they land).
    fn eval_term(&self, j: usize, s: Complex<T>, z: Complex<T>) -> Result<Complex<T>, Error<T>> {
        let v = (self.term)(j, s, z)?;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteValue { at: s })
        }
    }
}

/// Finite composition `phi_{a,b}(s, z) = H_a(s, H_{a+1}(s, ... H_b(s, z)))`.
///
/// Every intermediate value is checked finite, and (unless disabled on the
/// sequence) checked to stay inside the target domain.
///
/// Panics if `a < 1` or `a > b`; those are caller bugs, not data.
pub fn compose_finite<T: Real>(
    seq: &CompositionSequence<'_, T>,
    a: usize,
    b: usize,
    s: Complex<T>,
    z: Complex<T>,
) -> Result<Complex<T>, Error<T>> {
    assert!(a >= 1 && a <= b, "composition range must satisfy 1 <= a <= b, got {a}..={b}");
    if seq.check_domain && !seq.domain.contains_interior(z) {
        return Err(Error::DomainEscape { point: s, value: z });
    }
    let mut v = z;
    for j in (a..=b).rev() {
        v = seq.eval_term(j, s, v)?;
        if seq.check_domain && !seq.domain.contains_interior(v) {
            return Err(Error::DomainEscape { point: s, value: v });
        }
    }
    Ok(v)
}

/// Sampled tail norm `rho_j = max |H_j(s, z) - A|` over the given strip and
/// domain samples. A lower bound on the sup over the sampled compacts; no
/// domain membership is enforced (a failing sequence is measured, not
/// rejected).
pub fn estimate_rho<T: Real>(
    seq: &CompositionSequence<'_, T>,
    j: usize,
    strip_sample: &CompactSample<T>,
    domain_sample: &CompactSample<T>,
) -> Result<T, Error<T>> {
    assert!(j >= 1, "sequence indices start at 1");
    let anchor = seq.domain.anchor();
    let mut best = T::zero();
    for &s in strip_sample.points() {
        for &z in domain_sample.points() {
            let d = (seq.eval_term(j, s, z)? - anchor).norm();
            if d > best {
                best = d;
            }
        }
    }
    Ok(best)
}

/// Tail norms `rho_1..rho_j_max` with their partial sums (nondecreasing by
/// construction). The growth pattern of `partial_sums` is what the decay
/// hypothesis check inspects.
#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate<T: Real> {
    pub rho: Vec<T>,
    pub partial_sums: Vec<T>,
}

impl<T: Real> TailEstimate<T> {
    pub fn compute(
        seq: &CompositionSequence<'_, T>,
        j_max: usize,
        strip_sample: &CompactSample<T>,
        domain_sample: &CompactSample<T>,
    ) -> Result<Self, Error<T>> {
        let mut rho = Vec::with_capacity(j_max);
        let mut partial_sums = Vec::with_capacity(j_max);
        let mut acc = T::zero();
        for j in 1..=j_max {
            let r = estimate_rho(seq, j, strip_sample, domain_sample)?;
            acc = acc + r;
            rho.push(r);
            partial_sums.push(acc);
        }
        Ok(Self { rho, partial_sums })
    }
}

/// Adaptive composition: returns `(phi_{1,n}(s, z), n)` for the smallest `n`
/// satisfying both stopping criteria:
///
/// 1. successive difference `|phi_{1,n} - phi_{1,n-1}| < eps` (with
///    `phi_{1,0} := A`, the value the tail collapses to), and
/// 2. next tail norm `|H_{n+1}(s, A) - A| < eps`, guarding against
///    accidental plateaus of criterion 1.
pub fn compose_adaptive<T: Real>(
    seq: &CompositionSequence<'_, T>,
    s: Complex<T>,
    z: Complex<T>,
    eps: T,
    n_max: usize,
) -> Result<(Complex<T>, usize), Error<T>> {
    assert!(n_max >= 1, "n_max must be at least 1");
    let anchor = seq.domain.anchor();
    let mut prev = anchor;
    let mut last_diff = T::infinity();
    for n in 1..=n_max {
        let v = compose_finite(seq, 1, n, s, z)?;
        let diff = (v - prev).norm();
        if diff < eps {
            let tail = (seq.eval_term(n + 1, s, anchor)? - anchor).norm();
            if tail < eps {
                return Ok((v, n));
            }
        }
        prev = v;
        last_diff = diff;
    }
    Err(Error::TruncationLimit { n_max, last_diff })
}
