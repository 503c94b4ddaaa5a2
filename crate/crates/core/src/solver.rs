//! Seed construction and level iteration.
//!
//! The seed `y_0` is the adaptive composition of `H_j(s, z) = F(s - jk, z,
//! w_2, ..., w_k)` with the trailing arguments bound to fixed parameters.
//! Level `n` re-runs the composition with the trailing arguments fed from
//! level `n - 1` sampled one lattice step to the right:
//! `H_j(s, z) = F(s - jk, z, y_{n-1}(s - jk + 1), ..., y_{n-1}(s - jk + k - 1))`,
//! so that `y_n(s + k) = F(s, y_n(s), y_{n-1}(s + 1), ..., y_{n-1}(s + k - 1))`.
//! Under a sampled Lipschitz bound `lambda < 1/k` the levels are Cauchy with
//! ratio about `mu = (k - 1) lambda / (1 - lambda)` and the iteration stops
//! once successive levels agree below `iter_eps`.
//!
//! All level values live on the integer lattice `{ base - m : m >= 0 }`; at
//! offsets beyond the computed far-left cutoff `m_off` the solution is
//! replaced by the anchor, which by then it has approached within the tail
//! budget.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::domain::{CompactSample, DomainSpec, LeftCutoff, Strip, Tolerances};
use crate::error::Error;
use crate::fexpr::{default_diff_step, Expr};
use crate::omega::{compose_adaptive, estimate_rho, CompositionSequence};
use crate::scalar::Real;

/// Ceiling for the cutoff search in [`ensure_contractive`].
pub const CUTOFF_SEARCH_LIMIT: f64 = 65536.0;

/// Depth (in units of Re s) of the strip window sampled for Lipschitz and
/// tail estimates, measured leftward from the cutoff line.
const STRIP_WINDOW_DEPTH: f64 = 4.0;

/// A complete problem statement: order, right-hand side, geometry,
/// parameters bound in the seed, and tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T: Real> {
    order: usize,
    f: Expr<T>,
    strip: Strip<T>,
    cutoff: LeftCutoff<T>,
    domain: DomainSpec<T>,
    parameters: Vec<Complex<T>>,
    tolerances: Tolerances<T>,
}

impl<T: Real> ProblemSpec<T> {
    /// Build and validate. `parameters` are the k-1 values bound to the
    /// trailing arguments of the seed; pass an empty vector to default all
    /// of them to the anchor.
    pub fn new(
        order: usize,
        f: Expr<T>,
        strip: Strip<T>,
        cutoff: LeftCutoff<T>,
        domain: DomainSpec<T>,
        parameters: Vec<Complex<T>>,
        tolerances: Tolerances<T>,
    ) -> Result<Self, Error<T>> {
        if order == 0 {
            return Err(Error::InvalidInput("order must be at least 1".into()));
        }
        if f.max_z_index() > order {
            return Err(Error::InvalidInput(format!(
                "expression references z{} but the order is {order}",
                f.max_z_index()
            )));
        }
        let parameters = if parameters.is_empty() {
            vec![domain.anchor(); order - 1]
        } else {
            parameters
        };
        if parameters.len() != order - 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} parameter(s) for order {order}, got {}",
                order - 1,
                parameters.len()
            )));
        }
        for &w in &parameters {
            if !domain.contains_interior(w) {
                return Err(Error::InvalidInput(format!(
                    "parameter {w} lies outside the domain interior"
                )));
            }
        }
        tolerances.validate(order)?;
        Ok(Self { order, f, strip, cutoff, domain, parameters, tolerances })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn expression(&self) -> &Expr<T> {
        &self.f
    }

    pub fn strip(&self) -> &Strip<T> {
        &self.strip
    }

    pub fn cutoff(&self) -> &LeftCutoff<T> {
        &self.cutoff
    }

    pub fn domain(&self) -> &DomainSpec<T> {
        &self.domain
    }

    pub fn parameters(&self) -> &[Complex<T>] {
        &self.parameters
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.tolerances
    }

    pub fn with_cutoff(&self, cutoff: LeftCutoff<T>) -> Self {
        let mut p = self.clone();
        p.cutoff = cutoff;
        p
    }

    /// Evaluate `F(s, z_1, ..., z_k)`.
    pub fn rhs(&self, s: Complex<T>, z: &[Complex<T>]) -> Result<Complex<T>, Error<T>> {
        debug_assert_eq!(z.len(), self.order);
        Ok(self.f.eval(s, z)?)
    }
}

/// Composition sequence of the seed: `H_j(s, z) = F(s - jk, z, w_2..w_k)`.
pub fn seed_sequence<T: Real>(p: &ProblemSpec<T>) -> CompositionSequence<'_, T> {
    let k = T::from_usize(p.order).unwrap();
    CompositionSequence::new(
        move |j, s, z| {
            let shift = s - Complex::new(T::from_usize(j).unwrap() * k, T::zero());
            let mut args = Vec::with_capacity(p.order);
            args.push(z);
            args.extend_from_slice(&p.parameters);
            Ok(p.f.eval(shift, &args)?)
        },
        *p.domain(),
        *p.cutoff(),
    )
}

/// Default sample pair for Lipschitz estimation: a window of the strip
/// hugging the cutoff line (where decaying maps peak) and the full domain
/// grid at default density.
pub fn lambda_samples<T: Real>(p: &ProblemSpec<T>) -> (CompactSample<T>, CompactSample<T>) {
    let ss = CompactSample::strip_window(
        p.strip(),
        p.cutoff(),
        T::lit(STRIP_WINDOW_DEPTH),
        8,
        6,
        "lipschitz strip window",
    );
    let zs = p.domain().default_sample("lipschitz domain grid");
    (ss, zs)
}

/// Sampled Lipschitz estimate: twice the maximum over the samples of any
/// partial `|dF/dz_i|` (central differences, diagonal z-vectors). The factor
/// two is the safety margin over the sampled maximum.
pub fn estimate_lambda<T: Real>(
    p: &ProblemSpec<T>,
    strip_sample: &CompactSample<T>,
    domain_sample: &CompactSample<T>,
) -> Result<T, Error<T>> {
    let h = default_diff_step::<T>();
    let mut best = T::zero();
    for &s in strip_sample.points() {
        for &z in domain_sample.points() {
            let zs = vec![z; p.order];
            for i in 1..=p.order {
                let d = p.f.partial(i, s, &zs, h)?;
                if !d.re.is_finite() || !d.im.is_finite() {
                    return Err(Error::NonFiniteValue { at: s });
                }
                let n = d.norm();
                if n > best {
                    best = n;
                }
            }
        }
    }
    Ok(best + best)
}

/// Double the cutoff until the Lipschitz estimate drops below the problem's
/// contraction target. Returns the problem with the first cutoff that works;
/// fails once the search passes 2^16.
pub fn ensure_contractive<T: Real>(p: &ProblemSpec<T>) -> Result<ProblemSpec<T>, Error<T>> {
    let limit = T::lit(CUTOFF_SEARCH_LIMIT);
    let mut candidate = p.clone();
    loop {
        let (ss, zs) = lambda_samples(&candidate);
        let lambda = estimate_lambda(&candidate, &ss, &zs)?;
        if lambda < candidate.tolerances.lipschitz_target {
            return Ok(candidate);
        }
        if candidate.cutoff.value() >= limit {
            return Err(Error::HypothesisFailure {
                lambda,
                cutoff: candidate.cutoff.value(),
            });
        }
        candidate = candidate.with_cutoff(candidate.cutoff.doubled());
    }
}

/// Value of the seed `y_0` at `s` by adaptive composition from the anchor.
pub fn seed_value<T: Real>(p: &ProblemSpec<T>, s: Complex<T>) -> Result<Complex<T>, Error<T>> {
    let seq = seed_sequence(p);
    let tol = p.tolerances();
    let (v, _) = compose_adaptive(&seq, s, p.domain().anchor(), tol.tail_eps, tol.max_trunc)?;
    Ok(v)
}

/// Memoized level values on the integer lattice `{ base - m : m in 0..=m_off }`,
/// plus forward values to the right of the base filled in by continuation.
/// Offsets beyond `m_off` stand for the anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeCache<T: Real> {
    base: Complex<T>,
    m_off: i64,
    /// `levels[n][m] = y_n(base - m)`.
    levels: Vec<Vec<Complex<T>>>,
    /// `forward[q] = y(base + q)` for q >= 1, at the converged level.
    pub(crate) forward: BTreeMap<i64, Complex<T>>,
}

impl<T: Real> LatticeCache<T> {
    /// Set up an empty cache for `p` at `base`, choosing the far-left cutoff
    /// `m_off` deep enough that substituting the anchor beyond it is below
    /// the tail budget. Two sufficient criteria are scanned: the sampled
    /// tail sum of the seed sequence dropping under `tail_eps` (geometric
    /// extrapolation), and — for sub-geometric tails, where that sum shrinks
    /// too slowly to reach the budget directly — the contraction-damped
    /// bound `2 (k-1) lambda^j rho_j / (1 - lambda) < tail_eps`, which is
    /// how far-left perturbations actually reach the base: through `j`
    /// maps that are each `lambda`-Lipschitz. `lambda` should be the
    /// sampled Lipschitz estimate (or the problem's `lipschitz_target` as a
    /// conservative stand-in).
    pub fn for_problem(
        p: &ProblemSpec<T>,
        base: Complex<T>,
        lambda: T,
    ) -> Result<Self, Error<T>> {
        let tol = p.tolerances();
        let seq = seed_sequence(p);
        let probe_s = CompactSample::new(vec![base], "base point")?;
        let probe_z = p.domain().sample(8, 8, "tail probe grid");

        let lam = lambda.max(T::zero()).min(T::lit(0.999));
        let k1 = T::from_usize(p.order - 1).unwrap();
        let mut prev = T::infinity();
        let mut geometric = None;
        let mut damped = None;
        let mut last = T::zero();
        for j in 1..=tol.max_trunc {
            let r = estimate_rho(&seq, j, &probe_s, &probe_z)?;
            last = r;
            if j >= 2 {
                if r < tol.tail_eps {
                    let q = if prev > T::zero() { r / prev } else { T::zero() };
                    if q < T::lit(0.97) {
                        let tail =
                            if q > T::zero() { r * q / (T::one() - q) } else { T::zero() };
                        if tail < tol.tail_eps {
                            geometric = Some(j);
                            break;
                        }
                    }
                }
                if damped.is_none() {
                    let reach = T::lit(2.0) * k1 * lam.powi(j as i32) * r / (T::one() - lam);
                    if reach < tol.tail_eps {
                        damped = Some(j);
                    }
                }
            }
            prev = r;
        }
        let j_star = geometric
            .or(damped)
            .ok_or(Error::DecayFailure { last_rho: last, probed: tol.max_trunc })?;
        let margin = tol.far_left_margin.ceil().to_f64().unwrap() as i64;
        let m_off = (p.order * j_star) as i64 + margin + 2 * p.order as i64;
        Ok(Self { base, m_off, levels: Vec::new(), forward: BTreeMap::new() })
    }

    pub fn base(&self) -> Complex<T> {
        self.base
    }

    pub fn m_off(&self) -> i64 {
        self.m_off
    }

    /// Number of levels currently materialized (seed included).
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Lattice point at offset `m` (negative offsets lie right of the base).
    pub fn point(&self, m: i64) -> Complex<T> {
        self.base - Complex::new(T::from_i64(m).unwrap(), T::zero())
    }

    /// Cached `y_n(base - m)`; offsets beyond `m_off` are the anchor by
    /// convention. Panics if the level is not materialized.
    pub fn level_at(&self, anchor: Complex<T>, n: usize, m: i64) -> Complex<T> {
        if m > self.m_off {
            anchor
        } else {
            self.levels[n][m as usize]
        }
    }

    /// Offset of `s` on this lattice, if `s` lies on it (within `tol_re` of
    /// an integer shift and matching Im exactly up to the same tolerance).
    pub fn offset_of(&self, s: Complex<T>, tol_re: T) -> Option<i64> {
        if (s.im - self.base.im).abs() > tol_re {
            return None;
        }
        let rel = self.base.re - s.re;
        let m = rel.round();
        if (rel - m).abs() > tol_re {
            return None;
        }
        m.to_i64()
    }

    /// Fill levels bottom-up so that `levels[0..=n]` are materialized over
    /// the whole span `0..=m_off`. Level n reads only the completed level
    /// n - 1, so each fill is a plain sweep.
    pub fn ensure_levels(&mut self, p: &ProblemSpec<T>, n: usize) -> Result<(), Error<T>> {
        let tol = *p.tolerances();
        let anchor = p.domain().anchor();
        while self.levels.len() <= n {
            let level = self.levels.len();
            let mut cur = Vec::with_capacity(self.m_off as usize + 1);
            if level == 0 {
                let seq = seed_sequence(p);
                for m in 0..=self.m_off {
                    let (v, _) =
                        compose_adaptive(&seq, self.point(m), anchor, tol.tail_eps, tol.max_trunc)?;
                    cur.push(v);
                }
            } else {
                let prev: &[Complex<T>] = &self.levels[level - 1];
                let base = self.base;
                let m_off = self.m_off;
                let k = p.order;
                let kf = T::from_usize(k).unwrap();
                let lookup = move |m: i64| -> Complex<T> {
                    if m > m_off {
                        anchor
                    } else {
                        prev[m as usize]
                    }
                };
                let seq = CompositionSequence::new(
                    move |j, s, z| {
                        let m = (base.re - s.re).round().to_i64().unwrap();
                        let shift = s - Complex::new(T::from_usize(j).unwrap() * kf, T::zero());
                        let mut args = Vec::with_capacity(k);
                        args.push(z);
                        for i in 1..k {
                            args.push(lookup(m + (j * k) as i64 - i as i64));
                        }
                        Ok(p.expression().eval(shift, &args)?)
                    },
                    *p.domain(),
                    *p.cutoff(),
                );
                for m in 0..=self.m_off {
                    let (v, _) =
                        compose_adaptive(&seq, self.point(m), anchor, tol.tail_eps, tol.max_trunc)?;
                    cur.push(v);
                }
            }
            self.levels.push(cur);
        }
        Ok(())
    }
}

/// On-demand, memoized level value `y_n(s)`. `s` must lie on the cache's
/// lattice; offsets beyond the far-left cutoff return the anchor.
pub fn level_value<T: Real>(
    p: &ProblemSpec<T>,
    n: usize,
    s: Complex<T>,
    cache: &mut LatticeCache<T>,
) -> Result<Complex<T>, Error<T>> {
    let m = cache
        .offset_of(s, T::lit(1e-9))
        .ok_or_else(|| Error::InvalidInput(format!("{s} is not on the lattice of {}", cache.base())))?;
    if m < 0 {
        return Err(Error::InvalidInput(format!("{s} lies right of the lattice base")));
    }
    let anchor = p.domain().anchor();
    if m > cache.m_off() {
        return Ok(anchor);
    }
    cache.ensure_levels(p, n)?;
    Ok(cache.level_at(anchor, n, m))
}

/// One solved lattice: its cache at the converged level plus the iteration
/// diagnostics that justify it.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSolve<T: Real> {
    pub cache: LatticeCache<T>,
    pub n_star: usize,
    pub level_diffs: Vec<T>,
    pub mu_est: T,
    pub last_diff: T,
    pub error_bound: T,
}

/// A converged solution: the problem (post cutoff adjustment), the sampled
/// Lipschitz estimate, and one solved lattice per base point (the first is
/// the primary; others appear as continuation gets asked for points off the
/// primary lattice).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionHandle<T: Real> {
    pub(crate) problem: ProblemSpec<T>,
    pub(crate) lambda_est: T,
    pub(crate) lattices: Vec<LatticeSolve<T>>,
}

impl<T: Real> SolutionHandle<T> {
    pub fn problem(&self) -> &ProblemSpec<T> {
        &self.problem
    }

    pub fn lambda_est(&self) -> T {
        self.lambda_est
    }

    fn primary(&self) -> &LatticeSolve<T> {
        &self.lattices[0]
    }

    pub fn base(&self) -> Complex<T> {
        self.primary().cache.base()
    }

    pub fn n_star(&self) -> usize {
        self.primary().n_star
    }

    pub fn mu_est(&self) -> T {
        self.primary().mu_est
    }

    pub fn last_diff(&self) -> T {
        self.primary().last_diff
    }

    pub fn error_bound(&self) -> T {
        self.primary().error_bound
    }

    pub fn level_diffs(&self) -> &[T] {
        &self.primary().level_diffs
    }

    pub fn lattice_count(&self) -> usize {
        self.lattices.len()
    }

    pub fn cache(&self) -> &LatticeCache<T> {
        &self.primary().cache
    }

    /// Predicted contraction ratio `(k - 1) lambda / (1 - lambda)`.
    pub fn mu_predicted(&self) -> T {
        let k1 = T::from_usize(self.problem.order() - 1).unwrap();
        k1 * self.lambda_est / (T::one() - self.lambda_est)
    }
}

/// Run the level iteration on the lattice based at `base` until successive
/// levels agree below `iter_eps` at the probe offsets `0..=2k`.
pub(crate) fn solve_lattice<T: Real>(
    p: &ProblemSpec<T>,
    base: Complex<T>,
    lambda: T,
) -> Result<LatticeSolve<T>, Error<T>> {
    let tol = *p.tolerances();
    let mut cache = LatticeCache::for_problem(p, base, lambda)?;
    cache.ensure_levels(p, 0)?;

    let probe_span = (2 * p.order()) as i64;
    let mut diffs: Vec<T> = Vec::new();
    let mut consecutive_bad = 0usize;
    let mut n_star = None;

    for n in 1..=tol.max_levels {
        cache.ensure_levels(p, n)?;
        let mut diff = T::zero();
        for m in 0..=probe_span {
            let a = cache.level_at(p.domain().anchor(), n, m);
            let b = cache.level_at(p.domain().anchor(), n - 1, m);
            let d = (a - b).norm();
            if d > diff {
                diff = d;
            }
        }
        if let Some(&prev) = diffs.last() {
            if prev > T::zero() {
                let ratio = diff / prev;
                if ratio >= T::one() {
                    consecutive_bad += 1;
                    if consecutive_bad >= 3 {
                        return Err(Error::ContractionViolation { mu: ratio });
                    }
                } else {
                    consecutive_bad = 0;
                }
            }
        }
        diffs.push(diff);
        if diff < tol.iter_eps {
            n_star = Some(n);
            break;
        }
    }

    let n_star = match n_star {
        Some(n) => n,
        None => {
            return Err(Error::NoConvergence {
                levels: tol.max_levels,
                last_diff: *diffs.last().unwrap_or(&T::nan()),
            })
        }
    };

    // keep only the needed levels? They are cheap; retain for diagnostics.
    let mut mu_est = T::zero();
    for w in diffs.windows(2) {
        if w[0] > T::zero() {
            let r = w[1] / w[0];
            if r > mu_est {
                mu_est = r;
            }
        }
    }
    if mu_est >= T::one() {
        return Err(Error::ContractionViolation { mu: mu_est });
    }
    let last_diff = *diffs.last().unwrap();
    let error_bound = mu_est / (T::one() - mu_est) * last_diff;

    Ok(LatticeSolve { cache, n_star, level_diffs: diffs, mu_est, last_diff, error_bound })
}

/// Solve at the base point `s0`, which must lie in the strip and left of the
/// cutoff. Run [`ensure_contractive`] first; this function checks that the
/// sampled Lipschitz estimate clears the theoretical bound `1/k`, but does
/// not adjust the cutoff.
pub fn solve<T: Real>(p: &ProblemSpec<T>, s0: Complex<T>) -> Result<SolutionHandle<T>, Error<T>> {
    if !p.strip().contains(s0) {
        return Err(Error::OutsideStrip { point: s0, half_height: p.strip().half_height() });
    }
    if !p.cutoff().contains(s0) {
        return Err(Error::InvalidInput(format!(
            "base point {s0} must lie left of the cutoff -{}",
            p.cutoff().value()
        )));
    }
    let (ss, zs) = lambda_samples(p);
    let lambda_est = estimate_lambda(p, &ss, &zs)?;
    if !(lambda_est < T::one() / T::from_usize(p.order()).unwrap()) {
        return Err(Error::HypothesisFailure { lambda: lambda_est, cutoff: p.cutoff().value() });
    }
    let lattice = solve_lattice(p, s0, lambda_est)?;
    Ok(SolutionHandle { problem: p.clone(), lambda_est, lattices: vec![lattice] })
}
