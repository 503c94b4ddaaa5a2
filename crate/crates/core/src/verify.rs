//! Checks that the computed object is what it claims to be: the decay
//! hypothesis on the composed maps, the functional-equation residual, the
//! insensitivity of deep compositions to their starting value, closed-form
//! and asymptotic cross-checks, and a contour probe of holomorphy.

use std::fmt;

use num_complex::Complex;

use crate::continuation::evaluate;
use crate::domain::CompactSample;
use crate::error::Error;
use crate::fexpr::Expr;
use crate::omega::{compose_adaptive, compose_finite, TailEstimate};
use crate::scalar::Real;
use crate::solver::{seed_sequence, ProblemSpec, SolutionHandle};

pub use crate::continuation::residual;

/// Outcome of a sampled hypothesis check. "Pass" and "Fail" reflect clear
/// sampled evidence; anything murky stays "Inconclusive" rather than guessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail => write!(f, "fail"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Sampled tail norms of the seed sequence with a geometric-ratio estimate
/// and a verdict on summable decay.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCheck<T: Real> {
    pub rho: Vec<T>,
    pub partial_sums: Vec<T>,
    pub est_ratio: T,
    pub verdict: Verdict,
}

/// Probe the tail norms `rho_j` of the seed sequence for `j = 1..=j_max`
/// over the given samples and judge whether they decay summably. The
/// verdict is about the samples only; it is evidence, not proof.
pub fn check_decay<T: Real>(
    p: &ProblemSpec<T>,
    j_max: usize,
    strip_sample: &CompactSample<T>,
    domain_sample: &CompactSample<T>,
) -> Result<DecayCheck<T>, Error<T>> {
    let seq = seed_sequence(p);
    let est = TailEstimate::compute(&seq, j_max, strip_sample, domain_sample)?;
    let rho = est.rho;
    let partial_sums = est.partial_sums;

    let tiny = T::lit(1e-13);
    let mut ratios = Vec::new();
    for w in rho.windows(2) {
        if w[0] > T::zero() {
            ratios.push(w[1] / w[0]);
        }
    }
    let tail_ratios: Vec<T> = ratios.iter().rev().take(5).copied().collect();
    let est_ratio = tail_ratios.iter().copied().fold(T::zero(), T::max);

    let last = *rho.last().unwrap_or(&T::zero());
    let verdict = if last <= tiny {
        Verdict::Pass
    } else if !tail_ratios.is_empty() && tail_ratios.iter().all(|&r| r < T::one() - T::lit(1e-3)) {
        Verdict::Pass
    } else if est_ratio >= T::one() && last > T::lit(1e-6) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };

    Ok(DecayCheck { rho, partial_sums, est_ratio, verdict })
}

/// Default probe samples for [`check_decay`]: a strip window hugging the
/// cutoff and a coarse domain grid.
pub fn decay_samples<T: Real>(p: &ProblemSpec<T>) -> (CompactSample<T>, CompactSample<T>) {
    let ss = CompactSample::strip_window(
        p.strip(),
        p.cutoff(),
        T::lit(4.0),
        6,
        4,
        "decay strip window",
    );
    let zs = p.domain().sample(8, 8, "decay domain grid");
    (ss, zs)
}

/// Spread of deep compositions started from three different points of the
/// domain: the anchor and two fixed offsets inside the anchor's clearance.
/// A genuine limit forgets its starting value, so the spread should sit at
/// round-off level.
pub fn check_z_independence<T: Real>(p: &ProblemSpec<T>, s: Complex<T>) -> Result<T, Error<T>> {
    let seq = seed_sequence(p);
    let tol = p.tolerances();
    let a = p.domain().anchor();
    let d = p.domain().anchor_clearance();
    let starts = [
        a,
        a + Complex::new(T::lit(0.6) * d, T::zero()),
        a + Complex::new(T::lit(-0.45) * d, T::lit(0.3) * d),
    ];
    let (_, n_used) = compose_adaptive(&seq, s, a, tol.tail_eps, tol.max_trunc)?;
    let depth = n_used + 8;
    let mut vals = Vec::with_capacity(starts.len());
    for &z in &starts {
        vals.push(compose_finite(&seq, 1, depth, s, z)?);
    }
    let mut spread = T::zero();
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            let d = (vals[i] - vals[j]).norm();
            if d > spread {
                spread = d;
            }
        }
    }
    Ok(spread)
}

/// Closed form for the Fibonacci recurrence on the strip:
/// `(phi^s - psi^s) / sqrt(5)` with `psi^s` taken on the principal branch,
/// `log psi = ln|psi| + i pi`. Agrees with the integer sequence at
/// nonnegative integers and satisfies `y(s+2) = y(s+1) + y(s)` everywhere.
pub fn binet<T: Real>(s: Complex<T>) -> Complex<T> {
    let sqrt5 = T::lit(5.0).sqrt();
    let phi = (T::one() + sqrt5) / T::lit(2.0);
    let psi_abs = (sqrt5 - T::one()) / T::lit(2.0);
    let log_phi = Complex::new(phi.ln(), T::zero());
    let log_psi = Complex::new(psi_abs.ln(), T::PI());
    let phi_s = (s * log_phi).exp();
    let psi_s = (s * log_psi).exp();
    (phi_s - psi_s) / Complex::new(sqrt5, T::zero())
}

/// Ratios `y(s) / model(s)` at the points `base - d` for the given real
/// shifts `d`, to eyeball an asymptotic law along the lattice.
pub fn check_asymptotics<T: Real>(
    h: &mut SolutionHandle<T>,
    shifts: &[T],
    model: &Expr<T>,
) -> Result<Vec<(T, Complex<T>)>, Error<T>> {
    if model.max_z_index() > 0 {
        return Err(Error::InvalidInput(
            "asymptotic model must be a function of s alone".into(),
        ));
    }
    let base = h.base();
    let mut out = Vec::with_capacity(shifts.len());
    for &d in shifts {
        let s = base - Complex::new(d, T::zero());
        let y = evaluate(h, s)?;
        let m = model.eval(s, &[])?;
        out.push((s.re, y / m));
    }
    Ok(out)
}

/// Trapezoid approximation of `|oint f dz|` over the circle of the given
/// center and radius, with `m` equally spaced nodes. For a function
/// holomorphic in a neighborhood of the disk this decays spectrally in `m`;
/// anything non-holomorphic leaves an O(area) defect.
pub fn contour_defect<T: Real, F>(
    mut f: F,
    center: Complex<T>,
    radius: T,
    m: usize,
) -> Result<T, Error<T>>
where
    F: FnMut(Complex<T>) -> Result<Complex<T>, Error<T>>,
{
    assert!(m >= 8, "too few contour nodes");
    let two_pi = T::PI() + T::PI();
    let mut acc = Complex::new(T::zero(), T::zero());
    for t in 0..m {
        let theta = two_pi * T::from_usize(t).unwrap() / T::from_usize(m).unwrap();
        let dir = Complex::new(theta.cos(), theta.sin());
        let z = center + dir * radius;
        let tangent = Complex::new(T::zero(), radius) * dir;
        acc = acc + f(z)? * tangent;
    }
    Ok((acc * two_pi / T::from_usize(m).unwrap()).norm())
}

/// [`contour_defect`] applied to the solution itself.
pub fn holomorphy_probe<T: Real>(
    h: &mut SolutionHandle<T>,
    center: Complex<T>,
    radius: T,
    m: usize,
) -> Result<T, Error<T>> {
    contour_defect(|z| evaluate(h, z), center, radius, m)
}

/// Everything the verifier has to say about one solved problem. All numbers
/// are sampled quantities.
#[derive(Debug, Clone)]
pub struct VerificationReport<T: Real> {
    pub hypothesis: DecayCheck<T>,
    pub residual_max: T,
    pub residual_mean: T,
    pub z_spread: T,
    pub lambda: T,
    pub mu_predicted: T,
    pub mu_measured: T,
    pub holomorphy_defect: T,
    pub asymptotic_ratios: Option<Vec<(T, Complex<T>)>>,
}

/// Number of contour nodes used by [`report`].
pub const REPORT_CONTOUR_NODES: usize = 64;

/// Radius of the holomorphy probe circle used by [`report`].
pub const REPORT_CONTOUR_RADIUS: f64 = 0.25;

/// Run the full battery against a solved handle: decay check (depth
/// `j_max`), residuals over a small grid left of the base, start-value
/// spread, contraction diagnostics, a contour probe centered five steps
/// left of the base, and model ratios when a model is supplied.
pub fn report<T: Real>(
    h: &mut SolutionHandle<T>,
    j_max: usize,
    model: Option<&Expr<T>>,
) -> Result<VerificationReport<T>, Error<T>> {
    let p = h.problem().clone();
    let (ss, zs) = decay_samples(&p);
    let hypothesis = check_decay(&p, j_max, &ss, &zs)?;

    let base = h.base();
    let a = p.strip().half_height();
    let half = a / T::lit(2.0);
    let mut residual_max = T::zero();
    let mut residual_sum = T::zero();
    let mut count = 0usize;
    for dim in [-half, T::zero(), half] {
        for dre in 0..=5 {
            let s = base - Complex::new(T::from_i32(dre).unwrap(), T::zero())
                + Complex::new(T::zero(), dim);
            let r = residual(h, s)?;
            if r > residual_max {
                residual_max = r;
            }
            residual_sum = residual_sum + r;
            count += 1;
        }
    }
    let residual_mean = residual_sum / T::from_usize(count).unwrap();

    let z_spread = check_z_independence(&p, base - Complex::new(T::lit(5.0), T::zero()))?;

    let lambda = h.lambda_est();
    let mu_predicted = h.mu_predicted();
    let mu_measured = h.mu_est();

    let center = base - Complex::new(T::lit(5.0), T::zero());
    let holomorphy_defect =
        holomorphy_probe(h, center, T::lit(REPORT_CONTOUR_RADIUS), REPORT_CONTOUR_NODES)?;

    let asymptotic_ratios = match model {
        Some(m) => Some(check_asymptotics(h, &[T::zero(), T::lit(2.0), T::lit(4.0)], m)?),
        None => None,
    };

    Ok(VerificationReport {
        hypothesis,
        residual_max,
        residual_mean,
        z_spread,
        lambda,
        mu_predicted,
        mu_measured,
        holomorphy_defect,
        asymptotic_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainSpec, LeftCutoff, Strip, Tolerances};
    use crate::fexpr::parse;
    use crate::solver::{ensure_contractive, solve};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type C64 = Complex<f64>;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    fn problem(expr: &str, k: usize, radius: f64, anchor: C64) -> ProblemSpec<f64> {
        ProblemSpec::new(
            k,
            parse(expr, k).unwrap(),
            Strip::new(1.0).unwrap(),
            LeftCutoff::new(1.0).unwrap(),
            DomainSpec::disk(anchor, radius, anchor).unwrap(),
            vec![],
            Tolerances::for_order(k),
        )
        .unwrap()
    }

    #[test]
    fn binet_hits_the_integer_sequence() {
        for (n, fib) in [(0u32, 0.0), (1, 1.0), (2, 1.0), (3, 2.0), (10, 55.0)] {
            let v = binet(c(n as f64, 0.0));
            assert!((v.re - fib).abs() < 1e-9, "binet({n}) = {v}");
            assert!(v.im.abs() < 1e-9);
        }
    }

    #[test]
    fn binet_satisfies_the_recurrence_on_the_strip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s = c(rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..1.0));
            let lhs = binet(s + c(2.0, 0.0));
            let rhs = binet(s + c(1.0, 0.0)) + binet(s);
            assert!((lhs - rhs).norm() < 1e-10, "defect at {s}");
        }
    }

    #[test]
    fn exponential_tails_decay_at_rate_one_over_e() {
        let p = ensure_contractive(&problem("exp(s+z1)", 1, 0.5, c(0.0, 0.0))).unwrap();
        let (ss, zs) = decay_samples(&p);
        let chk = check_decay(&p, 12, &ss, &zs).unwrap();
        assert_eq!(chk.verdict, Verdict::Pass);
        let want = (-1.0f64).exp();
        assert!(
            (chk.est_ratio - want).abs() < 1e-2,
            "ratio {} vs e^-1 {want}",
            chk.est_ratio
        );
        assert_eq!(chk.rho.len(), 12);
        assert_eq!(chk.partial_sums.len(), 12);
    }

    #[test]
    fn linear_recurrence_fails_the_decay_check() {
        let p = problem("z1+z2", 2, 2.0, c(0.0, 0.0));
        let (ss, zs) = decay_samples(&p);
        let chk = check_decay(&p, 10, &ss, &zs).unwrap();
        assert_eq!(chk.verdict, Verdict::Fail);
        assert!(chk.est_ratio >= 1.0);
    }

    #[test]
    fn constant_map_passes_with_identically_zero_tails() {
        let p = problem("0.1", 2, 0.5, c(0.1, 0.0));
        let (ss, zs) = decay_samples(&p);
        let chk = check_decay(&p, 6, &ss, &zs).unwrap();
        assert_eq!(chk.verdict, Verdict::Pass);
        assert!(chk.rho.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn deep_compositions_forget_their_starting_value() {
        let p = ensure_contractive(&problem("exp(s+z1)+exp(s+z2)", 2, 0.5, c(0.0, 0.0))).unwrap();
        let spread = check_z_independence(&p, c(-15.0, 0.0)).unwrap();
        assert!(spread < 1e-12, "spread {spread:e}");
    }

    #[test]
    fn conjugation_leaves_an_area_sized_contour_defect() {
        // oint conj(z) dz = 2 i pi r^2 over a circle of radius r
        let center = c(3.0, -1.0);
        let d = contour_defect(|z| Ok((z - center).conj()), center, 0.25, 64).unwrap();
        let want = 2.0 * std::f64::consts::PI * 0.0625;
        assert!((d - want).abs() < 1e-12, "defect {d} vs {want}");
    }

    #[test]
    fn holomorphic_integrand_has_negligible_defect() {
        for m in [64usize, 128] {
            let d = contour_defect(|z| Ok(z.exp() + z * z), c(0.3, 0.1), 0.25, m).unwrap();
            assert!(d < 1e-14, "m={m}: defect {d:e}");
        }
    }

    #[test]
    fn full_report_on_a_healthy_problem() {
        let p = ensure_contractive(&problem("exp(s+z1)+exp(s+z2)", 2, 0.5, c(0.0, 0.0))).unwrap();
        let mut h = solve(&p, c(-10.0, 0.0)).unwrap();
        let model = parse("2*exp(s-2)", 0).unwrap();
        let rep = report(&mut h, 10, Some(&model)).unwrap();
        assert_eq!(rep.hypothesis.verdict, Verdict::Pass);
        assert!(rep.residual_max < 1e-8, "residual {:e}", rep.residual_max);
        assert!(rep.residual_mean <= rep.residual_max);
        assert!(rep.z_spread < 1e-12);
        assert!(rep.mu_measured < 1.0);
        assert!(rep.holomorphy_defect < 1e-8, "defect {:e}", rep.holomorphy_defect);
        let ratios = rep.asymptotic_ratios.unwrap();
        assert_eq!(ratios.len(), 3);
        // 2 e^{s-2} captures the leading behavior: ratios near 1, improving leftward
        for &(re, r) in &ratios {
            assert!((r - c(1.0, 0.0)).norm() < 0.05, "ratio at {re}: {r}");
        }
    }

    #[test]
    fn asymptotic_model_must_not_mention_z() {
        let p = ensure_contractive(&problem("exp(s+z1)+exp(s+z2)", 2, 0.5, c(0.0, 0.0))).unwrap();
        let mut h = solve(&p, c(-10.0, 0.0)).unwrap();
        let bad = parse("z1", 2).unwrap();
        assert!(check_asymptotics(&mut h, &[0.0], &bad).is_err());
    }
}
