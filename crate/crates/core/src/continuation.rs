//! Evaluation anywhere in the strip: lattice lookups left of the cutoff,
//! forward iteration of the functional equation to the right.
//!
//! A [`SolutionHandle`] owns one solved lattice per base point. A query `s`
//! reuses the first lattice whose integer grid passes through `s`; otherwise
//! a new lattice is solved, based at `s` itself when `s` lies left of the
//! cutoff and at the nearest suitable point `s - q` (integer `q`) when it
//! does not. Values right of the base satisfy
//! `y(t) = F(t - k, y(t - k), ..., y(t - 1))` and are filled in increasing
//! distance from the base, each memoized, each required to stay inside the
//! domain.

use num_complex::Complex;

use crate::error::Error;
use crate::scalar::Real;
use crate::solver::{solve_lattice, LatticeSolve, ProblemSpec, SolutionHandle};

/// Lattice-matching tolerance: how far (in both axes) a query may sit from
/// an exact integer shift of a base point and still count as on-lattice.
fn lattice_tol<T: Real>() -> T {
    T::lit(1e-9)
}

/// Choose a base point for a fresh lattice through `s`: the furthest-right
/// point of `s`'s integer lattice that keeps a unit of margin left of the
/// cutoff, i.e. `Re base` in `(-J - 2, -J - 1]`. Placing the base at the
/// right edge of the contractive region makes queries left of it read
/// independently composed level values (so their residuals measure real
/// defects), while queries right of it use forward recursion as they must.
fn base_for<T: Real>(p: &ProblemSpec<T>, s: Complex<T>) -> Complex<T> {
    let shift = (s.re + p.cutoff().value() + T::one()).ceil();
    s - Complex::new(shift, T::zero())
}

/// Compute `y` at lattice offset `m` (negative means right of the base),
/// filling the forward memo as needed.
fn value_at_offset<T: Real>(
    p: &ProblemSpec<T>,
    lat: &mut LatticeSolve<T>,
    m: i64,
) -> Result<Complex<T>, Error<T>> {
    let anchor = p.domain().anchor();
    if m >= 0 {
        lat.cache.ensure_levels(p, lat.n_star)?;
        return Ok(lat.cache.level_at(anchor, lat.n_star, m));
    }
    let k = p.order() as i64;
    let target = -m;
    for q in 1..=target {
        if lat.cache.forward.contains_key(&q) {
            continue;
        }
        let t = lat.cache.point(-q);
        let shift = t - Complex::new(T::from_i64(k).unwrap(), T::zero());
        let mut args = Vec::with_capacity(p.order());
        for i in 1..=k {
            // y(t - k + i - 1) sits at offset k - i + 1 - q, always > -q
            let mi = k - i + 1 - q;
            let v = if mi >= 0 {
                lat.cache.level_at(anchor, lat.n_star, mi)
            } else {
                lat.cache.forward[&-mi]
            };
            args.push(v);
        }
        let v = p.rhs(shift, &args)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteValue { at: t });
        }
        if !p.domain().contains_interior(v) {
            return Err(Error::DomainEscape { point: t, value: v });
        }
        lat.cache.forward.insert(q, v);
    }
    Ok(lat.cache.forward[&target])
}

/// Evaluate the solution at any point of the strip. Points on an existing
/// lattice are served from its memo; off-lattice points trigger one extra
/// solve whose cache the handle keeps for later queries.
pub fn evaluate<T: Real>(h: &mut SolutionHandle<T>, s: Complex<T>) -> Result<Complex<T>, Error<T>> {
    if !h.problem.strip().contains(s) {
        return Err(Error::OutsideStrip {
            point: s,
            half_height: h.problem.strip().half_height(),
        });
    }
    let tol = lattice_tol::<T>();
    let idx = match h.lattices.iter().position(|l| l.cache.offset_of(s, tol).is_some()) {
        Some(i) => i,
        None => {
            let base = base_for(&h.problem, s);
            let solved = solve_lattice(&h.problem, base, h.lambda_est)?;
            h.lattices.push(solved);
            h.lattices.len() - 1
        }
    };
    let m = h.lattices[idx].cache.offset_of(s, tol).unwrap();
    value_at_offset(&h.problem, &mut h.lattices[idx], m)
}

/// Defect of the functional equation at `s`:
/// `|y(s + k) - F(s, y(s), y(s + 1), ..., y(s + k - 1))|`.
pub fn residual<T: Real>(h: &mut SolutionHandle<T>, s: Complex<T>) -> Result<T, Error<T>> {
    let k = h.problem.order();
    let mut vals = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let si = s + Complex::new(T::from_usize(i).unwrap(), T::zero());
        vals.push(evaluate(h, si)?);
    }
    let rhs = h.problem.rhs(s, &vals[..k])?;
    Ok((vals[k] - rhs).norm())
}

/// A rectangular evaluation grid, `lo + i * step` along each axis, endpoints
/// included when they land on the step lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalGrid<T: Real> {
    re_lo: T,
    re_step: T,
    n_re: usize,
    im_lo: T,
    im_step: T,
    n_im: usize,
}

impl<T: Real> EvalGrid<T> {
    pub fn new(
        re_lo: T,
        re_hi: T,
        re_step: T,
        im_lo: T,
        im_hi: T,
        im_step: T,
    ) -> Result<Self, Error<T>> {
        let count = |lo: T, hi: T, step: T, axis: &str| -> Result<usize, Error<T>> {
            if !(step > T::zero()) || !step.is_finite() {
                return Err(Error::InvalidInput(format!("{axis} step must be positive")));
            }
            if hi < lo || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput(format!("{axis} range must satisfy lo <= hi")));
            }
            let n = ((hi - lo) / step + T::lit(1e-9)).floor();
            Ok(n.to_usize().unwrap_or(0) + 1)
        };
        let n_re = count(re_lo, re_hi, re_step, "re")?;
        let n_im = count(im_lo, im_hi, im_step, "im")?;
        Ok(Self { re_lo, re_step, n_re, im_lo, im_step, n_im })
    }

    pub fn n_re(&self) -> usize {
        self.n_re
    }

    pub fn n_im(&self) -> usize {
        self.n_im
    }

    pub fn len(&self) -> usize {
        self.n_re * self.n_im
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major points: imaginary part on the outer loop, ascending.
    pub fn points(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.len());
        for r in 0..self.n_im {
            let im = self.im_lo + T::from_usize(r).unwrap() * self.im_step;
            for c in 0..self.n_re {
                let re = self.re_lo + T::from_usize(c).unwrap() * self.re_step;
                out.push(Complex::new(re, im));
            }
        }
        out
    }
}

/// One evaluated grid point: the value and equation residual when available,
/// or the error that stopped them. A present value with an absent residual
/// means the residual's forward shifts failed, not the point itself.
#[derive(Debug, Clone)]
pub struct GridRow<T: Real> {
    pub s: Complex<T>,
    pub value: Option<Complex<T>>,
    pub residual: Option<T>,
    pub error: Option<Error<T>>,
}

/// Evaluate every grid point in row-major order. Per-point failures land in
/// the corresponding row instead of aborting the sweep.
pub fn evaluate_grid<T: Real>(h: &mut SolutionHandle<T>, grid: &EvalGrid<T>) -> Vec<GridRow<T>> {
    grid.points()
        .into_iter()
        .map(|s| match evaluate(h, s) {
            Ok(v) => GridRow { s, value: Some(v), residual: residual(h, s).ok(), error: None },
            Err(e) => GridRow { s, value: None, residual: None, error: Some(e) },
        })
        .collect()
}
