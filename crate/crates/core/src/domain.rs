//! Strip and domain geometry, compact sample grids, and the tolerance
//! bundle threaded through the solver.
//!
//! Sup-norms over compact sets are everywhere replaced by maxima over finite
//! sample grids. A sampled maximum is a lower bound on the true sup-norm;
//! consumers that need an upper bound (the Lipschitz estimate) apply an
//! explicit safety factor on top.

use num_complex::Complex;

use crate::error::Error;
use crate::scalar::Real;

/// Default number of subdivisions per axis (or rings/angles) for sample grids.
pub const DEFAULT_SAMPLE_DENSITY: usize = 32;

/// Open horizontal strip `{ s : |Im s| < half_height }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strip<T: Real> {
    half_height: T,
}

impl<T: Real> Strip<T> {
    pub fn new(half_height: T) -> Result<Self, Error<T>> {
        if !(half_height > T::zero()) || !half_height.is_finite() {
            return Err(Error::InvalidInput(format!(
                "strip half-height must be positive and finite, got {half_height}"
            )));
        }
        Ok(Self { half_height })
    }

    pub fn half_height(&self) -> T {
        self.half_height
    }

    /// Strict interior test.
    pub fn contains(&self, s: Complex<T>) -> bool {
        s.im.abs() < self.half_height
    }
}

/// Left cutoff J > 0 delimiting the half-strip `{ Re s < -J }` on which the
/// decay hypothesis is quantified and the solver operates directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeftCutoff<T: Real> {
    j: T,
}

impl<T: Real> LeftCutoff<T> {
    pub fn new(j: T) -> Result<Self, Error<T>> {
        if !(j > T::zero()) || !j.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cutoff must be positive and finite, got {j}"
            )));
        }
        Ok(Self { j })
    }

    pub fn value(&self) -> T {
        self.j
    }

    /// True when `Re s < -J`.
    pub fn contains(&self, s: Complex<T>) -> bool {
        s.re < -self.j
    }

    pub fn doubled(&self) -> Self {
        Self { j: self.j + self.j }
    }
}

/// Geometric shape of the value domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<T: Real> {
    Disk { center: Complex<T>, radius: T },
    /// Axis-aligned rectangle given by its lower-left and upper-right corners.
    Rect { lo: Complex<T>, hi: Complex<T> },
}

/// Value domain G together with the distinguished anchor point A that tails
/// of convergent compositions collapse to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec<T: Real> {
    shape: Shape<T>,
    anchor: Complex<T>,
}

impl<T: Real> DomainSpec<T> {
    pub fn new(shape: Shape<T>, anchor: Complex<T>) -> Result<Self, Error<T>> {
        match shape {
            Shape::Disk { radius, .. } if !(radius > T::zero()) || !radius.is_finite() => {
                return Err(Error::InvalidInput(format!(
                    "disk radius must be positive and finite, got {radius}"
                )));
            }
            Shape::Rect { lo, hi } if !(lo.re < hi.re) || !(lo.im < hi.im) => {
                return Err(Error::InvalidInput(format!(
                    "rectangle corners must satisfy lo < hi componentwise, got {lo} .. {hi}"
                )));
            }
            _ => {}
        }
        let d = Self { shape, anchor };
        if !d.contains_interior(anchor) {
            return Err(Error::InvalidInput(format!(
                "anchor {anchor} must lie strictly inside the domain"
            )));
        }
        Ok(d)
    }

    pub fn disk(center: Complex<T>, radius: T, anchor: Complex<T>) -> Result<Self, Error<T>> {
        Self::new(Shape::Disk { center, radius }, anchor)
    }

    pub fn rect(lo: Complex<T>, hi: Complex<T>, anchor: Complex<T>) -> Result<Self, Error<T>> {
        Self::new(Shape::Rect { lo, hi }, anchor)
    }

    pub fn shape(&self) -> &Shape<T> {
        &self.shape
    }

    pub fn anchor(&self) -> Complex<T> {
        self.anchor
    }

    /// Strict interior test; boundary points return false.
    pub fn contains_interior(&self, v: Complex<T>) -> bool {
        if !v.re.is_finite() || !v.im.is_finite() {
            return false;
        }
        match self.shape {
            Shape::Disk { center, radius } => (v - center).norm() < radius,
            Shape::Rect { lo, hi } => {
                lo.re < v.re && v.re < hi.re && lo.im < v.im && v.im < hi.im
            }
        }
    }

    /// Diameter of the shape (used by coarse a-priori bounds).
    pub fn diameter(&self) -> T {
        match self.shape {
            Shape::Disk { radius, .. } => radius + radius,
            Shape::Rect { lo, hi } => {
                let d = hi - lo;
                d.norm()
            }
        }
    }

    /// Distance from the anchor to the boundary; positive by construction.
    pub fn anchor_clearance(&self) -> T {
        match self.shape {
            Shape::Disk { center, radius } => radius - (self.anchor - center).norm(),
            Shape::Rect { lo, hi } => {
                let a = self.anchor;
                let m1 = (a.re - lo.re).min(hi.re - a.re);
                let m2 = (a.im - lo.im).min(hi.im - a.im);
                m1.min(m2)
            }
        }
    }

    /// Closed sample grid over the shape: a tensor grid for rectangles, a
    /// concentric ring grid for disks. Grids include the boundary so that
    /// sampled maxima of monotone integrands match the closed sup.
    pub fn sample(&self, n1: usize, n2: usize, label: &str) -> CompactSample<T> {
        match self.shape {
            Shape::Disk { center, radius } => {
                CompactSample::disk_grid(center, radius, n1, n2, label)
            }
            Shape::Rect { lo, hi } => CompactSample::rect_grid(lo, hi, n1, n2, label),
        }
    }

    pub fn default_sample(&self, label: &str) -> CompactSample<T> {
        self.sample(DEFAULT_SAMPLE_DENSITY, DEFAULT_SAMPLE_DENSITY, label)
    }
}

/// Finite point set standing in for a compact subset of the strip or domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSample<T: Real> {
    points: Vec<Complex<T>>,
    label: String,
}

impl<T: Real> CompactSample<T> {
    pub fn new(points: Vec<Complex<T>>, label: &str) -> Result<Self, Error<T>> {
        if points.is_empty() {
            return Err(Error::InvalidInput(format!("sample '{label}' is empty")));
        }
        for &p in &points {
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(Error::NonFiniteValue { at: p });
            }
        }
        Ok(Self { points, label: label.to_string() })
    }

    /// Closed tensor grid on `[lo.re, hi.re] x [lo.im, hi.im]` with `nx` by
    /// `ny` subdivisions (endpoints included, so `nx + 1` columns).
    pub fn rect_grid(lo: Complex<T>, hi: Complex<T>, nx: usize, ny: usize, label: &str) -> Self {
        let mut points = Vec::with_capacity((nx + 1) * (ny + 1));
        for iy in 0..=ny {
            let t = T::from_usize(iy).unwrap() / T::from_usize(ny.max(1)).unwrap();
            let im = lo.im + (hi.im - lo.im) * t;
            for ix in 0..=nx {
                let u = T::from_usize(ix).unwrap() / T::from_usize(nx.max(1)).unwrap();
                let re = lo.re + (hi.re - lo.re) * u;
                points.push(Complex::new(re, im));
            }
        }
        Self { points, label: label.to_string() }
    }

    /// Concentric ring grid on the closed disk: `n_rings` rings out to and
    /// including the boundary circle, `n_angles` points per ring.
    pub fn disk_grid(
        center: Complex<T>,
        radius: T,
        n_rings: usize,
        n_angles: usize,
        label: &str,
    ) -> Self {
        let n_rings = n_rings.max(1);
        let n_angles = n_angles.max(1);
        let mut points = Vec::with_capacity(n_rings * n_angles);
        let two_pi = T::PI() + T::PI();
        for ir in 1..=n_rings {
            let r = radius * T::from_usize(ir).unwrap() / T::from_usize(n_rings).unwrap();
            for ia in 0..n_angles {
                let th = two_pi * T::from_usize(ia).unwrap() / T::from_usize(n_angles).unwrap();
                points.push(center + Complex::from_polar(r, th));
            }
        }
        Self { points, label: label.to_string() }
    }

    /// Closed window of the strip adjacent to the cutoff:
    /// `[-J - depth, -J] x [-a, a]`. Decaying maps attain their half-strip
    /// maximum at the cutoff boundary, which this window contains.
    pub fn strip_window(
        strip: &Strip<T>,
        cutoff: &LeftCutoff<T>,
        depth: T,
        nx: usize,
        ny: usize,
        label: &str,
    ) -> Self {
        let j = cutoff.value();
        let a = strip.half_height();
        Self::rect_grid(
            Complex::new(-j - depth, -a),
            Complex::new(-j, a),
            nx,
            ny,
            label,
        )
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sampled sup-norm: `max |f(p)|` over the sample. A lower bound on the
/// continuum sup-norm; fails if any value is non-finite.
pub fn sup_norm_over<T: Real, F>(sample: &CompactSample<T>, mut f: F) -> Result<T, Error<T>>
where
    F: FnMut(Complex<T>) -> Result<Complex<T>, Error<T>>,
{
    let mut best = T::zero();
    for &p in sample.points() {
        let v = f(p)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteValue { at: p });
        }
        let n = v.norm();
        if n > best {
            best = n;
        }
    }
    Ok(best)
}

/// Strict interior test, boundary points excluded.
pub fn in_domain<T: Real>(v: Complex<T>, d: &DomainSpec<T>) -> bool {
    d.contains_interior(v)
}

/// Tolerance bundle. All solver and verification thresholds live here so a
/// problem carries one knob set end to end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T: Real> {
    /// Composition truncation threshold (both stopping criteria).
    pub tail_eps: T,
    /// Level-iteration stopping threshold.
    pub iter_eps: T,
    /// Acceptable functional-equation residual.
    pub residual_tol: T,
    /// Hard ceiling on composition depth.
    pub max_trunc: usize,
    /// Hard ceiling on level iterations.
    pub max_levels: usize,
    /// Extra offsets added beyond the computed far-left cutoff before the
    /// lattice substitutes the anchor for deeper values.
    pub far_left_margin: T,
    /// Contraction target for the Lipschitz estimate; must stay below 1/k.
    pub lipschitz_target: T,
}

impl<T: Real> Tolerances<T> {
    /// Defaults for a problem of the given order (the contraction target is
    /// order-dependent: 1/(2k)).
    pub fn for_order(k: usize) -> Self {
        Self {
            tail_eps: T::lit(1e-12),
            iter_eps: T::lit(1e-12),
            residual_tol: T::lit(1e-8),
            max_trunc: 200,
            max_levels: 64,
            far_left_margin: T::lit(8.0),
            lipschitz_target: T::lit(0.5) / T::from_usize(k.max(1)).unwrap(),
        }
    }

    pub fn validate(&self, k: usize) -> Result<(), Error<T>> {
        let pos = [
            (self.tail_eps, "tail_eps"),
            (self.iter_eps, "iter_eps"),
            (self.residual_tol, "residual_tol"),
            (self.far_left_margin, "far_left_margin"),
        ];
        for (v, name) in pos {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.max_trunc == 0 || self.max_levels == 0 {
            return Err(Error::InvalidInput(
                "max_trunc and max_levels must be at least 1".into(),
            ));
        }
        let inv_k = T::one() / T::from_usize(k.max(1)).unwrap();
        if !(self.lipschitz_target > T::zero()) || !(self.lipschitz_target < inv_k) {
            return Err(Error::InvalidInput(format!(
                "lipschitz_target must lie in (0, 1/{k}), got {}",
                self.lipschitz_target
            )));
        }
        Ok(())
    }
}
