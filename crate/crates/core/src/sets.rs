//! Feasible sets `Q`, constraint sets `E`, and exact `l^q` distances to `E`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Default bound on the number of candidates an exact solver will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Exponent `q` in `[2, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent<T> {
    Finite(T),
    Infinity,
}

impl<T: Real> Exponent<T> {
    pub fn new(q: T) -> Result<Self> {
        if q.is_nan() || q < T::lit(2.0) {
            return invalid(format!("exponent q = {q} is outside [2, inf]"));
        }
        Ok(if q.is_infinite() {
            Exponent::Infinity
        } else {
            Exponent::Finite(q)
        })
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Exponent::Finite(_))
    }

    /// The exponent as a scalar, `+inf` for [`Exponent::Infinity`].
    pub fn value(&self) -> T {
        match *self {
            Exponent::Finite(q) => q,
            Exponent::Infinity => T::infinity(),
        }
    }

    /// `1/q`, zero at infinity.
    pub fn reciprocal(&self) -> T {
        match *self {
            Exponent::Finite(q) => T::one() / q,
            Exponent::Infinity => T::zero(),
        }
    }

    pub fn is_two(&self) -> bool {
        matches!(*self, Exponent::Finite(q) if q == T::lit(2.0))
    }

    /// Same exponent in another scalar type.
    pub fn cast<U: Real>(self) -> Exponent<U> {
        match self {
            Exponent::Finite(q) => Exponent::Finite(U::lit(q.to_f64_lossy())),
            Exponent::Infinity => Exponent::Infinity,
        }
    }
}

impl<T: Real> fmt::Display for Exponent<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl<T: Real + FromStr> FromStr for Exponent<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Exponent::Infinity);
        }
        let q: T = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse exponent '{s}'")))?;
        Exponent::new(q)
    }
}

/// Precomputed pieces of an `l^q` norm evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NormKernel<T> {
    q: Exponent<T>,
    int_power: Option<i32>,
    inv_q: T,
}

impl<T: Real> NormKernel<T> {
    pub(crate) fn new(q: Exponent<T>) -> Self {
        let int_power = match q {
            Exponent::Finite(v) if v.fract() == T::zero() && v <= T::lit(1e6) => v.to_i32(),
            _ => None,
        };
        Self {
            q,
            int_power,
            inv_q: q.reciprocal(),
        }
    }

    #[inline]
    fn pow(&self, x: T) -> T {
        match (self.int_power, self.q) {
            (Some(2), _) => x * x,
            (Some(k), _) => x.powi(k),
            (None, Exponent::Finite(q)) => x.powf(q),
            (None, Exponent::Infinity) => unreachable!(),
        }
    }

    /// Norm of `v` given `scale = max_i |v_i|`. Powers are taken of `|v_i| / scale`
    /// so that large exponents never overflow.
    #[inline]
    pub(crate) fn norm_with_scale(&self, v: &[T], scale: T) -> T {
        match self.q {
            Exponent::Infinity => scale,
            Exponent::Finite(_) => {
                if scale == T::zero() || !scale.is_finite() {
                    return scale;
                }
                let inv = T::one() / scale;
                let mut s = T::zero();
                for &x in v {
                    s += self.pow(x.abs() * inv);
                }
                scale * s.powf(self.inv_q)
            }
        }
    }

    /// Lower slack factor: the computed norm is at least `scale * factor`.
    pub(crate) fn prune_factor(&self) -> T {
        match self.q {
            Exponent::Infinity => T::one(),
            Exponent::Finite(q) => {
                let f = T::one() - (T::lit(4.0) * q + T::lit(16.0)) * T::epsilon();
                f.max(T::zero())
            }
        }
    }
}

/// `max_i |v_i|`, NaN if any entry is NaN.
#[inline]
pub(crate) fn max_abs<T: Real>(v: &[T]) -> T {
    let mut m = T::zero();
    for &x in v {
        let a = x.abs();
        if a > m {
            m = a;
        } else if a.is_nan() {
            return a;
        }
    }
    m
}

/// `||v||_q`.
pub fn lq_norm<T: Real>(v: &[T], q: Exponent<T>) -> T {
    NormKernel::new(q).norm_with_scale(v, max_abs(v))
}

/// Closed interval `[lo, hi]` of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == T::infinity() || hi == T::neg_infinity() {
            return invalid(format!("[{lo}, {hi}] is not a nonempty closed interval"));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Finite union of closed intervals in `R`, kept sorted with overlaps merged.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSet<T> {
    intervals: Vec<Interval<T>>,
}

impl<T: Real> CoordinateSet<T> {
    pub fn new(mut intervals: Vec<Interval<T>>) -> Result<Self> {
        if intervals.is_empty() {
            return invalid("coordinate set needs at least one interval");
        }
        intervals.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("validated intervals"));
        let mut merged: Vec<Interval<T>> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn single(lo: T, hi: T) -> Result<Self> {
        Self::new(vec![Interval::new(lo, hi)?])
    }

    /// `[k, inf)`.
    pub fn at_least(k: T) -> Result<Self> {
        Self::single(k, T::infinity())
    }

    /// `(-inf, k]`.
    pub fn at_most(k: T) -> Result<Self> {
        Self::single(T::neg_infinity(), k)
    }

    pub fn intervals(&self) -> &[Interval<T>] {
        &self.intervals
    }

    pub fn contains(&self, x: T) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    /// Nearest point of the set; equidistant gaps resolve to the smaller endpoint.
    #[inline]
    pub fn project(&self, x: T) -> T {
        let mut prev_hi: Option<T> = None;
        for iv in &self.intervals {
            if x < iv.lo {
                return match prev_hi {
                    Some(h) if x - h <= iv.lo - x => h,
                    _ => iv.lo,
                };
            }
            if x <= iv.hi {
                return x;
            }
            prev_hi = Some(iv.hi);
        }
        // x lies above every interval
        prev_hi.expect("nonempty set")
    }

    /// True when `x in C` iff `-x in C`, with exactly mirrored endpoints.
    pub fn is_mirror_symmetric(&self) -> bool {
        let n = self.intervals.len();
        (0..n).all(|k| {
            let a = self.intervals[k];
            let b = self.intervals[n - 1 - k];
            a.lo == -b.hi && a.hi == -b.lo
        })
    }

    /// `{x : dist(x, C) <= delta}`.
    pub fn expanded(&self, delta: T) -> Result<Self> {
        if !(delta >= T::zero()) {
            return invalid("expansion radius must be nonnegative");
        }
        Self::new(
            self.intervals
                .iter()
                .map(|iv| Interval {
                    lo: iv.lo - delta,
                    hi: iv.hi + delta,
                })
                .collect(),
        )
    }
}

/// Declared permutation symmetry of a constraint set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Symmetry {
    Full,
    Blocks(Vec<usize>),
    Asymmetric,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symmetry::Full => f.write_str("full"),
            Symmetry::Blocks(sizes) => {
                let parts: Vec<String> = sizes.iter().map(usize::to_string).collect();
                write!(f, "blocks({})", parts.join(","))
            }
            Symmetry::Asymmetric => f.write_str("none"),
        }
    }
}

/// Residual `x - P(x)` of one coordinate of a coordinatewise set.
#[derive(Debug, Clone, Copy)]
pub(crate) enum CoordRule<'a, T> {
    Zero,
    Interval(&'a CoordinateSet<T>),
    Upper(T),
}

impl<T: Real> CoordRule<'_, T> {
    #[inline]
    pub(crate) fn residual(&self, x: T) -> T {
        match *self {
            CoordRule::Zero => x,
            CoordRule::Interval(coords) => x - coords.project(x),
            CoordRule::Upper(b) => {
                if x > b {
                    x - b
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Closed constraint set `E` in `R^M`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet<T> {
    SingletonZero { dim: usize },
    /// `C^M` for a one-dimensional closed set `C`.
    IntervalProduct { dim: usize, coords: CoordinateSet<T> },
    /// `prod_i (-inf, b_i]`.
    Rectangle { upper: Vec<T> },
    BlockProduct { blocks: Vec<ConstraintSet<T>> },
    EuclideanBall { dim: usize, radius: T },
}

/// Distance from a point to `E` together with the witnessing projection.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult<T> {
    pub dist: T,
    /// Nearest point of `E`.
    pub z: Vec<T>,
    /// `x - z`.
    pub v: Vec<T>,
    pub abs_residual: Vec<T>,
}

impl<T: Real> ConstraintSet<T> {
    pub fn zero(dim: usize) -> Self {
        ConstraintSet::SingletonZero { dim }
    }

    pub fn interval_product(dim: usize, coords: CoordinateSet<T>) -> Self {
        ConstraintSet::IntervalProduct { dim, coords }
    }

    /// `[k, inf)^dim`.
    pub fn at_least(dim: usize, k: T) -> Result<Self> {
        Ok(Self::interval_product(dim, CoordinateSet::at_least(k)?))
    }

    /// `(-inf, k]^dim`.
    pub fn at_most(dim: usize, k: T) -> Result<Self> {
        Ok(Self::interval_product(dim, CoordinateSet::at_most(k)?))
    }

    pub fn rectangle(upper: Vec<T>) -> Result<Self> {
        if upper.iter().any(|b| b.is_nan() || *b == T::neg_infinity()) {
            return invalid("rectangle bounds must be real or +inf");
        }
        Ok(ConstraintSet::Rectangle { upper })
    }

    pub fn block_product(blocks: Vec<ConstraintSet<T>>) -> Result<Self> {
        if blocks.is_empty() {
            return invalid("block product needs at least one block");
        }
        Ok(ConstraintSet::BlockProduct { blocks })
    }

    pub fn ball(dim: usize, radius: T) -> Result<Self> {
        if !(radius >= T::zero()) || radius.is_infinite() {
            return invalid("ball radius must be finite and nonnegative");
        }
        Ok(ConstraintSet::EuclideanBall { dim, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::SingletonZero { dim }
            | ConstraintSet::IntervalProduct { dim, .. }
            | ConstraintSet::EuclideanBall { dim, .. } => *dim,
            ConstraintSet::Rectangle { upper } => upper.len(),
            ConstraintSet::BlockProduct { blocks } => blocks.iter().map(Self::dim).sum(),
        }
    }

    pub fn symmetry(&self) -> Symmetry {
        match self {
            ConstraintSet::SingletonZero { .. }
            | ConstraintSet::IntervalProduct { .. }
            | ConstraintSet::EuclideanBall { .. } => Symmetry::Full,
            ConstraintSet::Rectangle { upper } => {
                if upper.windows(2).all(|w| w[0] == w[1]) {
                    Symmetry::Full
                } else {
                    Symmetry::Asymmetric
                }
            }
            ConstraintSet::BlockProduct { blocks } => {
                if blocks.iter().all(|b| b.symmetry() == Symmetry::Full) {
                    Symmetry::Blocks(blocks.iter().map(Self::dim).collect())
                } else {
                    Symmetry::Asymmetric
                }
            }
        }
    }

    /// True when `E` is a Cartesian product of one-dimensional sets.
    pub fn is_coordinatewise(&self) -> bool {
        match self {
            ConstraintSet::EuclideanBall { .. } => false,
            ConstraintSet::BlockProduct { blocks } => blocks.iter().all(Self::is_coordinatewise),
            _ => true,
        }
    }

    /// True when the distance satisfies `d(-x, E) = d(x, E)` exactly.
    pub fn is_negation_symmetric(&self) -> bool {
        match self {
            ConstraintSet::SingletonZero { .. } | ConstraintSet::EuclideanBall { .. } => true,
            ConstraintSet::IntervalProduct { coords, .. } => coords.is_mirror_symmetric(),
            ConstraintSet::Rectangle { .. } => false,
            ConstraintSet::BlockProduct { blocks } => blocks.iter().all(Self::is_negation_symmetric),
        }
    }

    /// Rejects `(E, q)` pairs without an exact distance.
    pub fn check_exponent(&self, q: Exponent<T>) -> Result<()> {
        if self.is_coordinatewise() || q.is_two() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "Euclidean-ball constraints support only q = 2, got q = {q}"
            )))
        }
    }

    fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return invalid(format!(
                "point has dimension {} but E lives in R^{}",
                x.len(),
                self.dim()
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("point has non-finite coordinates");
        }
        Ok(())
    }

    /// Writes the residual `x - P_E(x)` into `out`.
    #[inline]
    pub(crate) fn residual_into(&self, x: &[T], out: &mut [T]) {
        match self {
            ConstraintSet::SingletonZero { .. } => out.copy_from_slice(x),
            ConstraintSet::IntervalProduct { coords, .. } => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = xi - coords.project(xi);
                }
            }
            ConstraintSet::Rectangle { upper } => {
                for ((o, &xi), &b) in out.iter_mut().zip(x).zip(upper) {
                    *o = if xi > b { xi - b } else { T::zero() };
                }
            }
            ConstraintSet::BlockProduct { blocks } => {
                let mut offset = 0;
                for b in blocks {
                    let m = b.dim();
                    b.residual_into(&x[offset..offset + m], &mut out[offset..offset + m]);
                    offset += m;
                }
            }
            ConstraintSet::EuclideanBall { radius, .. } => {
                let norm = crate::linalg::norm2(x);
                if norm <= *radius {
                    out.iter_mut().for_each(|o| *o = T::zero());
                } else {
                    let shrink = *radius / norm;
                    for (o, &xi) in out.iter_mut().zip(x) {
                        *o = xi - xi * shrink;
                    }
                }
            }
        }
    }

    /// Nearest point `P(x)`; `x - P(x)` rounds exactly like [`Self::residual_into`].
    pub(crate) fn project_into(&self, x: &[T], out: &mut [T]) {
        match self {
            ConstraintSet::SingletonZero { .. } => out.iter_mut().for_each(|o| *o = T::zero()),
            ConstraintSet::IntervalProduct { coords, .. } => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = coords.project(xi);
                }
            }
            ConstraintSet::Rectangle { upper } => {
                for ((o, &xi), &b) in out.iter_mut().zip(x).zip(upper) {
                    *o = if xi > b { b } else { xi };
                }
            }
            ConstraintSet::BlockProduct { blocks } => {
                let mut offset = 0;
                for b in blocks {
                    let m = b.dim();
                    b.project_into(&x[offset..offset + m], &mut out[offset..offset + m]);
                    offset += m;
                }
            }
            ConstraintSet::EuclideanBall { radius, .. } => {
                let norm = crate::linalg::norm2(x);
                if norm <= *radius {
                    out.copy_from_slice(x);
                } else {
                    let shrink = *radius / norm;
                    for (o, &xi) in out.iter_mut().zip(x) {
                        *o = xi * shrink;
                    }
                }
            }
        }
    }

    /// One residual rule per coordinate, `None` unless `E` is coordinatewise.
    /// Each rule rounds exactly like [`Self::residual_into`].
    pub(crate) fn coordinate_rules(&self) -> Option<Vec<CoordRule<'_, T>>> {
        match self {
            ConstraintSet::SingletonZero { dim } => Some(vec![CoordRule::Zero; *dim]),
            ConstraintSet::IntervalProduct { dim, coords } => Some(vec![CoordRule::Interval(coords); *dim]),
            ConstraintSet::Rectangle { upper } => Some(upper.iter().map(|&b| CoordRule::Upper(b)).collect()),
            ConstraintSet::BlockProduct { blocks } => {
                let mut rules = Vec::with_capacity(self.dim());
                for b in blocks {
                    rules.extend(b.coordinate_rules()?);
                }
                Some(rules)
            }
            ConstraintSet::EuclideanBall { .. } => None,
        }
    }

    /// Exact `d_q(x, E)` with the nearest point and residual.
    pub fn lq_distance(&self, x: &[T], q: Exponent<T>) -> Result<DistanceResult<T>> {
        self.check_point(x)?;
        self.check_exponent(q)?;
        let mut z = vec![T::zero(); x.len()];
        self.project_into(x, &mut z);
        let v: Vec<T> = x.iter().zip(&z).map(|(&xi, &zi)| xi - zi).collect();
        let dist = lq_norm(&v, q);
        let abs_residual = v.iter().map(|vi| vi.abs()).collect();
        Ok(DistanceResult {
            dist,
            z,
            v,
            abs_residual,
        })
    }

    pub fn distance(&self, x: &[T], q: Exponent<T>) -> Result<T> {
        Ok(self.lq_distance(x, q)?.dist)
    }

    /// Membership in the expansion `E_delta = {x : d_q(x, E) <= delta}`.
    pub fn in_expansion(&self, x: &[T], delta: T, q: Exponent<T>) -> Result<bool> {
        if !(delta >= T::zero()) {
            return invalid("expansion radius must be nonnegative");
        }
        Ok(self.distance(x, q)? <= delta)
    }

    /// Exact membership test.
    pub fn contains(&self, x: &[T]) -> Result<bool> {
        self.in_expansion(x, T::zero(), Exponent::Infinity)
    }

    /// The `l^inf` expansion `E_delta`, which for product sets is again a product set.
    pub fn expanded_linf(&self, delta: T) -> Result<Self> {
        if !(delta >= T::zero()) {
            return invalid("expansion radius must be nonnegative");
        }
        Ok(match self {
            ConstraintSet::SingletonZero { dim } => {
                Self::interval_product(*dim, CoordinateSet::single(-delta, delta)?)
            }
            ConstraintSet::IntervalProduct { dim, coords } => {
                Self::interval_product(*dim, coords.expanded(delta)?)
            }
            ConstraintSet::Rectangle { upper } => {
                Self::rectangle(upper.iter().map(|&b| b + delta).collect())?
            }
            ConstraintSet::BlockProduct { blocks } => Self::block_product(
                blocks
                    .iter()
                    .map(|b| b.expanded_linf(delta))
                    .collect::<Result<_>>()?,
            )?,
            ConstraintSet::EuclideanBall { .. } => {
                return Err(Error::Unsupported(
                    "l^inf expansion of a Euclidean ball is not a product set".into(),
                ))
            }
        })
    }
}

/// Bounded feasible set `Q` inside the Euclidean unit ball of `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet<T> {
    /// `N^{-1/2} {-1, +1}^N`.
    ScaledHypercube { dim: usize },
    UnitSphere { dim: usize },
    FiniteList { dim: usize, members: Vec<Vec<T>> },
    /// Integer box `prod_j [lo_j, hi_j]` multiplied by `scale`.
    LatticeBox { ranges: Vec<(i64, i64)>, scale: T },
    Singleton { member: Vec<T> },
}

fn check_unit_ball<T: Real>(v: &[T]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return invalid("feasible vector has non-finite coordinates");
    }
    let norm = crate::linalg::norm2(v);
    if norm > T::one() + T::lit(64.0) * T::epsilon() {
        return invalid(format!("feasible vector has Euclidean norm {norm} > 1"));
    }
    Ok(())
}

impl<T: Real> FeasibleSet<T> {
    pub fn hypercube(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("hypercube dimension must be positive");
        }
        Ok(FeasibleSet::ScaledHypercube { dim })
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("sphere dimension must be positive");
        }
        Ok(FeasibleSet::UnitSphere { dim })
    }

    pub fn finite_list(members: Vec<Vec<T>>) -> Result<Self> {
        let dim = match members.first() {
            Some(m) if !m.is_empty() => m.len(),
            _ => return invalid("finite list needs at least one nonempty member"),
        };
        for m in &members {
            if m.len() != dim {
                return invalid("finite list members have different dimensions");
            }
            check_unit_ball(m)?;
        }
        Ok(FeasibleSet::FiniteList { dim, members })
    }

    pub fn singleton(member: Vec<T>) -> Result<Self> {
        if member.is_empty() {
            return invalid("singleton member must be nonempty");
        }
        check_unit_ball(&member)?;
        Ok(FeasibleSet::Singleton { member })
    }

    /// Integer box scaled by the reciprocal of its largest member norm.
    pub fn lattice_box(ranges: Vec<(i64, i64)>) -> Result<Self> {
        if ranges.is_empty() {
            return invalid("lattice box needs at least one coordinate");
        }
        if ranges.iter().any(|&(lo, hi)| lo > hi) {
            return invalid("lattice range with lo > hi");
        }
        let max_sq: f64 = ranges
            .iter()
            .map(|&(lo, hi)| {
                let m = (lo.unsigned_abs()).max(hi.unsigned_abs()) as f64;
                m * m
            })
            .sum();
        let scale = if max_sq > 0.0 { 1.0 / max_sq.sqrt() } else { 1.0 };
        Ok(FeasibleSet::LatticeBox {
            ranges,
            scale: T::lit(scale),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::ScaledHypercube { dim }
            | FeasibleSet::UnitSphere { dim }
            | FeasibleSet::FiniteList { dim, .. } => *dim,
            FeasibleSet::LatticeBox { ranges, .. } => ranges.len(),
            FeasibleSet::Singleton { member } => member.len(),
        }
    }

    /// Number of members, `None` for the sphere. Saturates at `u128::MAX`.
    pub fn cardinality(&self) -> Option<u128> {
        match self {
            FeasibleSet::ScaledHypercube { dim } => {
                Some(if *dim >= 128 { u128::MAX } else { 1u128 << dim })
            }
            FeasibleSet::UnitSphere { .. } => None,
            FeasibleSet::FiniteList { members, .. } => Some(members.len() as u128),
            FeasibleSet::LatticeBox { ranges, .. } => {
                Some(ranges.iter().fold(1u128, |acc, &(lo, hi)| {
                    acc.saturating_mul((hi as i128 - lo as i128 + 1) as u128)
                }))
            }
            FeasibleSet::Singleton { .. } => Some(1),
        }
    }

    pub fn is_enumerable(&self) -> bool {
        !matches!(self, FeasibleSet::UnitSphere { .. })
    }

    /// Number of members after checking enumerability against `cap`.
    pub fn checked_count(&self, cap: u64) -> Result<u64> {
        let card = self.cardinality().ok_or_else(|| {
            Error::NotEnumerable(format!("unit sphere in R^{} has no finite enumeration", self.dim()))
        })?;
        if card > cap as u128 {
            let what = match self {
                FeasibleSet::ScaledHypercube { dim } => format!("hypercube with 2^{dim} members"),
                _ => format!("feasible set with {card} members"),
            };
            return Err(Error::ResourceLimit { what, cap });
        }
        Ok(card as u64)
    }

    /// Member number `index` in enumeration order.
    ///
    /// Hypercube order is lexicographic in `(sigma_0, ..., sigma_{N-1})` with `+`
    /// before `-`; lattice order is lexicographic with ascending values.
    pub fn member(&self, index: u64) -> Vec<T> {
        match self {
            FeasibleSet::ScaledHypercube { dim } => {
                let c = hypercube_coordinate::<T>(*dim);
                (0..*dim)
                    .map(|j| {
                        if (index >> (dim - 1 - j)) & 1 == 1 {
                            -c
                        } else {
                            c
                        }
                    })
                    .collect()
            }
            FeasibleSet::UnitSphere { .. } => panic!("the sphere is not enumerable"),
            FeasibleSet::FiniteList { members, .. } => members[index as usize].clone(),
            FeasibleSet::LatticeBox { ranges, scale } => {
                let mut rest = index;
                let mut out = vec![T::zero(); ranges.len()];
                for (j, &(lo, hi)) in ranges.iter().enumerate().rev() {
                    let width = (hi - lo + 1) as u64;
                    let digit = rest % width;
                    rest /= width;
                    out[j] = T::lit((lo + digit as i64) as f64) * *scale;
                }
                out
            }
            FeasibleSet::Singleton { member } => member.clone(),
        }
    }

    /// Every member exactly once, in enumeration order.
    pub fn enumerate(&self, cap: u64) -> Result<impl Iterator<Item = Vec<T>> + '_> {
        let count = self.checked_count(cap)?;
        Ok((0..count).map(move |k| self.member(k)))
    }
}

/// `N^{-1/2}`, the hypercube coordinate magnitude.
pub fn hypercube_coordinate<T: Real>(dim: usize) -> T {
    T::one() / T::from_count(dim).sqrt()
}

/// Every member of an enumerable `Q`, capped at [`DEFAULT_ENUMERATION_CAP`].
pub fn enumerate_feasible<T: Real>(q: &FeasibleSet<T>) -> Result<Vec<Vec<T>>> {
    Ok(q.enumerate(DEFAULT_ENUMERATION_CAP)?.collect())
}

pub fn symmetry_signature<T: Real>(e: &ConstraintSet<T>) -> Symmetry {
    e.symmetry()
}

pub fn lq_distance<T: Real>(e: &ConstraintSet<T>, x: &[T], q: Exponent<T>) -> Result<DistanceResult<T>> {
    e.lq_distance(x, q)
}

pub fn in_expansion<T: Real>(e: &ConstraintSet<T>, x: &[T], delta: T, q: Exponent<T>) -> Result<bool> {
    e.in_expansion(x, delta, q)
}
