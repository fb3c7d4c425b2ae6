//! Lattice points, discs and annuli on `Z^2` and on the torus `Z^2_K`.
//!
//! Discs are closed: `D(c, r) = {x : |x - c| <= r}`. The annulus of inner radius
//! `n` and width `s` is `D(c, n + s) \ D(c, n)`. On the torus every point is
//! stored by its canonical representative in the fundamental domain
//! `[-floor(K/2), K - 1 - floor(K/2)]^2`, and distances are the minimum over
//! translates by `K Z^2`.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("torus side length must be positive, got K = {0}")]
    BadSide(i64),
    #[error("torus points live on different tori (K = {0} vs K = {1})")]
    MismatchedTorus(i64, i64),
    #[error("disc radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("toral disc radius {radius} must be < K/4 = {}", *k as f64 / 4.0)]
    TorusDiscTooLarge { radius: f64, k: i64 },
    #[error("n + s must be < K/4 (n = {n}, s = {s}, K = {k})")]
    TorusAnnulusTooLarge { n: f64, s: f64, k: i64 },
    #[error("jump classification needs 0 < s, 0 < n and 2n < K/2 (n = {n}, s = {s}, K = {k})")]
    BadJumpGeometry { n: f64, s: f64, k: i64 },
}

/// A point of `Z^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x1: i64,
    pub x2: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x1: 0, x2: 0 };

    pub const fn new(x1: i64, x2: i64) -> Self {
        Self { x1, x2 }
    }

    pub fn norm_sq(self) -> i64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// The eight images of `self` under the symmetry group of the square lattice.
    pub fn dihedral_images(self) -> [LatticePoint; 8] {
        let LatticePoint { x1: a, x2: b } = self;
        [
            Self::new(a, b),
            Self::new(-a, b),
            Self::new(a, -b),
            Self::new(-a, -b),
            Self::new(b, a),
            Self::new(-b, a),
            Self::new(b, -a),
            Self::new(-b, -a),
        ]
    }
}

impl Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Neg for LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x1, self.x2)
    }
}

impl From<(i64, i64)> for LatticePoint {
    fn from((x1, x2): (i64, i64)) -> Self {
        Self::new(x1, x2)
    }
}

fn wrap_coord(v: i64, k: i64) -> i64 {
    let h = k / 2;
    (v + h).rem_euclid(k) - h
}

/// The projection `pi_K` onto the fundamental domain.
pub fn project(x: LatticePoint, k: i64) -> LatticePoint {
    debug_assert!(k >= 1);
    LatticePoint::new(wrap_coord(x.x1, k), wrap_coord(x.x2, k))
}

/// Whether `x` lies in the fundamental domain of `Z^2_K`.
pub fn in_fundamental_domain(x: LatticePoint, k: i64) -> bool {
    let lo = -(k / 2);
    let hi = k - 1 - k / 2;
    (lo..=hi).contains(&x.x1) && (lo..=hi).contains(&x.x2)
}

/// Squared torus distance between two representatives.
///
/// Both arguments must lie in the fundamental domain; then the minimum over
/// the nine neighbouring translates equals the infimum over all copies.
pub fn torus_dist_sq(a: LatticePoint, b: LatticePoint, k: i64) -> i64 {
    let d = a - b;
    let mut best = i64::MAX;
    for i in -1..=1 {
        for j in -1..=1 {
            let e = LatticePoint::new(d.x1 + i * k, d.x2 + j * k);
            best = best.min(e.norm_sq());
        }
    }
    best
}

/// A point of `Z^2_K`, stored by its representative in the fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TorusPoint {
    rep: LatticePoint,
    k: i64,
}

impl TorusPoint {
    pub fn new(x: LatticePoint, k: i64) -> Result<Self, GeometryError> {
        if k < 1 {
            return Err(GeometryError::BadSide(k));
        }
        Ok(Self { rep: project(x, k), k })
    }

    pub fn rep(self) -> LatticePoint {
        self.rep
    }

    pub fn side(self) -> i64 {
        self.k
    }

    /// Torus norm `|x^|`, the distance to `0^`.
    pub fn norm(self) -> f64 {
        (torus_dist_sq(self.rep, LatticePoint::ORIGIN, self.k) as f64).sqrt()
    }
}

/// Minimum Euclidean distance between the copies of `a` and `b`.
pub fn torus_distance(a: TorusPoint, b: TorusPoint) -> Result<f64, GeometryError> {
    if a.k != b.k {
        return Err(GeometryError::MismatchedTorus(a.k, b.k));
    }
    Ok((torus_dist_sq(a.rep, b.rep, a.k) as f64).sqrt())
}

/// Where a walk lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ambient {
    Plane,
    Torus(i64),
}

impl Ambient {
    /// Canonical coordinates of a position in this ambient space.
    #[inline]
    pub fn canonical(self, x: LatticePoint) -> LatticePoint {
        match self {
            Ambient::Plane => x,
            Ambient::Torus(k) => project(x, k),
        }
    }

    /// Squared distance between two canonical positions.
    #[inline]
    pub fn dist_sq(self, a: LatticePoint, b: LatticePoint) -> i64 {
        match self {
            Ambient::Plane => (a - b).norm_sq(),
            Ambient::Torus(k) => torus_dist_sq(a, b, k),
        }
    }

    pub fn norm(self, x: LatticePoint) -> f64 {
        (self.dist_sq(x, LatticePoint::ORIGIN) as f64).sqrt()
    }

    pub fn side(self) -> Option<i64> {
        match self {
            Ambient::Plane => None,
            Ambient::Torus(k) => Some(k),
        }
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ambient::Plane => write!(f, "plane"),
            Ambient::Torus(k) => write!(f, "torus({k})"),
        }
    }
}

/// Inclusive integer box `[lo.x1, hi.x1] x [lo.x2, hi.x2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub lo: LatticePoint,
    pub hi: LatticePoint,
}

impl BBox {
    pub fn around(center: LatticePoint, radius: f64) -> Self {
        let r = radius.floor() as i64;
        Self {
            lo: LatticePoint::new(center.x1 - r, center.x2 - r),
            hi: LatticePoint::new(center.x1 + r, center.x2 + r),
        }
    }

    pub fn intersect(self, other: BBox) -> BBox {
        BBox {
            lo: LatticePoint::new(self.lo.x1.max(other.lo.x1), self.lo.x2.max(other.lo.x2)),
            hi: LatticePoint::new(self.hi.x1.min(other.hi.x1), self.hi.x2.min(other.hi.x2)),
        }
    }

    pub fn union(self, other: BBox) -> BBox {
        BBox {
            lo: LatticePoint::new(self.lo.x1.min(other.lo.x1), self.lo.x2.min(other.lo.x2)),
            hi: LatticePoint::new(self.hi.x1.max(other.hi.x1), self.hi.x2.max(other.hi.x2)),
        }
    }

    /// Grow by `r` cells on every side.
    pub fn expand(self, r: i64) -> BBox {
        BBox {
            lo: LatticePoint::new(self.lo.x1 - r, self.lo.x2 - r),
            hi: LatticePoint::new(self.hi.x1 + r, self.hi.x2 + r),
        }
    }

    pub fn width(self) -> i64 {
        (self.hi.x1 - self.lo.x1 + 1).max(0)
    }

    pub fn height(self) -> i64 {
        (self.hi.x2 - self.lo.x2 + 1).max(0)
    }

    /// Row-major iteration (x2 outer, x1 inner).
    pub fn points(self) -> impl Iterator<Item = LatticePoint> {
        let BBox { lo, hi } = self;
        (lo.x2..=hi.x2).flat_map(move |x2| (lo.x1..=hi.x1).map(move |x1| LatticePoint::new(x1, x2)))
    }
}

/// The fundamental domain of `Z^2_K` as a box.
pub fn fundamental_box(k: i64) -> BBox {
    let lo = -(k / 2);
    let hi = k - 1 - k / 2;
    BBox { lo: LatticePoint::new(lo, lo), hi: LatticePoint::new(hi, hi) }
}

/// Subsets of `Z^2` or `Z^2_K`.
///
/// Membership is evaluated with the ambient metric, so on the torus a disc
/// contains every representative within torus distance `<= radius` of the
/// center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Disc { center: LatticePoint, radius: f64 },
    Annulus { center: LatticePoint, inner: f64, width: f64 },
    Points(BTreeSet<LatticePoint>),
    Complement(Box<Region>),
    Union(Vec<Region>),
}

impl Region {
    pub fn disc(radius: f64) -> Region {
        Region::Disc { center: LatticePoint::ORIGIN, radius }
    }

    pub fn disc_at(center: LatticePoint, radius: f64) -> Region {
        Region::Disc { center, radius }
    }

    pub fn annulus(inner: f64, width: f64) -> Region {
        Region::Annulus { center: LatticePoint::ORIGIN, inner, width }
    }

    pub fn point(p: LatticePoint) -> Region {
        Region::Points(std::iter::once(p).collect())
    }

    pub fn points<I: IntoIterator<Item = LatticePoint>>(pts: I) -> Region {
        Region::Points(pts.into_iter().collect())
    }

    pub fn complement(self) -> Region {
        match self {
            Region::Complement(inner) => *inner,
            other => Region::Complement(Box::new(other)),
        }
    }

    pub fn union(self, other: Region) -> Region {
        match self {
            Region::Union(mut v) => {
                v.push(other);
                Region::Union(v)
            }
            r => Region::Union(vec![r, other]),
        }
    }

    /// A toral disc, checking the `radius < K/4` restriction.
    pub fn torus_disc(radius: f64, k: i64) -> Result<Region, GeometryError> {
        check_radius(radius)?;
        if radius >= k as f64 / 4.0 {
            return Err(GeometryError::TorusDiscTooLarge { radius, k });
        }
        Ok(Region::disc(radius))
    }

    /// A toral annulus, checking `n + s < K/4`.
    pub fn torus_annulus(n: f64, s: f64, k: i64) -> Result<Region, GeometryError> {
        check_radius(n)?;
        check_radius(s)?;
        if n + s >= k as f64 / 4.0 {
            return Err(GeometryError::TorusAnnulusTooLarge { n, s, k });
        }
        Ok(Region::annulus(n, s))
    }

    /// Membership of a canonical position.
    pub fn contains(&self, ambient: Ambient, x: LatticePoint) -> bool {
        match self {
            Region::Disc { center, radius } => {
                (ambient.dist_sq(x, ambient.canonical(*center)) as f64) <= radius * radius
            }
            Region::Annulus { center, inner, width } => {
                let d = ambient.dist_sq(x, ambient.canonical(*center)) as f64;
                let outer = inner + width;
                d > inner * inner && d <= outer * outer
            }
            Region::Points(set) => match ambient {
                Ambient::Plane => set.contains(&x),
                Ambient::Torus(k) => set.iter().any(|p| project(*p, k) == x),
            },
            Region::Complement(inner) => !inner.contains(ambient, x),
            Region::Union(parts) => parts.iter().any(|r| r.contains(ambient, x)),
        }
    }

    /// Bounding box of the region itself, when it is bounded.
    pub fn bbox(&self) -> Option<BBox> {
        match self {
            Region::Disc { center, radius } => Some(BBox::around(*center, *radius)),
            Region::Annulus { center, inner, width } => Some(BBox::around(*center, inner + width)),
            Region::Points(set) => {
                let mut it = set.iter();
                let first = *it.next()?;
                Some(it.fold(BBox { lo: first, hi: first }, |b, p| b.union(BBox { lo: *p, hi: *p })))
            }
            Region::Complement(_) => None,
            Region::Union(parts) => {
                let mut acc: Option<BBox> = None;
                for p in parts {
                    let b = p.bbox()?;
                    acc = Some(match acc {
                        None => b,
                        Some(a) => a.union(b),
                    });
                }
                acc
            }
        }
    }

    /// A box containing the complement of the region, when the complement is bounded.
    pub fn cobounded_box(&self) -> Option<BBox> {
        match self {
            Region::Complement(inner) => inner.bbox(),
            Region::Union(parts) => parts.iter().filter_map(Region::cobounded_box).reduce(BBox::intersect),
            _ => None,
        }
    }

    /// Points of the region in the fundamental domain (torus) or its bounding box (plane).
    pub fn enumerate(&self, ambient: Ambient) -> Option<Vec<LatticePoint>> {
        let bbox = match ambient {
            Ambient::Torus(k) => fundamental_box(k),
            Ambient::Plane => self.bbox()?,
        };
        Some(bbox.points().filter(|p| self.contains(ambient, *p)).collect())
    }

    /// Translate by `v`.
    pub fn translate(&self, v: LatticePoint) -> Region {
        match self {
            Region::Disc { center, radius } => Region::Disc { center: *center + v, radius: *radius },
            Region::Annulus { center, inner, width } => {
                Region::Annulus { center: *center + v, inner: *inner, width: *width }
            }
            Region::Points(set) => Region::Points(set.iter().map(|p| *p + v).collect()),
            Region::Complement(inner) => Region::Complement(Box::new(inner.translate(v))),
            Region::Union(parts) => Region::Union(parts.iter().map(|r| r.translate(v)).collect()),
        }
    }
}

fn check_radius(r: f64) -> Result<(), GeometryError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::BadRadius(r))
    }
}

/// The copies `A + (iK, jK)`, `|i|, |j| <= window`, of a bounded planar region.
///
/// Returns one point set per translate, ordered by `(j, i)`.
pub fn enumerate_copies(region: &Region, k: i64, window: i64) -> Vec<Vec<LatticePoint>> {
    let base = region.enumerate(Ambient::Plane).unwrap_or_default();
    let mut out = Vec::new();
    for j in -window..=window {
        for i in -window..=window {
            let shift = LatticePoint::new(i * k, j * k);
            out.push(base.iter().map(|p| *p + shift).collect());
        }
    }
    out
}

/// Step-size labels relative to a disc of radius `n`, an `s`-annulus and a torus of side `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JumpClass {
    pub baby: bool,
    pub small: bool,
    pub medium: bool,
    pub large: bool,
    pub targeted: bool,
}

impl JumpClass {
    pub fn labels(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.baby {
            v.push("baby");
        }
        if self.small {
            v.push("small");
        }
        if self.medium {
            v.push("medium");
        }
        if self.large {
            v.push("large");
        }
        if self.targeted {
            v.push("targeted");
        }
        v
    }
}

/// Classify a planar step.
///
/// Thresholds are strict, so a step whose length equals `s`, `2n` or `K - 2n`
/// misses the corresponding label. A step is targeted when it is large and,
/// launched from `launch`, lands in a copy of `region` other than the primary
/// one.
pub fn classify_jump(
    step: LatticePoint,
    n: f64,
    s: f64,
    k: i64,
    launch: Option<LatticePoint>,
    region: Option<&Region>,
) -> Result<JumpClass, GeometryError> {
    if !(n > 0.0 && s > 0.0 && 2.0 * n < k as f64 / 2.0) {
        return Err(GeometryError::BadJumpGeometry { n, s, k });
    }
    let len = step.norm();
    let far = k as f64 - 2.0 * n;
    let mut class = JumpClass {
        baby: len < s,
        small: len < 2.0 * n,
        medium: s < len && len < far,
        large: len > far,
        targeted: false,
    };
    if class.large {
        if let (Some(from), Some(region)) = (launch, region) {
            let landing = from + step;
            let in_primary = in_fundamental_domain(landing, k) && region.contains(Ambient::Plane, landing);
            let in_some_copy = region.contains(Ambient::Torus(k), project(landing, k));
            class.targeted = in_some_copy && !in_primary;
        }
    }
    Ok(class)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: i64, b: i64) -> LatticePoint {
        LatticePoint::new(a, b)
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project(p(-12, 6), 11), p(-1, -5));
        assert_eq!(project(p(0, 0), 7), p(0, 0));
        assert_eq!(project(p(4, -4), 8), p(-4, -4));
    }

    #[test]
    fn fundamental_domain_even_and_odd() {
        let b = fundamental_box(8);
        assert_eq!((b.lo, b.hi), (p(-4, -4), p(3, 3)));
        let b = fundamental_box(11);
        assert_eq!((b.lo, b.hi), (p(-5, -5), p(5, 5)));
    }

    #[test]
    fn torus_distance_examples() {
        let t = |a, b, k| TorusPoint::new(p(a, b), k).unwrap();
        assert_eq!(torus_distance(t(4, 0, 10), t(-4, 0, 10)).unwrap(), 2.0);
        assert_eq!(torus_distance(t(3, 2, 9), t(3, 2, 9)).unwrap(), 0.0);
        assert_eq!(torus_distance(t(3, 0, 100), t(0, 4, 100)).unwrap(), 5.0);
        assert!(torus_distance(t(0, 0, 5), t(0, 0, 6)).is_err());
    }

    #[test]
    fn copies() {
        let single = Region::point(p(0, 0));
        let c = enumerate_copies(&single, 5, 1);
        assert_eq!(c.len(), 9);
        assert!(c.iter().all(|s| s.len() == 1));

        let d = Region::disc(2.0);
        let c = enumerate_copies(&d, 20, 0);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0], d.enumerate(Ambient::Plane).unwrap());

        let c = enumerate_copies(&Region::point(p(1, 0)), 3, 2);
        let mut flat: Vec<_> = c.into_iter().flatten().collect();
        flat.sort();
        let mut want = Vec::new();
        for i in -2..=2 {
            for j in -2..=2 {
                want.push(p(1 + 3 * i, 3 * j));
            }
        }
        want.sort();
        assert_eq!(flat, want);
    }

    #[test]
    fn disc_membership_is_closed() {
        let d = Region::disc(2.0);
        assert!(d.contains(Ambient::Plane, p(1, 1)));
        assert!(d.contains(Ambient::Plane, p(2, 0)));
        assert!(!d.contains(Ambient::Plane, p(2, 1)));
        // D(0,1) is the five-point cross.
        let unit = Region::disc(1.0).enumerate(Ambient::Plane).unwrap();
        assert_eq!(unit, vec![p(0, -1), p(-1, 0), p(0, 0), p(1, 0), p(0, 1)]);
        assert_eq!(Region::disc(0.5).enumerate(Ambient::Plane).unwrap(), vec![p(0, 0)]);
    }

    #[test]
    fn annulus_is_set_difference() {
        let (n, s) = (3.5, 2.0);
        let ann = Region::annulus(n, s);
        for q in BBox::around(LatticePoint::ORIGIN, 7.0).points() {
            let want = Region::disc(n + s).contains(Ambient::Plane, q) && !Region::disc(n).contains(Ambient::Plane, q);
            assert_eq!(ann.contains(Ambient::Plane, q), want, "{q}");
        }
    }

    #[test]
    fn torus_geometry_constraints() {
        assert!(Region::torus_disc(7.0, 32).is_ok());
        assert!(Region::torus_disc(8.0, 32).is_err());
        assert!(Region::torus_annulus(5.0, 2.0, 32).is_ok());
        assert!(Region::torus_annulus(5.0, 3.0, 32).is_err());
    }

    #[test]
    fn torus_disc_wraps() {
        let d = Region::disc_at(p(-5, 0), 2.0);
        // (4,0) is one step from (-5,0) on Z^2_10.
        assert!(d.contains(Ambient::Torus(10), p(4, 0)));
        assert!(!d.contains(Ambient::Plane, p(4, 0)));
    }

    #[test]
    fn cobounded() {
        let r = Region::disc(3.0).union(Region::disc(10.0).complement());
        let b = r.cobounded_box().unwrap();
        assert_eq!(b, BBox::around(LatticePoint::ORIGIN, 10.0));
        assert!(Region::disc(3.0).cobounded_box().is_none());
    }

    #[test]
    fn jump_classes() {
        let c = classify_jump(p(1, 0), 10.0, 3.0, 100, None, None).unwrap();
        assert_eq!(c.labels(), vec!["baby", "small"]);
        let c = classify_jump(p(5, 0), 10.0, 3.0, 100, None, None).unwrap();
        assert_eq!(c.labels(), vec!["small", "medium"]);
        let d = Region::disc(10.0);
        let c = classify_jump(p(99, 0), 10.0, 3.0, 100, Some(p(0, 0)), Some(&d)).unwrap();
        assert_eq!(c.labels(), vec!["large", "targeted"]);
        // Large but landing far from every copy of the disc.
        let c = classify_jump(p(85, 0), 10.0, 3.0, 100, Some(p(0, 0)), Some(&d)).unwrap();
        assert!(c.large && !c.targeted);
        // Threshold magnitudes get neither strict label.
        let c = classify_jump(p(3, 0), 10.0, 3.0, 100, None, None).unwrap();
        assert!(!c.baby && !c.medium && c.small);
        assert!(classify_jump(p(1, 0), 30.0, 3.0, 100, None, None).is_err());
    }
}
