use crate::geometry::{fundamental_box, Ambient, BBox, LatticePoint, Region};

use super::ExactError;

/// A finite transient set with a dense index.
///
/// States are canonical positions listed with `x2` outer and `x1` inner, so a
/// planar domain and its toral copy (when the torus is large enough) list the
/// same points in the same order.
#[derive(Debug, Clone)]
pub struct Domain {
    ambient: Ambient,
    states: Vec<LatticePoint>,
    bbox: BBox,
    lookup: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl Domain {
    /// A domain from explicit points; points are canonicalized and must be distinct.
    pub fn new(ambient: Ambient, points: impl IntoIterator<Item = LatticePoint>) -> Result<Self, ExactError> {
        let mut states: Vec<LatticePoint> = points.into_iter().map(|p| ambient.canonical(p)).collect();
        if states.is_empty() {
            return Err(ExactError::EmptyDomain);
        }
        if states.len() >= u32::MAX as usize {
            return Err(ExactError::DimensionTooLarge { states: states.len(), cap: u32::MAX as usize - 1 });
        }
        states.sort_by_key(|p| (p.x2, p.x1));
        for w in states.windows(2) {
            if w[0] == w[1] {
                return Err(ExactError::BadParameter(format!("point {} listed twice in a domain", w[0])));
            }
        }
        if let Ambient::Torus(k) = ambient {
            if states.len() as i64 == k * k {
                return Err(ExactError::SingularSystem(
                    "the domain is the whole torus, so the walk is never absorbed".into(),
                ));
            }
        }
        let bbox = states.iter().fold(BBox { lo: states[0], hi: states[0] }, |b, p| b.union(BBox { lo: *p, hi: *p }));
        let mut lookup = vec![ABSENT; (bbox.width() * bbox.height()) as usize];
        for (i, p) in states.iter().enumerate() {
            lookup[Self::slot(bbox, *p)] = i as u32;
        }
        Ok(Self { ambient, states, bbox, lookup })
    }

    /// The points of a bounded region (plane) or of a toral region.
    pub fn from_region(ambient: Ambient, region: &Region) -> Result<Self, ExactError> {
        let pts =
            region.enumerate(ambient).ok_or_else(|| ExactError::UnboundedDomain(format!("{region:?} is unbounded")))?;
        Self::new(ambient, pts)
    }

    /// Every point outside `absorbing`; on the plane the complement must be bounded.
    pub fn complement_of(ambient: Ambient, absorbing: &Region) -> Result<Self, ExactError> {
        let window = match ambient {
            Ambient::Torus(k) => fundamental_box(k),
            Ambient::Plane => absorbing.cobounded_box().ok_or_else(|| {
                ExactError::UnboundedDomain("the complement of the absorbing set must be bounded on the plane".into())
            })?,
        };
        Self::new(ambient, window.points().filter(|p| !absorbing.contains(ambient, *p)))
    }

    fn slot(bbox: BBox, p: LatticePoint) -> usize {
        ((p.x2 - bbox.lo.x2) * bbox.width() + (p.x1 - bbox.lo.x1)) as usize
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn states(&self) -> &[LatticePoint] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Bounding box of the canonical states.
    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Index of a position, canonicalized first.
    pub fn index(&self, x: LatticePoint) -> Option<usize> {
        let p = self.ambient.canonical(x);
        let b = self.bbox;
        if p.x1 < b.lo.x1 || p.x1 > b.hi.x1 || p.x2 < b.lo.x2 || p.x2 > b.hi.x2 {
            return None;
        }
        match self.lookup[Self::slot(b, p)] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    pub fn contains(&self, x: LatticePoint) -> bool {
        self.index(x).is_some()
    }

    /// Index of `x`, or an error naming the point.
    pub fn require(&self, x: LatticePoint) -> Result<usize, ExactError> {
        self.index(x).ok_or(ExactError::StartOutside(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_and_toral_discs_list_the_same_points() {
        let plane = Domain::from_region(Ambient::Plane, &Region::disc(7.0)).unwrap();
        let torus = Domain::from_region(Ambient::Torus(33), &Region::disc(7.0)).unwrap();
        assert_eq!(plane.states(), torus.states());
        for (i, p) in plane.states().iter().enumerate() {
            assert_eq!(plane.index(*p), Some(i));
            assert_eq!(torus.index(*p + LatticePoint::new(33, -66)), Some(i));
        }
        assert_eq!(plane.index(LatticePoint::new(8, 0)), None);
    }

    #[test]
    fn complements() {
        let d = Domain::complement_of(Ambient::Plane, &Region::disc(3.0).complement()).unwrap();
        assert_eq!(d.len(), Domain::from_region(Ambient::Plane, &Region::disc(3.0)).unwrap().len());
        let t = Domain::complement_of(Ambient::Torus(16), &Region::disc(2.0)).unwrap();
        assert_eq!(t.len(), 256 - 13);
        assert!(Domain::complement_of(Ambient::Plane, &Region::disc(2.0)).is_err());
        assert!(matches!(
            Domain::from_region(Ambient::Torus(4), &Region::disc(10.0)),
            Err(ExactError::SingularSystem(_))
        ));
    }
}
