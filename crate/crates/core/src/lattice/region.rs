use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Cycle, LatticeError, Site};

/// A finite box `lower..=upper` of Z^d, or all of Z^d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoxRegion {
    Finite { lower: Site, upper: Site },
    AllOfZd,
}

impl BoxRegion {
    pub fn new(lower: Site, upper: Site) -> Result<Self, LatticeError> {
        if lower.dim() != upper.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: lower.dim(),
                found: upper.dim(),
            });
        }
        if lower.coords().iter().zip(upper.coords()).any(|(l, u)| l > u) {
            return Err(LatticeError::EmptyBox(lower, upper));
        }
        Ok(BoxRegion::Finite { lower, upper })
    }

    /// The cube `center + [-radius, radius]^d`.
    pub fn cube(center: Site, radius: i32) -> Self {
        let d = center.dim();
        let mut lower = center;
        let mut upper = center;
        for i in 0..d {
            lower = lower.with_coord(i, center.coord(i) - radius);
            upper = upper.with_coord(i, center.coord(i) + radius);
        }
        BoxRegion::Finite { lower, upper }
    }

    pub fn single(site: Site) -> Self {
        BoxRegion::Finite {
            lower: site,
            upper: site,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, BoxRegion::Finite { .. })
    }

    pub fn contains(&self, x: &Site) -> bool {
        match self {
            BoxRegion::AllOfZd => true,
            BoxRegion::Finite { lower, upper } => x
                .coords()
                .iter()
                .zip(lower.coords().iter().zip(upper.coords()))
                .all(|(c, (l, u))| l <= c && c <= u),
        }
    }

    pub fn contains_cycle(&self, c: &Cycle) -> bool {
        c.sites().iter().all(|s| self.contains(s))
    }

    pub fn meets_cycle(&self, c: &Cycle) -> bool {
        c.sites().iter().any(|s| self.contains(s))
    }

    pub fn contains_region(&self, other: &BoxRegion) -> bool {
        match (self, other) {
            (BoxRegion::AllOfZd, _) => true,
            (_, BoxRegion::AllOfZd) => false,
            (_, BoxRegion::Finite { lower, upper }) => self.contains(lower) && self.contains(upper),
        }
    }

    pub fn intersects(&self, other: &BoxRegion) -> bool {
        match (self, other) {
            (BoxRegion::AllOfZd, _) | (_, BoxRegion::AllOfZd) => true,
            (BoxRegion::Finite { lower: a, upper: b }, BoxRegion::Finite { lower: c, upper: d }) => {
                (0..a.dim()).all(|i| a.coord(i) <= d.coord(i) && c.coord(i) <= b.coord(i))
            }
        }
    }

    /// Number of sites, `None` for Z^d.
    pub fn volume(&self) -> Option<usize> {
        match self {
            BoxRegion::AllOfZd => None,
            BoxRegion::Finite { lower, upper } => Some(
                lower
                    .coords()
                    .iter()
                    .zip(upper.coords())
                    .map(|(l, u)| (u - l + 1) as usize)
                    .product(),
            ),
        }
    }

    /// Sites in lexicographic order. Empty for Z^d.
    pub fn sites(&self) -> Vec<Site> {
        let BoxRegion::Finite { lower, upper } = *self else {
            return Vec::new();
        };
        let d = lower.dim();
        let mut out = Vec::with_capacity(self.volume().unwrap_or(0));
        let mut cur = lower;
        loop {
            out.push(cur);
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur.coord(axis) < upper.coord(axis) {
                    cur = cur.with_coord(axis, cur.coord(axis) + 1);
                    break;
                }
                cur = cur.with_coord(axis, lower.coord(axis));
            }
        }
    }

    /// Smallest box containing every site of `sites`.
    pub fn bounding(sites: impl IntoIterator<Item = Site>) -> Option<BoxRegion> {
        let mut it = sites.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for s in it {
            for i in 0..s.dim() {
                lo = lo.with_coord(i, lo.coord(i).min(s.coord(i)));
                hi = hi.with_coord(i, hi.coord(i).max(s.coord(i)));
            }
        }
        Some(BoxRegion::Finite { lower: lo, upper: hi })
    }

    /// Grows a finite box by `margin` in every direction.
    pub fn expanded(&self, margin: i32) -> BoxRegion {
        match *self {
            BoxRegion::AllOfZd => BoxRegion::AllOfZd,
            BoxRegion::Finite { lower, upper } => {
                let mut lo = lower;
                let mut hi = upper;
                for i in 0..lower.dim() {
                    lo = lo.with_coord(i, lower.coord(i) - margin);
                    hi = hi.with_coord(i, upper.coord(i) + margin);
                }
                BoxRegion::Finite { lower: lo, upper: hi }
            }
        }
    }

    pub fn translate(&self, by: Site) -> BoxRegion {
        match *self {
            BoxRegion::AllOfZd => BoxRegion::AllOfZd,
            BoxRegion::Finite { lower, upper } => BoxRegion::Finite {
                lower: lower + by,
                upper: upper + by,
            },
        }
    }
}

/// `lower:upper` with comma-separated corners, e.g. `-1,-1:1,1`, or `all`.
impl fmt::Display for BoxRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoxRegion::AllOfZd => f.write_str("all"),
            BoxRegion::Finite { lower, upper } => {
                let join = |s: &Site| {
                    s.coords()
                        .iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                };
                write!(f, "{}:{}", join(lower), join(upper))
            }
        }
    }
}

impl FromStr for BoxRegion {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(BoxRegion::AllOfZd);
        }
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| LatticeError::Parse(format!("box `{s}` needs lower:upper")))?;
        BoxRegion::new(a.parse()?, b.parse()?)
    }
}

impl Serialize for BoxRegion {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BoxRegion {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite-cycle permutation stored as its gas of pairwise disjoint cycles.
/// The empty gas is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Permutation {
    cycles: Vec<Cycle>,
    region: Option<BoxRegion>,
}

impl Permutation {
    pub fn identity() -> Self {
        Permutation::default()
    }

    pub fn new(mut cycles: Vec<Cycle>) -> Result<Self, LatticeError> {
        cycles.sort();
        let mut seen = BTreeSet::new();
        for c in &cycles {
            for s in c.sites() {
                if !seen.insert(*s) {
                    return Err(LatticeError::Overlap(*s));
                }
            }
        }
        Ok(Permutation { cycles, region: None })
    }

    /// Attaches the region the permutation lives in; every cycle must fit.
    pub fn in_region(mut self, region: BoxRegion) -> Result<Self, LatticeError> {
        if let Some(c) = self.cycles.iter().find(|c| !region.contains_cycle(c)) {
            return Err(LatticeError::OutsideRegion(c.sites()[0]));
        }
        self.region = Some(region);
        Ok(self)
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn region(&self) -> Option<&BoxRegion> {
        self.region.as_ref()
    }

    pub fn is_identity(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn image(&self, x: &Site) -> Site {
        self.cycles
            .iter()
            .find(|c| c.contains(x))
            .map_or(*x, |c| c.image(x))
    }

    /// Length of the cycle through `x` (1 for fixed points).
    pub fn cycle_length_at(&self, x: &Site) -> usize {
        self.cycles.iter().find(|c| c.contains(x)).map_or(1, |c| c.len())
    }

    /// Map `x -> sigma(x)` on the sites of `window`, moved sites only.
    pub fn restricted_map(&self, window: &BoxRegion) -> BTreeMap<Site, Site> {
        let mut out = BTreeMap::new();
        for c in &self.cycles {
            for s in c.sites() {
                if window.contains(s) {
                    out.insert(*s, c.image(s));
                }
            }
        }
        out
    }
}
