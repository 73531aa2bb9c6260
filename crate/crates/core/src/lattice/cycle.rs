use std::collections::BTreeSet;
use std::fmt;

use super::{LatticeError, Site};

/// A finite cycle `x_1 -> x_2 -> ... -> x_n -> x_1` on distinct sites, n >= 2.
///
/// Always stored in canonical form: the rotation that puts the
/// lexicographically smallest site first. Orientation is kept, so a cycle of
/// length at least three and its reversal are different values.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cycle {
    sites: Vec<Site>,
}

impl Cycle {
    /// Builds the canonical form of the orbit given in `raw`.
    pub fn canonicalize(raw: &[Site]) -> Result<Cycle, LatticeError> {
        if raw.len() < 2 {
            return Err(LatticeError::TooShort(raw.len()));
        }
        let dim = raw[0].dim();
        if let Some(bad) = raw.iter().find(|s| s.dim() != dim) {
            return Err(LatticeError::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let mut seen = BTreeSet::new();
        for s in raw {
            if !seen.insert(*s) {
                return Err(LatticeError::DuplicateSite(*s));
            }
        }
        let start = (0..raw.len()).min_by_key(|&i| raw[i]).unwrap();
        let mut sites = Vec::with_capacity(raw.len());
        sites.extend_from_slice(&raw[start..]);
        sites.extend_from_slice(&raw[..start]);
        Ok(Cycle { sites })
    }

    /// Wraps sites already known to be canonical and distinct.
    pub(crate) fn from_canonical_unchecked(sites: Vec<Site>) -> Cycle {
        debug_assert!(sites.len() >= 2);
        debug_assert!(sites.iter().all(|s| *s >= sites[0]));
        Cycle { sites }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    /// Cycles are never empty; provided for clippy's sake.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.sites[0].dim()
    }

    /// The support `{x_1, ..., x_n}`.
    pub fn support(&self) -> BTreeSet<Site> {
        self.sites.iter().copied().collect()
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.sites.contains(x)
    }

    /// Image of `x` under the cycle; fixed points map to themselves.
    pub fn image(&self, x: &Site) -> Site {
        match self.sites.iter().position(|s| s == x) {
            Some(i) => self.sites[(i + 1) % self.sites.len()],
            None => *x,
        }
    }

    /// Jumps `gamma(x_i) - x_i`, in canonical site order.
    pub fn jumps(&self) -> impl Iterator<Item = Site> + '_ {
        let n = self.sites.len();
        (0..n).map(move |i| self.sites[(i + 1) % n] - self.sites[i])
    }

    /// True iff the supports are disjoint. A cycle is incompatible with itself.
    pub fn compatible(&self, other: &Cycle) -> bool {
        !self.sites.iter().any(|s| other.sites.contains(s))
    }

    pub fn translate(&self, by: Site) -> Cycle {
        Cycle {
            sites: self.sites.iter().map(|&s| s + by).collect(),
        }
    }

    /// The same sites traversed the other way round.
    pub fn reversed(&self) -> Cycle {
        let mut raw = self.sites.clone();
        raw.reverse();
        Cycle::canonicalize(&raw).expect("reversal of a valid cycle is valid")
    }
}

impl fmt::Debug for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Space-separated site tuples, e.g. `(0,0) (1,0)`.
impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Free-function form of [`Cycle::canonicalize`].
pub fn canonicalize(raw: &[Site]) -> Result<Cycle, LatticeError> {
    Cycle::canonicalize(raw)
}

/// Free-function form of [`Cycle::support`].
pub fn support(cycle: &Cycle) -> BTreeSet<Site> {
    cycle.support()
}

/// Free-function form of [`Cycle::compatible`].
pub fn compatible(a: &Cycle, b: &Cycle) -> bool {
    a.compatible(b)
}
