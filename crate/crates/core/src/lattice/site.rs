use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use super::LatticeError;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 4;

/// A point of Z^d.
///
/// Coordinates past `dim` are always zero, so the derived ordering is the
/// lexicographic order on the first `dim` coordinates whenever both sites
/// share a dimension.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl Site {
    pub fn new(coords: &[i32]) -> Result<Self, LatticeError> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(LatticeError::BadDimension(coords.len()));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Site {
            dim: coords.len() as u8,
            coords: c,
        })
    }

    /// The origin of Z^d.
    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Site {
            dim: dim as u8,
            coords: [0; MAX_DIM],
        }
    }

    /// The `axis`-th unit vector.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut s = Site::origin(dim);
        s.coords[axis] = 1;
        s
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn coord(&self, axis: usize) -> i32 {
        self.coords[axis]
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn norm_sq(&self) -> i64 {
        self.coords().iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn dot(&self, other: &Site) -> i64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| a as i64 * b as i64)
            .sum()
    }

    /// Sup-norm distance.
    pub fn chebyshev(&self, other: &Site) -> i32 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn with_coord(mut self, axis: usize, value: i32) -> Self {
        self.coords[axis] = value;
        self
    }
}

impl Add for Site {
    type Output = Site;
    fn add(mut self, rhs: Site) -> Site {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.coords[i] += rhs.coords[i];
        }
        self
    }
}

impl Sub for Site {
    type Output = Site;
    fn sub(mut self, rhs: Site) -> Site {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.coords[i] -= rhs.coords[i];
        }
        self
    }
}

impl Neg for Site {
    type Output = Site;
    fn neg(mut self) -> Site {
        for c in self.coords.iter_mut() {
            *c = -*c;
        }
        self
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Formats as `(x1,x2,...)`.
impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Accepts `(1,-2)` or the bare `1,-2`.
impl FromStr for Site {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t.strip_prefix('(').unwrap_or(t);
        let t = t.strip_suffix(')').unwrap_or(t);
        let coords = t
            .split(',')
            .map(|c| c.trim().parse::<i32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| LatticeError::Parse(format!("bad site `{s}`")))?;
        Site::new(&coords)
    }
}
