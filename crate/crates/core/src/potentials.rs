//! Strictly convex lattice potentials, their shifted forms, cycle energies
//! and cycle weights.
//!
//! Values live in `[0, +inf]` for base potentials; `f64::INFINITY` is the
//! infinite value and `exp(-alpha * inf)` evaluates to exactly zero. A
//! shifted potential `V_v(y) = V(y + v) - V(v)` may be negative at some
//! sites, but the energy of every finite cycle stays strictly positive.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::hexfloat;
use crate::lattice::{Cycle, Site};

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("temperature alpha must be positive and finite, got {0}")]
    NonPositiveAlpha(f64),
    #[error("power-law exponent must be an even integer >= 2, got {0}")]
    BadExponent(u32),
    #[error("gaussian scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("table potential: {0}")]
    Table(String),
    #[error("table potential is not strictly convex: V({mid}) >= (V({a}) + V({b}))/2")]
    NotConvex { a: Site, b: Site, mid: Site },
    #[error("shift {0} has infinite energy")]
    InfiniteShift(Site),
    #[error("dimension mismatch: potential has d={expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A potential with finite support, `+inf` elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct TablePotential {
    values: BTreeMap<Site, f64>,
}

impl TablePotential {
    /// Validates `V(0) = 0`, `V >= 0` and the strict midpoint inequality for
    /// every pair of support points whose midpoint is a lattice point.
    ///
    /// Off-support values are `+inf`; this only certifies convexity on the
    /// finite support, which is all the lattice model ever sees.
    pub fn new(values: BTreeMap<Site, f64>) -> Result<Self, PotentialError> {
        let Some(first) = values.keys().next() else {
            return Err(PotentialError::Table("empty table".into()));
        };
        let dim = first.dim();
        if let Some(k) = values.keys().find(|k| k.dim() != dim) {
            return Err(PotentialError::DimensionMismatch {
                expected: dim,
                found: k.dim(),
            });
        }
        match values.get(&Site::origin(dim)) {
            Some(v) if *v == 0.0 => {}
            _ => return Err(PotentialError::Table("V(0) must be 0".into())),
        }
        if let Some((k, v)) = values.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(PotentialError::Table(format!(
                "V({k}) = {v} is not a finite nonnegative value"
            )));
        }
        let pts: Vec<(&Site, &f64)> = values.iter().collect();
        for (i, (a, va)) in pts.iter().enumerate() {
            for (b, vb) in &pts[i + 1..] {
                let sum = **a + **b;
                if sum.coords().iter().any(|c| c % 2 != 0) {
                    continue;
                }
                let half: Vec<i32> = sum.coords().iter().map(|c| c / 2).collect();
                let mid = Site::new(&half).expect("same dimension");
                let vm = values.get(&mid).copied().unwrap_or(f64::INFINITY);
                if vm.is_nan() || vm >= (**va + **vb) / 2.0 {
                    return Err(PotentialError::NotConvex { a: **a, b: **b, mid });
                }
            }
        }
        Ok(TablePotential { values })
    }

    /// Reads rows `x_1 ... x_d value`; blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Result<Self, PotentialError> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || PotentialError::Table(format!("line {}: `{line}`", lineno + 1));
            if fields.len() < 2 {
                return Err(bad());
            }
            let coords = fields[..fields.len() - 1]
                .iter()
                .map(|f| f.parse::<i32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            let value = hexfloat::parse_f64(fields[fields.len() - 1]).ok_or_else(bad)?;
            let site = Site::new(&coords).map_err(|_| bad())?;
            values.insert(site, value);
        }
        TablePotential::new(values)
    }

    pub fn load(path: &Path) -> Result<Self, PotentialError> {
        TablePotential::parse(&std::fs::read_to_string(path)?)
    }

    pub fn dim(&self) -> usize {
        self.values.keys().next().map_or(0, |s| s.dim())
    }

    pub fn get(&self, x: &Site) -> f64 {
        self.values.get(x).copied().unwrap_or(f64::INFINITY)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Site, &f64)> {
        self.values.iter()
    }

    /// Largest squared norm among support points.
    pub fn max_norm_sq(&self) -> i64 {
        self.values.keys().map(Site::norm_sq).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `V(x) = scale * ||x||^2`; `scale = 1` is the Gaussian potential.
    Gaussian {
        scale: f64,
    },
    /// `V(x) = ||x||^p` for even `p`.
    PowerLaw {
        exponent: u32,
    },
    /// `V(0) = 0`, `V(x) = 1` when `||x|| = 1`, `+inf` otherwise.
    NearestNeighbor,
    Table(TablePotential),
}

/// A potential on Z^d, optionally shifted by a vector `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    dim: usize,
    shift: Option<Site>,
}

impl Potential {
    pub fn gaussian(dim: usize) -> Self {
        Potential {
            kind: PotentialKind::Gaussian { scale: 1.0 },
            dim,
            shift: None,
        }
    }

    pub fn scaled_gaussian(dim: usize, scale: f64) -> Result<Self, PotentialError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(PotentialError::BadScale(scale));
        }
        Ok(Potential {
            kind: PotentialKind::Gaussian { scale },
            dim,
            shift: None,
        })
    }

    pub fn power_law(dim: usize, exponent: u32) -> Result<Self, PotentialError> {
        if exponent < 2 || !exponent.is_multiple_of(2) {
            return Err(PotentialError::BadExponent(exponent));
        }
        Ok(Potential {
            kind: PotentialKind::PowerLaw { exponent },
            dim,
            shift: None,
        })
    }

    pub fn nearest_neighbor(dim: usize) -> Self {
        Potential {
            kind: PotentialKind::NearestNeighbor,
            dim,
            shift: None,
        }
    }

    pub fn table(table: TablePotential) -> Self {
        Potential {
            dim: table.dim(),
            kind: PotentialKind::Table(table),
            shift: None,
        }
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shift(&self) -> Option<Site> {
        self.shift
    }

    /// The unshifted potential.
    pub fn base(&self) -> Potential {
        Potential {
            shift: None,
            ..self.clone()
        }
    }

    /// `V_v(y) = V(y + v) - V(v)`. Shifting twice composes the shifts.
    pub fn shifted(&self, v: Site) -> Result<Potential, PotentialError> {
        self.check_dim(&v)?;
        let total = match self.shift {
            Some(u) => u + v,
            None => v,
        };
        if self.base_value(&total).is_infinite() {
            return Err(PotentialError::InfiniteShift(total));
        }
        Ok(Potential {
            shift: if total.is_origin() { None } else { Some(total) },
            ..self.clone()
        })
    }

    fn check_dim(&self, x: &Site) -> Result<(), PotentialError> {
        if x.dim() != self.dim {
            return Err(PotentialError::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    fn base_value(&self, x: &Site) -> f64 {
        match &self.kind {
            PotentialKind::Gaussian { scale } => {
                let n = x.norm_sq() as f64;
                if *scale == 1.0 {
                    n
                } else {
                    scale * n
                }
            }
            PotentialKind::PowerLaw { exponent } => (x.norm_sq() as f64).powi(*exponent as i32 / 2),
            PotentialKind::NearestNeighbor => match x.norm_sq() {
                0 => 0.0,
                1 => 1.0,
                _ => f64::INFINITY,
            },
            PotentialKind::Table(t) => t.get(x),
        }
    }

    /// `V(x)`, possibly `+inf`.
    pub fn evaluate(&self, x: &Site) -> f64 {
        debug_assert_eq!(x.dim(), self.dim);
        match self.shift {
            None => self.base_value(x),
            Some(v) => {
                let a = self.base_value(&(*x + v));
                if a.is_infinite() {
                    f64::INFINITY
                } else {
                    a - self.base_value(&v)
                }
            }
        }
    }

    /// `sum_x V(gamma(x) - x)`, summed in canonical site order.
    pub fn cycle_energy(&self, cycle: &Cycle) -> f64 {
        let mut e = 0.0;
        for j in cycle.jumps() {
            let v = self.evaluate(&j);
            if v.is_infinite() {
                return f64::INFINITY;
            }
            e += v;
        }
        e
    }

    /// `w(gamma) = exp(-alpha * energy)`.
    pub fn weight(&self, alpha: f64, cycle: &Cycle) -> Result<f64, PotentialError> {
        check_alpha(alpha)?;
        Ok(energy_to_weight(alpha, self.cycle_energy(cycle)))
    }

    /// `w_v(gamma)`, the weight under the `v`-shifted potential.
    pub fn weight_v(&self, alpha: f64, v: Site, cycle: &Cycle) -> Result<f64, PotentialError> {
        self.shifted(v)?.weight(alpha, cycle)
    }

    /// Constant `m` with `V(y) >= V(x) + grad V(x).(y-x) + m ||y-x||^2`, when
    /// one exists uniformly; independent of the shift for quadratics.
    pub fn strong_convexity_modulus(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Gaussian { scale } => Some(scale),
            _ => None,
        }
    }

    /// Every finite value is `>= 0`, so partial cycle energies only grow.
    pub fn is_nonnegative(&self) -> bool {
        self.shift.is_none()
    }

    /// Squared radius beyond which the (unshifted) potential is `+inf`.
    pub fn finite_range_sq(&self) -> Option<i64> {
        match &self.kind {
            PotentialKind::NearestNeighbor => Some(1),
            PotentialKind::Table(t) => Some(t.max_norm_sq()),
            _ => None,
        }
    }

    /// Short identifier used in file headers and reports.
    pub fn id(&self) -> String {
        self.to_string()
    }
}

pub fn check_alpha(alpha: f64) -> Result<(), PotentialError> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(PotentialError::NonPositiveAlpha(alpha))
    }
}

pub(crate) fn energy_to_weight(alpha: f64, energy: f64) -> f64 {
    if energy.is_infinite() {
        0.0
    } else {
        (-alpha * energy).exp()
    }
}

/// `gaussian`, `gaussian:<scale>`, `power:<p>`, `nearest-neighbor` or
/// `table:<x,y=value;...>`, followed by `@<shift>` when shifted.
impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PotentialKind::Gaussian { scale } if *scale == 1.0 => f.write_str("gaussian")?,
            PotentialKind::Gaussian { scale } => write!(f, "gaussian:{}", hexfloat::format_f64(*scale))?,
            PotentialKind::PowerLaw { exponent } => write!(f, "power:{exponent}")?,
            PotentialKind::NearestNeighbor => f.write_str("nearest-neighbor")?,
            PotentialKind::Table(t) => {
                f.write_str("table:")?;
                for (i, (k, v)) in t.entries().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    let c: Vec<String> = k.coords().iter().map(|c| c.to_string()).collect();
                    write!(f, "{}={}", c.join(","), hexfloat::format_f64(*v))?;
                }
            }
        }
        if let Some(v) = self.shift {
            let c: Vec<String> = v.coords().iter().map(|c| c.to_string()).collect();
            write!(f, "@{}", c.join(","))?;
        }
        Ok(())
    }
}

/// Inverse of the `Display` form; `dim` is needed for the dimension-free kinds.
pub fn parse_potential_id(id: &str, dim: usize) -> Result<Potential, PotentialError> {
    let bad = || PotentialError::Table(format!("unrecognised potential id `{id}`"));
    let (body, shift) = match id.split_once('@') {
        Some((b, s)) => (b, Some(s.parse::<Site>().map_err(|_| bad())?)),
        None => (id, None),
    };
    let base = if body == "gaussian" {
        Potential::gaussian(dim)
    } else if let Some(s) = body.strip_prefix("gaussian:") {
        Potential::scaled_gaussian(dim, hexfloat::parse_f64(s).ok_or_else(bad)?)?
    } else if let Some(p) = body.strip_prefix("power:") {
        Potential::power_law(dim, p.parse().map_err(|_| bad())?)?
    } else if body == "nearest-neighbor" {
        Potential::nearest_neighbor(dim)
    } else if let Some(entries) = body.strip_prefix("table:") {
        let mut values = BTreeMap::new();
        for e in entries.split(';') {
            let (k, v) = e.split_once('=').ok_or_else(bad)?;
            values.insert(
                k.parse::<Site>().map_err(|_| bad())?,
                hexfloat::parse_f64(v).ok_or_else(bad)?,
            );
        }
        Potential::table(TablePotential::new(values)?)
    } else {
        return Err(bad());
    };
    match shift {
        Some(v) => base.shifted(v),
        None => Ok(base),
    }
}
