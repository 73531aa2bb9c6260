//! Lattice sites, cycles, boxes, permutations as cycle gases, and the
//! enumeration of admissible cycles.

mod catalog;
mod cycle;
mod region;
mod site;

pub(crate) use catalog::parse_cycle_line;
pub use catalog::{
    enumerate_cycles, CatalogHeader, Cutoffs, CycleCatalog, CycleClass, PlacedCycle, RegionCatalog,
};
pub use cycle::{canonicalize, compatible, support, Cycle};
pub use region::{BoxRegion, Permutation};
pub use site::{Site, MAX_DIM};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("dimension must be in 1..={MAX_DIM}, got {0}")]
    BadDimension(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("a cycle needs at least two sites, got {0}")]
    TooShort(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("site {0} appears twice in the cycle")]
    DuplicateSite(Site),
    #[error("empty box {0}..{1}")]
    EmptyBox(Site, Site),
    #[error("cycles overlap at site {0}")]
    Overlap(Site),
    #[error("cycle through {0} leaves the region")]
    OutsideRegion(Site),
    #[error("catalog exceeds the cap of {0} cycle classes")]
    CatalogTooLarge(usize),
    #[error("operation needs a finite region")]
    UnboundedRegion,
    #[error("invalid cutoffs: {0}")]
    BadCutoffs(String),
    #[error(transparent)]
    Potential(#[from] crate::potentials::PotentialError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
