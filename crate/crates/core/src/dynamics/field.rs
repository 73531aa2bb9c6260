use std::collections::{BTreeSet, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Exp1, Poisson};

use super::{CylinderPoint, FreeProcessSlab};
use crate::lattice::{BoxRegion, CycleCatalog, PlacedCycle, Site};
use crate::rng::{stream, TAG_FIELD};

/// Block holding the cylinders alive at time 0.
pub const ALIVE_BLOCK: u32 = 0;

/// Identity of a field point: the stream it came from and its index there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointId {
    pub anchor: Site,
    pub block: u32,
    pub index: u32,
}

/// A cylinder of the field. `death` is `+inf` for cylinders alive at 0,
/// whose remaining life never matters for times `<= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldPoint {
    pub id: PointId,
    pub placed: PlacedCycle,
    pub birth: f64,
    pub death: f64,
}

impl FieldPoint {
    /// Alive at `u`: `birth <= u < death`.
    pub fn alive_at(&self, u: f64) -> bool {
        self.birth <= u && u < self.death
    }
}

/// The space-time Poisson process of cylinders on `(-inf, 0]`, realized
/// lazily and independently of query order.
///
/// Cylinders are grouped by the anchor of their cycle and by time block:
/// block `0` holds those alive at time 0 (age `Exp(1)`), block `k + 1` those
/// dying in `[-k-1, -k)` (lifetime `Exp(1)` back from a uniform death time).
/// Every block has `Poisson(total class weight)` points with classes drawn
/// proportionally to weight, and its own stream, so each block is sampled
/// once no matter which wedge first needs it.
pub struct PoissonField<'a> {
    catalog: &'a CycleCatalog,
    seed: u64,
    classes: Option<WeightedIndex<f64>>,
    explored: ExploredRegion,
}

/// The blocks of the field sampled so far.
#[derive(Default)]
pub struct ExploredRegion {
    blocks: HashMap<(Site, u32), Vec<FieldPoint>>,
}

impl ExploredRegion {
    pub fn blocks_sampled(&self) -> usize {
        self.blocks.len()
    }

    pub fn points_sampled(&self) -> usize {
        self.blocks.values().map(Vec::len).sum()
    }
}

impl<'a> PoissonField<'a> {
    pub fn new(catalog: &'a CycleCatalog, seed: u64) -> Self {
        let classes = if catalog.total_weight() > 0.0 {
            WeightedIndex::new(catalog.classes().iter().map(|c| c.weight)).ok()
        } else {
            None
        };
        PoissonField {
            catalog,
            seed,
            classes,
            explored: ExploredRegion::default(),
        }
    }

    pub fn catalog(&self) -> &'a CycleCatalog {
        self.catalog
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn explored(&self) -> &ExploredRegion {
        &self.explored
    }

    /// The points of one (anchor, block) cell, sampling it on first use.
    pub fn block(&mut self, anchor: Site, block: u32) -> &[FieldPoint] {
        let catalog = self.catalog;
        let seed = self.seed;
        let classes = &self.classes;
        self.explored
            .blocks
            .entry((anchor, block))
            .or_insert_with(|| sample_block(catalog, classes.as_ref(), seed, anchor, block))
    }

    /// Anchors of catalog cycles that can meet `sites`.
    pub fn anchors_meeting(&self, sites: &[Site]) -> BTreeSet<Site> {
        let mut out = BTreeSet::new();
        for x in sites {
            for o in self.catalog.offsets() {
                out.insert(*x - *o);
            }
        }
        out
    }

    /// All points alive at time `q <= 0` whose cycle meets `sites`, in
    /// `PointId` order.
    pub fn alive_meeting(&mut self, sites: &[Site], q: f64) -> Vec<FieldPoint> {
        debug_assert!(q <= 0.0);
        let anchors = self.anchors_meeting(sites);
        // blocks whose death interval reaches above q
        let last_block = (-q).ceil() as u32;
        let mut out = Vec::new();
        for a in anchors {
            for b in 0..=last_block {
                let catalog = self.catalog;
                for p in self.block(a, b) {
                    if p.alive_at(q) && p.birth < q && meets(catalog, &p.placed, sites) {
                        out.push(*p);
                    }
                }
            }
        }
        out
    }

    /// All points whose cycle lies inside the finite box `region` and that
    /// are alive somewhere in `[-blocks, 0]`, as a slab on that window.
    pub fn slab(&mut self, region: &BoxRegion, blocks: u32) -> FreeProcessSlab {
        let catalog = self.catalog;
        let mut points = Vec::new();
        let mut ids = Vec::new();
        for a in region.sites() {
            for b in 0..=blocks {
                for p in self.block(a, b) {
                    if catalog.sites_of(&p.placed).all(|s| region.contains(&s)) {
                        points.push(CylinderPoint {
                            cycle: catalog.cycle_of(&p.placed),
                            birth: p.birth,
                            lifetime: p.death - p.birth,
                        });
                        ids.push(p.id);
                    }
                }
            }
        }
        FreeProcessSlab::from_points(-(blocks as f64), 0.0, points, Some(ids))
    }
}

fn meets(catalog: &CycleCatalog, placed: &PlacedCycle, sites: &[Site]) -> bool {
    catalog.sites_of(placed).any(|s| sites.contains(&s))
}

fn sample_block(
    catalog: &CycleCatalog,
    classes: Option<&WeightedIndex<f64>>,
    seed: u64,
    anchor: Site,
    block: u32,
) -> Vec<FieldPoint> {
    let Some(classes) = classes else {
        return Vec::new();
    };
    let mut words: Vec<i64> = anchor.coords().iter().map(|&c| c as i64).collect();
    words.push(block as i64);
    let mut rng = stream(seed, TAG_FIELD, &words);
    let n = Poisson::new(catalog.total_weight())
        .map(|p| p.sample(&mut rng) as u32)
        .unwrap_or(0);
    (0..n)
        .map(|index| {
            let class = classes.sample(&mut rng) as u32;
            let life: f64 = Exp1.sample(&mut rng);
            let (birth, death) = if block == ALIVE_BLOCK {
                (-life, f64::INFINITY)
            } else {
                let death = -(block as f64) + rng.random::<f64>();
                (death - life, death)
            };
            FieldPoint {
                id: PointId { anchor, block, index },
                placed: PlacedCycle { anchor, class },
                birth,
                death,
            }
        })
        .collect()
}
