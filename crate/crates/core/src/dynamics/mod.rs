//! Cylinders of the space-time Poisson process, the free process on a time
//! slab, the loss network of cycles, exact finite-volume sampling, and the
//! brute-force Gibbs table.

mod field;
mod gibbs;

pub use field::{ExploredRegion, FieldPoint, PointId, PoissonField, ALIVE_BLOCK};
pub use gibbs::{detailed_balance_check, enumerate_g_lambda, GibbsTable};

use std::collections::HashMap;

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Exp1, Poisson};
use thiserror::Error;

use crate::lattice::{BoxRegion, Cycle, LatticeError, Permutation, RegionCatalog, Site};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("loss network must start from an empty state; a cylinder is alive at {0}")]
    NotEmptyAtStart(f64),
    #[error("no empty time found within {0} time units")]
    HorizonExceeded(u32),
    #[error("state space exceeds the cap of {0} states")]
    StateSpaceTooLarge(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Default cap on the backward search for an empty time.
pub const DEFAULT_HORIZON: u32 = 1 << 16;

/// Cycle `cycle` born at `birth`, living `lifetime` time units.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderPoint {
    pub cycle: Cycle,
    pub birth: f64,
    pub lifetime: f64,
}

impl CylinderPoint {
    pub fn death(&self) -> f64 {
        self.birth + self.lifetime
    }

    pub fn alive_at(&self, u: f64) -> bool {
        self.birth <= u && u < self.death()
    }
}

/// Free-process cylinders alive somewhere in `[t0, t1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeProcessSlab {
    t0: f64,
    t1: f64,
    points: Vec<CylinderPoint>,
    ids: Option<Vec<PointId>>,
}

impl FreeProcessSlab {
    pub(crate) fn from_points(
        t0: f64,
        t1: f64,
        points: Vec<CylinderPoint>,
        ids: Option<Vec<PointId>>,
    ) -> Self {
        FreeProcessSlab { t0, t1, points, ids }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn points(&self) -> &[CylinderPoint] {
        &self.points
    }

    /// Field identities of the points, for slabs cut from a [`PoissonField`].
    pub fn ids(&self) -> Option<&[PointId]> {
        self.ids.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of cylinders alive at `u`.
    pub fn alive_count(&self, u: f64) -> usize {
        self.points.iter().filter(|p| p.alive_at(u)).count()
    }
}

/// Free process on `[t0, t1]` for the cycles of `region`: `Poisson(w (t1 -
/// t0))` births per cycle at uniform times plus `Poisson(w)` cylinders
/// already alive at `t0`, all with `Exp(1)` (residual) lifetimes.
///
/// Cylinders alive at `t0` are stored as born at `t0`; their ages are not
/// needed.
pub fn sample_free_slab<R: Rng + ?Sized>(
    region: &RegionCatalog<'_>,
    t0: f64,
    t1: f64,
    rng: &mut R,
) -> FreeProcessSlab {
    assert!(t0 <= t1, "empty window");
    let mut points = Vec::new();
    for (cycle, w) in region.cycles().into_iter().zip(region.weights()) {
        if w <= 0.0 {
            continue;
        }
        let boundary = poisson(w, rng);
        let interior = if t1 > t0 { poisson(w * (t1 - t0), rng) } else { 0 };
        for _ in 0..boundary {
            let life: f64 = Exp1.sample(rng);
            points.push(CylinderPoint {
                cycle: cycle.clone(),
                birth: t0,
                lifetime: life,
            });
        }
        for _ in 0..interior {
            let birth = t0 + (t1 - t0) * rng.random::<f64>();
            let life: f64 = Exp1.sample(rng);
            points.push(CylinderPoint {
                cycle: cycle.clone(),
                birth,
                lifetime: life,
            });
        }
    }
    FreeProcessSlab::from_points(t0, t1, points, None)
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Earliest time in `[t0, t1]` at which no cylinder is alive.
pub fn find_empty_time(slab: &FreeProcessSlab) -> Option<f64> {
    let mut spans: Vec<(f64, f64)> = slab.points.iter().map(|p| (p.birth, p.death())).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut covered_to = slab.t0;
    for (b, d) in spans {
        if b > covered_to {
            break;
        }
        covered_to = covered_to.max(d);
    }
    (covered_to <= slab.t1).then_some(covered_to)
}

/// A realized loss-network trajectory: which slab points became real
/// cylinders.
#[derive(Clone, Debug)]
pub struct LossTrajectory<'s> {
    slab: &'s FreeProcessSlab,
    start: f64,
    order: Vec<usize>,
    accepted: Vec<bool>,
}

/// Present cycles at a given clock time.
#[derive(Clone, Debug, PartialEq)]
pub struct LossNetworkState {
    pub present: Vec<Cycle>,
    pub clock: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    Birth,
    Lost,
    Death,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub point: usize,
}

impl LossTrajectory<'_> {
    pub fn start(&self) -> f64 {
        self.start
    }

    /// Whether slab point `i` became a real cylinder.
    pub fn accepted(&self, i: usize) -> bool {
        self.accepted[i]
    }

    /// Cycles present at clock `u`, in canonical order.
    pub fn state_at(&self, u: f64) -> LossNetworkState {
        let mut present: Vec<Cycle> = self
            .order
            .iter()
            .filter(|&&i| self.accepted[i] && self.slab.points[i].alive_at(u))
            .map(|&i| self.slab.points[i].cycle.clone())
            .collect();
        present.sort();
        LossNetworkState { present, clock: u }
    }

    /// The state at the slab's end as a permutation.
    pub fn final_permutation(&self) -> Permutation {
        Permutation::new(self.state_at(self.slab.t1).present).expect("loss network keeps cycles disjoint")
    }

    /// Births, losses and deaths within `[start, t1]` in time order.
    pub fn events(&self) -> Vec<Event> {
        let mut ev = Vec::new();
        for &i in &self.order {
            let p = &self.slab.points[i];
            if self.accepted[i] {
                ev.push(Event {
                    time: p.birth,
                    kind: EventKind::Birth,
                    point: i,
                });
                if p.death() <= self.slab.t1 {
                    ev.push(Event {
                        time: p.death(),
                        kind: EventKind::Death,
                        point: i,
                    });
                }
            } else {
                ev.push(Event {
                    time: p.birth,
                    kind: EventKind::Lost,
                    point: i,
                });
            }
        }
        ev.sort_by(|a, b| a.time.total_cmp(&b.time));
        ev
    }
}

/// Runs the loss network forward from the empty state at `u_start`: each
/// birth, in order of (birth time, cycle), becomes real iff its cycle is
/// disjoint from every real cycle alive at that time.
pub fn forward_loss_network(
    slab: &FreeProcessSlab,
    u_start: f64,
) -> Result<LossTrajectory<'_>, DynamicsError> {
    if slab.points.iter().any(|p| p.alive_at(u_start)) {
        return Err(DynamicsError::NotEmptyAtStart(u_start));
    }
    let mut order: Vec<usize> = (0..slab.points.len())
        .filter(|&i| {
            let b = slab.points[i].birth;
            b > u_start && b <= slab.t1
        })
        .collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&slab.points[a], &slab.points[b]);
        pa.birth
            .total_cmp(&pb.birth)
            .then_with(|| pa.cycle.cmp(&pb.cycle))
    });
    let mut accepted = vec![false; slab.points.len()];
    // site -> death time of the real cylinder last placed there
    let mut busy: HashMap<Site, f64> = HashMap::new();
    for &i in &order {
        let p = &slab.points[i];
        let free = p
            .cycle
            .sites()
            .iter()
            .all(|s| busy.get(s).is_none_or(|&d| d <= p.birth));
        if free {
            accepted[i] = true;
            for s in p.cycle.sites() {
                busy.insert(*s, p.death());
            }
        }
    }
    Ok(LossTrajectory {
        slab,
        start: u_start,
        order,
        accepted,
    })
}

/// Exact draw from the finite-volume Gibbs measure on `region`.
///
/// Cuts slabs `[-K, 0]` of doubling length from the field, restricted to
/// cycles inside the region, until one contains an empty time, then runs
/// the loss network from there to time 0.
pub fn sample_g_lambda_exact(
    field: &mut PoissonField<'_>,
    region: &BoxRegion,
    horizon: u32,
) -> Result<Permutation, DynamicsError> {
    if !region.is_finite() {
        return Err(LatticeError::UnboundedRegion.into());
    }
    let mut k: u32 = 1;
    loop {
        let slab = field.slab(region, k);
        if let Some(u) = find_empty_time(&slab) {
            let traj = forward_loss_network(&slab, u)?;
            return Ok(traj.final_permutation().in_region(*region)?);
        }
        if k >= horizon {
            return Err(DynamicsError::HorizonExceeded(horizon));
        }
        k = (k * 2).min(horizon);
    }
}
