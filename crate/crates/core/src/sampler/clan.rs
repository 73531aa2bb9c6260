use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::SamplerError;
use crate::dynamics::{PointId, PoissonField};
use crate::lattice::{BoxRegion, Cycle, Site};

/// Where a clan node comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    Field(PointId),
    /// Initial cylinder `i` of a forward coupling.
    Initial(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Unlabeled,
    Kept,
    Deleted,
}

#[derive(Clone, Debug)]
pub struct ClanNode {
    pub key: NodeKey,
    pub cycle: Cycle,
    pub birth: f64,
    pub death: f64,
    /// First-generation ancestors (node indices): incompatible and alive at
    /// this node's birth.
    pub parents: Vec<usize>,
    /// Distance from the nearest root along ancestor edges.
    pub generation: u32,
    pub is_root: bool,
    pub label: Label,
}

/// The ancestors of the cylinders alive at time 0 whose cycles meet a
/// window.
#[derive(Clone, Debug)]
pub struct Clan {
    pub window: BoxRegion,
    pub nodes: Vec<ClanNode>,
    pub roots: Vec<usize>,
}

/// Limits on clan exploration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClanCaps {
    pub max_nodes: usize,
    /// Largest sup-norm distance of a node's site from the window.
    pub max_radius: i32,
}

impl Default for ClanCaps {
    fn default() -> Self {
        ClanCaps {
            max_nodes: 1_000_000,
            max_radius: 10_000,
        }
    }
}

/// An extra cylinder that is not part of the field, such as an initial
/// condition.
#[derive(Clone, Debug)]
pub struct ExtraCylinder {
    pub cycle: Cycle,
    pub birth: f64,
    pub death: f64,
}

pub(crate) struct ClanSpec<'e> {
    /// Only field points born at or after this time exist.
    pub earliest: f64,
    pub extra: &'e [ExtraCylinder],
}

#[derive(PartialEq)]
struct Pending {
    birth: f64,
    node: usize,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.birth
            .total_cmp(&other.birth)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Builds the clan of `window` from the field, youngest nodes first.
pub fn build_clan(
    field: &mut PoissonField<'_>,
    window: &BoxRegion,
    caps: &ClanCaps,
) -> Result<Clan, SamplerError> {
    build_clan_with(
        field,
        window,
        caps,
        &ClanSpec {
            earliest: f64::NEG_INFINITY,
            extra: &[],
        },
    )
}

pub(crate) fn build_clan_with(
    field: &mut PoissonField<'_>,
    window: &BoxRegion,
    caps: &ClanCaps,
    spec: &ClanSpec<'_>,
) -> Result<Clan, SamplerError> {
    if !window.is_finite() {
        return Err(crate::lattice::LatticeError::UnboundedRegion.into());
    }
    let catalog = field.catalog();
    let mut nodes: Vec<ClanNode> = Vec::new();
    let mut index: HashMap<NodeKey, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();

    let window_sites = window.sites();
    let mut found = Vec::new();
    for p in field.alive_meeting(&window_sites, 0.0) {
        if p.birth >= spec.earliest {
            found.push((
                NodeKey::Field(p.id),
                catalog.cycle_of(&p.placed),
                p.birth,
                p.death,
            ));
        }
    }
    for (i, e) in spec.extra.iter().enumerate() {
        if e.birth <= 0.0 && 0.0 < e.death && window.meets_cycle(&e.cycle) {
            found.push((NodeKey::Initial(i), e.cycle.clone(), e.birth, e.death));
        }
    }
    let mut roots = Vec::new();
    for (key, cycle, birth, death) in found {
        let i = push_node(&mut nodes, &mut index, key, cycle, birth, death, 0, window, caps)?;
        nodes[i].is_root = true;
        roots.push(i);
        heap.push(Pending { birth, node: i });
    }

    while let Some(Pending { node, .. }) = heap.pop() {
        let q = nodes[node].birth;
        let sites: Vec<Site> = nodes[node].cycle.sites().to_vec();
        let generation = nodes[node].generation + 1;
        let mut found = Vec::new();
        if q > spec.earliest {
            for p in field.alive_meeting(&sites, q) {
                if p.birth >= spec.earliest {
                    found.push((
                        NodeKey::Field(p.id),
                        catalog.cycle_of(&p.placed),
                        p.birth,
                        p.death,
                    ));
                }
            }
        }
        for (i, e) in spec.extra.iter().enumerate() {
            if e.birth < q && q < e.death && e.cycle.sites().iter().any(|s| sites.contains(s)) {
                found.push((NodeKey::Initial(i), e.cycle.clone(), e.birth, e.death));
            }
        }
        let mut parents = Vec::with_capacity(found.len());
        for (key, cycle, birth, death) in found {
            let j = match index.get(&key) {
                Some(&j) => {
                    let g = &mut nodes[j].generation;
                    *g = (*g).min(generation);
                    j
                }
                None => {
                    let j = push_node(
                        &mut nodes, &mut index, key, cycle, birth, death, generation, window, caps,
                    )?;
                    heap.push(Pending { birth, node: j });
                    j
                }
            };
            parents.push(j);
        }
        parents.sort_unstable();
        parents.dedup();
        nodes[node].parents = parents;
    }
    Ok(Clan {
        window: *window,
        nodes,
        roots,
    })
}

#[allow(clippy::too_many_arguments)]
fn push_node(
    nodes: &mut Vec<ClanNode>,
    index: &mut HashMap<NodeKey, usize>,
    key: NodeKey,
    cycle: Cycle,
    birth: f64,
    death: f64,
    generation: u32,
    window: &BoxRegion,
    caps: &ClanCaps,
) -> Result<usize, SamplerError> {
    if nodes.len() >= caps.max_nodes {
        return Err(SamplerError::ClanCapExceeded(caps.max_nodes));
    }
    let radius = distance_to_box(&cycle, window);
    if radius > caps.max_radius {
        return Err(SamplerError::HaloCapExceeded(caps.max_radius));
    }
    let i = nodes.len();
    nodes.push(ClanNode {
        key,
        cycle,
        birth,
        death,
        parents: Vec::new(),
        generation,
        is_root: false,
        label: Label::Unlabeled,
    });
    index.insert(key, i);
    Ok(i)
}

/// Largest sup-norm distance from a site of `cycle` to the box.
pub(crate) fn distance_to_box(cycle: &Cycle, window: &BoxRegion) -> i32 {
    let BoxRegion::Finite { lower, upper } = window else {
        return 0;
    };
    cycle
        .sites()
        .iter()
        .map(|s| {
            (0..s.dim())
                .map(|i| {
                    (lower.coord(i) - s.coord(i))
                        .max(s.coord(i) - upper.coord(i))
                        .max(0)
                })
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0)
}

impl Clan {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Labels every node, oldest first: a node is kept iff none of its
    /// first-generation ancestors is kept.
    pub fn classify(&mut self) -> Result<(), SamplerError> {
        let labels = self.labels_within(None)?;
        for (n, l) in self.nodes.iter_mut().zip(labels) {
            n.label = l.unwrap_or(Label::Unlabeled);
        }
        Ok(())
    }

    /// Labels computed using only nodes whose cycles lie in `region`
    /// (all nodes when `None`); nodes outside get `None`.
    pub fn labels_within(&self, region: Option<&BoxRegion>) -> Result<Vec<Option<Label>>, SamplerError> {
        let inside: Vec<bool> = self
            .nodes
            .iter()
            .map(|n| region.is_none_or(|r| r.contains_cycle(&n.cycle)))
            .collect();
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| {
            self.nodes[a]
                .birth
                .total_cmp(&self.nodes[b].birth)
                .then_with(|| self.nodes[a].key.cmp(&self.nodes[b].key))
        });
        let mut labels: Vec<Option<Label>> = vec![None; self.nodes.len()];
        for i in order {
            if !inside[i] {
                continue;
            }
            let mut kept = true;
            for &p in &self.nodes[i].parents {
                if !inside[p] {
                    continue;
                }
                match labels[p] {
                    Some(Label::Kept) => kept = false,
                    Some(Label::Deleted) => {}
                    _ => return Err(SamplerError::UnlabeledNode(i)),
                }
            }
            labels[i] = Some(if kept { Label::Kept } else { Label::Deleted });
        }
        Ok(labels)
    }

    /// Kept roots, as cycles, for the labels given.
    pub fn kept_roots(&self, labels: &[Option<Label>]) -> Vec<Cycle> {
        let mut out: Vec<Cycle> = self
            .roots
            .iter()
            .filter(|&&r| labels[r] == Some(Label::Kept))
            .map(|&r| self.nodes[r].cycle.clone())
            .collect();
        out.sort();
        out
    }

    /// Smallest box holding every node's cycle and the window.
    pub fn spatial_support(&self) -> BoxRegion {
        BoxRegion::bounding(
            self.nodes
                .iter()
                .flat_map(|n| n.cycle.sites().iter().copied())
                .chain(self.window.sites().first().copied())
                .chain(self.window.sites().last().copied()),
        )
        .unwrap_or(self.window)
    }

    /// Sup-norm distance from the window to the farthest node site.
    pub fn radius(&self) -> i32 {
        self.nodes
            .iter()
            .map(|n| distance_to_box(&n.cycle, &self.window))
            .max()
            .unwrap_or(0)
    }

    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.generation).max().unwrap_or(0)
    }

    /// Node counts per generation, roots first.
    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.depth() as usize + usize::from(!self.is_empty())];
        for n in &self.nodes {
            out[n.generation as usize] += 1;
        }
        out
    }

    /// Sum of cycle lengths per generation.
    pub fn generation_masses(&self) -> Vec<usize> {
        let mut out = vec![0; self.depth() as usize + usize::from(!self.is_empty())];
        for n in &self.nodes {
            out[n.generation as usize] += n.cycle.len();
        }
        out
    }

    /// Checks the labels by direct scan: a kept node has no kept
    /// incompatible node alive at its birth; a deleted node has one.
    pub fn check_labels(&self) -> Result<(), String> {
        for (i, n) in self.nodes.iter().enumerate() {
            let blocker = self.nodes.iter().enumerate().any(|(j, m)| {
                j != i
                    && m.label == Label::Kept
                    && m.birth < n.birth
                    && n.birth < m.death
                    && !m.cycle.compatible(&n.cycle)
            });
            match n.label {
                Label::Kept if blocker => return Err(format!("kept node {i} is blocked")),
                Label::Deleted if !blocker => return Err(format!("deleted node {i} is unblocked")),
                Label::Unlabeled => return Err(format!("node {i} unlabeled")),
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc(pairs: &[i32]) -> Cycle {
        let sites: Vec<Site> = pairs.iter().map(|&x| Site::new(&[x]).unwrap()).collect();
        Cycle::canonicalize(&sites).unwrap()
    }

    fn node(key: usize, cycle: Cycle, birth: f64, death: f64, parents: Vec<usize>) -> ClanNode {
        ClanNode {
            key: NodeKey::Initial(key),
            cycle,
            birth,
            death,
            parents,
            generation: 0,
            is_root: false,
            label: Label::Unlabeled,
        }
    }

    fn hand_clan(nodes: Vec<ClanNode>) -> Clan {
        Clan {
            window: BoxRegion::single(Site::new(&[0]).unwrap()),
            nodes,
            roots: vec![0],
        }
    }

    // Left: phi's first generation is {phi1, phi2}; phi3 is an ancestor of
    // phi1. Node i is phi_i, node 0 is phi.
    #[test]
    fn left_scenario() {
        let mut clan = hand_clan(vec![
            node(0, cyc(&[0, 1]), -1.0, f64::INFINITY, vec![1, 2]),
            node(1, cyc(&[1, 2]), -2.0, -0.5, vec![3]),
            node(2, cyc(&[0, -1]), -3.0, -0.8, vec![]),
            node(3, cyc(&[2, 3]), -4.0, -1.5, vec![]),
        ]);
        clan.classify().unwrap();
        let labels: Vec<Label> = clan.nodes.iter().map(|n| n.label).collect();
        assert_eq!(
            labels,
            vec![Label::Deleted, Label::Deleted, Label::Kept, Label::Kept]
        );
        clan.check_labels().unwrap();
    }

    // Right: generations {1,2,3}, {2,3,4,5}, {3,4,5}, {5}.
    #[test]
    fn right_scenario() {
        let mut clan = hand_clan(vec![
            node(0, cyc(&[0, 1]), -1.0, f64::INFINITY, vec![1, 2, 3]),
            node(1, cyc(&[1, 2]), -2.0, -0.5, vec![2, 4]),
            node(2, cyc(&[2, 3]), -3.0, -0.5, vec![3, 4]),
            node(3, cyc(&[0, -1]), -4.0, -0.5, vec![5]),
            node(4, cyc(&[3, 4]), -5.0, -1.0, vec![]),
            node(5, cyc(&[-1, -2]), -6.0, -3.0, vec![]),
        ]);
        clan.classify().unwrap();
        let labels: Vec<Label> = clan.nodes.iter().map(|n| n.label).collect();
        use Label::{Deleted as D, Kept as K};
        assert_eq!(labels, vec![K, D, D, D, K, K]);
    }

    #[test]
    fn lone_root_is_kept() {
        let mut clan = hand_clan(vec![node(0, cyc(&[0, 1]), -1.0, f64::INFINITY, vec![])]);
        clan.classify().unwrap();
        assert_eq!(clan.nodes[0].label, Label::Kept);
        assert_eq!(clan.generation_sizes(), vec![1]);
    }
}
