use std::collections::{BTreeSet, HashMap};

use super::DynamicsError;
use crate::lattice::{Cycle, Permutation, RegionCatalog, Site};

/// Every cycle gas of a region with its Gibbs probability
/// `prod w(gamma) / Z`.
#[derive(Clone, Debug)]
pub struct GibbsTable {
    pub states: Vec<Permutation>,
    pub probabilities: Vec<f64>,
    pub partition_function: f64,
}

impl GibbsTable {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Map from cycle list to state index.
    pub fn index(&self) -> HashMap<Vec<Cycle>, usize> {
        self.states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.cycles().to_vec(), i))
            .collect()
    }

    pub fn probability_of(&self, p: &Permutation) -> Option<f64> {
        self.states
            .iter()
            .position(|s| s.cycles() == p.cycles())
            .map(|i| self.probabilities[i])
    }

    /// Total variation distance between the table and empirical counts of
    /// sampled states. States missing from the table count fully.
    pub fn tv_distance(&self, counts: &HashMap<Vec<Cycle>, u64>) -> f64 {
        let n: u64 = counts.values().sum();
        if n == 0 {
            return 1.0;
        }
        let index = self.index();
        let mut tv = 0.0;
        let mut seen = vec![false; self.len()];
        for (k, c) in counts {
            let emp = *c as f64 / n as f64;
            match index.get(k) {
                Some(&i) => {
                    seen[i] = true;
                    tv += (emp - self.probabilities[i]).abs();
                }
                None => tv += emp,
            }
        }
        for (i, p) in self.probabilities.iter().enumerate() {
            if !seen[i] {
                tv += p;
            }
        }
        0.5 * tv
    }
}

/// All pairwise-disjoint sets of the region's cycles, by backtracking.
pub fn enumerate_g_lambda(region: &RegionCatalog<'_>, cap: usize) -> Result<GibbsTable, DynamicsError> {
    let cycles = region.cycles();
    let weights = region.weights();
    let mut out: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut chosen = Vec::new();
    let mut used = BTreeSet::new();
    backtrack(&cycles, &weights, 0, 1.0, &mut chosen, &mut used, &mut out, cap)?;
    let z: f64 = out.iter().map(|(_, w)| w).sum();
    let mut states = Vec::with_capacity(out.len());
    let mut probabilities = Vec::with_capacity(out.len());
    for (idx, w) in out {
        let gas = Permutation::new(idx.iter().map(|&i| cycles[i].clone()).collect())?
            .in_region(*region.region())?;
        states.push(gas);
        probabilities.push(w / z);
    }
    Ok(GibbsTable {
        states,
        probabilities,
        partition_function: z,
    })
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    cycles: &[Cycle],
    weights: &[f64],
    from: usize,
    weight: f64,
    chosen: &mut Vec<usize>,
    used: &mut BTreeSet<Site>,
    out: &mut Vec<(Vec<usize>, f64)>,
    cap: usize,
) -> Result<(), DynamicsError> {
    if out.len() >= cap {
        return Err(DynamicsError::StateSpaceTooLarge(cap));
    }
    out.push((chosen.clone(), weight));
    for i in from..cycles.len() {
        if cycles[i].sites().iter().any(|s| used.contains(s)) {
            continue;
        }
        used.extend(cycles[i].sites().iter().copied());
        chosen.push(i);
        backtrack(
            cycles,
            weights,
            i + 1,
            weight * weights[i],
            chosen,
            used,
            out,
            cap,
        )?;
        chosen.pop();
        for s in cycles[i].sites() {
            used.remove(s);
        }
    }
    Ok(())
}

/// `max |G(eta) w(gamma) - G(eta + gamma)|` over states `eta` and region
/// cycles `gamma` disjoint from `eta`.
pub fn detailed_balance_check(table: &GibbsTable, region: &RegionCatalog<'_>) -> f64 {
    let index = table.index();
    let cycles = region.cycles();
    let weights = region.weights();
    let mut worst: f64 = 0.0;
    for (i, state) in table.states.iter().enumerate() {
        for (c, w) in cycles.iter().zip(&weights) {
            if state.cycles().iter().any(|d| !d.compatible(c)) {
                continue;
            }
            let mut next = state.cycles().to_vec();
            next.push(c.clone());
            next.sort();
            let q = index.get(&next).map_or(0.0, |&j| table.probabilities[j]);
            worst = worst.max((table.probabilities[i] * w - q).abs());
        }
    }
    worst
}
