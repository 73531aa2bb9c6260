use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use cyclegas::bounds::mean_matrix_row;
use cyclegas::dynamics::{enumerate_g_lambda, sample_free_slab, sample_g_lambda_exact, DEFAULT_HORIZON};
use cyclegas::lattice::{enumerate_cycles, BoxRegion, Cutoffs, Cycle, CycleCatalog, Permutation, Site};
use cyclegas::potentials::Potential;
use cyclegas::rng::{replica_seed, stream, TAG_SLAB};
use cyclegas::sampler::{ClanCaps, NodeKey, PerfectSampler};
use cyclegas::stats::{cycle_length_histogram, mean_jump};

fn site(c: &[i32]) -> Site {
    Site::new(c).unwrap()
}

fn gaussian(d: usize, cut: Cutoffs, alpha: f64) -> CycleCatalog {
    enumerate_cycles(d, cut, &Potential::gaussian(d), alpha).unwrap()
}

fn meeting(p: &Permutation, w: &BoxRegion) -> Vec<Cycle> {
    p.cycles().iter().filter(|c| w.meets_cycle(c)).cloned().collect()
}

#[test]
fn free_slab_counts_are_poisson() {
    let cat = gaussian(2, Cutoffs::new(4, 2f64.sqrt()), 0.7);
    let region = BoxRegion::new(site(&[0, 0]), site(&[1, 1])).unwrap();
    let rc = cat.restrict(&region).unwrap();
    let (t0, t1) = (-1.0, 2.0);
    let n = 4000;
    let mut counts: HashMap<Cycle, f64> = HashMap::new();
    let mut life = 0.0;
    let mut points = 0.0;
    for i in 0..n {
        let slab = sample_free_slab(&rc, t0, t1, &mut stream(5, TAG_SLAB, &[i]));
        for p in slab.points() {
            *counts.entry(p.cycle.clone()).or_default() += 1.0;
            life += p.lifetime;
            points += 1.0;
            assert!(p.birth >= t0 && p.birth <= t1);
        }
    }
    // per cycle: Poisson(w) alive at t0 plus Poisson(w (t1 - t0)) born later
    for (c, w) in rc.cycles().into_iter().zip(rc.weights()) {
        let mean = w * (1.0 + t1 - t0) * n as f64;
        let got = counts.get(&c).copied().unwrap_or(0.0);
        assert!(
            (got - mean).abs() <= 4.0 * mean.sqrt() + 1.0,
            "{c}: {got} vs {mean}"
        );
    }
    let mean_life = life / points;
    assert!((mean_life - 1.0).abs() <= 4.0 / points.sqrt(), "{mean_life}");
}

#[test]
fn root_and_first_generation_counts_match_intensities() {
    let cat = gaussian(2, Cutoffs::new(6, 2.0), 2.0);
    let sampler = PerfectSampler::new(&cat, ClanCaps::default()).unwrap();
    let w = BoxRegion::cube(Site::origin(2), 2);
    // expected roots: total weight of placed cycles meeting the window
    let mut placed = std::collections::BTreeSet::new();
    for x in w.sites() {
        placed.extend(cat.placed_through(&x));
    }
    let root_mean: f64 = placed.iter().map(|p| cat.weight_of(p)).sum();
    let n = 10_000u64;
    // root cycles are stored moved to the origin; the row sum is translation invariant
    let per: Vec<(f64, f64, Vec<Cycle>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut field = sampler.field(replica_seed(21, i));
            let clan = sampler.clan(&mut field, &w).unwrap();
            let mut parents = 0.0;
            let mut classes = Vec::new();
            for &r in &clan.roots {
                let c = &clan.nodes[r].cycle;
                parents += clan.nodes[r].parents.len() as f64;
                classes.push(c.translate(-c.sites()[0]));
            }
            (clan.roots.len() as f64, parents, classes)
        })
        .collect();
    let distinct: std::collections::BTreeSet<&Cycle> = per.iter().flat_map(|x| &x.2).collect();
    let rows: HashMap<&Cycle, f64> = distinct
        .into_par_iter()
        .map(|c| (c, mean_matrix_row(c, &cat).iter().map(|e| e.1).sum::<f64>()))
        .collect();
    let roots: f64 = per.iter().map(|x| x.0).sum();
    let expected_roots = root_mean * n as f64;
    assert!(
        (roots - expected_roots).abs() <= 3.0 * expected_roots.sqrt(),
        "{roots} vs {expected_roots}"
    );
    // given the roots, first-generation counts are Poisson with the row sums
    let parents: f64 = per.iter().map(|x| x.1).sum();
    let expected: f64 = per.iter().flat_map(|x| &x.2).map(|c| rows[c]).sum();
    assert!(expected > 100.0);
    assert!(
        (parents - expected).abs() <= 3.0 * expected.sqrt(),
        "{parents} vs {expected}"
    );
}

#[test]
fn large_alpha_is_mostly_identity() {
    let cat = gaussian(2, Cutoffs::new(4, 2.0), 6.0);
    let sampler = PerfectSampler::new(&cat, ClanCaps::default()).unwrap();
    let w = BoxRegion::cube(Site::origin(2), 1);
    let mut placed = std::collections::BTreeSet::new();
    for x in w.sites() {
        placed.extend(cat.placed_through(&x));
    }
    let union: f64 = placed.iter().map(|p| cat.weight_of(p)).sum();
    let n = 20_000u64;
    let samples: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| sampler.sample_mu_window(replica_seed(22, i), &w).unwrap())
        .collect();
    let identity = samples.iter().filter(|s| s.permutation.is_identity()).count() as f64 / n as f64;
    let sd = (union / n as f64).sqrt();
    assert!(
        identity >= 1.0 - union - 3.0 * sd,
        "{identity} vs {}",
        1.0 - union
    );

    // leading-order mass at length 2: sum of transposition weights through a site
    let warm = gaussian(2, Cutoffs::new(4, 2.0), 2.5);
    let ws = PerfectSampler::new(&warm, ClanCaps::default()).unwrap();
    let samples: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| ws.sample_mu_window(replica_seed(30, i), &w).unwrap())
        .collect();
    let h = cycle_length_histogram(&samples);
    assert_eq!(h.total(), 9 * n);
    let through_origin: f64 = warm
        .placed_through(&Site::origin(2))
        .iter()
        .filter(|p| warm.len_of(p) == 2)
        .map(|p| warm.weight_of(p))
        .sum();
    let got = h.counts.get(&2).copied().unwrap_or(0) as f64 / h.total() as f64;
    assert!(
        (got - through_origin).abs() <= 0.15 * through_origin,
        "{got} vs {through_origin}"
    );

    let very_cold = gaussian(2, Cutoffs::new(4, 2.0), 100.0);
    let s = PerfectSampler::new(&very_cold, ClanCaps::default()).unwrap();
    let draws: Vec<_> = (0..200)
        .map(|i| s.sample_mu_window(replica_seed(23, i), &w).unwrap())
        .collect();
    let m = mean_jump(&draws).unwrap();
    assert!(m.within(&[0.0, 0.0], 3.0));
}

/// Marginal on the cycles meeting `w` of the enumerated measure on `lambda`.
fn marginal(cat: &CycleCatalog, lambda: &BoxRegion, w: &BoxRegion) -> HashMap<Vec<Cycle>, f64> {
    let table = enumerate_g_lambda(&cat.restrict(lambda).unwrap(), 1_000_000).unwrap();
    let mut out: HashMap<Vec<Cycle>, f64> = HashMap::new();
    for (s, p) in table.states.iter().zip(&table.probabilities) {
        *out.entry(meeting(s, w)).or_default() += p;
    }
    out
}

fn tv(a: &HashMap<Vec<Cycle>, f64>, b: &HashMap<Vec<Cycle>, f64>) -> f64 {
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

#[test]
fn window_law_matches_large_finite_volume() {
    // dimers on Z: cycles are nearest-neighbor transpositions
    let cat = gaussian(1, Cutoffs::new(2, 1.0), 1.5);
    let sampler = PerfectSampler::new(&cat, ClanCaps::default()).unwrap();
    let w = BoxRegion::new(site(&[0]), site(&[1])).unwrap();
    let n = 100_000u64;
    let mut empirical: HashMap<Vec<Cycle>, f64> = HashMap::new();
    let draws: Vec<Vec<Cycle>> = (0..n)
        .into_par_iter()
        .map(|i| {
            sampler
                .sample_mu_window(replica_seed(24, i), &w)
                .unwrap()
                .permutation
                .cycles()
                .to_vec()
        })
        .collect();
    for d in draws {
        *empirical.entry(d).or_default() += 1.0 / n as f64;
    }
    let near = marginal(&cat, &BoxRegion::new(site(&[-1]), site(&[2])).unwrap(), &w);
    let far = marginal(&cat, &BoxRegion::new(site(&[-7]), site(&[8])).unwrap(), &w);
    let d_far = tv(&empirical, &far);
    assert!(d_far < 0.03, "{d_far}");
    // the small box has a visible boundary effect; the large one agrees better
    assert!(tv(&near, &far) > d_far);
}

#[test]
fn finite_volume_coupling_matches_exact_finite_sampler() {
    let cat = gaussian(2, Cutoffs::new(6, 2.0), 2.0);
    let sampler = PerfectSampler::new(&cat, ClanCaps::default()).unwrap();
    let w = BoxRegion::cube(Site::origin(2), 1);
    let regions: Vec<BoxRegion> = (1..=4).map(|r| BoxRegion::cube(Site::origin(2), r)).collect();
    let mut disagreements = vec![0; regions.len()];
    for i in 0..400 {
        let seed = replica_seed(25, i);
        let full = sampler.sample_mu_window(seed, &w).unwrap();
        let points = sampler.thermodynamic_coupling(seed, &w, &regions).unwrap();
        for (k, (r, p)) in regions.iter().zip(&points).enumerate() {
            let mut field = sampler.field(seed);
            let finite = sample_g_lambda_exact(&mut field, r, DEFAULT_HORIZON).unwrap();
            let same = meeting(&finite, &w) == full.permutation.cycles();
            assert_eq!(same, p.agrees, "seed {i}, region {r}");
            disagreements[k] += usize::from(!p.agrees);
        }
    }
    assert!(disagreements[0] > 0);
    assert!(
        disagreements.windows(2).all(|d| d[1] <= d[0]),
        "{disagreements:?}"
    );
}

#[test]
fn uniqueness_disagreement_decays() {
    let cat = gaussian(2, Cutoffs::new(6, 2.0), 2.5);
    let sampler = PerfectSampler::new(&cat, ClanCaps::default()).unwrap();
    let w = BoxRegion::cube(Site::origin(2), 1);
    let initial = Permutation::new(vec![
        Cycle::canonicalize(&[site(&[0, 0]), site(&[1, 0])]).unwrap(),
        Cycle::canonicalize(&[site(&[-1, 1]), site(&[0, 1]), site(&[0, 2])]).unwrap(),
    ])
    .unwrap();
    let grid = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    let freq: Vec<f64> = grid
        .iter()
        .map(|&t| {
            (0..1000u64)
                .into_par_iter()
                .filter(|&i| {
                    !sampler
                        .uniqueness_forward_coupling(replica_seed(26, i), &w, &initial, t)
                        .unwrap()
                        .agrees
                })
                .count() as f64
                / 1000.0
        })
        .collect();
    assert!(freq[0] > 0.9, "{freq:?}");
    assert!(freq.windows(2).all(|f| f[1] <= f[0]), "{freq:?}");
    assert!(freq[5] < 0.01, "{freq:?}");
}

#[test]
fn translated_windows_have_the_same_law() {
    let cat = gaussian(2, Cutoffs::new(6, 2.0), 2.0);
    let sampler = PerfectSampler::new(&cat, ClanCaps::default()).unwrap();
    let w = BoxRegion::cube(Site::origin(2), 1);
    let shifted = w.translate(site(&[17, -5]));
    let n = 20_000u64;
    // per sample: number of moved window sites, capped; independent across samples
    let category = |win: &BoxRegion, seed: u64| -> usize {
        let s = sampler.sample_mu_window(seed, win).unwrap();
        s.restricted_map().len().min(3)
    };
    let hist = |win: &BoxRegion, master: u64| -> BTreeMap<usize, f64> {
        let mut h = BTreeMap::new();
        for c in (0..n)
            .into_par_iter()
            .map(|i| category(win, replica_seed(master, i)))
            .collect::<Vec<_>>()
        {
            *h.entry(c).or_default() += 1.0;
        }
        h
    };
    let a = hist(&w, 27);
    let b = hist(&shifted, 28);
    // two-sample chi-square over the categories seen
    let mut stat = 0.0;
    let mut df = 0;
    for k in a
        .keys()
        .chain(b.keys())
        .collect::<std::collections::BTreeSet<_>>()
    {
        let (x, y) = (a.get(k).copied().unwrap_or(0.0), b.get(k).copied().unwrap_or(0.0));
        if x + y < 10.0 {
            continue;
        }
        stat += (x - y).powi(2) / (x + y);
        df += 1;
    }
    // 99.9% quantiles of chi-square with df - 1 degrees of freedom
    let critical = [f64::INFINITY, 10.83, 13.82, 16.27][df - 1];
    assert!(df >= 2 && stat < critical, "stat {stat} df {df}");
}

#[test]
fn lazy_field_is_consistent_across_windows() {
    let cat = gaussian(2, Cutoffs::new(6, 2.0), 2.0);
    let sampler = PerfectSampler::new(&cat, ClanCaps::default()).unwrap();
    let small = BoxRegion::cube(Site::origin(2), 1);
    let big = BoxRegion::new(site(&[-3, -2]), site(&[4, 3])).unwrap();
    let mut shared = 0;
    for i in 0..300 {
        let seed = replica_seed(29, i);
        // query the big window first this time
        let mut field = sampler.field(seed);
        let b = sampler.clan(&mut field, &big).unwrap();
        let a = sampler.clan(&mut field, &small).unwrap();
        let labels: HashMap<NodeKey, _> = b.nodes.iter().map(|n| (n.key, n.label)).collect();
        for n in &a.nodes {
            assert_eq!(labels[&n.key], n.label);
            shared += 1;
        }
        // and a fresh field gives the same small clan
        let mut fresh = sampler.field(seed);
        let c = sampler.clan(&mut fresh, &small).unwrap();
        assert_eq!(c.nodes.len(), a.nodes.len());
        assert_eq!(
            sampler
                .sample_mu_window(seed, &small)
                .unwrap()
                .permutation
                .cycles(),
            meeting(
                &Permutation::new(b.kept_roots(&b.nodes.iter().map(|n| Some(n.label)).collect::<Vec<_>>()))
                    .unwrap(),
                &small
            )
        );
    }
    assert!(shared > 0);
}
