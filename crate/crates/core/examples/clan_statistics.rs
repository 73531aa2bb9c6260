//! Clan sizes and generation ratios against the certified bound on beta.

use std::collections::BTreeMap;

use rayon::prelude::*;

use cyclegas::lattice::{enumerate_cycles, BoxRegion, Cutoffs, Site};
use cyclegas::potentials::Potential;
use cyclegas::rng::replica_seed;
use cyclegas::sampler::{ClanCaps, ClanSummary, PerfectSampler};
use cyclegas::stats::generation_ratios;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = std::env::args().nth(1).map_or(Ok(2.5), |s| s.parse())?;
    let cat = enumerate_cycles(2, Cutoffs::new(6, 2.0), &Potential::gaussian(2), alpha)?;
    let sampler = PerfectSampler::new(&cat, ClanCaps::default())?;
    let window = BoxRegion::single(Site::origin(2));
    let clans: Vec<ClanSummary> = (0..20_000)
        .into_par_iter()
        .map(|i| {
            let mut field = sampler.field(replica_seed(9, i));
            ClanSummary::of(&sampler.clan(&mut field, &window).unwrap())
        })
        .collect();
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for c in &clans {
        *sizes.entry(c.size).or_default() += 1;
    }
    println!("clan size histogram:");
    for (size, n) in sizes.iter().take(10) {
        println!("{size:>4} {n:>6}");
    }
    println!("beta <= {:.4}", sampler.certificate().beta_upper);
    for (label, masses) in [("size", false), ("mass", true)] {
        for g in generation_ratios(&clans, masses, 30.0) {
            println!(
                "{label} ratio g{}: {:.4} +- {:.4}",
                g.generation, g.ratio, g.sigma
            );
        }
    }
    Ok(())
}
