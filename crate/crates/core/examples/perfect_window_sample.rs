//! One perfect sample of the infinite-volume measure on a 5x5 window.

use cyclegas::lattice::{enumerate_cycles, BoxRegion, Cutoffs, Site};
use cyclegas::potentials::Potential;
use cyclegas::sampler::{ClanCaps, PerfectSampler};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(2), |s| s.parse())?;
    let cat = enumerate_cycles(2, Cutoffs::new(6, 2.0), &Potential::gaussian(2), 2.0)?;
    let sampler = PerfectSampler::new(&cat, ClanCaps::default())?;
    println!(
        "certified beta <= {:.4} ({})",
        sampler.certificate().beta_upper,
        sampler.certificate().method
    );

    let window = BoxRegion::cube(Site::origin(2), 2);
    let s = sampler.sample_mu_window(seed, &window)?;
    for c in s.permutation.cycles() {
        println!("{c}");
    }
    let clan = s.clan.as_ref().unwrap();
    println!(
        "clan: {} nodes, {} roots, depth {}, radius {}",
        clan.size, clan.roots, clan.depth, clan.radius
    );
    for y in (-2..=2).rev() {
        let row: Vec<String> = (-2..=2)
            .map(|x| {
                let site = Site::new(&[x, y]).unwrap();
                let len = s.permutation.cycle_length_at(&site);
                if len == 1 {
                    ".".into()
                } else {
                    len.to_string()
                }
            })
            .collect();
        println!("{}", row.join(" "));
    }
    Ok(())
}
