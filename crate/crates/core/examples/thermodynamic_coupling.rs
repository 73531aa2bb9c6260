//! Agreement between finite-volume and infinite-volume window samples
//! driven by the same field, as the finite box grows.

use rayon::prelude::*;

use cyclegas::lattice::{enumerate_cycles, BoxRegion, Cutoffs, Site};
use cyclegas::potentials::Potential;
use cyclegas::rng::replica_seed;
use cyclegas::sampler::{ClanCaps, PerfectSampler};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = enumerate_cycles(2, Cutoffs::new(6, 2.0), &Potential::gaussian(2), 2.0)?;
    let sampler = PerfectSampler::new(&cat, ClanCaps::default())?;
    let window = BoxRegion::cube(Site::origin(2), 1);
    let radii: Vec<i32> = (1..=6).collect();
    let regions: Vec<BoxRegion> = radii
        .iter()
        .map(|&r| BoxRegion::cube(Site::origin(2), r))
        .collect();
    let n = 2000;
    let points: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| {
            sampler
                .thermodynamic_coupling(replica_seed(3, i), &window, &regions)
                .unwrap()
        })
        .collect();
    println!("{:>6} {:>10} {:>14}", "radius", "agree", "clan inside");
    for (k, r) in radii.iter().enumerate() {
        let agree = points.iter().filter(|p| p[k].agrees).count() as f64 / n as f64;
        let inside = points.iter().filter(|p| p[k].contains_clan).count() as f64 / n as f64;
        println!("{r:>6} {agree:>10.4} {inside:>14.4}");
    }
    Ok(())
}
