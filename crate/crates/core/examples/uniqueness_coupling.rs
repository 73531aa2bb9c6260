//! Forward coupling from a fixed initial permutation started at -t: the
//! fraction of runs whose window state differs from the stationary one.

use rayon::prelude::*;

use cyclegas::lattice::{enumerate_cycles, BoxRegion, Cutoffs, Cycle, Permutation, Site};
use cyclegas::potentials::Potential;
use cyclegas::rng::replica_seed;
use cyclegas::sampler::{ClanCaps, PerfectSampler};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = enumerate_cycles(2, Cutoffs::new(6, 2.0), &Potential::gaussian(2), 2.5)?;
    let sampler = PerfectSampler::new(&cat, ClanCaps::default())?;
    let window = BoxRegion::cube(Site::origin(2), 1);
    let s = |a: i32, b: i32| Site::new(&[a, b]).unwrap();
    let initial = Permutation::new(vec![
        Cycle::canonicalize(&[s(-1, -1), s(-1, 0)])?,
        Cycle::canonicalize(&[s(0, 0), s(1, 0), s(1, 1), s(0, 1)])?,
    ])?;
    println!("{:>6} {:>12}", "t", "disagree");
    for t in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
        let n = 4000;
        let bad = (0..n)
            .into_par_iter()
            .filter(|&i| {
                !sampler
                    .uniqueness_forward_coupling(replica_seed(5, i), &window, &initial, t)
                    .unwrap()
                    .agrees
            })
            .count();
        println!("{t:>6} {:>12.4}", bad as f64 / n as f64);
    }
    Ok(())
}
