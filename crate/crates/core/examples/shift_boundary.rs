//! Shift boundary conditions: under the v-shifted Gaussian the sampled map
//! is x -> zeta(x) + v, and the mean jump is v.

use cyclegas::lattice::{enumerate_cycles, BoxRegion, Cutoffs, Site};
use cyclegas::potentials::Potential;
use cyclegas::rng::replica_seed;
use cyclegas::sampler::{ClanCaps, PerfectSampler};
use cyclegas::stats::mean_jump;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = Site::new(&[1, -2])?;
    let pot = Potential::gaussian(2).shifted(v)?;
    let cat = enumerate_cycles(2, Cutoffs::new(6, 2.0), &pot, 2.5)?;
    let sampler = PerfectSampler::new(&cat, ClanCaps::default())?;
    let window = BoxRegion::cube(Site::origin(2), 2);
    let samples = (0..4000)
        .map(|i| sampler.sample_mu_v_window(replica_seed(11, i), &window, v))
        .collect::<Result<Vec<_>, _>>()?;
    let m = mean_jump(&samples)?;
    println!("v = {v}");
    println!(
        "mean jump = ({:.4}, {:.4}) +- ({:.4}, {:.4})",
        m.mean[0], m.mean[1], m.std_error[0], m.std_error[1]
    );
    println!("within 3 sigma of v: {}", m.within(&[1.0, -2.0], 3.0));
    Ok(())
}
