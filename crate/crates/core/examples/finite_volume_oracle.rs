//! The finite-volume measure on a 2x2 box by enumeration, checked against
//! detailed balance and against exact draws from the loss network.

use std::collections::HashMap;

use cyclegas::dynamics::{
    detailed_balance_check, enumerate_g_lambda, sample_g_lambda_exact, PoissonField, DEFAULT_HORIZON,
};
use cyclegas::lattice::{enumerate_cycles, BoxRegion, Cutoffs, Site};
use cyclegas::potentials::Potential;
use cyclegas::rng::replica_seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = enumerate_cycles(2, Cutoffs::new(4, 1.5), &Potential::gaussian(2), 1.0)?;
    let region = BoxRegion::new(Site::new(&[0, 0])?, Site::new(&[1, 1])?)?;
    let rc = cat.restrict(&region)?;
    let table = enumerate_g_lambda(&rc, 10_000)?;
    println!(
        "{} states, detailed balance violation {:.2e}",
        table.len(),
        detailed_balance_check(&table, &rc)
    );

    let n = 50_000;
    let mut counts: HashMap<_, u64> = HashMap::new();
    for i in 0..n {
        let mut field = PoissonField::new(&cat, replica_seed(7, i));
        let p = sample_g_lambda_exact(&mut field, &region, DEFAULT_HORIZON)?;
        *counts.entry(p.cycles().to_vec()).or_default() += 1;
    }
    println!(
        "TV distance of {n} exact draws: {:.4}",
        table.tv_distance(&counts)
    );
    Ok(())
}
