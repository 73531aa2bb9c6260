//! Subcriticality bounds for the Gaussian potential in d = 2: the rho
//! series, the truncated catalog interval, and the resulting alpha* bounds.

use cyclegas::bounds::{
    alpha_star_beta_truncated, alpha_star_upper_rho, beta_upper_from_rho, certificate,
    gaussian_alpha_star_explicit, rho, rho0,
};
use cyclegas::lattice::{enumerate_cycles, Cutoffs};
use cyclegas::potentials::Potential;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pot = Potential::gaussian(2);
    let cut = Cutoffs::new(6, 2.0);
    println!("rho0 = {:.6}", rho0());
    println!(
        "{:>6} {:>10} {:>12} {:>12} {:>12}",
        "alpha", "rho", "beta(rho)", "beta(cat)", "method"
    );
    for alpha in [2.0, 2.5, 3.0, 4.0, 6.0] {
        let r = rho(&pot, alpha)?;
        let from_rho = beta_upper_from_rho(r).map_or("inf".to_string(), |b| format!("{b:.6}"));
        let cat = enumerate_cycles(2, cut, &pot, alpha)?;
        let cert = certificate(&cat);
        println!(
            "{alpha:>6} {r:>10.6} {from_rho:>12} {:>12.6} {:>12}",
            cat.truncated_beta() + cat.tail_bound(),
            cert.method
        );
    }
    println!("alpha* <= {:.6} (rho root)", alpha_star_upper_rho(&pot)?.value);
    println!(
        "alpha* <= {:.6} (catalog, L=6, R=2)",
        alpha_star_beta_truncated(&pot, cut)?.value
    );
    println!(
        "alpha* <= {:.6} (explicit)",
        gaussian_alpha_star_explicit(2).value
    );
    Ok(())
}
