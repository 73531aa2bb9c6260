//! Enumerates translation classes of cycles under length and jump cutoffs,
//! tabulates them by length and round-trips the text format.

use std::collections::BTreeMap;

use cyclegas::lattice::{enumerate_cycles, Cutoffs, CycleCatalog};
use cyclegas::potentials::Potential;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = enumerate_cycles(2, Cutoffs::new(6, 2.0), &Potential::gaussian(2), 2.5)?;
    let mut by_len: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for c in cat.classes() {
        let e = by_len.entry(c.cycle.len()).or_default();
        e.0 += 1;
        e.1 += c.weight;
    }
    println!("{:>4} {:>8} {:>14}", "len", "classes", "weight");
    for (len, (n, w)) in &by_len {
        println!("{len:>4} {n:>8} {w:>14.6e}");
    }
    println!(
        "truncated beta {:.6}, tail bound {:.3e}",
        cat.truncated_beta(),
        cat.tail_bound()
    );

    let heaviest = cat
        .classes()
        .iter()
        .filter(|c| c.cycle.len() == 3)
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .unwrap();
    println!(
        "heaviest 3-cycle {} with weight {:.3e}",
        heaviest.cycle, heaviest.weight
    );

    let text = cat.to_text();
    let back = CycleCatalog::from_text(&text)?;
    assert_eq!(back.len(), cat.len());
    println!("text format: {} lines, round trip ok", text.lines().count());
    Ok(())
}
