//! The three ground-station rules side by side.
//!
//! FedSat reproduces the synchronous weighted average after one delivery per
//! satellite, in any order. FedAsync mixes each delivery with a weight that
//! decays with the wall-clock age of the model it was trained from.
//!
//! ```text
//! cargo run --example strategies
//! ```

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satfl::learning::ParamVector;
use satfl::strategies::{fedsat_update, hinged_staleness, FedSatState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (k, d) = (8u32, 6usize);
    let counts: BTreeMap<u32, usize> = (0..k).map(|id| (id, rng.random_range(100..1000))).collect();
    let total: usize = counts.values().sum();
    let updates: BTreeMap<u32, Vec<f64>> = (0..k)
        .map(|id| (id, (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();

    let mut fedavg = vec![0.0; d];
    for (id, u) in &updates {
        let w = counts[id] as f64 / total as f64;
        fedavg.iter_mut().zip(u).for_each(|(a, v)| *a += w * v);
    }

    let theta0 = ParamVector::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect(), 0);
    let mut fedsat = FedSatState::from_sample_counts(theta0, &counts);
    for id in (0..k).rev() {
        fedsat_update(&mut fedsat, id, &ParamVector::new(updates[&id].clone(), 0))?;
    }
    let gap = fedavg
        .iter()
        .zip(&fedsat.global().values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("FedSat after {k} deliveries vs. weighted average: max |diff| = {gap:.2e}");

    let t_max = 7622.14;
    let epsilon = 0.01;
    let a = 1.0 / t_max;
    println!("\nhinged staleness, epsilon {epsilon}, a = 1/T_max");
    for periods in [0.0, 1.0, 1.01, 1.5, 2.0, 3.0, 5.0] {
        let age = periods * t_max;
        println!(
            "  age {periods:>4} T_max -> s = {:.4}",
            hinged_staleness(age, epsilon, a, t_max)
        );
    }
    Ok(())
}
