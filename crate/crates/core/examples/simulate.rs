//! Runs a scenario file end to end and prints the accuracy curve.
//!
//! ```text
//! cargo run --release --example simulate -- crates/core/scenarios/quickstart_synthetic_fedsat.toml
//! SATFL_DATA_DIR=data cargo run --release --example simulate -- \
//!     crates/core/scenarios/bremen_noniid_mnist_fedsat.toml
//! ```

use std::path::PathBuf;

use satfl::ScenarioConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("scenarios/quickstart_synthetic_fedsat.toml")
        });
    let config = ScenarioConfig::load(&path)?;
    let outcome = satfl::run(&config)?;

    println!(
        "{} ({} global updates)",
        path.display(),
        outcome.records.len() - 1
    );
    let mut next_hour = 0.0;
    for r in &outcome.records {
        if r.wall_time >= next_hour {
            println!(
                "  t = {:>5.1} h  epoch {:>4}  accuracy {:.4}",
                r.wall_time / 3600.0,
                r.global_epoch,
                r.test_accuracy
            );
            next_hour = (r.wall_time / 3600.0).floor() * 3600.0 + 4.0 * 3600.0;
        }
    }
    println!("final accuracy {:.4}", outcome.final_accuracy());
    Ok(())
}
