//! Builds the two-shell Walker Delta constellation and prints its elements.
//!
//! ```text
//! cargo run --example walker_constellation
//! ```

use satfl::orbital::{generate_walker, orbital_period, EARTH_RADIUS_KM};
use satfl::WalkerSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shells = [
        WalkerSpec {
            total_sats: 5,
            planes: 5,
            phasing: 1,
            inclination: 80f64.to_radians(),
            altitude_km: 500.0,
            raan_offset: 0.0,
        },
        WalkerSpec {
            total_sats: 5,
            planes: 5,
            phasing: 1,
            inclination: 80f64.to_radians(),
            altitude_km: 2000.0,
            raan_offset: 36f64.to_radians(),
        },
    ];

    let mut next_id = 0;
    println!(
        "{:>3} {:>8} {:>8} {:>8} {:>8} {:>10}",
        "id", "alt_km", "inc_deg", "raan_deg", "u0_deg", "period_min"
    );
    for shell in &shells {
        let sats = generate_walker(shell, next_id)?;
        next_id += sats.len() as u32;
        for s in &sats {
            println!(
                "{:>3} {:>8.0} {:>8.1} {:>8.1} {:>8.1} {:>10.2}",
                s.id,
                s.altitude_km(),
                s.inclination.to_degrees(),
                s.raan.to_degrees(),
                s.initial_phase.to_degrees(),
                s.period_s() / 60.0
            );
        }
    }

    let t_max = orbital_period(EARTH_RADIUS_KM + 2000.0)?;
    println!("\nlongest period: {:.1} min", t_max / 60.0);
    Ok(())
}
