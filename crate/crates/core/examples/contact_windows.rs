//! Contact windows of the two-shell constellation over one day, seen from
//! Bremen and from the North Pole.
//!
//! ```text
//! cargo run --example contact_windows
//! ```

use satfl::orbital::{generate_walker, ContactPlan};
use satfl::{GroundStation, SatelliteSpec, WalkerSpec};

fn constellation() -> Result<Vec<SatelliteSpec>, satfl::orbital::OrbitalError> {
    let mut sats = Vec::new();
    for (alt, offset) in [(500.0, 0.0), (2000.0, 36f64.to_radians())] {
        let spec = WalkerSpec {
            total_sats: 5,
            planes: 5,
            phasing: 1,
            inclination: 80f64.to_radians(),
            altitude_km: alt,
            raan_offset: offset,
        };
        sats.extend(generate_walker(&spec, sats.len() as u32)?);
    }
    Ok(sats)
}

fn station(lat_deg: f64, lon_deg: f64) -> GroundStation {
    GroundStation {
        latitude: lat_deg.to_radians(),
        longitude: lon_deg.to_radians(),
        altitude_km: 0.0,
        min_elevation: 10f64.to_radians(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sats = constellation()?;
    let horizon = 86_400.0;
    for (name, gs) in [
        ("Bremen", station(53.07, 8.80)),
        ("North Pole", station(90.0, 0.0)),
    ] {
        let plan = ContactPlan::compute(&gs, &sats, 0.0, horizon)?;
        println!("{name}");
        println!("  sat  passes  periods  mean_min  max_gap_h");
        for s in &sats {
            let w = plan.windows(s.id);
            let mean = w.iter().map(|w| w.duration()).sum::<f64>() / w.len().max(1) as f64;
            let max_gap = w
                .windows(2)
                .map(|p| p[1].rise_time - p[0].set_time)
                .fold(0.0, f64::max);
            println!(
                "  {:>3}  {:>6}  {:>7.2}  {:>8.2}  {:>9.2}",
                s.id,
                w.len(),
                horizon / s.period_s(),
                mean / 60.0,
                max_gap / 3600.0
            );
        }
    }
    Ok(())
}
