use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use satfl::learning::{synth_dataset, TrainConfig};
use satfl::orbital::{generate_walker, ContactPlan, EARTH_RADIUS_KM};
use satfl::simulator::{simulate, ComputePolicy, ProtocolAction, Scenario, StrategySetup};
use satfl::strategies::{SchedulePolicy, Staleness};
use satfl::{GroundStation, SatelliteSpec, ScenarioConfig, WalkerSpec};

fn station(lat_deg: f64, lon_deg: f64) -> GroundStation {
    GroundStation {
        latitude: lat_deg.to_radians(),
        longitude: lon_deg.to_radians(),
        altitude_km: 0.0,
        min_elevation: 10f64.to_radians(),
    }
}

fn single(strategy: StrategySetup) -> Scenario {
    let sat = SatelliteSpec {
        id: 0,
        semi_major_axis_km: EARTH_RADIUS_KM + 500.0,
        inclination: FRAC_PI_2,
        raan: 0.3,
        initial_phase: 1.0,
    };
    let mut local = BTreeMap::new();
    local.insert(0, synth_dataset(4, 50, 5, 8).unwrap());
    Scenario {
        ground_station: station(90.0, 0.0),
        satellites: vec![(sat, 0)],
        local_data: local,
        test_data: synth_dataset(4, 25, 5, 8).unwrap(),
        training: TrainConfig {
            learning_rate: 0.05,
            prox_weight: 0.1,
            batch_size: 7,
            local_epochs: 2,
        },
        strategy,
        horizon_s: 60_000.0,
        seed: 3,
        compute: ComputePolicy::Immediate,
        exchange_delay_s: 0.0,
    }
}

#[test]
fn strategies_coincide_for_one_satellite() {
    let runs: Vec<_> = [
        StrategySetup::FedAvg {
            schedule: SchedulePolicy::Full,
        },
        StrategySetup::FedAsync {
            base_mix: 1.0,
            staleness: Staleness::None,
            schedule_threshold: 0.0,
        },
        StrategySetup::FedSat,
    ]
    .into_iter()
    .map(|s| simulate(&single(s)).unwrap())
    .collect();
    assert!(runs[0].records.len() > 5);
    for other in &runs[1..] {
        assert_eq!(other.final_model.values, runs[0].final_model.values);
        assert_eq!(other.records.len(), runs[0].records.len());
        for (a, b) in other.records.iter().zip(&runs[0].records) {
            assert_eq!(
                (a.wall_time, a.global_epoch, a.test_accuracy),
                (b.wall_time, b.global_epoch, b.test_accuracy)
            );
        }
    }
}

#[test]
fn inclined_80_deg_constellation_passes_once_per_period_over_the_pole() {
    // Both paper shells; the pole lies 10 degrees outside the ground track
    // but inside every satellite's visibility footprint.
    let horizon = 2.0 * 86_400.0;
    let gs = station(90.0, 0.0);
    for (alt, offset) in [(500.0, 0.0), (2000.0, 36.0)] {
        let shell = WalkerSpec {
            total_sats: 5,
            planes: 5,
            phasing: 1,
            inclination: 80f64.to_radians(),
            altitude_km: alt,
            raan_offset: f64::to_radians(offset),
        };
        let sats = generate_walker(&shell, 0).unwrap();
        let plan = ContactPlan::compute(&gs, &sats, 0.0, horizon).unwrap();
        for s in &sats {
            let w = plan.windows(s.id);
            let periods = horizon / s.period_s();
            assert!(
                (w.len() as f64 - periods).abs() <= 1.0,
                "{} windows over {periods} periods",
                w.len()
            );
            let complete: Vec<_> = w
                .iter()
                .filter(|w| w.rise_time > 0.0 && w.set_time < horizon)
                .collect();
            for pair in complete.windows(2) {
                let spacing = pair[1].rise_time - pair[0].rise_time;
                assert!((spacing - s.period_s()).abs() < 1.0, "spacing {spacing}");
            }
        }
    }
}

#[test]
fn fedavg_subset_only_trains_scheduled_satellites() {
    let text = std::fs::read_to_string(
        std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("scenarios/quickstart_synthetic_fedsat.toml"),
    )
    .unwrap()
    .replace(
        "kind = \"fedsat\"",
        "kind = \"fedavg\"\nschedule = { policy = \"subset\", satellites = [0, 2, 4, 6, 8] }",
    );
    let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
    let out = satfl::run(&cfg).unwrap();
    assert!(out.records.len() > 1);
    for e in &out.events {
        if matches!(
            e.action,
            ProtocolAction::Download | ProtocolAction::Upload { .. }
        ) {
            assert_eq!(e.satellite_id % 2, 0, "{e:?}");
        }
    }
}

#[test]
fn fedavg_epochs_outlast_revisit_gaps_in_bremen() {
    let text = std::fs::read_to_string(
        std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("scenarios/quickstart_synthetic_fedsat.toml"),
    )
    .unwrap()
    .replace("kind = \"fedsat\"", "kind = \"fedavg\"");
    let out = satfl::run(&ScenarioConfig::from_toml_str(&text).unwrap()).unwrap();
    let mut start = 0.0;
    for t in out.update_times() {
        for e in out
            .events
            .iter()
            .filter(|e| e.action == ProtocolAction::Download && e.time >= start && e.time < t)
        {
            let w = out.plan.window_at(e.satellite_id, e.time).unwrap();
            let next = out
                .plan
                .next_rise_after(e.satellite_id, w.set_time)
                .unwrap();
            assert!(t - start >= next - w.set_time);
        }
        start = t;
    }
}

#[test]
fn fedasync_threshold_skips_late_satellites() {
    let mut s = single(StrategySetup::FedAsync {
        base_mix: 0.5,
        staleness: Staleness::Hinged {
            epsilon: 0.0,
            a: 1.0,
            t_max: 1.0,
        },
        schedule_threshold: 0.1,
    });
    s.horizon_s = 30_000.0;
    let out = simulate(&s).unwrap();
    assert!(!out
        .events
        .iter()
        .any(|e| e.action == ProtocolAction::Download));
    assert_eq!(out.records.len(), 1);
}
