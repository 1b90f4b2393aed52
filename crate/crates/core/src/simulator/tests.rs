use std::f64::consts::FRAC_PI_2;

use super::*;
use crate::learning::{partition, synth_dataset, PartitionMode, PartitionSpec};
use crate::orbital::EARTH_RADIUS_KM;

fn polar_sat(id: u32, raan_deg: f64, phase_deg: f64) -> SatelliteSpec {
    SatelliteSpec {
        id,
        semi_major_axis_km: EARTH_RADIUS_KM + 500.0,
        inclination: FRAC_PI_2,
        raan: raan_deg.to_radians(),
        initial_phase: phase_deg.to_radians(),
    }
}

fn north_pole() -> GroundStation {
    GroundStation {
        latitude: FRAC_PI_2,
        longitude: 0.0,
        altitude_km: 0.0,
        min_elevation: 10f64.to_radians(),
    }
}

fn scenario(sats: Vec<SatelliteSpec>, strategy: StrategySetup, horizon_s: f64) -> Scenario {
    let train = synth_dataset(3, 40 * sats.len(), 4, 11).unwrap();
    let test = synth_dataset(3, 30, 4, 11).unwrap();
    let ids: Vec<(u32, u32)> = sats.iter().map(|s| (s.id, 0)).collect();
    let spec = PartitionSpec {
        mode: PartitionMode::Iid,
        seed: 3,
    };
    let local_data = partition(&train, &ids, &spec).unwrap();
    Scenario {
        ground_station: north_pole(),
        satellites: sats.into_iter().map(|s| (s, 0)).collect(),
        local_data,
        test_data: test,
        training: TrainConfig {
            learning_rate: 0.1,
            prox_weight: 0.0,
            batch_size: 10,
            local_epochs: 1,
        },
        strategy,
        horizon_s,
        seed: 9,
        compute: ComputePolicy::Immediate,
        exchange_delay_s: 0.0,
    }
}

fn three_sats() -> Vec<SatelliteSpec> {
    vec![
        polar_sat(0, 0.0, 0.0),
        polar_sat(1, 60.0, 100.0),
        polar_sat(2, 120.0, 230.0),
    ]
}

fn fedavg() -> StrategySetup {
    StrategySetup::FedAvg {
        schedule: SchedulePolicy::Full,
    }
}

#[test]
fn compute_done_policies() {
    assert_eq!(
        compute_done_time(100.0, Some(5000.0), &ComputePolicy::Immediate),
        100.0
    );
    assert_eq!(
        compute_done_time(100.0, None, &ComputePolicy::Immediate),
        100.0
    );
    let fixed = ComputePolicy::Fixed { duration_s: 600.0 };
    assert_eq!(compute_done_time(100.0, Some(5000.0), &fixed), 700.0);
    assert_eq!(compute_done_time(100.0, Some(300.0), &fixed), 700.0);
}

#[test]
fn deterministic_under_seed() {
    for strategy in [
        fedavg(),
        StrategySetup::FedSat,
        StrategySetup::FedAsync {
            base_mix: 0.5,
            staleness: Staleness::None,
            schedule_threshold: 0.0,
        },
    ] {
        let s = scenario(three_sats(), strategy, 40_000.0);
        let a = simulate(&s).unwrap();
        let b = simulate(&s).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.metrics_csv(), b.metrics_csv());
        assert_eq!(a.events, b.events);
    }
}

#[test]
fn records_follow_global_updates() {
    let out = simulate(&scenario(three_sats(), StrategySetup::FedSat, 40_000.0)).unwrap();
    let updates = out
        .events
        .iter()
        .filter(|e| e.action == ProtocolAction::GlobalUpdate)
        .count();
    assert!(updates > 0);
    assert_eq!(out.records.len(), 1 + updates);
    assert_eq!(out.records[0].wall_time, 0.0);
    assert!(out
        .records
        .windows(2)
        .all(|w| w[0].wall_time <= w[1].wall_time));
    assert!(out
        .records
        .windows(2)
        .all(|w| w[1].global_epoch == w[0].global_epoch + 1));
}

#[test]
fn delivered_tags_never_exceed_the_server_epoch() {
    let s = scenario(
        three_sats(),
        StrategySetup::FedAsync {
            base_mix: 0.5,
            staleness: Staleness::None,
            schedule_threshold: 0.0,
        },
        40_000.0,
    );
    let out = simulate(&s).unwrap();
    let mut epoch = 0;
    for e in &out.events {
        if let (ProtocolAction::Upload { .. }, Some(tag)) = (e.action, e.tag) {
            assert!(tag <= epoch, "tag {tag} ahead of epoch {epoch}");
        }
        epoch = e.epoch;
    }
}

#[test]
fn fedavg_first_update_waits_for_second_contacts() {
    let out = simulate(&scenario(three_sats(), fedavg(), 40_000.0)).unwrap();
    let second_contact = (0..3)
        .map(|id| out.plan.windows(id)[1].rise_time)
        .fold(f64::NEG_INFINITY, f64::max);
    let first = out.update_times()[0];
    assert!(first >= second_contact, "{first} < {second_contact}");
    // Accuracy is flat until then.
    assert_eq!(out.records[0].global_epoch, 0);
    assert_eq!(out.records[1].global_epoch, 1);
}

#[test]
fn single_satellite_fedsat_tracks_local_training() {
    let s = scenario(
        vec![polar_sat(4, 0.0, 0.0)],
        StrategySetup::FedSat,
        30_000.0,
    );
    let out = simulate(&s).unwrap();
    let uploads = out
        .events
        .iter()
        .filter(|e| e.action == ProtocolAction::Upload { accepted: true })
        .count();
    assert!(uploads >= 3);

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(4);
    let data = &s.local_data[&4];
    let mut theta = ParamVector::zeros(param_count(4, 3));
    for tag in 0..uploads as u64 {
        theta = local_train(&theta, tag, data, &s.training, &mut rng).unwrap();
    }
    assert_eq!(out.final_model.values, theta.values);
}

#[test]
fn overrunning_computation_is_sent_one_pass_later() {
    let sat = polar_sat(0, 0.0, 0.0);
    let probe = scenario(vec![sat], StrategySetup::FedSat, 30_000.0);
    let plan = ContactPlan::compute(&probe.ground_station, &[sat], 0.0, 30_000.0).unwrap();
    let w = plan.windows(0);
    // Finishes in the middle of the second pass.
    let duration = (w[1].rise_time + w[1].set_time) / 2.0 - w[0].set_time;
    let mut s = probe;
    s.compute = ComputePolicy::Fixed {
        duration_s: duration,
    };
    let out = simulate(&s).unwrap();
    let first_upload = out
        .events
        .iter()
        .find(|e| matches!(e.action, ProtocolAction::Upload { .. }))
        .unwrap();
    assert_eq!(first_upload.time, w[2].rise_time);
    assert!(out
        .events
        .iter()
        .any(|e| e.action == ProtocolAction::Busy && e.time == w[1].rise_time));
}

#[test]
fn exchange_delay_shifts_the_exchange() {
    let sat = polar_sat(0, 0.0, 0.0);
    let mut s = scenario(vec![sat], StrategySetup::FedSat, 30_000.0);
    s.exchange_delay_s = 5.0;
    let out = simulate(&s).unwrap();
    let first_download = out
        .events
        .iter()
        .find(|e| e.action == ProtocolAction::Download)
        .unwrap();
    assert_eq!(first_download.time, out.plan.windows(0)[0].rise_time + 5.0);
}

#[test]
fn invalid_scenarios_fail_before_running() {
    let mut s = scenario(three_sats(), fedavg(), 10_000.0);
    s.horizon_s = 0.0;
    assert!(matches!(simulate(&s), Err(SimError::InvalidScenario(_))));
    let mut s = scenario(three_sats(), fedavg(), 10_000.0);
    s.local_data.remove(&1);
    assert!(matches!(simulate(&s), Err(SimError::InvalidScenario(_))));
}

#[test]
fn event_log_lines() {
    let out = simulate(&scenario(three_sats(), StrategySetup::FedSat, 20_000.0)).unwrap();
    let mut buf = Vec::new();
    write_event_log(&out.events, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(EVENT_LOG_HEADER));
    assert_eq!(lines.count(), out.events.len());
}
