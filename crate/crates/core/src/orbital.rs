//! Circular-orbit geometry: Walker Delta constellations, ECI propagation of
//! satellites and a rotating ground station, the elevation-mask visibility
//! predicate and contact-window search.
//!
//! Earth is a sphere of radius [`EARTH_RADIUS_KM`] rotating at the sidereal
//! rate about the ECI z-axis. Greenwich is aligned with the x-axis at `t = 0`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean spherical Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Standard gravitational parameter of Earth.
pub const EARTH_MU_KM3_S2: f64 = 398_600.441_8;
/// Sidereal rotation rate of Earth.
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;

/// Coarse step of the contact-window scan.
pub const WINDOW_SCAN_STEP_S: f64 = 10.0;
/// Rise and set times are bisected until the bracket is narrower than this.
pub const WINDOW_REFINE_TOL_S: f64 = 1e-3;

pub type EciPosition = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn invalid(msg: impl Into<String>) -> OrbitalError {
    OrbitalError::InvalidArgument(msg.into())
}

/// Geometry of one satellite on a circular orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteSpec {
    pub id: u32,
    pub semi_major_axis_km: f64,
    pub inclination: f64,
    pub raan: f64,
    /// Argument of latitude at `t = 0`.
    pub initial_phase: f64,
}

impl SatelliteSpec {
    pub fn validate(&self) -> Result<(), OrbitalError> {
        if !self.semi_major_axis_km.is_finite() || self.semi_major_axis_km <= EARTH_RADIUS_KM {
            return Err(invalid(format!(
                "satellite {}: semi-major axis {} km must exceed the Earth radius",
                self.id, self.semi_major_axis_km
            )));
        }
        if !(0.0..=PI).contains(&self.inclination) {
            return Err(invalid(format!(
                "satellite {}: inclination out of [0, pi]",
                self.id
            )));
        }
        if !(0.0..TAU).contains(&self.raan) || !(0.0..TAU).contains(&self.initial_phase) {
            return Err(invalid(format!(
                "satellite {}: raan and phase must lie in [0, 2pi)",
                self.id
            )));
        }
        Ok(())
    }

    pub fn altitude_km(&self) -> f64 {
        self.semi_major_axis_km - EARTH_RADIUS_KM
    }

    pub fn period_s(&self) -> f64 {
        kepler_period(self.semi_major_axis_km)
    }
}

/// A fixed site on the rotating Earth with its elevation mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub latitude: f64,
    pub longitude: f64,
    pub altitude_km: f64,
    pub min_elevation: f64,
}

impl GroundStation {
    pub fn validate(&self) -> Result<(), OrbitalError> {
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&self.latitude) {
            return Err(invalid("ground station latitude out of [-pi/2, pi/2]"));
        }
        if !(0.0..FRAC_PI_2).contains(&self.min_elevation) {
            return Err(invalid("minimum elevation out of [0, pi/2)"));
        }
        if !self.longitude.is_finite() || !self.altitude_km.is_finite() || self.altitude_km < 0.0 {
            return Err(invalid(
                "ground station longitude/altitude must be finite, altitude >= 0",
            ));
        }
        Ok(())
    }
}

/// Walker Delta pattern `inclination: total/planes/phasing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkerSpec {
    pub total_sats: u32,
    pub planes: u32,
    pub phasing: u32,
    pub inclination: f64,
    pub altitude_km: f64,
    pub raan_offset: f64,
}

/// One visibility interval of a satellite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactWindow {
    pub satellite_id: u32,
    pub rise_time: f64,
    pub set_time: f64,
}

impl ContactWindow {
    pub fn duration(&self) -> f64 {
        self.set_time - self.rise_time
    }

    pub fn contains(&self, t: f64) -> bool {
        self.rise_time <= t && t <= self.set_time
    }
}

fn kepler_period(semi_major_axis_km: f64) -> f64 {
    TAU * (semi_major_axis_km.powi(3) / EARTH_MU_KM3_S2).sqrt()
}

/// Circular orbital period from Kepler's third law.
pub fn orbital_period(semi_major_axis_km: f64) -> Result<f64, OrbitalError> {
    if !semi_major_axis_km.is_finite() || semi_major_axis_km <= EARTH_RADIUS_KM {
        return Err(invalid(format!(
            "semi-major axis {semi_major_axis_km} km must be finite and exceed {EARTH_RADIUS_KM} km"
        )));
    }
    Ok(kepler_period(semi_major_axis_km))
}

/// ECI position of a satellite on an unperturbed circular orbit.
pub fn propagate_satellite(spec: &SatelliteSpec, t: f64) -> EciPosition {
    let a = spec.semi_major_axis_km;
    let mean_motion = (EARTH_MU_KM3_S2 / a.powi(3)).sqrt();
    let u = spec.initial_phase + mean_motion * t;
    let (su, cu) = u.sin_cos();
    let (si, ci) = spec.inclination.sin_cos();
    let (so, co) = spec.raan.sin_cos();
    Vector3::new(
        a * (co * cu - so * su * ci),
        a * (so * cu + co * su * ci),
        a * su * si,
    )
}

/// ECI position of a ground station rotating with the Earth.
pub fn propagate_ground_station(gs: &GroundStation, t: f64) -> EciPosition {
    let r = EARTH_RADIUS_KM + gs.altitude_km;
    let (slat, clat) = gs.latitude.sin_cos();
    let (slon, clon) = (gs.longitude + EARTH_ROTATION_RAD_S * t).sin_cos();
    Vector3::new(r * clat * clon, r * clat * slon, r * slat)
}

/// Elevation of `sat_pos` above the local horizon at `gs_pos`, i.e.
/// `pi/2` minus the angle between the station zenith and the line of sight.
pub fn elevation_angle(gs_pos: &EciPosition, sat_pos: &EciPosition) -> Result<f64, OrbitalError> {
    let los = sat_pos - gs_pos;
    let los_norm = los.norm();
    let gs_norm = gs_pos.norm();
    if gs_norm == 0.0 || !gs_norm.is_finite() {
        return Err(invalid(
            "ground-station position must be a finite non-zero vector",
        ));
    }
    if los_norm <= 1e-12 * gs_norm || !los_norm.is_finite() {
        return Err(invalid("satellite and ground station positions coincide"));
    }
    // atan2 keeps the angle accurate near 0 and pi.
    let angle = gs_pos.cross(&los).norm().atan2(gs_pos.dot(&los));
    Ok(FRAC_PI_2 - angle)
}

fn elevation_at(gs: &GroundStation, sat: &SatelliteSpec, t: f64) -> f64 {
    let g = propagate_ground_station(gs, t);
    let s = propagate_satellite(sat, t);
    // A satellite above the Earth radius can never coincide with the station.
    elevation_angle(&g, &s).unwrap_or(-FRAC_PI_2)
}

/// Whether a ground-station link to `sat` is feasible at time `t`.
pub fn is_visible(gs: &GroundStation, sat: &SatelliteSpec, t: f64) -> bool {
    elevation_at(gs, sat, t) >= gs.min_elevation
}

/// All contact windows of `sat` within `[t0, t1]`.
///
/// Elevation is sampled every [`WINDOW_SCAN_STEP_S`]; visibility changes
/// between samples are bisected to [`WINDOW_REFINE_TOL_S`]. Sampled local
/// elevation maxima that stay below the mask are additionally maximized by
/// golden-section search so that grazing passes shorter than the scan step
/// are not skipped. Windows touching the interval ends are clipped to it.
pub fn contact_windows(
    gs: &GroundStation,
    sat: &SatelliteSpec,
    t0: f64,
    t1: f64,
) -> Result<Vec<ContactWindow>, OrbitalError> {
    if !(t0.is_finite() && t1.is_finite()) || t0 >= t1 {
        return Err(invalid(format!(
            "window search needs t0 < t1, got [{t0}, {t1}]"
        )));
    }
    let mask = gs.min_elevation;
    let elev = |t: f64| elevation_at(gs, sat, t);

    let steps = ((t1 - t0) / WINDOW_SCAN_STEP_S).ceil() as usize;
    let times: Vec<f64> = (0..=steps)
        .map(|k| (t0 + k as f64 * WINDOW_SCAN_STEP_S).min(t1))
        .collect();
    let elevs: Vec<f64> = times.iter().map(|&t| elev(t)).collect();
    let vis: Vec<bool> = elevs.iter().map(|&e| e >= mask).collect();

    // Boundary between an invisible time `lo` and a visible time `hi` (either order).
    let refine = |mut invisible: f64, mut visible: f64| {
        while (visible - invisible).abs() > WINDOW_REFINE_TOL_S {
            let mid = 0.5 * (invisible + visible);
            if elev(mid) >= mask {
                visible = mid;
            } else {
                invisible = mid;
            }
        }
        visible
    };

    let mut windows = Vec::new();
    let mut open: Option<f64> = if vis[0] { Some(times[0]) } else { None };
    for k in 0..times.len() - 1 {
        let (ta, tb) = (times[k], times[k + 1]);
        match (vis[k], vis[k + 1]) {
            (false, true) => open = Some(refine(ta, tb)),
            (true, false) => {
                let rise = open.take().unwrap_or(ta);
                windows.push((rise, refine(tb, ta)));
            }
            _ => {}
        }
    }
    if let Some(rise) = open {
        windows.push((rise, t1));
    }

    // Grazing passes hidden between samples.
    let n = times.len();
    for k in 0..n {
        if vis[k] {
            continue;
        }
        let left = k.checked_sub(1);
        let right = (k + 1 < n).then_some(k + 1);
        let rising_in = left.is_none_or(|l| !vis[l] && elevs[k] > elevs[l]);
        let falling_out = right.is_none_or(|r| !vis[r] && elevs[k] >= elevs[r]);
        if !(rising_in && falling_out) {
            continue;
        }
        let lo = times[left.unwrap_or(k)];
        let hi = times[right.unwrap_or(k)];
        if hi <= lo {
            continue;
        }
        let peak = golden_section_max(&elev, lo, hi, WINDOW_REFINE_TOL_S);
        if elev(peak) >= mask {
            let rise = if peak - lo > 0.0 {
                refine(lo, peak)
            } else {
                peak
            };
            let set = if hi - peak > 0.0 {
                refine(hi, peak)
            } else {
                peak
            };
            windows.push((rise, set));
        }
    }

    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(windows
        .into_iter()
        .filter(|(rise, set)| set > rise)
        .map(|(rise_time, set_time)| ContactWindow {
            satellite_id: sat.id,
            rise_time,
            set_time,
        })
        .collect())
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Satellites of a Walker Delta constellation, ids starting at `id_base`.
///
/// Plane `p` has RAAN `raan_offset + p * 2pi/P`; satellite `q` in that plane
/// sits at argument of latitude `q * 2pi*P/T + p * F * 2pi/T`.
pub fn generate_walker(
    spec: &WalkerSpec,
    id_base: u32,
) -> Result<Vec<SatelliteSpec>, OrbitalError> {
    if spec.planes == 0 || spec.total_sats == 0 {
        return Err(invalid(
            "walker constellation needs at least one plane and one satellite",
        ));
    }
    if !spec.total_sats.is_multiple_of(spec.planes) {
        return Err(invalid(format!(
            "planes ({}) must divide total satellites ({})",
            spec.planes, spec.total_sats
        )));
    }
    if spec.phasing >= spec.planes {
        return Err(invalid(format!(
            "phasing {} must be below planes {}",
            spec.phasing, spec.planes
        )));
    }
    let a = EARTH_RADIUS_KM + spec.altitude_km;
    let total = spec.total_sats as f64;
    let planes = spec.planes as f64;
    let per_plane = spec.total_sats / spec.planes;
    let mut sats = Vec::with_capacity(spec.total_sats as usize);
    for p in 0..spec.planes {
        let raan = wrap_angle(spec.raan_offset + p as f64 * TAU / planes);
        for q in 0..per_plane {
            let phase = wrap_angle(
                q as f64 * TAU * planes / total + (p * spec.phasing) as f64 * TAU / total,
            );
            let sat = SatelliteSpec {
                id: id_base + p * per_plane + q,
                semi_major_axis_km: a,
                inclination: spec.inclination,
                raan,
                initial_phase: phase,
            };
            sat.validate()?;
            sats.push(sat);
        }
    }
    Ok(sats)
}

/// Predicted contact windows of every satellite over a horizon.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContactPlan {
    windows: BTreeMap<u32, Vec<ContactWindow>>,
}

impl ContactPlan {
    pub fn compute(
        gs: &GroundStation,
        sats: &[SatelliteSpec],
        t0: f64,
        t1: f64,
    ) -> Result<Self, OrbitalError> {
        let windows = sats
            .iter()
            .map(|s| Ok((s.id, contact_windows(gs, s, t0, t1)?)))
            .collect::<Result<_, OrbitalError>>()?;
        Ok(Self { windows })
    }

    pub fn from_windows(windows: impl IntoIterator<Item = ContactWindow>) -> Self {
        let mut map: BTreeMap<u32, Vec<ContactWindow>> = BTreeMap::new();
        for w in windows {
            map.entry(w.satellite_id).or_default().push(w);
        }
        for list in map.values_mut() {
            list.sort_by(|a, b| a.rise_time.total_cmp(&b.rise_time));
        }
        Self { windows: map }
    }

    pub fn windows(&self, satellite_id: u32) -> &[ContactWindow] {
        self.windows.get(&satellite_id).map_or(&[], Vec::as_slice)
    }

    pub fn satellites(&self) -> impl Iterator<Item = u32> + '_ {
        self.windows.keys().copied()
    }

    /// All windows ordered by satellite id, then rise time.
    pub fn iter(&self) -> impl Iterator<Item = &ContactWindow> {
        self.windows.values().flatten()
    }

    /// Window of `satellite_id` that contains `t`, if any.
    pub fn window_at(&self, satellite_id: u32, t: f64) -> Option<&ContactWindow> {
        self.windows(satellite_id).iter().find(|w| w.contains(t))
    }

    /// Start of the first pass of `satellite_id` that begins strictly after `t`.
    pub fn next_rise_after(&self, satellite_id: u32, t: f64) -> Option<f64> {
        self.windows(satellite_id)
            .iter()
            .map(|w| w.rise_time)
            .find(|&r| r > t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sat(incl: f64, raan: f64, phase: f64, alt: f64) -> SatelliteSpec {
        SatelliteSpec {
            id: 0,
            semi_major_axis_km: EARTH_RADIUS_KM + alt,
            inclination: incl,
            raan,
            initial_phase: phase,
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

    #[test]
    fn period_values() {
        // 2*pi*sqrt(a^3/mu), evaluated independently with mpmath.
        assert_relative_eq!(
            orbital_period(8371.0).unwrap(),
            7_622.141_262_852,
            epsilon = 1e-6
        );
        assert_relative_eq!(
            orbital_period(6871.0).unwrap(),
            5_668.144_369_061,
            epsilon = 1e-6
        );
        let r = orbital_period(4.0 * 7000.0).unwrap() / orbital_period(7000.0).unwrap();
        assert_relative_eq!(r, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn period_rejects_bad_input() {
        assert!(orbital_period(6371.0).is_err());
        assert!(orbital_period(f64::NAN).is_err());
        assert!(orbital_period(f64::INFINITY).is_err());
    }

    #[test]
    fn equatorial_reference_direction() {
        let s = sat(0.0, 0.0, 0.0, 500.0);
        let p = propagate_satellite(&s, 0.0);
        assert_relative_eq!(
            p,
            Vector3::new(s.semi_major_axis_km, 0.0, 0.0),
            epsilon = 1e-9
        );
    }

    #[test]
    fn polar_quarter_period() {
        let s = sat(FRAC_PI_2, 0.0, 0.0, 500.0);
        let p = propagate_satellite(&s, s.period_s() / 4.0);
        assert_relative_eq!(
            p,
            Vector3::new(0.0, 0.0, s.semi_major_axis_km),
            epsilon = 1e-6
        );
    }

    #[test]
    fn ground_station_frame() {
        let gs = north_pole();
        for t in [0.0, 1234.5, 86_400.0] {
            assert_relative_eq!(
                propagate_ground_station(&gs, t),
                Vector3::new(0.0, 0.0, EARTH_RADIUS_KM),
                epsilon = 1e-9
            );
        }
        let eq = GroundStation {
            latitude: 0.0,
            ..gs
        };
        assert_relative_eq!(
            propagate_ground_station(&eq, 0.0),
            Vector3::new(EARTH_RADIUS_KM, 0.0, 0.0),
            epsilon = 1e-9
        );
        let half_day = PI / EARTH_ROTATION_RAD_S;
        assert_relative_eq!(
            propagate_ground_station(&eq, half_day),
            Vector3::new(-EARTH_RADIUS_KM, 0.0, 0.0),
            epsilon = 1e-6
        );
    }

    #[test]
    fn elevation_zenith_and_horizon() {
        let g = Vector3::new(EARTH_RADIUS_KM, 0.0, 0.0);
        assert_relative_eq!(
            elevation_angle(&g, &(g * 1.2)).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-12
        );
        let tangent = Vector3::new(EARTH_RADIUS_KM, 700.0, 0.0);
        assert_relative_eq!(elevation_angle(&g, &tangent).unwrap(), 0.0, epsilon = 1e-12);
        let below = Vector3::new(-EARTH_RADIUS_KM, 0.0, 0.0);
        assert_relative_eq!(
            elevation_angle(&g, &below).unwrap(),
            -FRAC_PI_2,
            epsilon = 1e-12
        );
        assert!(elevation_angle(&g, &g).is_err());
        assert!(elevation_angle(&Vector3::zeros(), &g).is_err());
    }

    #[test]
    fn equatorial_orbit_invisible_from_pole() {
        let w = contact_windows(&north_pole(), &sat(0.0, 0.0, 0.0, 500.0), 0.0, 86_400.0).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn polar_orbit_one_pass_per_period() {
        // Pole crossings at T/2 + kT, so no pass is cut by the horizon.
        let s = sat(FRAC_PI_2, 0.0, 3.0 * FRAC_PI_2, 500.0);
        let w = contact_windows(&north_pole(), &s, 0.0, 86_400.0).unwrap();
        let expected = (86_400.0 / s.period_s()).floor() as usize;
        assert_eq!(expected, 15);
        assert_eq!(w.len(), expected);
        for pair in w.windows(2) {
            assert_relative_eq!(
                pair[1].rise_time - pair[0].rise_time,
                s.period_s(),
                epsilon = 0.01
            );
        }
        assert!(w[0].contains(s.period_s() / 2.0));

        // Crossings at T/4 + kT: the sixteenth pass is clipped at the horizon.
        let s = sat(FRAC_PI_2, 0.0, 0.0, 500.0);
        let w = contact_windows(&north_pole(), &s, 0.0, 86_400.0).unwrap();
        assert_eq!(w.len(), 16);
        assert_eq!(w[15].set_time, 86_400.0);
        assert!(is_visible(&north_pole(), &s, s.period_s() / 4.0));
    }

    #[test]
    fn walker_single_satellite_per_plane() {
        let spec = WalkerSpec {
            total_sats: 5,
            planes: 5,
            phasing: 0,
            inclination: 80f64.to_radians(),
            altitude_km: 500.0,
            raan_offset: 0.0,
        };
        let sats = generate_walker(&spec, 0).unwrap();
        let raans: Vec<f64> = sats.iter().map(|s| s.raan.to_degrees()).collect();
        for (r, e) in raans.iter().zip([0.0, 72.0, 144.0, 216.0, 288.0]) {
            assert_relative_eq!(*r, e, epsilon = 1e-9);
        }
        assert!(sats.iter().all(|s| s.initial_phase == 0.0));
    }

    #[test]
    fn walker_rejects_bad_layout() {
        let mut spec = WalkerSpec {
            total_sats: 6,
            planes: 4,
            phasing: 0,
            inclination: 1.0,
            altitude_km: 500.0,
            raan_offset: 0.0,
        };
        assert!(generate_walker(&spec, 0).is_err());
        spec.planes = 3;
        spec.phasing = 3;
        assert!(generate_walker(&spec, 0).is_err());
        spec.phasing = 1;
        let sats = generate_walker(&spec, 10).unwrap();
        assert_eq!(
            sats.iter().map(|s| s.id).collect::<Vec<_>>(),
            vec![10, 11, 12, 13, 14, 15]
        );
    }
}
