//! Great-circle distances and the per-step kinematic series of a trip.
//!
//! All series functions take a slice of points rather than a [`Trajectory`]
//! so they also apply to the day/night subsequences of a trip, which may be
//! shorter than two points. Such degenerate inputs yield empty series.
//!
//! [`Trajectory`]: crate::trajdata::Trajectory

use serde::{Deserialize, Serialize};

use crate::trajdata::TrajectoryPoint;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Series {
            name: name.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }
}

impl From<&TrajectoryPoint> for LatLon {
    fn from(p: &TrajectoryPoint) -> Self {
        LatLon::new(p.latitude, p.longitude)
    }
}

/// Haversine great-circle distance in meters.
pub fn haversine(a: LatLon, b: LatLon) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

pub fn step_distances(points: &[TrajectoryPoint]) -> Series {
    let values = points
        .windows(2)
        .map(|w| haversine((&w[0]).into(), (&w[1]).into()))
        .collect();
    Series::new("distance", values)
}

/// Step speed in m/s: step distance over the elapsed-time gap.
pub fn velocities(points: &[TrajectoryPoint]) -> Series {
    let values = points
        .windows(2)
        .map(|w| haversine((&w[0]).into(), (&w[1]).into()) / (w[1].elapsed - w[0].elapsed))
        .collect();
    Series::new("velocity", values)
}

/// Forward difference of the velocity series, in m/s².
///
/// Velocity `t` spans `[elapsed_t, elapsed_{t+1}]`; the change from velocity
/// `t` to `t+1` is divided by the gap of the later interval,
/// `elapsed_{t+2} - elapsed_{t+1}`.
pub fn accelerations(points: &[TrajectoryPoint]) -> Series {
    let v = velocities(points).values;
    let values = v
        .windows(2)
        .zip(points.windows(3))
        .map(|(dv, p)| (dv[1] - dv[0]) / (p[2].elapsed - p[1].elapsed))
        .collect();
    Series::new("acceleration", values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaMode {
    Linear,
    /// Differences of compass angles, wrapped into `(-180, 180]`.
    Angular,
}

pub fn wrap_degrees(d: f64) -> f64 {
    let r = (d + 180.0).rem_euclid(360.0) - 180.0;
    if r <= -180.0 {
        r + 360.0
    } else {
        r
    }
}

/// Successive differences `s[t+1] - s[t]`, named `delta_<name>`.
pub fn delta_series(s: &Series, mode: DeltaMode) -> Series {
    let values = s
        .values
        .windows(2)
        .map(|w| match mode {
            DeltaMode::Linear => w[1] - w[0],
            DeltaMode::Angular => wrap_degrees(w[1] - w[0]),
        })
        .collect();
    Series::new(format!("delta_{}", s.name), values)
}

pub fn column(points: &[TrajectoryPoint], name: &str, f: impl Fn(&TrajectoryPoint) -> f64) -> Series {
    Series::new(name, points.iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lon: f64, elapsed: f64) -> TrajectoryPoint {
        TrajectoryPoint {
            longitude: lon,
            latitude: lat,
            sun_azimuth: 0.0,
            sun_elevation: 0.0,
            daytime: true,
            elapsed,
            local_time: 0,
            days: 1,
        }
    }

    #[test]
    fn haversine_reference_distances() {
        let o = LatLon::new(0.0, 0.0);
        assert_eq!(haversine(o, o), 0.0);
        let one_degree = std::f64::consts::PI * EARTH_RADIUS_M / 180.0;
        // pi R / 180 and pi R / 2 with R = 6371008.8 m
        assert!((haversine(o, LatLon::new(1.0, 0.0)) - 111_195.08).abs() < 0.1);
        assert!((haversine(o, LatLon::new(1.0, 0.0)) - one_degree).abs() < 1e-6);
        assert!((haversine(o, LatLon::new(0.0, 90.0)) - 10_007_557.2).abs() < 1.0);
    }

    #[test]
    fn step_distances_and_velocities() {
        let pts = [pt(0.0, 0.0, 0.0), pt(1.0, 0.0, 3600.0), pt(2.0, 0.0, 7200.0)];
        let d = step_distances(&pts);
        assert_eq!(d.len(), 2);
        for v in &d.values {
            assert!((v - 111_195.08).abs() < 0.1);
        }
        let v = velocities(&pts);
        assert!((v.values[0] - 30.887).abs() < 1e-3);

        let still = [pt(5.0, 5.0, 0.0), pt(5.0, 5.0, 10.0), pt(5.0, 5.0, 25.0)];
        assert!(step_distances(&still).values.iter().all(|&x| x == 0.0));
        assert!(velocities(&still).values.iter().all(|&x| x == 0.0));
        assert!(velocities(&still[..1]).is_empty());
    }

    #[test]
    fn doubling_time_gaps_halves_velocity() {
        let a = [pt(0.0, 0.0, 0.0), pt(0.3, 0.1, 100.0), pt(0.5, 0.4, 250.0)];
        let b: Vec<_> = a.iter().map(|p| pt(p.latitude, p.longitude, p.elapsed * 2.0)).collect();
        for (x, y) in velocities(&a).values.iter().zip(&velocities(&b).values) {
            assert!((x / 2.0 - y).abs() <= 1e-15 * x.abs());
        }
    }

    #[test]
    fn accelerations_follow_velocity_differences() {
        // 10 m/s for 60 s, then 16 m/s for 60 s along the equator.
        let m_per_deg = std::f64::consts::PI * EARTH_RADIUS_M / 180.0;
        let pts = [
            pt(0.0, 0.0, 0.0),
            pt(0.0, 600.0 / m_per_deg, 60.0),
            pt(0.0, 1560.0 / m_per_deg, 120.0),
        ];
        let a = accelerations(&pts);
        assert_eq!(a.len(), 1);
        assert!((a.values[0] - 0.1).abs() < 1e-9, "{}", a.values[0]);

        assert!(accelerations(&pts[..2]).is_empty());

        let steady = [pt(0.0, 0.0, 0.0), pt(0.0, 0.01, 60.0), pt(0.0, 0.02, 120.0)];
        assert!(accelerations(&steady).values[0].abs() < 1e-9);
    }

    #[test]
    fn deltas() {
        let s = Series::new("x", vec![1.0, 4.0, 9.0]);
        assert_eq!(delta_series(&s, DeltaMode::Linear).values, vec![3.0, 5.0]);
        assert_eq!(delta_series(&s, DeltaMode::Linear).name, "delta_x");

        let az = Series::new("azimuth", vec![350.0, 10.0, 350.0]);
        assert_eq!(delta_series(&az, DeltaMode::Angular).values, vec![20.0, -20.0]);

        let c = Series::new("c", vec![2.0; 4]);
        assert_eq!(delta_series(&c, DeltaMode::Linear).values, vec![0.0; 3]);
        assert!(delta_series(&Series::new("e", vec![1.0]), DeltaMode::Linear).is_empty());
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(-340.0), 20.0);
        assert_eq!(wrap_degrees(540.0), 180.0);
    }
}
