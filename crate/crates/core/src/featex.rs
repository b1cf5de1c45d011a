//! Per-bird feature vector: order statistics of twelve kinematic series,
//! velocity exceedance counts against corpus-wide thresholds, the first few
//! fixes of the trip and a PCA summary of the trip's point cloud.
//!
//! Layout of one vector (248 columns):
//!
//! | block              | columns |
//! |--------------------|---------|
//! | 12 series × 18 stats | 216   |
//! | velocity exceedance  | 12    |
//! | first 5 lon, 5 lat   | 10    |
//! | PCA ratios + axis    | 10    |
//!
//! Missing values are `NaN` ([`MISSING`]); they only appear for degenerate
//! (too short or empty) point sequences and are imputed downstream.

use std::sync::OnceLock;

use nalgebra::{Matrix5, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geokin::{self, DeltaMode, Series};
use crate::trajdata::TrajectoryPoint;

pub const MISSING: f64 = f64::NAN;

pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

/// Probability levels of the per-series order statistics.
pub const SUMMARY_LEVELS: [f64; 15] = [
    0.0, 0.05, 0.10, 0.20, 0.25, 0.30, 0.40, 0.50, 0.60, 0.70, 0.75, 0.80, 0.90, 0.95, 1.0,
];

/// Probability levels of the pooled velocity thresholds (the mean comes first).
pub const THRESHOLD_LEVELS: [f64; 11] = [0.05, 0.10, 0.15, 0.25, 0.50, 0.75, 0.80, 0.85, 0.90, 0.95, 0.99];

pub const SERIES_NAMES: [&str; 12] = [
    "velocity",
    "acceleration",
    "distance",
    "longitude",
    "latitude",
    "azimuth",
    "elevation",
    "delta_velocity",
    "delta_longitude",
    "delta_latitude",
    "delta_azimuth",
    "delta_elevation",
];

pub const FIRST_K: usize = 5;
pub const PCA_COLUMNS: [&str; 5] = ["longitude", "latitude", "azimuth", "elevation", "velocity"];

pub const SUMMARY_LEN: usize = SUMMARY_LEVELS.len() + 3;
pub const N_FEATURES: usize =
    SERIES_NAMES.len() * SUMMARY_LEN + THRESHOLD_LEVELS.len() + 1 + 2 * FIRST_K + 2 * PCA_COLUMNS.len();

fn level_tag(p: f64) -> String {
    format!("q{:03}", (p * 100.0).round() as u32)
}

/// Linear-interpolation quantile of an already sorted, nonempty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Sample quantile with linear interpolation between order statistics
/// (rank `h = (n - 1) p`).
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p.clamp(0.0, 1.0)))
}

/// Fifteen quantiles followed by mean, min and max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary(pub [f64; SUMMARY_LEN]);

impl SeriesSummary {
    pub fn missing() -> Self {
        SeriesSummary([MISSING; SUMMARY_LEN])
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.0[..SUMMARY_LEVELS.len()]
    }

    pub fn mean(&self) -> f64 {
        self.0[SUMMARY_LEVELS.len()]
    }

    pub fn min(&self) -> f64 {
        self.0[SUMMARY_LEVELS.len() + 1]
    }

    pub fn max(&self) -> f64 {
        self.0[SUMMARY_LEVELS.len() + 2]
    }
}

pub fn summarize(s: &Series) -> SeriesSummary {
    if s.is_empty() {
        return SeriesSummary::missing();
    }
    let mut sorted = s.values.clone();
    sorted.sort_by(f64::total_cmp);
    let mut out = [0.0; SUMMARY_LEN];
    for (slot, &p) in out.iter_mut().zip(SUMMARY_LEVELS.iter()) {
        *slot = quantile_sorted(&sorted, p);
    }
    let k = SUMMARY_LEVELS.len();
    // summing in sorted order keeps the mean independent of the input order
    out[k] = sorted.iter().sum::<f64>() / sorted.len() as f64;
    out[k + 1] = sorted[0];
    out[k + 2] = sorted[sorted.len() - 1];
    SeriesSummary(out)
}

/// Pooled mean followed by the pooled quantiles at [`THRESHOLD_LEVELS`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityThresholds(pub [f64; THRESHOLD_LEVELS.len() + 1]);

impl VelocityThresholds {
    pub fn from_pool(pool: &[f64]) -> Option<Self> {
        if pool.is_empty() {
            return None;
        }
        let mut sorted = pool.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut out = [0.0; THRESHOLD_LEVELS.len() + 1];
        out[0] = sorted.iter().sum::<f64>() / sorted.len() as f64;
        for (slot, &p) in out[1..].iter_mut().zip(THRESHOLD_LEVELS.iter()) {
            *slot = quantile_sorted(&sorted, p);
        }
        Some(VelocityThresholds(out))
    }
}

/// Number of velocities strictly above each threshold. Without thresholds
/// (an empty pool) every count is missing.
pub fn exceedance_counts(v: &Series, th: Option<&VelocityThresholds>) -> [f64; 12] {
    let Some(th) = th else {
        return [MISSING; 12];
    };
    let mut counts = [0.0; 12];
    for (c, &t) in counts.iter_mut().zip(th.0.iter()) {
        *c = v.values.iter().filter(|&&x| x > t).count() as f64;
    }
    counts
}

/// Longitudes of the first `k` points, then their latitudes. Short
/// sequences repeat their last point.
pub fn first_k_coords(points: &[TrajectoryPoint], k: usize) -> Vec<f64> {
    let Some(last) = points.last() else {
        return vec![MISSING; 2 * k];
    };
    let at = |i: usize| points.get(i).unwrap_or(last);
    (0..k)
        .map(|i| at(i).longitude)
        .chain((0..k).map(|i| at(i).latitude))
        .collect()
}

/// Explained-variance ratios (descending) of the covariance of
/// `(lon, lat, azimuth, elevation, velocity)` over the first `n - 1` points,
/// followed by the loadings of the leading axis with its largest-magnitude
/// entry made positive.
pub fn pca_features(points: &[TrajectoryPoint]) -> [f64; 10] {
    let missing = [MISSING; 10];
    if points.len() < 3 {
        return missing;
    }
    let velocity = geokin::velocities(points).values;
    let rows: Vec<[f64; 5]> = points
        .iter()
        .zip(&velocity)
        .map(|(p, &v)| [p.longitude, p.latitude, p.sun_azimuth, p.sun_elevation, v])
        .collect();
    let m = rows.len() as f64;
    let mut mean = [0.0; 5];
    for r in &rows {
        for j in 0..5 {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|x| *x /= m);

    let mut cov = Matrix5::<f64>::zeros();
    for r in &rows {
        for a in 0..5 {
            for b in a..5 {
                cov[(a, b)] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    for a in 0..5 {
        for b in a..5 {
            cov[(a, b)] /= m - 1.0;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    if !(cov.trace() > 0.0) {
        return missing;
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return missing;
    }

    let mut out = [0.0; 10];
    for (slot, v) in out.iter_mut().zip(&values) {
        *slot = v / total;
    }
    let axis = eig.eigenvectors.column(order[0]);
    let norm = axis.norm();
    let mut pivot = 0;
    for j in 1..5 {
        if axis[j].abs() > axis[pivot].abs() {
            pivot = j;
        }
    }
    let sign = if axis[pivot] < 0.0 { -1.0 } else { 1.0 };
    for j in 0..5 {
        out[5 + j] = sign * axis[j] / norm;
    }
    out
}

/// The twelve per-point series, in [`SERIES_NAMES`] order.
pub fn feature_series(points: &[TrajectoryPoint]) -> Vec<Series> {
    let velocity = geokin::velocities(points);
    let longitude = geokin::column(points, "longitude", |p| p.longitude);
    let latitude = geokin::column(points, "latitude", |p| p.latitude);
    let azimuth = geokin::column(points, "azimuth", |p| p.sun_azimuth);
    let elevation = geokin::column(points, "elevation", |p| p.sun_elevation);
    let deltas = [
        geokin::delta_series(&velocity, DeltaMode::Linear),
        geokin::delta_series(&longitude, DeltaMode::Linear),
        geokin::delta_series(&latitude, DeltaMode::Linear),
        geokin::delta_series(&azimuth, DeltaMode::Angular),
        geokin::delta_series(&elevation, DeltaMode::Linear),
    ];
    let mut out = vec![
        velocity,
        geokin::accelerations(points),
        geokin::step_distances(points),
        longitude,
        latitude,
        azimuth,
        elevation,
    ];
    out.extend(deltas);
    out
}

/// Ordered column names of [`bird_features`].
pub fn feature_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut names = Vec::with_capacity(N_FEATURES);
        for s in SERIES_NAMES {
            for &p in &SUMMARY_LEVELS {
                names.push(format!("{s}_{}", level_tag(p)));
            }
            for stat in ["mean", "min", "max"] {
                names.push(format!("{s}_{stat}"));
            }
        }
        names.push("velocity_exceed_mean".to_owned());
        for &p in &THRESHOLD_LEVELS {
            names.push(format!("velocity_exceed_{}", level_tag(p)));
        }
        for coord in ["lon", "lat"] {
            for i in 1..=FIRST_K {
                names.push(format!("first_{coord}_{i}"));
            }
        }
        for i in 1..=PCA_COLUMNS.len() {
            names.push(format!("pca_ratio_{i}"));
        }
        for c in PCA_COLUMNS {
            names.push(format!("pca_axis1_{c}"));
        }
        names
    })
}

/// One bird's feature values, aligned with [`feature_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn names(&self) -> &'static [String] {
        feature_names()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = feature_names().iter().position(|n| n == name)?;
        Some(self.values[idx])
    }
}

pub fn bird_features(points: &[TrajectoryPoint], th: Option<&VelocityThresholds>) -> FeatureVector {
    let series = feature_series(points);
    let mut values = Vec::with_capacity(N_FEATURES);
    for s in &series {
        values.extend_from_slice(&summarize(s).0);
    }
    values.extend_from_slice(&exceedance_counts(&series[0], th));
    values.extend(first_k_coords(points, FIRST_K));
    values.extend_from_slice(&pca_features(points));
    debug_assert_eq!(values.len(), N_FEATURES);
    FeatureVector { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(lat: f64, lon: f64, elapsed: f64) -> TrajectoryPoint {
        TrajectoryPoint {
            longitude: lon,
            latitude: lat,
            sun_azimuth: 90.0,
            sun_elevation: 10.0,
            daytime: true,
            elapsed,
            local_time: 0,
            days: 1,
        }
    }

    #[test]
    fn quantile_examples() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&s, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&s, 1.0).unwrap(), 4.0);
        assert_eq!(quantile(&[10.0, 20.0, 30.0, 40.0], 0.25).unwrap(), 17.5);
        assert_eq!(quantile(&[40.0, 10.0, 30.0, 20.0], 0.25).unwrap(), 17.5);
        assert!(matches!(quantile(&[], 0.5), Err(Error::EmptySeries)));
    }

    #[test]
    fn summary_rules() {
        let c = summarize(&Series::new("c", vec![3.5; 7]));
        assert!(c.0.iter().all(|&v| v == 3.5));

        let e = summarize(&Series::new("e", vec![]));
        assert!(e.0.iter().all(|v| v.is_nan()));

        let two = summarize(&Series::new("t", vec![0.0, 10.0]));
        assert_eq!(two.mean(), 5.0);
        assert_eq!(two.min(), 0.0);
        assert_eq!(two.max(), 10.0);
    }

    #[test]
    fn exceedance_is_strict() {
        let mut th = VelocityThresholds([2.0; 12]);
        let v = Series::new("velocity", vec![1.0, 2.0, 3.0]);
        assert_eq!(exceedance_counts(&v, Some(&th))[0], 1.0);
        assert_eq!(
            exceedance_counts(&Series::new("velocity", vec![]), Some(&th)),
            [0.0; 12]
        );
        th.0 = [5.0; 12];
        assert_eq!(exceedance_counts(&v, Some(&th)), [0.0; 12]);
        assert!(exceedance_counts(&v, None).iter().all(|c| c.is_nan()));
    }

    #[test]
    fn first_coords_pad_with_last_point() {
        let pts: Vec<_> = (0..5).map(|i| pt(i as f64, 100.0 + i as f64, i as f64)).collect();
        assert_eq!(
            first_k_coords(&pts, 5),
            vec![100.0, 101.0, 102.0, 103.0, 104.0, 0.0, 1.0, 2.0, 3.0, 4.0]
        );
        let out = first_k_coords(&pts[..2], 5);
        assert_eq!(out, vec![100.0, 101.0, 101.0, 101.0, 101.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(first_k_coords(&pts[..1], 5).len(), 10);
    }

    #[test]
    fn pca_of_rank_one_cloud() {
        // evenly spaced along a meridian: only latitude varies, velocity is constant
        let pts: Vec<_> = (0..20)
            .map(|i| pt(10.0 + 0.01 * i as f64, 140.0, 60.0 * i as f64))
            .collect();
        let f = pca_features(&pts);
        assert!((f[0] - 1.0).abs() < 1e-9, "{f:?}");
        for r in &f[1..5] {
            assert!(r.abs() < 1e-9);
        }
        assert!((f[6] - 1.0).abs() < 1e-6, "latitude should dominate the axis: {f:?}");
        let norm: f64 = f[5..].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pca_needs_three_points() {
        let pts = [pt(0.0, 0.0, 0.0), pt(1.0, 0.0, 1.0)];
        assert!(pca_features(&pts).iter().all(|v| v.is_nan()));
    }

    #[test]
    fn schema_has_248_unique_names() {
        let names = feature_names();
        assert_eq!(names.len(), 248);
        assert_eq!(N_FEATURES, 248);
        let mut sorted = names.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 248);
        assert_eq!(names[0], "velocity_q000");
        assert_eq!(names[17], "velocity_max");
    }

    #[test]
    fn stationary_bird() {
        let pts: Vec<_> = (0..6).map(|i| pt(38.5, 139.2, 60.0 * i as f64)).collect();
        let th = VelocityThresholds([0.0; 12]);
        let f = bird_features(&pts, Some(&th));
        assert_eq!(f.values.len(), 248);
        assert!(f.values[..18].iter().all(|&v| v == 0.0));
        assert!(f.values[216..228].iter().all(|&v| v == 0.0));
        assert_eq!(f.get("velocity_mean"), Some(0.0));
    }

    fn cloud() -> impl Strategy<Value = Vec<TrajectoryPoint>> {
        prop::collection::vec(
            (-1.0f64..1.0, -1.0f64..1.0, 0.0f64..359.0, -60.0f64..60.0, 1.0f64..900.0),
            3..40,
        )
        .prop_map(|rows| {
            let mut t = 0.0;
            rows.into_iter()
                .map(|(dlat, dlon, az, el, gap)| {
                    t += gap;
                    TrajectoryPoint {
                        longitude: 140.0 + dlon,
                        latitude: 35.0 + dlat,
                        sun_azimuth: az,
                        sun_elevation: el,
                        daytime: true,
                        elapsed: t,
                        local_time: 0,
                        days: 1,
                    }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn quantile_is_monotone_in_p(v in prop::collection::vec(-1e3f64..1e3, 1..50), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantile(&v, lo).unwrap() <= quantile(&v, hi).unwrap());
        }

        #[test]
        fn summary_is_permutation_invariant(mut v in prop::collection::vec(-1e3f64..1e3, 1..50), seed in any::<u64>()) {
            let a = summarize(&Series::new("s", v.clone()));
            let n = v.len();
            v.rotate_left((seed as usize) % n);
            v.reverse();
            let b = summarize(&Series::new("s", v));
            prop_assert_eq!(a, b);
            prop_assert_eq!(a.min(), a.quantiles()[0]);
            prop_assert_eq!(a.max(), a.quantiles()[14]);
            prop_assert!(a.quantiles().windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn pca_ratios_are_a_distribution(pts in cloud()) {
            let f = pca_features(&pts);
            prop_assume!(!f[0].is_nan());
            let sum: f64 = f[..5].iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(f[..5].iter().all(|&r| r >= 0.0));
            prop_assert!(f[..5].windows(2).all(|w| w[0] >= w[1]));
            let norm: f64 = f[5..].iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);
        }

        #[test]
        fn bird_features_are_deterministic(pts in cloud()) {
            let th = VelocityThresholds::from_pool(&[1.0, 5.0, 20.0]).unwrap();
            let a = bird_features(&pts, Some(&th));
            let b = bird_features(&pts, Some(&th));
            prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
