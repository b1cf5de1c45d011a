//! Synthetic foraging trips with a planted sex effect on cruise speed and
//! turning, written in the same CSV schema as real tracks.
//!
//! Each bird is a correlated random walk on the sphere: step speeds are
//! normal around an individual cruise speed, headings change by a wrapped
//! normal turn whose spread is `1/sqrt(concentration)` radians.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geokin::EARTH_RADIUS_M;
use crate::trajdata::{Corpus, Label, Trajectory, TrajectoryPoint, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SexParams {
    /// Population mean cruise speed, m/s.
    pub cruise_speed: f64,
    /// Turning-angle concentration; larger means straighter tracks.
    pub turning_concentration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub n_birds: usize,
    pub seed: u64,
    pub male: SexParams,
    pub female: SexParams,
    /// Spread of individual cruise speeds around the population mean.
    pub individual_speed_sd: f64,
    /// Step-to-step speed noise.
    pub step_speed_sd: f64,
    pub min_points: usize,
    pub max_points: usize,
    /// Nominal seconds between fixes.
    pub cadence: f64,
    /// Uniform jitter added to each gap, in `[-jitter, jitter]`.
    pub jitter: f64,
    /// Length of the day/night cycle in seconds.
    pub day_period: f64,
    /// Speed multiplier while it is night.
    pub night_speed_factor: f64,
    pub start_lon: f64,
    pub start_lat: f64,
    /// Spread of trip start positions, degrees.
    pub start_spread: f64,
    pub id_prefix: String,
}

impl Default for SexParams {
    fn default() -> Self {
        SexParams {
            cruise_speed: 10.0,
            turning_concentration: 8.0,
        }
    }
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_birds: 600,
            seed: 0,
            male: SexParams {
                cruise_speed: 12.0,
                turning_concentration: 10.0,
            },
            female: SexParams {
                cruise_speed: 9.0,
                turning_concentration: 6.0,
            },
            individual_speed_sd: 1.0,
            step_speed_sd: 2.0,
            min_points: 60,
            max_points: 180,
            cadence: 600.0,
            jitter: 60.0,
            day_period: SECONDS_PER_DAY as f64,
            night_speed_factor: 0.5,
            start_lon: 139.25,
            start_lat: 38.57,
            start_spread: 0.05,
            id_prefix: "bird".to_string(),
        }
    }
}

impl SynthParams {
    /// The same parameters with the female effect sizes copied from the male
    /// ones, so the labels carry no signal.
    pub fn without_signal(&self) -> SynthParams {
        SynthParams {
            female: self.male,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.male.cruise_speed > 0.0 && self.female.cruise_speed > 0.0) {
            return bad("cruise speeds must be > 0");
        }
        if !(self.male.turning_concentration > 0.0 && self.female.turning_concentration > 0.0) {
            return bad("turning concentrations must be > 0");
        }
        if self.min_points < 10 || self.max_points < self.min_points {
            return bad("trip length range must satisfy 10 <= min_points <= max_points");
        }
        if !(self.cadence > 0.0) || !(self.jitter >= 0.0) || self.jitter >= self.cadence {
            return bad("cadence must exceed jitter >= 0");
        }
        if !(self.day_period > 0.0) {
            return bad("day_period must be > 0");
        }
        if !(self.individual_speed_sd >= 0.0 && self.step_speed_sd >= 0.0 && self.night_speed_factor > 0.0) {
            return bad("speed spreads must be >= 0 and night_speed_factor > 0");
        }
        if self.n_birds < 1 {
            return bad("n_birds must be at least 1");
        }
        Ok(())
    }

    pub fn bird_id(&self, index: usize) -> String {
        format!("{}{index:04}", self.id_prefix)
    }
}

/// Point reached from `(lat, lon)` after `distance` meters on `bearing`
/// (radians clockwise from north).
pub fn destination(lat: f64, lon: f64, bearing: f64, distance: f64) -> (f64, f64) {
    let phi1 = lat.to_radians();
    let lambda1 = lon.to_radians();
    let delta = distance / EARTH_RADIUS_M;
    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * bearing.cos()).asin();
    let lambda2 = lambda1 + (bearing.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
    let lon2 = (lambda2.to_degrees() + 180.0).rem_euclid(360.0) - 180.0;
    (phi2.to_degrees(), lon2)
}

/// Crude sun position for a cycle phase in `[0, 1)`, 0 being midnight:
/// azimuth sweeps the compass once per cycle and elevation is a sinusoid
/// that is non-negative exactly on `[0.25, 0.75)`.
pub fn sun_position(phase: f64) -> (f64, f64, bool) {
    let azimuth = (phase * 360.0).rem_euclid(360.0);
    let elevation = 60.0 * (std::f64::consts::TAU * (phase - 0.25)).sin();
    let daytime = (0.25..0.75).contains(&phase);
    (azimuth, elevation, daytime)
}

fn generate_bird(params: &SynthParams, index: usize, stream: u64) -> (Trajectory, Label) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(stream);
    let label = Label::from_bool(rng.random_bool(0.5));
    let sex = if label.is_positive() {
        params.male
    } else {
        params.female
    };

    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let cruise = (sex.cruise_speed + params.individual_speed_sd * unit.sample(&mut rng)).max(1.0);
    let turn_sd = 1.0 / sex.turning_concentration.sqrt();
    let n_points = rng.random_range(params.min_points..=params.max_points);

    let mut lat = params.start_lat + params.start_spread * unit.sample(&mut rng);
    let mut lon = params.start_lon + params.start_spread * unit.sample(&mut rng);
    let mut heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let clock0 = rng.random_range(0.0..SECONDS_PER_DAY as f64).floor();
    let mut elapsed = 0.0;

    let mut points = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let clock = clock0 + elapsed;
        let phase = (clock / params.day_period).fract();
        let (sun_azimuth, sun_elevation, daytime) = sun_position(phase);
        points.push(TrajectoryPoint {
            longitude: lon,
            latitude: lat,
            sun_azimuth,
            sun_elevation,
            daytime,
            elapsed,
            local_time: (clock.floor() as u64 % SECONDS_PER_DAY as u64) as u32,
            days: (clock / SECONDS_PER_DAY as f64).floor() as u32 + 1,
        });
        if i + 1 == n_points {
            break;
        }
        let gap = (params.cadence + rng.random_range(-params.jitter..=params.jitter))
            .round()
            .max(1.0);
        let factor = if daytime { 1.0 } else { params.night_speed_factor };
        let speed = (factor * (cruise + params.step_speed_sd * unit.sample(&mut rng))).max(0.0);
        heading = (heading + turn_sd * unit.sample(&mut rng)).rem_euclid(std::f64::consts::TAU);
        (lat, lon) = destination(lat, lon, heading, speed * gap);
        lat = lat.clamp(-89.0, 89.0);
        elapsed += gap;
    }
    let traj = Trajectory::new(params.bird_id(index), points).expect("generated points satisfy the schema");
    (traj, label)
}

/// Labeled corpus of `n_birds` trips. Bird `i` draws from its own stream
/// `stream_offset + i`, so output does not depend on scheduling.
pub fn generate_corpus_streams(params: &SynthParams, stream_offset: u64) -> Result<Corpus> {
    params.validate()?;
    let birds: Vec<(Trajectory, Label)> = (0..params.n_birds)
        .into_par_iter()
        .map(|i| generate_bird(params, i, stream_offset + i as u64))
        .collect();
    let labels: BTreeMap<String, Label> = birds.iter().map(|(t, l)| (t.bird_id().to_string(), *l)).collect();
    Corpus::new(birds.into_iter().map(|(t, _)| t), Some(labels))
}

pub fn generate_corpus(params: &SynthParams) -> Result<Corpus> {
    generate_corpus_streams(params, 0)
}
