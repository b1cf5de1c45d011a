//! Trajectory records, CSV parsing and corpus loading.
//!
//! One CSV file holds one trip of one bird:
//!
//! ```text
//! longitude,latitude,sun_azimuth,sun_elevation,daytime,elapsed_time,local_time,days
//! 139.25,38.57,120.5,35.0,1,0,07:12:00,1
//! ```
//!
//! `elapsed_time` is read as seconds since the start of the trip and every
//! kinematic quantity downstream is expressed per second accordingly.
//! `local_time` carries no date, so it is stored as seconds-of-day.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 8] = [
    "longitude",
    "latitude",
    "sun_azimuth",
    "sun_elevation",
    "daytime",
    "elapsed_time",
    "local_time",
    "days",
];

pub const SECONDS_PER_DAY: u32 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub longitude: f64,
    pub latitude: f64,
    /// Degrees clockwise from north, in `[0, 360)`.
    pub sun_azimuth: f64,
    /// Degrees upward from the horizon.
    pub sun_elevation: f64,
    pub daytime: bool,
    /// Seconds since the trip started.
    pub elapsed: f64,
    /// Seconds since local midnight.
    pub local_time: u32,
    /// Day of the trip, starting at 1.
    pub days: u32,
}

impl TrajectoryPoint {
    /// Checks the per-field range invariants, reporting the first violation.
    pub fn validate(&self, line: usize) -> Result<()> {
        let checks: [(&'static str, f64, bool); 6] = [
            ("longitude", self.longitude, (-180.0..=180.0).contains(&self.longitude)),
            ("latitude", self.latitude, (-90.0..=90.0).contains(&self.latitude)),
            (
                "sun_azimuth",
                self.sun_azimuth,
                (0.0..360.0).contains(&self.sun_azimuth),
            ),
            (
                "sun_elevation",
                self.sun_elevation,
                (-90.0..=90.0).contains(&self.sun_elevation),
            ),
            (
                "elapsed_time",
                self.elapsed,
                self.elapsed >= 0.0 && self.elapsed.is_finite(),
            ),
            ("days", self.days as f64, self.days >= 1),
        ];
        for (field, value, ok) in checks {
            if !ok {
                return Err(Error::OutOfRange { line, field, value });
            }
        }
        if self.local_time >= SECONDS_PER_DAY {
            return Err(Error::OutOfRange {
                line,
                field: "local_time",
                value: self.local_time as f64,
            });
        }
        Ok(())
    }
}

/// One complete trip. Always holds at least two points with strictly
/// increasing elapsed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    bird_id: String,
    points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn new(bird_id: impl Into<String>, points: Vec<TrajectoryPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooShort(points.len()));
        }
        for (i, p) in points.iter().enumerate() {
            p.validate(i + 2)?;
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].elapsed <= w[0].elapsed {
                return Err(Error::NonMonotonicTime {
                    line: i + 3,
                    previous: w[0].elapsed,
                    value: w[1].elapsed,
                });
            }
        }
        Ok(Trajectory {
            bird_id: bird_id.into(),
            points,
        })
    }

    pub fn bird_id(&self) -> &str {
        &self.bird_id
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Serializes back into the CSV schema accepted by [`parse_trajectory`].
    pub fn to_csv(&self) -> String {
        let mut out = TRAJECTORY_HEADER.join(",");
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.longitude,
                p.latitude,
                p.sun_azimuth,
                p.sun_elevation,
                u8::from(p.daytime),
                p.elapsed,
                format_local_time(p.local_time),
                p.days
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Female,
    Male,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Female => 0,
            Label::Male => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Male
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Male
        } else {
            Label::Female
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.as_u8()
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Label::Female),
            1 => Ok(Label::Male),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

/// Trajectories keyed (and therefore iterated) by bird id, with optional labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    trajectories: BTreeMap<String, Trajectory>,
    labels: Option<BTreeMap<String, Label>>,
}

impl Corpus {
    pub fn new(
        trajectories: impl IntoIterator<Item = Trajectory>,
        labels: Option<BTreeMap<String, Label>>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in trajectories {
            let id = t.bird_id.clone();
            if map.insert(id.clone(), t).is_some() {
                return Err(Error::DuplicateBird(id));
            }
        }
        if let Some(labels) = &labels {
            if let Some(unknown) = labels.keys().find(|id| !map.contains_key(*id)) {
                return Err(Error::UnknownBirdInLabels(unknown.clone()));
            }
        }
        Ok(Corpus {
            trajectories: map,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn bird_ids(&self) -> impl Iterator<Item = &str> {
        self.trajectories.keys().map(String::as_str)
    }

    /// Trajectories in lexicographic bird-id order.
    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.values()
    }

    pub fn get(&self, bird_id: &str) -> Option<&Trajectory> {
        self.trajectories.get(bird_id)
    }

    pub fn labels(&self) -> Option<&BTreeMap<String, Label>> {
        self.labels.as_ref()
    }

    pub fn label(&self, bird_id: &str) -> Option<Label> {
        self.labels.as_ref()?.get(bird_id).copied()
    }
}

pub fn format_local_time(seconds: u32) -> String {
    format!("{:02}:{:02}:{:02}", seconds / 3600, (seconds / 60) % 60, seconds % 60)
}

fn parse_local_time(text: &str, line: usize) -> Result<u32> {
    let malformed = || Error::MalformedRow {
        line,
        reason: format!("local_time `{text}` is not hh:mm:ss"),
    };
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(malformed());
    }
    let mut fields = [0u32; 3];
    for (slot, part) in fields.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| malformed())?;
    }
    let [h, m, s] = fields;
    if m >= 60 || s >= 60 {
        return Err(malformed());
    }
    Ok(h * 3600 + m * 60 + s)
}

fn parse_number(text: &str, field: &str, line: usize) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::MalformedRow {
            line,
            reason: format!("{field} `{text}` is not a number"),
        })
}

/// Parses one trajectory file. Row order is preserved.
pub fn parse_trajectory(bird_id: &str, csv_text: &str) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::TooShort(0)),
    };
    if header.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("expected header `{}`", TRAJECTORY_HEADER.join(",")),
        });
    }

    let mut points: Vec<TrajectoryPoint> = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != TRAJECTORY_HEADER.len() {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected {} columns, found {}", TRAJECTORY_HEADER.len(), record.len()),
            });
        }
        let daytime = match &record[4] {
            "0" => false,
            "1" => true,
            other => {
                let v = parse_number(other, "daytime", line)?;
                return Err(Error::OutOfRange {
                    line,
                    field: "daytime",
                    value: v,
                });
            }
        };
        let days = parse_number(&record[7], "days", line)?;
        if days.fract() != 0.0 || days < 1.0 || days > u32::MAX as f64 {
            return Err(Error::OutOfRange {
                line,
                field: "days",
                value: days,
            });
        }
        let point = TrajectoryPoint {
            longitude: parse_number(&record[0], "longitude", line)?,
            latitude: parse_number(&record[1], "latitude", line)?,
            sun_azimuth: parse_number(&record[2], "sun_azimuth", line)?,
            sun_elevation: parse_number(&record[3], "sun_elevation", line)?,
            daytime,
            elapsed: parse_number(&record[5], "elapsed_time", line)?,
            local_time: parse_local_time(&record[6], line)?,
            days: days as u32,
        };
        point.validate(line)?;
        if let Some(prev) = points.last() {
            if point.elapsed <= prev.elapsed {
                return Err(Error::NonMonotonicTime {
                    line,
                    previous: prev.elapsed,
                    value: point.elapsed,
                });
            }
        }
        points.push(point);
    }
    if points.len() < 2 {
        return Err(Error::TooShort(points.len()));
    }
    Ok(Trajectory {
        bird_id: bird_id.to_owned(),
        points,
    })
}

/// Reads a `bird_id,label` file.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, Label>> {
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_labels(&text).map_err(|e| e.in_file(path))
}

pub fn parse_labels(text: &str) -> Result<BTreeMap<String, Label>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(["bird_id", "label"]) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: "expected header `bird_id,label`".into(),
        });
    }
    let mut labels = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let label = match &record[1] {
            "0" => Label::Female,
            "1" => Label::Male,
            other => {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("label `{other}` is not 0 or 1"),
                })
            }
        };
        if labels.insert(record[0].to_owned(), label).is_some() {
            return Err(Error::DuplicateBird(record[0].to_owned()));
        }
    }
    Ok(labels)
}

pub fn labels_to_csv(labels: &BTreeMap<String, Label>) -> String {
    let mut out = String::from("bird_id,label\n");
    for (id, l) in labels {
        let _ = writeln!(out, "{id},{}", l.as_u8());
    }
    out
}

/// Loads every `<bird_id>.csv` in `trajectory_dir`, plus optional labels.
pub fn load_corpus(trajectory_dir: &Path, labels_path: Option<&Path>) -> Result<Corpus> {
    let entries = fs::read_dir(trajectory_dir).map_err(|e| Error::from(e).in_file(trajectory_dir))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|ext| ext == "csv") && path.is_file() {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                files.push((stem.to_owned(), path));
            }
        }
    }
    files.sort();

    let trajectories = files
        .par_iter()
        .map(|(id, path)| {
            let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
            parse_trajectory(id, &text).map_err(|e| e.in_file(path))
        })
        .collect::<Result<Vec<_>>>()?;

    let labels = labels_path.map(read_labels).transpose()?;
    Corpus::new(trajectories, labels)
}

/// Writes one CSV per bird into `dir`, creating it if needed.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<()> {
    fs::create_dir_all(dir)?;
    for t in corpus.trajectories() {
        crate::io::write_atomic(&dir.join(format!("{}.csv", t.bird_id)), t.to_csv().as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "longitude,latitude,sun_azimuth,sun_elevation,daytime,elapsed_time,local_time,days\n";

    fn csv_with(rows: &[&str]) -> String {
        let mut s = HEADER.to_owned();
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn parses_minimal_trajectory() {
        let text = csv_with(&["139.2,38.5,100,20,1,0,06:00:00,1", "139.3,38.6,101,21,1,60,06:01:00,1"]);
        let t = parse_trajectory("b1", &text).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.points()[1].elapsed, 60.0);
        assert_eq!(t.points()[0].local_time, 6 * 3600);
        assert!(t.points()[0].daytime);
    }

    #[test]
    fn local_time_to_seconds_of_day() {
        assert_eq!(parse_local_time("13:05:30", 2).unwrap(), 47130);
        assert_eq!(format_local_time(47130), "13:05:30");
        assert!(parse_local_time("13:65:00", 2).is_err());
        assert!(parse_local_time("13:05", 2).is_err());
    }

    #[test]
    fn rejects_duplicate_timestamp() {
        let text = csv_with(&[
            "139.2,38.5,100,20,1,0,06:00:00,1",
            "139.3,38.6,101,21,1,60,06:01:00,1",
            "139.4,38.7,102,22,1,60,06:01:00,1",
        ]);
        assert!(matches!(
            parse_trajectory("b", &text),
            Err(Error::NonMonotonicTime { line: 4, .. })
        ));
    }

    #[test]
    fn rejects_bad_rows() {
        let short = csv_with(&["139.2,38.5,100,20,1,0,06:00:00,1"]);
        assert!(matches!(parse_trajectory("b", &short), Err(Error::TooShort(1))));

        let cols = csv_with(&["139.2,38.5,100,20,1,0,06:00:00", "1,2,3,4,1,5,06:00:00,1"]);
        assert!(matches!(parse_trajectory("b", &cols), Err(Error::MalformedRow { .. })));

        let nan = csv_with(&["abc,38.5,100,20,1,0,06:00:00,1", "1,2,3,4,1,5,06:00:00,1"]);
        assert!(matches!(parse_trajectory("b", &nan), Err(Error::MalformedRow { .. })));

        let lat = csv_with(&["139,95,100,20,1,0,06:00:00,1", "1,2,3,4,1,5,06:00:00,1"]);
        assert!(matches!(
            parse_trajectory("b", &lat),
            Err(Error::OutOfRange { field: "latitude", .. })
        ));

        let az = csv_with(&["139,35,360,20,1,0,06:00:00,1", "1,2,3,4,1,5,06:00:00,1"]);
        assert!(matches!(
            parse_trajectory("b", &az),
            Err(Error::OutOfRange {
                field: "sun_azimuth",
                ..
            })
        ));

        let flag = csv_with(&["139,35,10,20,2,0,06:00:00,1", "1,2,3,4,1,5,06:00:00,1"]);
        assert!(matches!(
            parse_trajectory("b", &flag),
            Err(Error::OutOfRange { field: "daytime", .. })
        ));

        let days = csv_with(&["139,35,10,20,1,0,06:00:00,0", "1,2,3,4,1,5,06:00:00,1"]);
        assert!(matches!(
            parse_trajectory("b", &days),
            Err(Error::OutOfRange { field: "days", .. })
        ));
    }

    #[test]
    fn rejects_wrong_header() {
        let text = "lon,lat\n1,2\n";
        assert!(matches!(
            parse_trajectory("b", text),
            Err(Error::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn labels_must_reference_known_birds() {
        let text = csv_with(&["1,2,3,4,1,0,06:00:00,1", "1,2,3,4,1,5,06:00:00,1"]);
        let t = parse_trajectory("b1", &text).unwrap();
        let labels = parse_labels("bird_id,label\nb1,1\nb9,0\n").unwrap();
        assert!(matches!(
            Corpus::new([t], Some(labels)),
            Err(Error::UnknownBirdInLabels(id)) if id == "b9"
        ));
    }

    #[test]
    fn label_values_are_binary() {
        assert!(parse_labels("bird_id,label\nb1,2\n").is_err());
        let labels = parse_labels("bird_id,label\nb1,1\nb2,0\n").unwrap();
        assert_eq!(labels["b1"], Label::Male);
        assert_eq!(labels_to_csv(&labels), "bird_id,label\nb1,1\nb2,0\n");
    }
}
