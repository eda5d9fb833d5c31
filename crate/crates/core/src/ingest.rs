//! Real trajectory data: CSV loading, projection and resampling onto a
//! fixed sampling interval.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::process::SamplePath;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crs {
    #[default]
    Planar,
    /// Degrees; `x` holds longitude and `y` latitude.
    Lonlat,
}

/// Column mapping for an input CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schema {
    pub id: String,
    pub timestamp: String,
    pub x: String,
    pub y: String,
    pub crs: Crs,
    /// Tracks with a larger fraction of incomplete rows are dropped whole.
    pub max_missing_fraction: f64,
    /// Rows that are present but unparseable abort the load once they
    /// exceed this fraction of all rows.
    pub max_bad_fraction: f64,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            id: "id".into(),
            timestamp: "timestamp".into(),
            x: "x".into(),
            y: "y".into(),
            crs: Crs::Planar,
            max_missing_fraction: 0.5,
            max_bad_fraction: 0.0,
        }
    }
}

impl Schema {
    /// Movebank export column names.
    pub fn movebank() -> Self {
        Self {
            id: "individual-local-identifier".into(),
            timestamp: "timestamp".into(),
            x: "location-long".into(),
            y: "location-lat".into(),
            crs: Crs::Lonlat,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    /// Seconds.
    pub time: f64,
    pub position: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawTrack {
    pub id: String,
    /// Strictly increasing in time.
    pub records: Vec<Record>,
}

impl RawTrack {
    pub fn span(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrackSet {
    pub tracks: Vec<RawTrack>,
    pub crs: Crs,
}

/// What loading discarded.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DropReport {
    /// Rows with a blank required field.
    pub missing_rows: usize,
    /// Rows with a field that does not parse (1-based file line numbers).
    pub bad_rows: Vec<usize>,
    /// Rows repeating an earlier timestamp of the same track.
    pub duplicate_rows: usize,
    /// Ids of tracks dropped for too many incomplete rows.
    pub dropped_tracks: Vec<String>,
}

/// Seconds from a numeric field or an ISO-like UTC date-time.
pub fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let s = s.trim_end_matches('Z');
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            let utc = dt.and_utc();
            return Some(utc.timestamp() as f64 + utc.timestamp_subsec_nanos() as f64 * 1e-9);
        }
    }
    None
}

/// Parse a track CSV. Tracks appear in order of first occurrence; records
/// are sorted by time within each track.
pub fn load_tracks<R: Read>(input: R, schema: &Schema) -> Result<(TrackSet, DropReport)> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers().map_err(|e| Error::Ingest { message: format!("unreadable header: {e}"), rows: vec![1] })?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Ingest {
            message: format!("column `{name}` not found in header"),
            rows: vec![1],
        })
    };
    let cols = [col(&schema.id)?, col(&schema.timestamp)?, col(&schema.x)?, col(&schema.y)?];

    let mut report = DropReport::default();
    let mut order: Vec<String> = Vec::new();
    let mut by_id: BTreeMap<String, (Vec<Record>, usize)> = BTreeMap::new();
    let mut total_rows = 0usize;
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        total_rows += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(_) => {
                report.bad_rows.push(line);
                continue;
            }
        };
        let fields: Vec<&str> = cols.iter().map(|&c| rec.get(c).unwrap_or("").trim()).collect();
        let id = fields[0];
        if id.is_empty() {
            report.missing_rows += 1;
            continue;
        }
        if !by_id.contains_key(id) {
            order.push(id.to_string());
        }
        let entry = by_id.entry(id.to_string()).or_default();
        if fields[1..].iter().any(|f| f.is_empty()) {
            report.missing_rows += 1;
            entry.1 += 1;
            continue;
        }
        let time = parse_timestamp(fields[1]);
        let x = fields[2].parse::<f64>().ok().filter(|v| v.is_finite());
        let y = fields[3].parse::<f64>().ok().filter(|v| v.is_finite());
        match (time, x, y) {
            (Some(time), Some(x), Some(y)) => entry.0.push(Record { time, position: Point::new(x, y) }),
            _ => report.bad_rows.push(line),
        }
    }
    if report.bad_rows.len() as f64 > schema.max_bad_fraction * total_rows as f64 {
        return Err(Error::Ingest {
            message: format!("{} of {total_rows} rows could not be parsed", report.bad_rows.len()),
            rows: report.bad_rows.iter().take(20).copied().collect(),
        });
    }

    let mut tracks = Vec::new();
    for id in order {
        let (mut records, missing) = by_id.remove(&id).expect("id was recorded");
        let rows = records.len() + missing;
        if rows > 0 && missing as f64 > schema.max_missing_fraction * rows as f64 {
            report.dropped_tracks.push(id);
            continue;
        }
        records.sort_by(|a, b| a.time.total_cmp(&b.time));
        let before = records.len();
        records.dedup_by(|b, a| b.time == a.time);
        report.duplicate_rows += before - records.len();
        if !records.is_empty() {
            tracks.push(RawTrack { id, records });
        }
    }
    Ok((TrackSet { tracks, crs: schema.crs }, report))
}

/// Write `id,timestamp,x,y`; reading it back with the default schema (and
/// the same crs) gives the same track set.
pub fn write_tracks<W: Write>(set: &TrackSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "timestamp", "x", "y"])?;
    for tr in &set.tracks {
        for r in &tr.records {
            w.write_record(&[tr.id.clone(), r.time.to_string(), r.position.x.to_string(), r.position.y.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Local equirectangular projection about the centroid of all records, in
/// kilometres: `x = R cos(lat0) dlon`, `y = R dlat`.
pub fn project_lonlat(set: &TrackSet) -> Result<TrackSet> {
    if set.crs != Crs::Lonlat {
        return Err(Error::InvalidInput("projection needs longitude/latitude input".into()));
    }
    let all = set.tracks.iter().flat_map(|t| &t.records);
    let mut n = 0usize;
    let (mut slon, mut slat) = (0.0, 0.0);
    for r in all {
        let lat = r.position.y;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidInput(format!("latitude {lat} outside [-90, 90] in track data")));
        }
        slon += r.position.x;
        slat += lat;
        n += 1;
    }
    let centre = if n > 0 { Point::new(slon / n as f64, slat / n as f64) } else { Point::ORIGIN };
    Ok(project_about(set, centre))
}

/// Projection about a given `(lon, lat)` centre in degrees.
pub fn project_about(set: &TrackSet, centre: Point) -> TrackSet {
    let lat0 = centre.y.to_radians();
    let tracks = set
        .tracks
        .iter()
        .map(|t| RawTrack {
            id: t.id.clone(),
            records: t
                .records
                .iter()
                .map(|r| {
                    let dlon = (r.position.x - centre.x).to_radians();
                    let dlat = (r.position.y - centre.y).to_radians();
                    Record {
                        time: r.time,
                        position: Point::new(EARTH_RADIUS_KM * lat0.cos() * dlon, EARTH_RADIUS_KM * dlat),
                    }
                })
                .collect(),
        })
        .collect();
    TrackSet { tracks, crs: Crs::Planar }
}

/// A resampled piece of a track.
#[derive(Clone, Debug, PartialEq)]
pub struct Resampled {
    pub id: String,
    /// Time of the first sample (a multiple of `t`).
    pub start: f64,
    pub path: SamplePath,
}

/// Resample every track at the multiples of `t`, taking the nearest record.
///
/// A track is cut wherever consecutive records are more than `split_gap`
/// apart. Inside a piece each multiple of `t` takes the nearest record; it
/// is within `t / 2` whenever records are that dense. Pieces with fewer
/// than two samples are discarded.
pub fn resample(set: &TrackSet, t: f64, split_gap: f64) -> Result<Vec<Resampled>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("sampling interval t = {t} must be positive")));
    }
    if !(split_gap > 0.0) {
        return Err(Error::InvalidInput(format!("split gap {split_gap} must be positive")));
    }
    let mut out = Vec::new();
    for tr in &set.tracks {
        let recs = &tr.records;
        let mut start = 0;
        while start < recs.len() {
            let mut end = start + 1;
            while end < recs.len() && recs[end].time - recs[end - 1].time <= split_gap {
                end += 1;
            }
            if let Some(piece) = resample_piece(&recs[start..end], t) {
                out.push(Resampled { id: tr.id.clone(), start: piece.0, path: piece.1 });
            }
            start = end;
        }
    }
    Ok(out)
}

fn resample_piece(recs: &[Record], t: f64) -> Option<(f64, SamplePath)> {
    let (first, last) = (recs.first()?.time, recs.last()?.time);
    // Multiples of t that have a record within t/2 at either end.
    let k0 = ((first - t / 2.0) / t).ceil() as i64;
    let k1 = ((last + t / 2.0) / t).floor() as i64;
    if k1 <= k0 {
        return None;
    }
    let mut samples = Vec::with_capacity((k1 - k0 + 1) as usize);
    let mut i = 0;
    for k in k0..=k1 {
        let g = k as f64 * t;
        while i + 1 < recs.len() && (recs[i + 1].time - g).abs() <= (recs[i].time - g).abs() {
            i += 1;
        }
        samples.push(recs[i].position);
    }
    Some((k0 as f64 * t, SamplePath::from_samples(t, samples)))
}

/// Effective observation period `sum (len - 1) t` and the raw time span
/// summed over tracks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage {
    pub effective: f64,
    pub raw_span: f64,
    pub paths: usize,
}

pub fn coverage(set: &TrackSet, paths: &[Resampled]) -> Coverage {
    Coverage {
        effective: paths.iter().map(|p| p.path.len().saturating_sub(1) as f64 * p.path.t).sum(),
        raw_span: set.tracks.iter().map(RawTrack::span).sum(),
        paths: paths.len(),
    }
}
