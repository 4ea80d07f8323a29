//! JSONL record parsing, state resolution, and local-time conversion.
//!
//! Raw records arrive as newline-delimited JSON. Each line is parsed into a
//! [`RawRecord`], resolved to one of the fifty US states through its `geo`
//! field (place-name suffix first, then bounding-box centroid against an
//! offline polygon set), and stamped with the wall-clock time in that
//! state's primary time zone. DC and the territories are out of scope and
//! resolve to unresolved.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate, TimeZone, Utc};
use chrono_tz::Tz;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// USPS codes of the fifty states, sorted. DC and territories are absent.
pub const STATE_CODES: [&str; 50] = [
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "IA", "ID", "IL", "IN",
    "KS", "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH",
    "NJ", "NM", "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VA",
    "VT", "WA", "WI", "WV", "WY",
];

/// Two-letter USPS code of one of the fifty states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateCode([u8; 2]);

impl StateCode {
    /// Accepts only the fifty state codes, case-insensitively.
    pub fn parse(s: &str) -> Option<Self> {
        let up = s.trim().to_ascii_uppercase();
        if STATE_CODES.binary_search(&up.as_str()).is_ok() {
            let b = up.as_bytes();
            Some(Self([b[0], b[1]]))
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).unwrap()
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for StateCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StateCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        StateCode::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("not a US state code: {s}")))
    }
}

impl FromStr for StateCode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StateCode::parse(s).ok_or_else(|| format!("not a US state code: {s}"))
    }
}

/// Geolocation block of a raw record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoInfo {
    pub country: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub place_type: Option<String>,
}

impl GeoInfo {
    /// Centroid of the bounding box, as (lon, lat).
    pub fn bbox_centroid(&self) -> Option<(f64, f64)> {
        self.bbox
            .map(|[lon_min, lat_min, lon_max, lat_max]| {
                ((lon_min + lon_max) / 2.0, (lat_min + lat_max) / 2.0)
            })
    }
}

/// One parsed input record, before state resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawRecord {
    pub id: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
    pub author_id: String,
    pub author: BTreeMap<String, String>,
    pub geo: GeoInfo,
}

/// A record resolved to a state (or not) and localized in time.
///
/// `state` is `None` for records that could not be placed in one of the
/// fifty states; those keep UTC as their `local_time` and are excluded from
/// state-keyed aggregates downstream.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    #[serde(flatten)]
    pub raw: RawRecord,
    #[serde(serialize_with = "serialize_state")]
    pub state: Option<StateCode>,
    pub local_time: DateTime<FixedOffset>,
    pub state_year: String,
}

fn serialize_state<S: serde::Serializer>(
    state: &Option<StateCode>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    match state {
        Some(code) => serializer.serialize_str(code.as_str()),
        None => serializer.serialize_str("UNRESOLVED"),
    }
}

impl Record {
    pub fn local_year(&self) -> i32 {
        self.local_time.year()
    }

    pub fn local_month_key(&self) -> String {
        format!("{:04}-{:02}", self.local_time.year(), self.local_time.month())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("malformed json: {0}")]
    MalformedJson(String),
    #[error("missing required field: {0}")]
    MissingRequiredField(String),
    #[error("bad timestamp: {0}")]
    BadTimestamp(String),
}

/// Parses one JSONL line into a [`RawRecord`].
///
/// Unknown fields are ignored. Optional geo subfields become absent; a
/// bounding box that is malformed or out of range is dropped (the record
/// then falls through to unresolved unless its place name resolves).
/// Required fields that are absent, empty, or of the wrong type raise
/// [`ParseError::MissingRequiredField`].
pub fn parse_record(line: &str) -> Result<RawRecord, ParseError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| ParseError::MalformedJson(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ParseError::MalformedJson("line is not a JSON object".into()))?;

    let id = require_string(obj, "id")?;
    let text = match obj.get("text") {
        Some(serde_json::Value::String(s)) => s.clone(),
        _ => return Err(ParseError::MissingRequiredField("text".into())),
    };
    let created_at_raw = match obj.get("created_at") {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(_) => return Err(ParseError::BadTimestamp("created_at is not a string".into())),
        None => return Err(ParseError::MissingRequiredField("created_at".into())),
    };
    let created_at = DateTime::parse_from_rfc3339(&created_at_raw)
        .map_err(|e| ParseError::BadTimestamp(format!("{created_at_raw}: {e}")))?
        .with_timezone(&Utc);
    let author_id = require_string(obj, "author_id")?;

    let author_obj = obj
        .get("author")
        .and_then(|v| v.as_object())
        .ok_or_else(|| ParseError::MissingRequiredField("author".into()))?;
    let mut author = BTreeMap::new();
    for (k, v) in author_obj {
        if let serde_json::Value::String(s) = v {
            author.insert(k.clone(), s.clone());
        }
    }
    if !author.contains_key("username") {
        return Err(ParseError::MissingRequiredField("author.username".into()));
    }

    let geo_obj = obj
        .get("geo")
        .and_then(|v| v.as_object())
        .ok_or_else(|| ParseError::MissingRequiredField("geo".into()))?;
    let country = match geo_obj.get("country") {
        Some(serde_json::Value::String(s)) if !s.is_empty() => s.clone(),
        _ => return Err(ParseError::MissingRequiredField("geo.country".into())),
    };
    let bbox = geo_obj.get("bbox").and_then(parse_bbox);
    let full_name = geo_obj
        .get("full_name")
        .and_then(|v| v.as_str())
        .map(str::to_string);
    let place_type = geo_obj
        .get("place_type")
        .and_then(|v| v.as_str())
        .map(str::to_string);

    Ok(RawRecord {
        id,
        text,
        created_at,
        author_id,
        author,
        geo: GeoInfo {
            country,
            bbox,
            full_name,
            place_type,
        },
    })
}

fn require_string(
    obj: &serde_json::Map<String, serde_json::Value>,
    field: &str,
) -> Result<String, ParseError> {
    match obj.get(field) {
        Some(serde_json::Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        _ => Err(ParseError::MissingRequiredField(field.into())),
    }
}

fn parse_bbox(value: &serde_json::Value) -> Option<[f64; 4]> {
    let arr = value.as_array()?;
    if arr.len() != 4 {
        return None;
    }
    let mut bbox = [0.0; 4];
    for (i, v) in arr.iter().enumerate() {
        bbox[i] = v.as_f64()?;
    }
    let [lon_min, lat_min, lon_max, lat_max] = bbox;
    let lon_ok = (-180.0..=180.0).contains(&lon_min) && (-180.0..=180.0).contains(&lon_max);
    let lat_ok = (-90.0..=90.0).contains(&lat_min) && (-90.0..=90.0).contains(&lat_max);
    if lon_ok && lat_ok && lon_min <= lon_max && lat_min <= lat_max {
        Some(bbox)
    } else {
        None
    }
}

/// A polygon ring as (lon, lat) vertices. The closing vertex may be
/// repeated or left implicit.
pub type Ring = Vec<(f64, f64)>;

#[derive(Debug, Clone)]
pub struct StatePolygon {
    pub state: StateCode,
    pub tz: Tz,
    pub rings: Vec<Ring>,
}

/// Offline state boundary set: one entry per state with its polygons and
/// primary time zone.
#[derive(Debug, Clone)]
pub struct StatePolygonSet {
    states: Vec<StatePolygon>,
}

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid geojson: {0}")]
    InvalidGeoJson(String),
    #[error("state {0}: {1}")]
    InvalidState(String, String),
    #[error("expected exactly 50 states, found {0}")]
    WrongStateCount(usize),
    #[error("duplicate state {0}")]
    DuplicateState(String),
}

#[derive(Deserialize)]
struct GjFeatureCollection {
    features: Vec<GjFeature>,
}

#[derive(Deserialize)]
struct GjFeature {
    properties: GjProperties,
    geometry: GjGeometry,
}

#[derive(Deserialize)]
struct GjProperties {
    usps: String,
    tz: String,
}

#[derive(Deserialize)]
#[serde(tag = "type")]
enum GjGeometry {
    Polygon { coordinates: Vec<Vec<[f64; 2]>> },
    MultiPolygon { coordinates: Vec<Vec<Vec<[f64; 2]>>> },
}

impl StatePolygonSet {
    /// Loads a GeoJSON FeatureCollection with one Feature per state and
    /// properties `{usps, tz}`. Exactly the fifty states must be present,
    /// every ring must be simple (non-self-intersecting), and every time
    /// zone must name a known IANA zone.
    pub fn from_geojson_str(text: &str) -> Result<Self, GeoError> {
        let fc: GjFeatureCollection = serde_json::from_str(text)
            .map_err(|e| GeoError::InvalidGeoJson(e.to_string()))?;
        let mut states: Vec<StatePolygon> = Vec::with_capacity(fc.features.len());
        for feature in fc.features {
            let usps = feature.properties.usps;
            let state = StateCode::parse(&usps)
                .ok_or_else(|| GeoError::InvalidState(usps.clone(), "unknown USPS code".into()))?;
            if states.iter().any(|s| s.state == state) {
                return Err(GeoError::DuplicateState(usps));
            }
            let tz: Tz = feature
                .properties
                .tz
                .parse()
                .map_err(|_| GeoError::InvalidState(usps.clone(), "unknown time zone".into()))?;
            let rings = match feature.geometry {
                GjGeometry::Polygon { coordinates } => coordinates
                    .into_iter()
                    .map(|ring| ring.into_iter().map(|[lon, lat]| (lon, lat)).collect())
                    .collect::<Vec<Ring>>(),
                GjGeometry::MultiPolygon { coordinates } => coordinates
                    .into_iter()
                    .flatten()
                    .map(|ring| ring.into_iter().map(|[lon, lat]| (lon, lat)).collect())
                    .collect(),
            };
            for ring in &rings {
                if ring.len() < 3 {
                    return Err(GeoError::InvalidState(
                        usps.clone(),
                        "ring with fewer than 3 vertices".into(),
                    ));
                }
                if ring_self_intersects(ring) {
                    return Err(GeoError::InvalidState(
                        usps.clone(),
                        "self-intersecting ring".into(),
                    ));
                }
            }
            states.push(StatePolygon { state, tz, rings });
        }
        if states.len() != 50 {
            return Err(GeoError::WrongStateCount(states.len()));
        }
        states.sort_by_key(|s| s.state);
        Ok(Self { states })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, GeoError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_geojson_str(&text)
    }

    pub fn time_zone(&self, state: StateCode) -> Option<Tz> {
        self.states
            .binary_search_by_key(&state, |s| s.state)
            .ok()
            .map(|i| self.states[i].tz)
    }

    pub fn iter(&self) -> impl Iterator<Item = &StatePolygon> {
        self.states.iter()
    }

    /// All states whose boundary contains the point (boundary inclusive),
    /// in ascending USPS order.
    pub fn states_containing(&self, lon: f64, lat: f64) -> Vec<StateCode> {
        self.states
            .iter()
            .filter(|s| s.rings.iter().any(|r| ring_contains(r, lon, lat)))
            .map(|s| s.state)
            .collect()
    }
}

/// Even-odd point-in-ring test, boundary inclusive. Points exactly on an
/// edge count as inside so that shared borders surface as ties.
fn ring_contains(ring: &[(f64, f64)], lon: f64, lat: f64) -> bool {
    let n = effective_len(ring);
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if on_segment(a, b, (lon, lat)) {
            return true;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let (x1, y1) = ring[i];
        let (x2, y2) = ring[(i + 1) % n];
        if (y1 > lat) != (y2 > lat) {
            let x_cross = x1 + (lat - y1) / (y2 - y1) * (x2 - x1);
            if lon < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Ignores an explicit closing vertex so edges are not double-counted.
fn effective_len(ring: &[(f64, f64)]) -> usize {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.len() - 1
    } else {
        ring.len()
    }
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    if cross.abs() > 1e-12 {
        return false;
    }
    let within_x = p.0 >= a.0.min(b.0) - 1e-12 && p.0 <= a.0.max(b.0) + 1e-12;
    let within_y = p.1 >= a.1.min(b.1) - 1e-12 && p.1 <= a.1.max(b.1) + 1e-12;
    within_x && within_y
}

fn ring_self_intersects(ring: &[(f64, f64)]) -> bool {
    let n = effective_len(ring);
    if n < 4 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // Adjacent edges share a vertex by construction.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_properly_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn segments_properly_intersect(
    a: (f64, f64),
    b: (f64, f64),
    c: (f64, f64),
    d: (f64, f64),
) -> bool {
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| -> f64 {
        (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// External reverse-geocoding hook with the same contract as the offline
/// polygon lookup: coordinates in, USPS code (or nothing) out. Plugged in
/// after the polygon pass for users who have network access.
pub trait ReverseGeocoder {
    fn reverse(&self, lon: f64, lat: f64) -> Option<StateCode>;
}

/// Resolves a record's geo block to a state.
///
/// Order: records outside country `US` are unresolved immediately; a
/// `full_name` of shape "City, ST" with a valid state code wins; otherwise
/// the bounding-box centroid is matched against the polygon set, with a
/// centroid on a shared border resolving to the lexicographically smallest
/// code. Everything else is unresolved.
pub fn resolve_state(geo: &GeoInfo, polygons: &StatePolygonSet) -> Option<StateCode> {
    resolve_state_with(geo, polygons, None)
}

/// [`resolve_state`] with an optional reverse-geocoder fallback consulted
/// when the offline polygon pass fails.
pub fn resolve_state_with(
    geo: &GeoInfo,
    polygons: &StatePolygonSet,
    fallback: Option<&dyn ReverseGeocoder>,
) -> Option<StateCode> {
    if geo.country != "US" {
        return None;
    }
    if let Some(state) = geo.full_name.as_deref().and_then(state_from_full_name) {
        return Some(state);
    }
    if let Some((lon, lat)) = geo.bbox_centroid() {
        let matches = polygons.states_containing(lon, lat);
        if let Some(&first) = matches.first() {
            return Some(first);
        }
        if let Some(geocoder) = fallback {
            return geocoder.reverse(lon, lat);
        }
    }
    None
}

fn state_from_full_name(full_name: &str) -> Option<StateCode> {
    let (_, suffix) = full_name.rsplit_once(',')?;
    let suffix = suffix.trim();
    if suffix.len() == 2 {
        StateCode::parse(suffix)
    } else {
        None
    }
}

/// Converts a UTC instant to the wall-clock time of the state's primary
/// zone, DST-aware. Unknown states keep UTC.
pub fn to_local_time(
    utc: DateTime<Utc>,
    state: StateCode,
    polygons: &StatePolygonSet,
) -> DateTime<FixedOffset> {
    match polygons.time_zone(state) {
        Some(tz) => {
            let local = tz.from_utc_datetime(&utc.naive_utc());
            local.fixed_offset()
        }
        None => utc.fixed_offset(),
    }
}

/// Inclusion filter applied after parsing and resolution.
#[derive(Debug, Clone)]
pub struct ScopeFilter {
    /// Restrict to these states; `None` means all fifty.
    pub states: Option<Vec<StateCode>>,
    /// Keep records that did not resolve to a state.
    pub include_unresolved: bool,
    /// Inclusive local-date window.
    pub window: Option<(NaiveDate, NaiveDate)>,
}

impl Default for ScopeFilter {
    fn default() -> Self {
        Self {
            states: None,
            include_unresolved: false,
            window: Some((
                NaiveDate::from_ymd_opt(2010, 3, 1).unwrap(),
                NaiveDate::from_ymd_opt(2022, 12, 31).unwrap(),
            )),
        }
    }
}

impl ScopeFilter {
    /// No filtering at all: every parsed record is emitted.
    pub fn everything() -> Self {
        Self {
            states: None,
            include_unresolved: true,
            window: None,
        }
    }

    fn admits(&self, record: &Record) -> bool {
        match record.state {
            Some(code) => {
                if let Some(states) = &self.states {
                    if !states.contains(&code) {
                        return false;
                    }
                }
            }
            None => {
                if !self.include_unresolved {
                    return false;
                }
            }
        }
        if let Some((start, end)) = self.window {
            let date = record.local_time.date_naive();
            if date < start || date > end {
                return false;
            }
        }
        true
    }
}

/// Line-level accounting for one ingest pass. Counters are sums, so stats
/// from parallel shards merge by addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub total_lines: u64,
    pub parsed: u64,
    pub malformed: u64,
    pub resolved: u64,
    pub unresolved: u64,
    pub excluded_by_scope: u64,
    pub emitted: u64,
}

impl IngestStats {
    pub fn merge(&mut self, other: &IngestStats) {
        self.total_lines += other.total_lines;
        self.parsed += other.parsed;
        self.malformed += other.malformed;
        self.resolved += other.resolved;
        self.unresolved += other.unresolved;
        self.excluded_by_scope += other.excluded_by_scope;
        self.emitted += other.emitted;
    }
}

enum LineOutcome {
    Malformed,
    Record(Box<Record>, bool),
}

fn process_line(line: &str, polygons: &StatePolygonSet, scope: &ScopeFilter) -> LineOutcome {
    let raw = match parse_record(line) {
        Ok(raw) => raw,
        Err(_) => return LineOutcome::Malformed,
    };
    let state = resolve_state(&raw.geo, polygons);
    let (local_time, state_year) = match state {
        Some(code) => {
            let local = to_local_time(raw.created_at, code, polygons);
            let key = format!("{}-{}", code.as_str(), local.year());
            (local, key)
        }
        None => {
            let utc = raw.created_at.fixed_offset();
            (utc, format!("UNRESOLVED-{}", utc.year()))
        }
    };
    let record = Record {
        raw,
        state,
        local_time,
        state_year,
    };
    let in_scope = scope.admits(&record);
    LineOutcome::Record(Box::new(record), in_scope)
}

/// Processes lines in input order: bad lines are counted and skipped, never
/// aborting the stream. Lines are resolved in parallel; output order and
/// stats are identical regardless of worker count.
pub fn ingest_stream<I>(
    lines: I,
    polygons: &StatePolygonSet,
    scope: &ScopeFilter,
) -> (Vec<Record>, IngestStats)
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let lines: Vec<String> = lines
        .into_iter()
        .map(|l| l.as_ref().to_string())
        .collect();
    let outcomes: Vec<LineOutcome> = lines
        .par_iter()
        .map(|line| process_line(line, polygons, scope))
        .collect();

    let mut stats = IngestStats::default();
    let mut records = Vec::new();
    for outcome in outcomes {
        stats.total_lines += 1;
        match outcome {
            LineOutcome::Malformed => stats.malformed += 1,
            LineOutcome::Record(record, in_scope) => {
                stats.parsed += 1;
                if record.state.is_some() {
                    stats.resolved += 1;
                } else {
                    stats.unresolved += 1;
                }
                if in_scope {
                    stats.emitted += 1;
                    records.push(*record);
                } else {
                    stats.excluded_by_scope += 1;
                }
            }
        }
    }
    (records, stats)
}

/// [`ingest_stream`] over a buffered reader, one record per line.
pub fn ingest_reader<R: BufRead>(
    reader: R,
    polygons: &StatePolygonSet,
    scope: &ScopeFilter,
) -> std::io::Result<(Vec<Record>, IngestStats)> {
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    Ok(ingest_stream(lines, polygons, scope))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_line() -> String {
        r#"{"id":"1","text":"hi","created_at":"2017-12-01T18:00:00Z","author_id":"9","author":{"username":"u1"},"geo":{"country":"US","full_name":"Los Angeles, CA"}}"#
            .to_string()
    }

    /// Grid fixture: 50 cells, 6 deg wide by 5 deg tall, row-major in USPS
    /// order starting at (-125, 25). Neighboring cells share borders.
    pub(crate) fn grid_polygons() -> StatePolygonSet {
        StatePolygonSet::from_geojson_str(&grid_geojson()).unwrap()
    }

    pub(crate) fn grid_geojson() -> String {
        let tz_for = |code: &str| -> &str {
            match code {
                "AK" => "America/Anchorage",
                "HI" => "Pacific/Honolulu",
                "AZ" => "America/Phoenix",
                "CA" | "NV" | "OR" | "WA" => "America/Los_Angeles",
                "CO" | "ID" | "MT" | "NM" | "UT" | "WY" => "America/Denver",
                "AL" | "AR" | "IA" | "IL" | "KS" | "LA" | "MN" | "MO" | "MS" | "ND" | "NE"
                | "OK" | "SD" | "TN" | "TX" | "WI" => "America/Chicago",
                "MI" => "America/Detroit",
                "IN" => "America/Indiana/Indianapolis",
                _ => "America/New_York",
            }
        };
        let mut features = Vec::new();
        for (i, code) in STATE_CODES.iter().enumerate() {
            let col = (i % 10) as f64;
            let row = (i / 10) as f64;
            let lon0 = -125.0 + col * 6.0;
            let lat0 = 25.0 + row * 5.0;
            let (lon1, lat1) = (lon0 + 6.0, lat0 + 5.0);
            features.push(format!(
                r#"{{"type":"Feature","properties":{{"usps":"{code}","tz":"{tz}"}},"geometry":{{"type":"Polygon","coordinates":[[[{lon0},{lat0}],[{lon1},{lat0}],[{lon1},{lat1}],[{lon0},{lat1}],[{lon0},{lat0}]]]}}}}"#,
                tz = tz_for(code)
            ));
        }
        format!(
            r#"{{"type":"FeatureCollection","features":[{}]}}"#,
            features.join(",")
        )
    }

    /// Center of the grid cell for a state, for fixture construction.
    pub(crate) fn grid_cell_center(code: &str) -> (f64, f64) {
        let i = STATE_CODES.iter().position(|c| *c == code).unwrap();
        let col = (i % 10) as f64;
        let row = (i / 10) as f64;
        (-125.0 + col * 6.0 + 3.0, 25.0 + row * 5.0 + 2.5)
    }

    #[test]
    fn parses_full_record() {
        let raw = parse_record(&sample_line()).unwrap();
        assert_eq!(raw.id, "1");
        assert_eq!(raw.author_id, "9");
        assert_eq!(raw.geo.country, "US");
        assert_eq!(raw.geo.full_name.as_deref(), Some("Los Angeles, CA"));
        assert_eq!(
            raw.created_at,
            Utc.with_ymd_and_hms(2017, 12, 1, 18, 0, 0).unwrap()
        );
    }

    #[test]
    fn missing_id_is_reported_by_name() {
        let line = sample_line().replace(r#""id":"1","#, "");
        assert_eq!(
            parse_record(&line),
            Err(ParseError::MissingRequiredField("id".into()))
        );
    }

    #[test]
    fn malformed_json_and_bad_timestamp() {
        assert!(matches!(
            parse_record("{not json"),
            Err(ParseError::MalformedJson(_))
        ));
        let line = sample_line().replace("2017-12-01T18:00:00Z", "yesterday");
        assert!(matches!(
            parse_record(&line),
            Err(ParseError::BadTimestamp(_))
        ));
    }

    #[test]
    fn empty_text_is_allowed() {
        let line = sample_line().replace(r#""text":"hi""#, r#""text":"""#);
        assert_eq!(parse_record(&line).unwrap().text, "");
    }

    #[test]
    fn out_of_range_bbox_dropped() {
        let line = sample_line().replace(
            r#""country":"US""#,
            r#""country":"US","bbox":[-200.0,0.0,-190.0,1.0]"#,
        );
        assert_eq!(parse_record(&line).unwrap().geo.bbox, None);
    }

    #[test]
    fn full_name_suffix_resolves_directly() {
        let polygons = grid_polygons();
        let geo = GeoInfo {
            country: "US".into(),
            bbox: None,
            full_name: Some("Los Angeles, CA".into()),
            place_type: Some("city".into()),
        };
        assert_eq!(resolve_state(&geo, &polygons).unwrap().as_str(), "CA");
    }

    #[test]
    fn ambiguous_name_falls_back_to_bbox_centroid() {
        let polygons = grid_polygons();
        let (lon, lat) = grid_cell_center("VT");
        let geo = GeoInfo {
            country: "US".into(),
            bbox: Some([lon - 0.01, lat - 0.01, lon + 0.01, lat + 0.01]),
            full_name: Some("Starbucks".into()),
            place_type: Some("poi".into()),
        };
        assert_eq!(resolve_state(&geo, &polygons).unwrap().as_str(), "VT");
    }

    #[test]
    fn territories_are_unresolved() {
        let polygons = grid_polygons();
        let pr_country = GeoInfo {
            country: "PR".into(),
            bbox: None,
            full_name: None,
            place_type: None,
        };
        assert_eq!(resolve_state(&pr_country, &polygons), None);
        let pr_name = GeoInfo {
            country: "US".into(),
            bbox: None,
            full_name: Some("San Juan, PR".into()),
            place_type: None,
        };
        assert_eq!(resolve_state(&pr_name, &polygons), None);
        let dc = GeoInfo {
            country: "US".into(),
            bbox: None,
            full_name: Some("Washington, DC".into()),
            place_type: None,
        };
        assert_eq!(resolve_state(&dc, &polygons), None);
    }

    #[test]
    fn border_tie_resolves_lexicographically_smallest() {
        let polygons = grid_polygons();
        // Shared vertical border between cell 0 (AK) and cell 1 (AL).
        let geo = GeoInfo {
            country: "US".into(),
            bbox: Some([-119.5, 27.0, -118.5, 28.0]),
            full_name: None,
            place_type: None,
        };
        let matches = polygons.states_containing(-119.0, 27.5);
        assert_eq!(
            matches.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            vec!["AK", "AL"]
        );
        assert_eq!(resolve_state(&geo, &polygons).unwrap().as_str(), "AK");
    }

    #[test]
    fn interior_points_resolve_to_their_cell() {
        let polygons = grid_polygons();
        for code in STATE_CODES {
            let (lon, lat) = grid_cell_center(code);
            // Sample a few strictly interior offsets per cell.
            for (dx, dy) in [(0.0, 0.0), (-2.3, -1.7), (2.3, 1.7), (1.1, -2.0)] {
                let matches = polygons.states_containing(lon + dx, lat + dy);
                assert_eq!(matches.len(), 1, "{code} at offset ({dx},{dy})");
                assert_eq!(matches[0].as_str(), code);
            }
        }
    }

    #[test]
    fn resolve_state_is_pure() {
        let polygons = grid_polygons();
        let geo = GeoInfo {
            country: "US".into(),
            bbox: Some([-119.5, 27.0, -118.5, 28.0]),
            full_name: Some("Starbucks".into()),
            place_type: None,
        };
        let first = resolve_state(&geo, &polygons);
        for _ in 0..10 {
            assert_eq!(resolve_state(&geo, &polygons), first);
        }
    }

    #[test]
    fn reverse_geocoder_fallback_consulted_after_polygons() {
        struct Fixed;
        impl ReverseGeocoder for Fixed {
            fn reverse(&self, _lon: f64, _lat: f64) -> Option<StateCode> {
                StateCode::parse("VT")
            }
        }
        let polygons = grid_polygons();
        // Centroid outside every cell.
        let geo = GeoInfo {
            country: "US".into(),
            bbox: Some([-10.0, 0.0, -9.0, 1.0]),
            full_name: None,
            place_type: None,
        };
        assert_eq!(resolve_state(&geo, &polygons), None);
        assert_eq!(
            resolve_state_with(&geo, &polygons, Some(&Fixed)).unwrap().as_str(),
            "VT"
        );
    }

    #[test]
    fn ny_winter_offset() {
        let polygons = grid_polygons();
        let utc = Utc.with_ymd_and_hms(2015, 1, 1, 2, 0, 0).unwrap();
        let local = to_local_time(utc, StateCode::parse("NY").unwrap(), &polygons);
        assert_eq!(local.to_rfc3339(), "2014-12-31T21:00:00-05:00");
        assert_eq!(local.year(), 2014);
    }

    #[test]
    fn ny_summer_dst_offset() {
        let polygons = grid_polygons();
        let utc = Utc.with_ymd_and_hms(2015, 7, 1, 2, 0, 0).unwrap();
        let local = to_local_time(utc, StateCode::parse("NY").unwrap(), &polygons);
        assert_eq!(local.to_rfc3339(), "2015-06-30T22:00:00-04:00");
    }

    #[test]
    fn az_observes_no_dst() {
        // Oracle: the IANA zone database via America/Phoenix.
        let polygons = grid_polygons();
        let utc = Utc.with_ymd_and_hms(2015, 7, 1, 2, 0, 0).unwrap();
        let local = to_local_time(utc, StateCode::parse("AZ").unwrap(), &polygons);
        assert_eq!(local.to_rfc3339(), "2015-06-30T19:00:00-07:00");
    }

    #[test]
    fn state_year_follows_local_year() {
        let polygons = grid_polygons();
        let line = sample_line()
            .replace("2017-12-01T18:00:00Z", "2015-01-01T02:00:00Z")
            .replace("Los Angeles, CA", "New York, NY");
        let (records, stats) = ingest_stream([line], &polygons, &ScopeFilter::default());
        assert_eq!(stats.parsed, 1);
        assert_eq!(records[0].state_year, "NY-2014");
    }

    #[test]
    fn bad_lines_counted_not_fatal() {
        let polygons = grid_polygons();
        let mut lines: Vec<String> = (0..10)
            .map(|i| sample_line().replace(r#""id":"1""#, &format!(r#""id":"{}""#, i + 1)))
            .collect();
        lines.insert(4, "{broken".to_string());
        let (records, stats) = ingest_stream(&lines, &polygons, &ScopeFilter::default());
        assert_eq!(stats.total_lines, 11);
        assert_eq!(stats.parsed, 10);
        assert_eq!(stats.malformed, 1);
        assert_eq!(records.len(), 10);
        // Output preserves input order.
        let ids: Vec<&str> = records.iter().map(|r| r.raw.id.as_str()).collect();
        assert_eq!(ids, vec!["1", "2", "3", "4", "5", "6", "7", "8", "9", "10"]);
    }

    #[test]
    fn empty_input_all_zero() {
        let polygons = grid_polygons();
        let (records, stats) =
            ingest_stream(Vec::<String>::new(), &polygons, &ScopeFilter::default());
        assert!(records.is_empty());
        assert_eq!(stats, IngestStats::default());
    }

    #[test]
    fn conservation_counts() {
        let polygons = grid_polygons();
        let mut lines = vec![sample_line(), "{broken".into()];
        // Unresolved record: ambiguous name, no bbox.
        lines.push(sample_line().replace("Los Angeles, CA", "Starbucks"));
        // Out-of-window record (before March 2010).
        lines.push(sample_line().replace("2017-12-01T18:00:00Z", "2010-01-15T12:00:00Z"));
        let (records, stats) = ingest_stream(&lines, &polygons, &ScopeFilter::default());
        assert_eq!(stats.total_lines, stats.parsed + stats.malformed);
        assert_eq!(stats.parsed, stats.resolved + stats.unresolved);
        assert_eq!(stats.parsed, stats.emitted + stats.excluded_by_scope);
        assert_eq!(stats.unresolved, 1);
        assert_eq!(stats.excluded_by_scope, 2);
        assert_eq!(records.len(), 1);
    }

    #[test]
    fn polygon_set_rejects_wrong_count_and_self_intersection() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"usps":"VT","tz":"America/New_York"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]}"#;
        assert!(matches!(
            StatePolygonSet::from_geojson_str(text),
            Err(GeoError::WrongStateCount(1))
        ));

        let bowtie = grid_geojson().replace(
            "[[-125,25],[-119,25],[-119,30],[-125,30],[-125,25]]",
            "[[-125,25],[-119,30],[-119,25],[-125,30],[-125,25]]",
        );
        assert!(matches!(
            StatePolygonSet::from_geojson_str(&bowtie),
            Err(GeoError::InvalidState(_, _))
        ));
    }

    #[test]
    fn record_jsonl_round_trip_shape() {
        let polygons = grid_polygons();
        let (records, _) = ingest_stream([sample_line()], &polygons, &ScopeFilter::default());
        let json = serde_json::to_value(&records[0]).unwrap();
        assert_eq!(json["state"], "CA");
        assert_eq!(json["state_year"], "CA-2017");
        assert!(json["local_time"].as_str().unwrap().contains("-08:00"));
    }
}
