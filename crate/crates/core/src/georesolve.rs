//! Gazetteer resolution: keyword joins over the post-office (CSDB) and
//! coordinate (LLDB) databases, tuple intersection, ambiguity resolution,
//! reverse geocoding, regional-language lookup (RLDB) and geotag sidecar
//! records.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lingua::{fold, LocationIndex, ScriptId};

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("no candidates")]
    NoCandidates,
    #[error("empty database")]
    EmptyDatabase,
    #[error("no language data for {0:?}")]
    NoLanguageData(String),
    #[error("{file}: row {row}: {reason}")]
    BadRecord {
        file: String,
        row: usize,
        reason: String,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("geotag: {0}")]
    Geotag(String),
}

/// One post-office directory row (Table 1 schema).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsdbRecord {
    #[serde(rename = "Div_Name")]
    pub div_name: String,
    #[serde(rename = "Pincode")]
    pub pincode: u32,
    #[serde(rename = "Taluk")]
    pub taluk: String,
    #[serde(rename = "Circle")]
    pub circle: String,
    #[serde(rename = "Region")]
    pub region: String,
    #[serde(rename = "District")]
    pub district: String,
    #[serde(rename = "State")]
    pub state: String,
}

/// One coordinate row (Table 2 schema).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LldbRecord {
    #[serde(rename = "City_Id")]
    pub city_id: u64,
    #[serde(rename = "City_Name")]
    pub city_name: String,
    #[serde(rename = "Latitude")]
    pub latitude: f64,
    #[serde(rename = "Longitude")]
    pub longitude: f64,
    #[serde(rename = "State")]
    pub state: String,
}

/// Regional-language row: a place or state name and its spoken languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RldbRecord {
    pub place_or_state: String,
    pub languages: Vec<String>,
}

/// A (latitude, longitude, pincode) candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTuple {
    pub latitude: f64,
    pub longitude: f64,
    pub pincode: u32,
}

/// Coordinate tolerance for tuple equality, matching the databases'
/// rounded decimal degrees.
pub const COORD_EPS: f64 = 1e-6;

impl GeoTuple {
    pub fn matches(&self, other: &GeoTuple) -> bool {
        self.pincode == other.pincode
            && (self.latitude - other.latitude).abs() <= COORD_EPS
            && (self.longitude - other.longitude).abs() <= COORD_EPS
    }
}

fn contains_tuple(set: &[GeoTuple], t: &GeoTuple) -> bool {
    set.iter().any(|s| s.matches(t))
}

fn push_unique(set: &mut Vec<GeoTuple>, t: GeoTuple) {
    if !contains_tuple(set, &t) {
        set.push(t);
    }
}

/// The three databases plus case-folded join indexes.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    pub csdb: Vec<CsdbRecord>,
    pub lldb: Vec<LldbRecord>,
    pub rldb: Vec<RldbRecord>,
}

impl Gazetteer {
    pub fn load(csdb: &Path, lldb: &Path, rldb: &Path) -> Result<Self, GeoError> {
        Ok(Self {
            csdb: load_csdb(csdb)?,
            lldb: load_lldb(lldb)?,
            rldb: load_rldb(rldb)?,
        })
    }

    /// Location vocabulary for keyword filtering: Taluk and Division
    /// names.
    pub fn location_index(&self) -> LocationIndex {
        LocationIndex::from_names(
            self.csdb
                .iter()
                .flat_map(|r| [r.taluk.clone(), r.div_name.clone()]),
        )
    }

    /// The Fig-9 join: CSDB rows whose Taluk matches the keyword, joined
    /// to LLDB on Division Name = City Name; duplicates collapse.
    pub fn keyword_tuples(&self, keyword: &str) -> Vec<GeoTuple> {
        self.keyword_tuples_with_state(keyword)
            .into_iter()
            .fold(Vec::new(), |mut acc, (t, _)| {
                push_unique(&mut acc, t);
                acc
            })
    }

    fn keyword_tuples_with_state(&self, keyword: &str) -> Vec<(GeoTuple, String)> {
        let key = fold(keyword);
        let mut out: Vec<(GeoTuple, String)> = Vec::new();
        for c in self.csdb.iter().filter(|c| fold(&c.taluk) == key) {
            let div = fold(&c.div_name);
            for l in self.lldb.iter().filter(|l| fold(&l.city_name) == div) {
                let t = GeoTuple {
                    latitude: l.latitude,
                    longitude: l.longitude,
                    pincode: c.pincode,
                };
                if !out.iter().any(|(s, _)| s.matches(&t)) {
                    out.push((t, l.state.clone()));
                }
            }
        }
        out
    }

    /// State of a candidate tuple, recovered through the LLDB
    /// coordinates.
    fn state_of(&self, t: &GeoTuple) -> Option<&str> {
        self.lldb
            .iter()
            .find(|l| {
                (l.latitude - t.latitude).abs() <= COORD_EPS
                    && (l.longitude - t.longitude).abs() <= COORD_EPS
            })
            .map(|l| l.state.as_str())
    }

    fn languages_of_state(&self, state: &str) -> Option<&[String]> {
        let key = fold(state);
        self.rldb
            .iter()
            .find(|r| fold(&r.place_or_state) == key)
            .map(|r| r.languages.as_slice())
    }

    fn filter_by_script(&self, candidates: &[GeoTuple], script: ScriptId) -> Vec<GeoTuple> {
        let lang = fold(script.language());
        candidates
            .iter()
            .filter(|t| {
                self.state_of(t)
                    .and_then(|s| self.languages_of_state(s))
                    .map(|langs| langs.iter().any(|l| fold(l) == lang))
                    .unwrap_or(false)
            })
            .copied()
            .collect()
    }

    fn is_resolved(&self, candidates: &[GeoTuple]) -> bool {
        if candidates.is_empty() {
            return false;
        }
        let states: Vec<Option<&str>> = candidates.iter().map(|t| self.state_of(t)).collect();
        states.windows(2).all(|w| w[0] == w[1]) && states[0].is_some()
    }

    /// Three-stage ambiguity resolution: filter by the detected script's
    /// language, then re-query pairwise adjacent token concatenations,
    /// then give up with an empty set.
    pub fn resolve_ambiguity(
        &self,
        tokens: &[String],
        keyword_sets: &[Vec<GeoTuple>],
        detected_script: ScriptId,
    ) -> Vec<GeoTuple> {
        let common = common_tuples(keyword_sets).unwrap_or_default();
        if self.is_resolved(&common) {
            return common;
        }

        // Stage 1: secondary information — the detected language.
        let pool: Vec<GeoTuple> = if common.is_empty() {
            let mut union = Vec::new();
            for set in keyword_sets {
                for t in set {
                    push_unique(&mut union, *t);
                }
            }
            union
        } else {
            common
        };
        let filtered = self.filter_by_script(&pool, detected_script);
        if self.is_resolved(&filtered) {
            return filtered;
        }

        // Stage 2: pairwise adjacent concatenations, left to right.
        let bigram_sets: Vec<Vec<GeoTuple>> = tokens
            .windows(2)
            .map(|w| self.keyword_tuples(&format!("{} {}", w[0], w[1])))
            .filter(|s| !s.is_empty())
            .collect();
        if !bigram_sets.is_empty() {
            let common2 = common_tuples(&bigram_sets).unwrap_or_default();
            if self.is_resolved(&common2) {
                return common2;
            }
        }

        // Stage 3: unresolvable.
        Vec::new()
    }

    /// Full resolution over filtered keywords, falling back to the
    /// ambiguity protocol when the plain intersection is not decisive.
    pub fn resolve(
        &self,
        tokens: &[String],
        keywords: &[String],
        detected_script: ScriptId,
    ) -> Vec<GeoTuple> {
        let keyword_sets: Vec<Vec<GeoTuple>> =
            keywords.iter().map(|k| self.keyword_tuples(k)).collect();
        if let Ok(common) = common_tuples(&keyword_sets) {
            if self.is_resolved(&common) {
                return common;
            }
        }
        self.resolve_ambiguity(tokens, &keyword_sets, detected_script)
    }

    /// Nearest LLDB record by great-circle distance; ties break toward
    /// the smaller city id.
    pub fn reverse_geocode(&self, latitude: f64, longitude: f64) -> Result<&LldbRecord, GeoError> {
        reverse_geocode(latitude, longitude, &self.lldb)
    }

    /// RLDB lookup: city name first, then the record's state.
    pub fn languages_for(&self, record: &LldbRecord) -> Result<Vec<String>, GeoError> {
        let city = fold(&record.city_name);
        if let Some(r) = self.rldb.iter().find(|r| fold(&r.place_or_state) == city) {
            return Ok(r.languages.clone());
        }
        let state = fold(&record.state);
        if let Some(r) = self.rldb.iter().find(|r| fold(&r.place_or_state) == state) {
            return Ok(r.languages.clone());
        }
        Err(GeoError::NoLanguageData(format!(
            "{} / {}",
            record.city_name, record.state
        )))
    }
}

/// Intersection of the non-empty sets; keywords that matched nothing do
/// not annihilate the result. Every set empty is an error.
pub fn common_tuples(sets: &[Vec<GeoTuple>]) -> Result<Vec<GeoTuple>, GeoError> {
    let non_empty: Vec<&Vec<GeoTuple>> = sets.iter().filter(|s| !s.is_empty()).collect();
    if non_empty.is_empty() {
        return Err(GeoError::NoCandidates);
    }
    let mut out = Vec::new();
    for t in non_empty[0] {
        if non_empty[1..].iter().all(|s| contains_tuple(s, t)) {
            push_unique(&mut out, *t);
        }
    }
    Ok(out)
}

const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance on the spherical Earth model.
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Nearest record by haversine distance; ties break toward the smaller
/// city id.
pub fn reverse_geocode(
    latitude: f64,
    longitude: f64,
    lldb: &[LldbRecord],
) -> Result<&LldbRecord, GeoError> {
    let mut best: Option<(&LldbRecord, f64)> = None;
    for r in lldb {
        let d = haversine_km((latitude, longitude), (r.latitude, r.longitude));
        let better = match best {
            None => true,
            Some((prev, pd)) => d < pd || (d == pd && r.city_id < prev.city_id),
        };
        if better {
            best = Some((r, d));
        }
    }
    best.map(|(r, _)| r).ok_or(GeoError::EmptyDatabase)
}

/// Geotag sidecar record, one JSON object per line in the sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeotagRecord {
    pub image_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub pincode: u32,
    pub place: String,
    pub languages: Vec<String>,
    pub resolved_at: String,
}

impl GeotagRecord {
    pub fn new(
        image_id: &str,
        tuple: &GeoTuple,
        place: &str,
        languages: Vec<String>,
        resolved_at: &str,
    ) -> Self {
        Self {
            image_id: image_id.to_string(),
            latitude: tuple.latitude,
            longitude: tuple.longitude,
            pincode: tuple.pincode,
            place: place.to_string(),
            languages,
            resolved_at: resolved_at.to_string(),
        }
    }
}

/// Append one geotag record to the sidecar file.
pub fn append_geotag(record: &GeotagRecord, path: &Path) -> Result<(), GeoError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let line = serde_json::to_string(record).map_err(|e| GeoError::Geotag(e.to_string()))?;
    writeln!(file, "{line}")?;
    Ok(())
}

pub fn read_geotags(path: &Path) -> Result<Vec<GeotagRecord>, GeoError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| GeoError::Geotag(e.to_string()))?);
    }
    Ok(out)
}

pub fn load_csdb(path: &Path) -> Result<Vec<CsdbRecord>, GeoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<CsdbRecord>().enumerate() {
        let rec = row?;
        validate_csdb(&rec).map_err(|reason| GeoError::BadRecord {
            file: path.display().to_string(),
            row: i + 2,
            reason,
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn validate_csdb(rec: &CsdbRecord) -> Result<(), String> {
    if !(100000..=999999).contains(&rec.pincode) {
        return Err(format!("pincode {} is not 6 digits", rec.pincode));
    }
    if rec.taluk.trim().is_empty() {
        return Err("empty taluk".into());
    }
    Ok(())
}

pub fn load_lldb(path: &Path) -> Result<Vec<LldbRecord>, GeoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out: Vec<LldbRecord> = Vec::new();
    for (i, row) in reader.deserialize::<LldbRecord>().enumerate() {
        let rec = row?;
        let reason = if !(-90.0..=90.0).contains(&rec.latitude) {
            Some(format!("latitude {} out of range", rec.latitude))
        } else if !(-180.0..=180.0).contains(&rec.longitude) {
            Some(format!("longitude {} out of range", rec.longitude))
        } else if out.iter().any(|r| r.city_id == rec.city_id) {
            Some(format!("duplicate city id {}", rec.city_id))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(GeoError::BadRecord {
                file: path.display().to_string(),
                row: i + 2,
                reason,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_rldb(path: &Path) -> Result<Vec<RldbRecord>, GeoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out: Vec<RldbRecord> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let place = row.get(0).unwrap_or("").to_string();
        let langs: Vec<String> = row
            .get(1)
            .unwrap_or("")
            .split(';')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let reason = if place.trim().is_empty() {
            Some("empty place".to_string())
        } else if langs.is_empty() {
            Some("empty language list".to_string())
        } else if out.iter().any(|r| fold(&r.place_or_state) == fold(&place)) {
            Some(format!("duplicate key {place:?}"))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(GeoError::BadRecord {
                file: path.display().to_string(),
                row: i + 2,
                reason,
            });
        }
        out.push(RldbRecord {
            place_or_state: place,
            languages: langs,
        });
    }
    Ok(out)
}

/// Parse a raw LLDB coordinate cell, stripping the `N'`/`E'`-style
/// suffixes seen in the source data; south and west become negative.
pub fn parse_coordinate(raw: &str) -> Option<f64> {
    let cleaned = raw.trim().trim_end_matches(['\'', '"', '`']);
    let cleaned = cleaned.trim();
    let (body, sign) = match cleaned.chars().last() {
        Some('N') | Some('n') | Some('E') | Some('e') => (&cleaned[..cleaned.len() - 1], 1.0),
        Some('S') | Some('s') | Some('W') | Some('w') => (&cleaned[..cleaned.len() - 1], -1.0),
        _ => (cleaned, 1.0),
    };
    body.trim().parse::<f64>().ok().map(|v| v * sign)
}
