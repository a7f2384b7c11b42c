//! Binary raster fixture files carrying precomputed detector maps.
//!
//! Layout: eight little-endian `u32` header words — magic `"S2LF"`,
//! version, width, height, channel count, map scale, two reserved zeros —
//! followed by `width * height * channels` little-endian `f32` values,
//! channel-interleaved per pixel. A detector fixture has six channels:
//! score, then the five RBOX geometry channels (top, right, bottom, left,
//! angle).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{DetectError, DetectorBackend, DetectorMaps, GeoMap, ScoreMap};

/// "S2LF" as bytes.
pub const MAGIC: u32 = u32::from_le_bytes(*b"S2LF");
pub const VERSION: u32 = 1;
const HEADER_WORDS: usize = 8;
const MAP_CHANNELS: usize = 1 + GeoMap::CHANNELS;

/// File extension used by the fixture backend.
pub const MAPS_EXT: &str = "maps";

pub fn save_maps(maps: &DetectorMaps, path: &Path) -> Result<(), DetectError> {
    maps.validate()?;
    let (w, h) = (maps.score.width, maps.score.height);
    let mut out = BufWriter::new(File::create(path)?);
    for word in [
        MAGIC,
        VERSION,
        w as u32,
        h as u32,
        MAP_CHANNELS as u32,
        maps.scale,
        0,
        0,
    ] {
        out.write_u32::<LittleEndian>(word)?;
    }
    for i in 0..w * h {
        out.write_f32::<LittleEndian>(maps.score.data[i])?;
        let base = i * GeoMap::CHANNELS;
        for c in 0..GeoMap::CHANNELS {
            out.write_f32::<LittleEndian>(maps.geo.data[base + c])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_maps(path: &Path) -> Result<DetectorMaps, DetectError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = [0u32; HEADER_WORDS];
    for word in &mut header {
        *word = reader.read_u32::<LittleEndian>()?;
    }
    if header[0] != MAGIC {
        return Err(DetectError::Format(format!(
            "bad magic {:#010x}",
            header[0]
        )));
    }
    if header[1] != VERSION {
        return Err(DetectError::Format(format!(
            "unsupported version {}",
            header[1]
        )));
    }
    let (w, h, channels) = (header[2] as usize, header[3] as usize, header[4] as usize);
    if channels != MAP_CHANNELS {
        return Err(DetectError::Format(format!(
            "expected {MAP_CHANNELS} channels, found {channels}"
        )));
    }
    let scale = if header[5] == 0 { 1 } else { header[5] };

    let mut raw = vec![0u8; w * h * channels * 4];
    reader.read_exact(&mut raw)?;
    let mut score = Vec::with_capacity(w * h);
    let mut geo = Vec::with_capacity(w * h * GeoMap::CHANNELS);
    for px in raw.chunks_exact(channels * 4) {
        let mut vals = [0f32; MAP_CHANNELS];
        for (c, v) in vals.iter_mut().enumerate() {
            *v = f32::from_le_bytes(px[c * 4..c * 4 + 4].try_into().unwrap());
        }
        score.push(vals[0]);
        geo.extend_from_slice(&vals[1..]);
    }
    Ok(DetectorMaps {
        score: ScoreMap::new(w, h, score)?,
        geo: GeoMap::new(w, h, geo)?,
        scale,
    })
}

/// Reference detector backend: serves maps from `<dir>/<image_id>.maps`.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    dir: PathBuf,
}

impl FixtureBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn maps_path(&self, image_id: &str) -> PathBuf {
        self.dir.join(format!("{image_id}.{MAPS_EXT}"))
    }
}

impl DetectorBackend for FixtureBackend {
    fn infer(&self, image_id: &str) -> Result<DetectorMaps, DetectError> {
        let path = self.maps_path(image_id);
        let maps = load_maps(&path).map_err(|e| {
            DetectError::Backend(format!("no detector maps at {}: {e}", path.display()))
        })?;
        maps.validate()?;
        Ok(maps)
    }
}

/// Fill maps for a single axis-aligned text rectangle: every pixel inside
/// the (optionally shrunk) rectangle scores `score` and carries exact
/// distances to the rectangle edges. Used by tests and fixture generators.
pub fn rect_maps(
    width: usize,
    height: usize,
    rect: (usize, usize, usize, usize),
    shrink: usize,
    score: f32,
) -> DetectorMaps {
    let (x0, y0, x1, y1) = rect;
    let mut score_map = vec![0f32; width * height];
    let mut geo = vec![0f32; width * height * GeoMap::CHANNELS];
    for y in (y0 + shrink)..(y1.saturating_sub(shrink)) {
        for x in (x0 + shrink)..(x1.saturating_sub(shrink)) {
            let i = y * width + x;
            score_map[i] = score;
            let g = i * GeoMap::CHANNELS;
            geo[g] = (y - y0) as f32;
            geo[g + 1] = (x1 - x) as f32;
            geo[g + 2] = (y1 - y) as f32;
            geo[g + 3] = (x - x0) as f32;
            geo[g + 4] = 0.0;
        }
    }
    DetectorMaps {
        score: ScoreMap::new(width, height, score_map).unwrap(),
        geo: GeoMap::new(width, height, geo).unwrap(),
        scale: 1,
    }
}
