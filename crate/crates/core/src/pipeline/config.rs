//! Flat key/value pipeline configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Relative paths resolve
//! against the config file's directory. Documented keys:
//!
//! ```text
//! gamma            = 2.5        # correction exponent
//! dark_threshold   = 80         # mean-intensity dark cutoff
//! nlm_strength     = 10         # non-local-means bandwidth h
//! nlm_patch        = 3          # NLM patch side (odd)
//! nlm_window       = 7          # NLM search window side (odd)
//! wiener_balance   = 0.001      # Wiener regularization weight
//! wiener_psf       = identity   # identity | box3 | gaussian3
//! score_thresh     = 0.8        # detector score threshold
//! nms_iou          = 0.2        # NMS IoU threshold
//! grow_step        = 5          # box growth step, pixels
//! max_growth       = 0          # per-side cap; 0 = 0.1 x image width
//! gate_threshold   = 0.5        # language gate confidence
//! heads            = en         # comma-separated head ids
//! head.en.params   = en.params  # per-head parameter file
//! head.en.alphabet = en.alphabet
//! maps_dir         = maps       # detector fixture directory
//! csdb             = csdb.csv
//! lldb             = lldb.csv
//! rldb             = rldb.csv
//! translation_dict = dict.tsv   # optional
//! geotag_path      = geotags.jsonl  # optional sidecar output
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::imgproc::CorrectionConfig;
use crate::segment::SegmentConfig;

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsfKind {
    Identity,
    Box3,
    Gaussian3,
}

impl PsfKind {
    pub fn kernel(&self) -> Vec<Vec<f64>> {
        match self {
            PsfKind::Identity => vec![vec![1.0]],
            PsfKind::Box3 => vec![vec![1.0 / 9.0; 3]; 3],
            PsfKind::Gaussian3 => vec![
                vec![1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
                vec![2.0 / 16.0, 4.0 / 16.0, 2.0 / 16.0],
                vec![1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeadConfig {
    pub id: String,
    pub params_path: PathBuf,
    pub alphabet_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub correction: CorrectionConfig,
    pub wiener_psf: PsfKind,
    pub score_thresh: f64,
    pub nms_iou: f64,
    pub segment: SegmentConfig,
    pub gate_threshold: f64,
    pub heads: Vec<HeadConfig>,
    pub maps_dir: PathBuf,
    pub csdb: PathBuf,
    pub lldb: PathBuf,
    pub rldb: PathBuf,
    pub translation_dict: Option<PathBuf>,
    pub geotag_path: Option<PathBuf>,
    pub debug_dir: Option<PathBuf>,
}

impl PipelineConfig {
    /// Parse and validate; every referenced input path must exist.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut kv: HashMap<String, String> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            kv.insert(key.trim().to_string(), value.trim().to_string());
        }

        let num = |kv: &HashMap<String, String>, key: &str, default: f64| -> Result<f64, PipelineError> {
            match kv.get(key) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|_| PipelineError::Config(format!("{key}: bad number {v:?}"))),
            }
        };
        let correction = CorrectionConfig {
            gamma: num(&kv, "gamma", 2.5)?,
            dark_threshold: num(&kv, "dark_threshold", 80.0)?,
            nlm_strength: num(&kv, "nlm_strength", 10.0)?,
            nlm_patch: num(&kv, "nlm_patch", 3.0)? as usize,
            nlm_window: num(&kv, "nlm_window", 7.0)? as usize,
            wiener_balance: num(&kv, "wiener_balance", 1e-3)?,
        };
        correction
            .validate()
            .map_err(|e| PipelineError::Config(format!("correction config: {e}")))?;

        let wiener_psf = match kv.get("wiener_psf").map(String::as_str) {
            None | Some("identity") => PsfKind::Identity,
            Some("box3") => PsfKind::Box3,
            Some("gaussian3") => PsfKind::Gaussian3,
            Some(other) => {
                return Err(PipelineError::Config(format!("wiener_psf: unknown {other:?}")))
            }
        };

        let resolve = |v: &str| -> PathBuf {
            let p = Path::new(v);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let path_of = |key: &str| -> Result<PathBuf, PipelineError> {
            kv.get(key)
                .map(|v| resolve(v))
                .ok_or_else(|| PipelineError::Config(format!("missing key {key}")))
        };

        let mut heads = Vec::new();
        let head_ids = kv
            .get("heads")
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        if head_ids.is_empty() {
            return Err(PipelineError::Config("heads: at least one head id".into()));
        }
        for id in head_ids {
            heads.push(HeadConfig {
                params_path: path_of(&format!("head.{id}.params"))?,
                alphabet_path: path_of(&format!("head.{id}.alphabet"))?,
                id,
            });
        }

        let config = Self {
            correction,
            wiener_psf,
            score_thresh: num(&kv, "score_thresh", 0.8)?,
            nms_iou: num(&kv, "nms_iou", 0.2)?,
            segment: SegmentConfig {
                grow_step: num(&kv, "grow_step", 5.0)?,
                max_growth: num(&kv, "max_growth", 0.0)?,
            },
            gate_threshold: num(&kv, "gate_threshold", 0.5)?,
            heads,
            maps_dir: path_of("maps_dir")?,
            csdb: path_of("csdb")?,
            lldb: path_of("lldb")?,
            rldb: path_of("rldb")?,
            translation_dict: kv.get("translation_dict").map(|v| resolve(v)),
            geotag_path: kv.get("geotag_path").map(|v| resolve(v)),
            debug_dir: kv.get("debug_dir").map(|v| resolve(v)),
        };
        config.validate_paths()?;
        Ok(config)
    }

    fn validate_paths(&self) -> Result<(), PipelineError> {
        let mut required: Vec<(&str, &Path)> = vec![
            ("maps_dir", &self.maps_dir),
            ("csdb", &self.csdb),
            ("lldb", &self.lldb),
            ("rldb", &self.rldb),
        ];
        for h in &self.heads {
            required.push(("head params", &h.params_path));
            required.push(("head alphabet", &h.alphabet_path));
        }
        if let Some(d) = &self.translation_dict {
            required.push(("translation_dict", d));
        }
        for (key, p) in required {
            if !p.exists() {
                return Err(PipelineError::Config(format!(
                    "{key}: path {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}
