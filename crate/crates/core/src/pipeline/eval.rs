//! Detection, recognition and location metrics over prediction /
//! ground-truth pairs, plus the JSON-lines files that carry them.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::{iou, Quad};
use crate::georesolve::haversine_km;
use crate::lingua::tokenize;

use super::PipelineError;

/// Greedy one-to-one matching by descending IoU at `iou_thresh`, then
/// precision = matches/predictions, recall = matches/ground truths,
/// F = 2PR/(P+R). Zero denominators give zero metrics.
pub fn eval_detection(
    pairs: &[(Vec<Quad>, Vec<Quad>)],
    iou_thresh: f64,
) -> (f64, f64, f64) {
    let mut matches = 0usize;
    let mut predictions = 0usize;
    let mut truths = 0usize;
    for (pred, gt) in pairs {
        predictions += pred.len();
        truths += gt.len();
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (i, p) in pred.iter().enumerate() {
            for (j, g) in gt.iter().enumerate() {
                if let Ok(v) = iou(p, g) {
                    if v >= iou_thresh {
                        candidates.push((v, i, j));
                    }
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut used_pred = vec![false; pred.len()];
        let mut used_gt = vec![false; gt.len()];
        for (_, i, j) in candidates {
            if !used_pred[i] && !used_gt[j] {
                used_pred[i] = true;
                used_gt[j] = true;
                matches += 1;
            }
        }
    }
    let precision = ratio(matches, predictions);
    let recall = ratio(matches, truths);
    let f_score = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f_score)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Word-level exact-match precision/recall by multiset intersection of
/// the tokenized texts (case-folded).
pub fn eval_recognition(pairs: &[(String, String)]) -> (f64, f64) {
    let mut correct = 0usize;
    let mut predicted = 0usize;
    let mut truth = 0usize;
    for (pred, gt) in pairs {
        let mut gt_counts: HashMap<String, usize> = HashMap::new();
        for t in tokenize(gt) {
            *gt_counts.entry(t.text.to_lowercase()).or_default() += 1;
        }
        let pred_tokens = tokenize(pred);
        predicted += pred_tokens.len();
        truth += gt_counts.values().sum::<usize>();
        for t in pred_tokens {
            let key = t.text.to_lowercase();
            if let Some(n) = gt_counts.get_mut(&key) {
                if *n > 0 {
                    *n -= 1;
                    correct += 1;
                }
            }
        }
    }
    (ratio(correct, predicted), ratio(correct, truth))
}

/// Location metric over pairs of optional (lat, lon) positions.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationEval {
    pub mean_km: f64,
    pub resolved_pairs: usize,
    pub total_pairs: usize,
}

impl LocationEval {
    pub fn resolution_rate(&self) -> f64 {
        ratio(self.resolved_pairs, self.total_pairs)
    }
}

/// Mean haversine distance over pairs where both sides are resolved;
/// unresolved pairs are excluded and counted separately.
pub fn eval_location(
    pairs: &[(Option<(f64, f64)>, Option<(f64, f64)>)],
) -> Result<LocationEval, PipelineError> {
    let mut sum = 0.0;
    let mut resolved = 0usize;
    for (pred, gt) in pairs {
        if let (Some(p), Some(g)) = (pred, gt) {
            sum += haversine_km(*p, *g);
            resolved += 1;
        }
    }
    if resolved == 0 {
        return Err(PipelineError::Eval("nothing to average".into()));
    }
    Ok(LocationEval {
        mean_km: sum / resolved as f64,
        resolved_pairs: resolved,
        total_pairs: pairs.len(),
    })
}

/// One detection file line: predicted or ground-truth quads per image.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionEntry {
    pub image_id: String,
    pub quads: Vec<Quad>,
}

/// One recognition file line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecognitionEntry {
    pub image_id: String,
    pub text: String,
}

/// One location file line; missing coordinates mean unresolved.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocationEntry {
    pub image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Eval(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| {
            PipelineError::Eval(format!("{}: line {}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}

/// Join two JSONL files on image id (union of ids; a missing side becomes
/// the `missing` default) and evaluate detection metrics.
pub fn eval_detection_files(
    pred_path: &Path,
    gt_path: &Path,
    iou_thresh: f64,
) -> Result<(f64, f64, f64), PipelineError> {
    let pred: Vec<DetectionEntry> = read_jsonl(pred_path)?;
    let gt: Vec<DetectionEntry> = read_jsonl(gt_path)?;
    let mut by_id: HashMap<String, (Vec<Quad>, Vec<Quad>)> = HashMap::new();
    for e in pred {
        by_id.entry(e.image_id).or_default().0 = e.quads;
    }
    for e in gt {
        by_id.entry(e.image_id).or_default().1 = e.quads;
    }
    let pairs: Vec<(Vec<Quad>, Vec<Quad>)> = by_id.into_values().collect();
    Ok(eval_detection(&pairs, iou_thresh))
}

pub fn eval_recognition_files(
    pred_path: &Path,
    gt_path: &Path,
) -> Result<(f64, f64), PipelineError> {
    let pred: Vec<RecognitionEntry> = read_jsonl(pred_path)?;
    let gt: Vec<RecognitionEntry> = read_jsonl(gt_path)?;
    let mut by_id: HashMap<String, (String, String)> = HashMap::new();
    for e in pred {
        by_id.entry(e.image_id).or_default().0 = e.text;
    }
    for e in gt {
        by_id.entry(e.image_id).or_default().1 = e.text;
    }
    let pairs: Vec<(String, String)> = by_id.into_values().collect();
    Ok(eval_recognition(&pairs))
}

pub fn eval_location_files(
    pred_path: &Path,
    gt_path: &Path,
) -> Result<LocationEval, PipelineError> {
    let pred: Vec<LocationEntry> = read_jsonl(pred_path)?;
    let gt: Vec<LocationEntry> = read_jsonl(gt_path)?;
    type OptPos = Option<(f64, f64)>;
    let mut by_id: HashMap<String, (OptPos, OptPos)> = HashMap::new();
    let pos = |e: &LocationEntry| e.latitude.zip(e.longitude);
    for e in pred {
        by_id.entry(e.image_id.clone()).or_default().0 = pos(&e);
    }
    for e in gt {
        by_id.entry(e.image_id.clone()).or_default().1 = pos(&e);
    }
    let pairs: Vec<(OptPos, OptPos)> = by_id.into_values().collect();
    eval_location(&pairs)
}
