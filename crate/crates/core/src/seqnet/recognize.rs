//! Box reading order and the per-box recognize step: strip extraction,
//! per-head forward passes, language gating and best-path decoding.

use crate::imgproc::{GrayImage, RgbImage};
use crate::segment::BBox;

use super::{
    bilstm_forward, ctc_best_path_decode, gate_language, maxout_forward, strip_windows,
    SeqNetError, SeqNetParams, STRIP_HEIGHT,
};

/// Recognized text for a segmented region.
#[derive(Debug, Clone, PartialEq)]
pub struct Recognition {
    /// Box texts joined by single spaces within a row, rows by newlines.
    pub text: String,
    /// Winning head over all boxes (majority, ties by head order), when
    /// any box gated successfully.
    pub language: Option<String>,
}

/// Group boxes into reading order: rows by vertical overlap (a box joins
/// a row when it overlaps the row's first box by at least half of the
/// smaller height), rows top-to-bottom, boxes left-to-right within a row.
pub fn order_boxes(boxes: &[BBox]) -> Vec<Vec<BBox>> {
    let mut sorted: Vec<BBox> = boxes.to_vec();
    sorted.sort_by(|a, b| {
        let ca = (a.y_min + a.y_max) / 2.0;
        let cb = (b.y_min + b.y_max) / 2.0;
        ca.partial_cmp(&cb).expect("finite box coordinates")
    });
    let mut rows: Vec<Vec<BBox>> = Vec::new();
    for b in sorted {
        let joined = rows.iter_mut().find(|row| {
            let first = row[0];
            let overlap = first.y_max.min(b.y_max) - first.y_min.max(b.y_min);
            overlap >= 0.5 * first.height().min(b.height())
        });
        match joined {
            Some(row) => row.push(b),
            None => rows.push(vec![b]),
        }
    }
    for row in &mut rows {
        row.sort_by(|a, b| a.x_min.partial_cmp(&b.x_min).expect("finite box coordinates"));
    }
    rows
}

/// Crop a box out of a gray image, clamped to bounds.
fn crop(img: &GrayImage, b: &BBox) -> GrayImage {
    let x0 = b.x_min.floor().max(0.0) as usize;
    let y0 = b.y_min.floor().max(0.0) as usize;
    let x1 = (b.x_max.ceil() as usize).clamp(x0 + 1, img.width());
    let y1 = (b.y_max.ceil() as usize).clamp(y0 + 1, img.height());
    let mut data = Vec::with_capacity((x1 - x0) * (y1 - y0));
    for y in y0..y1 {
        for x in x0..x1 {
            data.push(img.get(x, y));
        }
    }
    GrayImage::new(x1 - x0, y1 - y0, data).expect("crop bounds are consistent")
}

/// Nearest-neighbor resize to the recognizer strip height, preserving
/// aspect ratio.
fn resize_to_strip_height(img: &GrayImage) -> GrayImage {
    if img.height() == STRIP_HEIGHT {
        return img.clone();
    }
    let scale = STRIP_HEIGHT as f64 / img.height() as f64;
    let new_w = ((img.width() as f64 * scale).round() as usize).max(1);
    let mut data = Vec::with_capacity(new_w * STRIP_HEIGHT);
    for y in 0..STRIP_HEIGHT {
        let sy = ((y as f64 / scale) as usize).min(img.height() - 1);
        for x in 0..new_w {
            let sx = ((x as f64 / scale) as usize).min(img.width() - 1);
            data.push(img.get(sx, sy));
        }
    }
    GrayImage::new(new_w, STRIP_HEIGHT, data).expect("resize bounds are consistent")
}

/// Run every head over one strip sequence; returns per-head (id, decoded
/// text, confidence), where confidence is the mean per-step maximum
/// probability.
fn run_heads(
    strips: &[Vec<f64>],
    heads: &[SeqNetParams],
) -> Result<Vec<(String, String, f64)>, SeqNetError> {
    let mut out = Vec::with_capacity(heads.len());
    for head in heads {
        let features = maxout_forward(strips, &head.maxout)?;
        let probs = bilstm_forward(&features, head)?;
        let confidence = probs
            .rows()
            .iter()
            .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .sum::<f64>()
            / probs.len().max(1) as f64;
        let (labels, _) = ctc_best_path_decode(&probs);
        out.push((head.head_id.clone(), head.alphabet.text_of(&labels), confidence));
    }
    Ok(out)
}

/// Recognize text in reading order over the segmented region's boxes.
/// Every head runs per box; the box text comes from the head passing the
/// confidence gate. Boxes where no head gates contribute nothing.
pub fn recognize(
    masked: &RgbImage,
    boxes: &[BBox],
    heads: &[SeqNetParams],
    gate_threshold: f64,
) -> Result<Recognition, SeqNetError> {
    if boxes.is_empty() {
        return Err(SeqNetError::NoBoxes);
    }
    if heads.is_empty() {
        return Err(SeqNetError::EmptyHeads);
    }
    let gray = masked.to_luma();
    let mut head_wins: Vec<usize> = vec![0; heads.len()];
    let mut lines = Vec::new();
    for row in order_boxes(boxes) {
        let mut words = Vec::new();
        for b in &row {
            let strip = resize_to_strip_height(&crop(&gray, b));
            let strips = strip_windows(&strip)?;
            let results = run_heads(&strips, heads)?;
            let scores: Vec<(String, f64)> = results
                .iter()
                .map(|(id, _, conf)| (id.clone(), *conf))
                .collect();
            if let Some(winner) = gate_language(&scores, gate_threshold)? {
                let idx = heads
                    .iter()
                    .position(|h| h.head_id == winner)
                    .expect("winner comes from heads");
                head_wins[idx] += 1;
                let text = &results[idx].1;
                if !text.is_empty() {
                    words.push(text.clone());
                }
            }
        }
        if !words.is_empty() {
            lines.push(words.join(" "));
        }
    }
    let language = head_wins
        .iter()
        .enumerate()
        .filter(|&(_, &n)| n > 0)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| heads[i].head_id.clone());
    Ok(Recognition {
        text: lines.join("\n"),
        language,
    })
}
