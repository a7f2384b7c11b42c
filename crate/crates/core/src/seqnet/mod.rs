//! Reference-scale sequence recognizer: MaxOut convolutional features, a
//! bidirectional LSTM with per-step softmax, CTC decoding and loss, and
//! SGD-with-momentum training at toy scale.
//!
//! Class index 0 is the CTC blank; real characters occupy indices
//! `1..=alphabet.len()`.

mod ctc;
mod font;
mod net;
mod params_io;
mod recognize;
mod train;

pub use ctc::ctc_loss;
pub use font::{render_word_strip, strip_windows, GLYPH_HEIGHT, GLYPH_WIDTH};
pub use net::{bilstm_forward, bilstm_states, maxout_forward, sgd_momentum_step, LstmParams,
    Mat, MaxoutParams, SeqNetParams, FEATURE_DIM, INPUT_DIM, LSTM_HIDDEN, MAXOUT_PIECES,
    STRIP_HEIGHT, STRIP_WIDTH};
pub use params_io::{load_alphabet, load_params, save_alphabet, save_params};
pub use recognize::{order_boxes, recognize, Recognition};
pub use train::{train_head, TrainConfig, TrainOutcome, Trainer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeqNetError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite parameter value")]
    NonFiniteParam,
    #[error("target longer than path capacity (target needs {needed} steps, path has {have})")]
    InfeasibleTarget { needed: usize, have: usize },
    #[error("empty head set")]
    EmptyHeads,
    #[error("no boxes to recognize")]
    NoBoxes,
    #[error("invalid probability row at step {0}")]
    InvalidDistribution(usize),
    #[error("label index {0} outside alphabet")]
    BadLabel(usize),
    #[error("alphabet: {0}")]
    Alphabet(String),
    #[error("parameter file: {0}")]
    ParamFile(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Ordered label set for one language head plus the blank at class 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    blank_marker: char,
    chars: Vec<char>,
}

impl Alphabet {
    pub fn new(blank_marker: char, chars: Vec<char>) -> Result<Self, SeqNetError> {
        let mut seen = std::collections::HashSet::new();
        for &c in &chars {
            if c == blank_marker {
                return Err(SeqNetError::Alphabet(format!(
                    "blank marker {blank_marker:?} also listed as a character"
                )));
            }
            if !seen.insert(c) {
                return Err(SeqNetError::Alphabet(format!("duplicate character {c:?}")));
            }
        }
        Ok(Self {
            blank_marker,
            chars,
        })
    }

    /// Uppercase English letters and digits with `-` as the blank marker.
    pub fn english() -> Self {
        let chars = ('A'..='Z').chain('0'..='9').collect();
        Self {
            blank_marker: '-',
            chars,
        }
    }

    /// Number of classes including the blank.
    pub fn num_classes(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn blank_marker(&self) -> char {
        self.blank_marker
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    /// Class index for a character; blank maps to 0.
    pub fn class_of(&self, c: char) -> Option<usize> {
        if c == self.blank_marker {
            return Some(0);
        }
        self.chars.iter().position(|&a| a == c).map(|i| i + 1)
    }

    pub fn char_of(&self, class: usize) -> Option<char> {
        if class == 0 {
            Some(self.blank_marker)
        } else {
            self.chars.get(class - 1).copied()
        }
    }

    pub fn labels_of(&self, text: &str) -> Result<LabelSequence, SeqNetError> {
        let mut labels = Vec::with_capacity(text.chars().count());
        for c in text.chars() {
            match self.class_of(c) {
                Some(k) if k > 0 => labels.push(k),
                _ => {
                    return Err(SeqNetError::Alphabet(format!(
                        "character {c:?} not in alphabet"
                    )))
                }
            }
        }
        Ok(LabelSequence(labels))
    }

    pub fn text_of(&self, labels: &LabelSequence) -> String {
        labels
            .0
            .iter()
            .filter_map(|&k| self.char_of(k))
            .collect()
    }

    /// Parse a path written with this alphabet's characters, e.g.
    /// `"--ddd-ee-"`.
    pub fn path_of(&self, text: &str) -> Result<LabelPath, SeqNetError> {
        let mut path = Vec::new();
        for c in text.chars() {
            match self.class_of(c) {
                Some(k) => path.push(k),
                None => {
                    return Err(SeqNetError::Alphabet(format!(
                        "character {c:?} not in alphabet"
                    )))
                }
            }
        }
        Ok(LabelPath(path))
    }
}

/// Sequence of `T` feature vectors of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence(pub Vec<Vec<f64>>);

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0.first().map_or(0, |v| v.len())
    }
}

/// Per-timestep distributions over the alphabet classes (blank included).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbSequence {
    rows: Vec<Vec<f64>>,
}

impl ProbSequence {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, SeqNetError> {
        for (t, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&p| !(p >= 0.0)) {
                return Err(SeqNetError::InvalidDistribution(t));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }
}

/// Per-step softmax over raw scores, computed in f64 with the usual
/// max-shift for stability.
pub fn softmax_rows(logits: &[Vec<f64>]) -> ProbSequence {
    let rows = logits
        .iter()
        .map(|row| {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / sum).collect()
        })
        .collect();
    ProbSequence { rows }
}

/// Sequence of class indices of length `T`; blanks allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPath(pub Vec<usize>);

/// Sequence of real (non-blank) labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSequence(pub Vec<usize>);

impl LabelSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The CTC projection: collapse consecutive repeated labels, then delete
/// blanks.
pub fn beta_collapse(path: &LabelPath) -> LabelSequence {
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for &k in &path.0 {
        if Some(k) != prev && k != 0 {
            out.push(k);
        }
        prev = Some(k);
    }
    LabelSequence(out)
}

/// Best-path CTC decoding: per-step argmax followed by the beta
/// projection. Returns the collapsed labels and the path probability
/// (product of per-step maxima). Argmax ties break toward the lowest
/// class index.
pub fn ctc_best_path_decode(p: &ProbSequence) -> (LabelSequence, f64) {
    let mut path = Vec::with_capacity(p.len());
    let mut prob = 1.0;
    for row in p.rows() {
        let mut best = 0usize;
        for (k, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = k;
            }
        }
        path.push(best);
        prob *= row[best];
    }
    (beta_collapse(&LabelPath(path)), prob)
}

/// Pick the highest-scoring head at or above `threshold`; ties break
/// toward the earlier head in the configured order.
pub fn gate_language(scores: &[(String, f64)], threshold: f64) -> Result<Option<String>, SeqNetError> {
    if scores.is_empty() {
        return Err(SeqNetError::EmptyHeads);
    }
    let mut winner: Option<(usize, f64)> = None;
    for (i, (_, s)) in scores.iter().enumerate() {
        if *s >= threshold && winner.map(|(_, best)| *s > best).unwrap_or(true) {
            winner = Some((i, *s));
        }
    }
    Ok(winner.map(|(i, _)| scores[i].0.clone()))
}
