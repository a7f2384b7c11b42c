//! Detector-output post-processing: RBOX geometry decoding and
//! locality-aware non-maximum suppression.
//!
//! The fully convolutional detector itself is behind the
//! [`DetectorBackend`] boundary; the reference backend loads precomputed
//! score and geometry maps from fixture files (see [`fixture`]).

pub mod fixture;

pub use fixture::FixtureBackend;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("score map {score_w}x{score_h} does not match geometry map {geo_w}x{geo_h}")]
    DimensionMismatch {
        score_w: usize,
        score_h: usize,
        geo_w: usize,
        geo_h: usize,
    },
    #[error("degenerate zero-area polygon")]
    DegenerateQuad,
    #[error("map buffer length {len} does not match {width}x{height}x{channels}")]
    BadBuffer {
        width: usize,
        height: usize,
        channels: usize,
        len: usize,
    },
    #[error("fixture i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture format: {0}")]
    Format(String),
    #[error("backend: {0}")]
    Backend(String),
}

/// Per-pixel text confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl ScoreMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, DetectError> {
        if data.len() != width * height {
            return Err(DetectError::BadBuffer {
                width,
                height,
                channels: 1,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

/// Per-pixel RBOX geometry: distances to the box's top, right, bottom and
/// left edges plus a rotation angle in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoMap {
    pub width: usize,
    pub height: usize,
    /// Five interleaved channels per pixel: top, right, bottom, left, angle.
    pub data: Vec<f32>,
}

impl GeoMap {
    pub const CHANNELS: usize = 5;

    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, DetectError> {
        if data.len() != width * height * Self::CHANNELS {
            return Err(DetectError::BadBuffer {
                width,
                height,
                channels: Self::CHANNELS,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 5] {
        let i = (y * self.width + x) * Self::CHANNELS;
        [
            self.data[i],
            self.data[i + 1],
            self.data[i + 2],
            self.data[i + 3],
            self.data[i + 4],
        ]
    }
}

/// Produces detector maps for an image. The reference implementation is
/// [`FixtureBackend`], which loads maps precomputed for each image id.
pub trait DetectorBackend {
    fn infer(&self, image_id: &str) -> Result<DetectorMaps, DetectError>;
}

/// One backend inference result. `scale` maps map-pixel coordinates back to
/// image coordinates (1 when maps are at full resolution).
#[derive(Debug, Clone)]
pub struct DetectorMaps {
    pub score: ScoreMap,
    pub geo: GeoMap,
    pub scale: u32,
}

impl DetectorMaps {
    pub fn validate(&self) -> Result<(), DetectError> {
        if self.score.width != self.geo.width || self.score.height != self.geo.height {
            return Err(DetectError::DimensionMismatch {
                score_w: self.score.width,
                score_h: self.score.height,
                geo_w: self.geo.width,
                geo_h: self.geo.height,
            });
        }
        Ok(())
    }
}

/// Quadrilateral text candidate with vertices in consistent winding order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub vertices: [(f64, f64); 4],
    pub score: f64,
}

impl Quad {
    pub fn new(vertices: [(f64, f64); 4], score: f64) -> Self {
        Self { vertices, score }
    }

    /// Axis-aligned quad from corner coordinates.
    pub fn axis_aligned(x_min: f64, y_min: f64, x_max: f64, y_max: f64, score: f64) -> Self {
        Self {
            vertices: [
                (x_min, y_min),
                (x_max, y_min),
                (x_max, y_max),
                (x_min, y_max),
            ],
            score,
        }
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    pub fn scaled(&self, factor: f64) -> Quad {
        let mut v = self.vertices;
        for p in &mut v {
            p.0 *= factor;
            p.1 *= factor;
        }
        Quad {
            vertices: v,
            score: self.score,
        }
    }

    /// Winding-number membership test; points on an edge count as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        crate::segment::point_in_polygon(&self.vertices, x, y)
    }
}

pub(crate) fn polygon_area(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    let mut twice = 0.0;
    for i in 0..n {
        let (x1, y1) = points[i];
        let (x2, y2) = points[(i + 1) % n];
        twice += x1 * y2 - x2 * y1;
    }
    twice.abs() / 2.0
}

/// Decode the RBOX maps into one quad per pixel scoring at or above
/// `score_thresh`. Each quad is the axis-aligned box described by the
/// pixel's four edge distances, rotated by the pixel's angle about the
/// pixel itself. Pixels whose geometry is degenerate (zero area) are
/// dropped.
pub fn decode_rbox(
    score: &ScoreMap,
    geo: &GeoMap,
    score_thresh: f64,
) -> Result<Vec<Quad>, DetectError> {
    if score.width != geo.width || score.height != geo.height {
        return Err(DetectError::DimensionMismatch {
            score_w: score.width,
            score_h: score.height,
            geo_w: geo.width,
            geo_h: geo.height,
        });
    }
    let mut quads = Vec::new();
    for y in 0..score.height {
        for x in 0..score.width {
            let s = score.get(x, y) as f64;
            if s < score_thresh {
                continue;
            }
            let [top, right, bottom, left, angle] = geo.get(x, y);
            let (top, right, bottom, left) =
                (top as f64, right as f64, bottom as f64, left as f64);
            if (top + bottom) <= 0.0 || (left + right) <= 0.0 {
                continue;
            }
            let (sin, cos) = (angle as f64).sin_cos();
            let (px, py) = (x as f64, y as f64);
            let rotate = |dx: f64, dy: f64| (px + dx * cos - dy * sin, py + dx * sin + dy * cos);
            let vertices = [
                rotate(-left, -top),
                rotate(right, -top),
                rotate(right, bottom),
                rotate(-left, bottom),
            ];
            quads.push(Quad::new(vertices, s));
        }
    }
    Ok(quads)
}

/// Intersection-over-union of two convex quads via polygon clipping.
pub fn iou(a: &Quad, b: &Quad) -> Result<f64, DetectError> {
    let area_a = a.area();
    let area_b = b.area();
    if area_a <= 0.0 || area_b <= 0.0 {
        return Err(DetectError::DegenerateQuad);
    }
    let inter = intersection_area(&a.vertices, &b.vertices);
    let union = area_a + area_b - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Sutherland-Hodgman clip of convex `subject` against convex `clip`,
/// returning the intersection area.
fn intersection_area(subject: &[(f64, f64)], clip: &[(f64, f64)]) -> f64 {
    // Clipping needs a consistently-wound clip polygon; normalize to CCW
    // by signed area.
    let signed = |pts: &[(f64, f64)]| -> f64 {
        let n = pts.len();
        (0..n)
            .map(|i| {
                let (x1, y1) = pts[i];
                let (x2, y2) = pts[(i + 1) % n];
                x1 * y2 - x2 * y1
            })
            .sum::<f64>()
    };
    let mut clip_pts: Vec<(f64, f64)> = clip.to_vec();
    if signed(&clip_pts) < 0.0 {
        clip_pts.reverse();
    }

    let mut output: Vec<(f64, f64)> = subject.to_vec();
    let n = clip_pts.len();
    for i in 0..n {
        if output.is_empty() {
            return 0.0;
        }
        let (ax, ay) = clip_pts[i];
        let (bx, by) = clip_pts[(i + 1) % n];
        let inside = |p: (f64, f64)| (bx - ax) * (p.1 - ay) - (by - ay) * (p.0 - ax) >= 0.0;
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur_in = inside(cur);
            let prev_in = inside(prev);
            if cur_in {
                if !prev_in {
                    output.push(line_intersection((ax, ay), (bx, by), prev, cur));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection((ax, ay), (bx, by), prev, cur));
            }
        }
    }
    polygon_area(&output)
}

fn line_intersection(
    a: (f64, f64),
    b: (f64, f64),
    p: (f64, f64),
    q: (f64, f64),
) -> (f64, f64) {
    let a1 = b.1 - a.1;
    let b1 = a.0 - b.0;
    let c1 = a1 * a.0 + b1 * a.1;
    let a2 = q.1 - p.1;
    let b2 = p.0 - q.0;
    let c2 = a2 * p.0 + b2 * p.1;
    let det = a1 * b2 - a2 * b1;
    ((b2 * c1 - b1 * c2) / det, (a1 * c2 - a2 * c1) / det)
}

/// Locality-aware NMS: quads are scanned in their given (row-major) order
/// and a running candidate is merged with the next quad whenever their IoU
/// reaches `iou_thresh`, by weight-accumulating vertex averaging. The
/// merged candidates then pass standard greedy highest-score-first
/// suppression, so output quads have pairwise IoU below `iou_thresh`.
pub fn locality_aware_nms(quads: &[Quad], iou_thresh: f64) -> Vec<Quad> {
    let merged = merge_row_adjacent(quads, iou_thresh);
    greedy_suppress(merged, iou_thresh)
}

#[derive(Clone)]
struct Weighted {
    quad: Quad,
    weight: f64,
}

fn merge_weighted(acc: &Weighted, next: &Quad) -> Weighted {
    let w_next = next.score;
    let total = acc.weight + w_next;
    let mut vertices = [(0.0, 0.0); 4];
    for (i, v) in vertices.iter_mut().enumerate() {
        v.0 = (acc.quad.vertices[i].0 * acc.weight + next.vertices[i].0 * w_next) / total;
        v.1 = (acc.quad.vertices[i].1 * acc.weight + next.vertices[i].1 * w_next) / total;
    }
    Weighted {
        quad: Quad::new(vertices, acc.quad.score.max(next.score)),
        weight: total,
    }
}

fn merge_row_adjacent(quads: &[Quad], iou_thresh: f64) -> Vec<Quad> {
    let mut out: Vec<Quad> = Vec::new();
    let mut current: Option<Weighted> = None;
    for q in quads {
        current = Some(match current {
            Some(acc) => {
                if iou(&acc.quad, q).map(|v| v >= iou_thresh).unwrap_or(false) {
                    merge_weighted(&acc, q)
                } else {
                    out.push(acc.quad);
                    Weighted {
                        quad: q.clone(),
                        weight: q.score,
                    }
                }
            }
            None => Weighted {
                quad: q.clone(),
                weight: q.score,
            },
        });
    }
    if let Some(acc) = current {
        out.push(acc.quad);
    }
    out
}

fn greedy_suppress(mut quads: Vec<Quad>, iou_thresh: f64) -> Vec<Quad> {
    // Stable sort keeps input order among equal scores.
    quads.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
    let mut keep: Vec<Quad> = Vec::new();
    'candidates: for q in quads {
        for kept in &keep {
            if iou(kept, &q).map(|v| v >= iou_thresh).unwrap_or(false) {
                continue 'candidates;
            }
        }
        keep.push(q);
    }
    keep
}
