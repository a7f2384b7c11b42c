//! Text-candidate segmentation: periodic box growth until neighbor
//! overlap, Otsu binarization, convex-hull correction and color-image
//! masking.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::Quad;
use crate::imgproc::{GrayImage, RgbImage};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("growth step must be > 0, got {0}")]
    NonPositiveStep(f64),
    #[error("degenerate hull")]
    DegenerateHull,
    #[error("no text detected")]
    NoText,
    #[error("box ({0}, {1}, {2}, {3}) is invalid or outside the image")]
    BadBox(f64, f64, f64, f64),
}

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, SegmentError> {
        if !(x_min < x_max && y_min < y_max) {
            return Err(SegmentError::BadBox(x_min, y_min, x_max, y_max));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    /// Interiors intersect (touching edges do not count).
    pub fn overlaps(&self, other: &BBox) -> bool {
        self.x_min < other.x_max
            && other.x_min < self.x_max
            && self.y_min < other.y_max
            && other.y_min < self.y_max
    }

    fn y_overlaps(&self, other: &BBox) -> bool {
        self.y_min < other.y_max && other.y_min < self.y_max
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    /// Axis-aligned envelope of a quad, clamped to the image.
    pub fn envelope(quad: &Quad, img_w: usize, img_h: usize) -> Result<Self, SegmentError> {
        let xs = quad.vertices.iter().map(|v| v.0);
        let ys = quad.vertices.iter().map(|v| v.1);
        let x_min = xs.clone().fold(f64::INFINITY, f64::min).max(0.0);
        let x_max = xs.fold(f64::NEG_INFINITY, f64::max).min(img_w as f64);
        let y_min = ys.clone().fold(f64::INFINITY, f64::min).max(0.0);
        let y_max = ys.fold(f64::NEG_INFINITY, f64::max).min(img_h as f64);
        BBox::new(x_min, y_min, x_max, y_max)
    }
}

/// Per-pixel boolean raster sharing the source image dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryMask {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn true_points(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    pts.push((x as f64, y as f64));
                }
            }
        }
        pts
    }

    pub fn to_gray(&self) -> GrayImage {
        let data = self.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, data).expect("mask dimensions are consistent")
    }
}

/// Convex polygon in counter-clockwise order; vertices are extreme points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullPolygon {
    pub vertices: Vec<(f64, f64)>,
}

impl HullPolygon {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        point_in_polygon(&self.vertices, x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    /// Pixels each side expands per growth round.
    pub grow_step: f64,
    /// Per-side growth cap in pixels; 0 selects 0.1 x image width.
    pub max_growth: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            grow_step: 5.0,
            max_growth: 0.0,
        }
    }
}

const GROW_EPS: f64 = 1e-9;

/// Grow every box horizontally by `step` per round until it touches a
/// neighbor, exhausts `max_growth` per side, or reaches the image border.
/// All boxes grow simultaneously, so two boxes approaching each other
/// split the gap evenly. Overlapping input boxes are merged first.
pub fn grow_boxes(
    boxes: &[BBox],
    step: f64,
    max_growth: f64,
    img_w: usize,
    img_h: usize,
) -> Result<Vec<BBox>, SegmentError> {
    if step <= 0.0 {
        return Err(SegmentError::NonPositiveStep(step));
    }
    let mut boxes = merge_overlapping(boxes.to_vec());
    for b in &mut boxes {
        b.x_min = b.x_min.max(0.0);
        b.y_min = b.y_min.max(0.0);
        b.x_max = b.x_max.min(img_w as f64);
        b.y_max = b.y_max.min(img_h as f64);
    }
    let n = boxes.len();
    let mut budget = vec![[max_growth, max_growth]; n]; // [left, right]
    let max_rounds = (max_growth / step).ceil() as usize + 64;

    for _ in 0..max_rounds {
        // Per-side desire this round, before considering neighbors.
        let mut want = vec![[0.0f64; 2]; n];
        for i in 0..n {
            want[i][0] = step.min(budget[i][0]).min(boxes[i].x_min).max(0.0);
            want[i][1] = step
                .min(budget[i][1])
                .min(img_w as f64 - boxes[i].x_max)
                .max(0.0);
        }
        let mut grant = want.clone();
        // Facing pairs split their gap: each side may take up to half of
        // it, or more if the other side wants less.
        for i in 0..n {
            for j in 0..n {
                if i == j || !boxes[i].y_overlaps(&boxes[j]) {
                    continue;
                }
                if boxes[j].x_min >= boxes[i].x_max {
                    let gap = boxes[j].x_min - boxes[i].x_max;
                    if gap <= GROW_EPS {
                        grant[i][1] = 0.0;
                        grant[j][0] = 0.0;
                    } else {
                        grant[i][1] = grant[i][1].min((gap / 2.0).max(gap - want[j][0]));
                        grant[j][0] = grant[j][0].min((gap / 2.0).max(gap - want[i][1]));
                    }
                }
            }
        }
        let mut grew = false;
        for i in 0..n {
            let (left, right) = (grant[i][0].max(0.0), grant[i][1].max(0.0));
            if left > GROW_EPS {
                boxes[i].x_min -= left;
                budget[i][0] -= left;
                grew = true;
            }
            if right > GROW_EPS {
                boxes[i].x_max += right;
                budget[i][1] -= right;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    Ok(boxes)
}

fn merge_overlapping(mut boxes: Vec<BBox>) -> Vec<BBox> {
    loop {
        let mut merged = false;
        'outer: for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].overlaps(&boxes[j]) {
                    let joined = boxes[i].union(&boxes[j]);
                    boxes.swap_remove(j);
                    boxes[i] = joined;
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return boxes;
        }
    }
}

/// Smallest inter-class-variance-maximizing threshold of the histogram.
/// Returns `None` when the histogram holds a single value.
fn otsu_threshold(img: &GrayImage) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let total = img.data().len() as f64;
    if hist.iter().filter(|&&c| c > 0).count() <= 1 {
        return None;
    }
    let overall_sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();
    let mut best = (0u8, f64::NEG_INFINITY);
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    for t in 0..=255usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (overall_sum - sum0) / w1;
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if var > best.1 {
            best = (t as u8, var);
        }
    }
    Some(best.0)
}

/// Mask of pixels that fall inside one of the boxes *and* are foreground
/// under a global Otsu binarization of the image (foreground is the
/// above-threshold class; a single-valued histogram makes every pixel
/// foreground).
pub fn boxes_to_mask(boxes: &[BBox], img: &GrayImage) -> BinaryMask {
    let threshold = otsu_threshold(img);
    let (w, h) = (img.width(), img.height());
    let mut data = vec![false; w * h];
    for b in boxes {
        let x0 = b.x_min.floor().max(0.0) as usize;
        let y0 = b.y_min.floor().max(0.0) as usize;
        let x1 = (b.x_max.ceil() as usize).min(w);
        let y1 = (b.y_max.ceil() as usize).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let fg = match threshold {
                    Some(t) => img.get(x, y) > t,
                    None => true,
                };
                if fg {
                    data[y * w + x] = true;
                }
            }
        }
    }
    BinaryMask {
        width: w,
        height: h,
        data,
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain. Output is counter-clockwise with collinear
/// boundary points excluded; fewer than three non-collinear points is a
/// degenerate hull.
pub fn convex_hull(points: &[(f64, f64)]) -> Result<HullPolygon, SegmentError> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() < 3 {
        return Err(SegmentError::DegenerateHull);
    }

    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(SegmentError::DegenerateHull);
    }
    Ok(HullPolygon { vertices: lower })
}

/// Winding-number point-in-polygon test; points on an edge count inside.
pub fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let n = poly.len();
    const EPS: f64 = 1e-9;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = cross(a, b, (x, y));
        if c.abs() <= EPS
            && x >= a.0.min(b.0) - EPS
            && x <= a.0.max(b.0) + EPS
            && y >= a.1.min(b.1) - EPS
            && y <= a.1.max(b.1) + EPS
        {
            return true;
        }
    }
    let mut winding = 0i32;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.1 <= y {
            if b.1 > y && cross(a, b, (x, y)) > 0.0 {
                winding += 1;
            }
        } else if b.1 <= y && cross(a, b, (x, y)) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Zero every pixel outside the hull; pixels inside or on the hull keep
/// their value.
pub fn mask_by_hull(img: &RgbImage, hull: &HullPolygon) -> RgbImage {
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if !hull.contains(x as f64, y as f64) {
                out.set(x, y, [0, 0, 0]);
            }
        }
    }
    out
}

/// All intermediates produced by [`segment_text_region`].
#[derive(Debug, Clone)]
pub struct SegmentResult {
    pub masked: RgbImage,
    pub hull: HullPolygon,
    pub grown_boxes: Vec<BBox>,
    pub mask: BinaryMask,
}

/// Full segmentation stage: quad envelopes are grown, binarized into a
/// foreground mask, corrected by a convex hull over the foreground pixels
/// and finally used to mask the color image.
pub fn segment_text_region(
    img: &RgbImage,
    quads: &[Quad],
    cfg: &SegmentConfig,
) -> Result<SegmentResult, SegmentError> {
    if quads.is_empty() {
        return Err(SegmentError::NoText);
    }
    let mut boxes = Vec::with_capacity(quads.len());
    for q in quads {
        boxes.push(BBox::envelope(q, img.width(), img.height())?);
    }
    let max_growth = if cfg.max_growth > 0.0 {
        cfg.max_growth
    } else {
        0.1 * img.width() as f64
    };
    let grown = grow_boxes(&boxes, cfg.grow_step, max_growth, img.width(), img.height())?;
    let mask = boxes_to_mask(&grown, &img.to_luma());
    let hull = convex_hull(&mask.true_points())?;
    let masked = mask_by_hull(img, &hull);
    Ok(SegmentResult {
        masked,
        hull,
        grown_boxes: grown,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Quad;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn grow_single_box_caps_at_max_growth() {
        let grown = grow_boxes(&[bx(40.0, 0.0, 50.0, 10.0)], 5.0, 20.0, 100, 10).unwrap();
        assert_eq!(grown, vec![bx(20.0, 0.0, 70.0, 10.0)]);
    }

    #[test]
    fn grow_single_box_clamps_to_image() {
        let grown = grow_boxes(&[bx(5.0, 0.0, 10.0, 10.0)], 5.0, 20.0, 18, 10).unwrap();
        assert_eq!(grown, vec![bx(0.0, 0.0, 18.0, 10.0)]);
    }

    #[test]
    fn grow_pair_meets_in_the_middle() {
        // Worked example: gap 20 split symmetrically, meeting at x = 20.
        let grown = grow_boxes(
            &[bx(0.0, 0.0, 10.0, 10.0), bx(30.0, 0.0, 40.0, 10.0)],
            5.0,
            100.0,
            40,
            10,
        )
        .unwrap();
        assert_eq!(
            grown,
            vec![bx(0.0, 0.0, 20.0, 10.0), bx(20.0, 0.0, 40.0, 10.0)]
        );
    }

    #[test]
    fn grow_touching_boxes_unchanged_horizontally() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        let b = bx(10.0, 0.0, 20.0, 10.0);
        let grown = grow_boxes(&[a, b], 5.0, 50.0, 20, 10).unwrap();
        assert_eq!(grown, vec![a, b]);
    }

    #[test]
    fn grow_rejects_nonpositive_step() {
        assert!(grow_boxes(&[bx(0.0, 0.0, 1.0, 1.0)], 0.0, 10.0, 10, 10).is_err());
    }

    #[test]
    fn grow_output_contains_input_and_interiors_disjoint() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..6);
            let mut boxes = Vec::new();
            for _ in 0..n {
                let x0: f64 = rng.gen_range(0..80) as f64;
                let y0: f64 = rng.gen_range(0..30) as f64;
                boxes.push(bx(
                    x0,
                    y0,
                    x0 + rng.gen_range(2..15) as f64,
                    y0 + rng.gen_range(2..8) as f64,
                ));
            }
            let merged = merge_overlapping(boxes.clone());
            let grown = grow_boxes(&boxes, 4.0, 12.0, 100, 40).unwrap();
            assert_eq!(grown.len(), merged.len());
            for (g, m) in grown.iter().zip(&merged) {
                let clamped = bx(
                    m.x_min.max(0.0),
                    m.y_min.max(0.0),
                    m.x_max.min(100.0),
                    m.y_max.min(40.0),
                );
                assert!(g.contains_box(&clamped), "{g:?} does not contain {clamped:?}");
                assert!(g.x_min >= clamped.x_min - 12.0 - 1e-9);
                assert!(g.x_max <= clamped.x_max + 12.0 + 1e-9);
                assert_eq!(g.y_min, clamped.y_min);
                assert_eq!(g.y_max, clamped.y_max);
            }
            for i in 0..grown.len() {
                for j in i + 1..grown.len() {
                    assert!(
                        !grown[i].overlaps(&grown[j]),
                        "grown boxes overlap: {:?} {:?}",
                        grown[i],
                        grown[j]
                    );
                }
            }
        }
    }

    #[test]
    fn mask_empty_boxes_all_false() {
        let img = GrayImage::filled(8, 8, 100);
        let mask = boxes_to_mask(&[], &img);
        assert!(mask.data.iter().all(|&b| !b));
    }

    #[test]
    fn mask_uniform_image_whole_box() {
        let img = GrayImage::filled(8, 8, 100);
        let mask = boxes_to_mask(&[bx(0.0, 0.0, 8.0, 8.0)], &img);
        assert!(mask.data.iter().all(|&b| b));
    }

    #[test]
    fn mask_bimodal_matches_exhaustive_otsu_oracle() {
        // 8x8 bimodal fixture: a 220-valued block in a 30-valued field.
        let mut img = GrayImage::filled(8, 8, 30);
        for y in 2..6 {
            for x in 3..7 {
                img.set(x, y, 220);
            }
        }
        // Oracle: exhaustive search over all 256 cutoffs.
        let mut hist = [0u64; 256];
        for &v in img.data() {
            hist[v as usize] += 1;
        }
        let total = 64.0;
        let mut best_t = 0usize;
        let mut best_var = f64::NEG_INFINITY;
        for t in 0..=255usize {
            let w0: f64 = hist[..=t].iter().sum::<u64>() as f64;
            let w1 = total - w0;
            if w0 == 0.0 || w1 == 0.0 {
                continue;
            }
            let mu0: f64 = hist[..=t]
                .iter()
                .enumerate()
                .map(|(v, &c)| v as f64 * c as f64)
                .sum::<f64>()
                / w0;
            let mu1: f64 = hist[t + 1..]
                .iter()
                .enumerate()
                .map(|(v, &c)| (v + t + 1) as f64 * c as f64)
                .sum::<f64>()
                / w1;
            let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
            if var > best_var {
                best_var = var;
                best_t = t;
            }
        }
        let mask = boxes_to_mask(&[bx(0.0, 0.0, 8.0, 8.0)], &img);
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(
                    mask.get(x, y),
                    img.get(x, y) as usize > best_t,
                    "pixel ({x},{y})"
                );
                assert_eq!(mask.get(x, y), img.get(x, y) == 220);
            }
        }
    }

    #[test]
    fn hull_triangle() {
        let hull = convex_hull(&[(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)]).unwrap();
        assert_eq!(hull.vertices.len(), 3);
        for p in [(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)] {
            assert!(hull.vertices.contains(&p));
        }
    }

    #[test]
    fn hull_excludes_interior_point() {
        let hull = convex_hull(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (0.0, 1.0),
            (0.5, 0.5),
        ])
        .unwrap();
        assert_eq!(hull.vertices.len(), 4);
        assert!(!hull.vertices.contains(&(0.5, 0.5)));
    }

    #[test]
    fn hull_ccw_orientation_and_idempotence() {
        let pts = [
            (0.0, 0.0),
            (5.0, -1.0),
            (7.0, 3.0),
            (4.0, 6.0),
            (-1.0, 4.0),
            (2.0, 2.0),
        ];
        let hull = convex_hull(&pts).unwrap();
        let v = &hull.vertices;
        for i in 0..v.len() {
            let c = cross(v[i], v[(i + 1) % v.len()], v[(i + 2) % v.len()]);
            assert!(c > 0.0, "turn {i} not strictly CCW");
        }
        let again = convex_hull(v).unwrap();
        let mut a = v.clone();
        let mut b = again.vertices.clone();
        a.sort_by(|p, q| p.partial_cmp(q).unwrap());
        b.sort_by(|p, q| p.partial_cmp(q).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn hull_degenerate_errors() {
        assert!(matches!(
            convex_hull(&[(0.0, 0.0), (1.0, 1.0)]),
            Err(SegmentError::DegenerateHull)
        ));
        assert!(matches!(
            convex_hull(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]),
            Err(SegmentError::DegenerateHull)
        ));
    }

    #[test]
    fn hull_matches_half_plane_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for case in 0..60 {
            let pts: Vec<(f64, f64)> = (0..12)
                .map(|_| (rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64))
                .collect();
            let hull = match convex_hull(&pts) {
                Ok(h) => h,
                Err(_) => continue,
            };
            let oracle = half_plane_hull_vertices(&pts);
            let mut got: Vec<(f64, f64)> = hull.vertices.clone();
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut want = oracle;
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(got, want, "case {case}");
        }
    }

    /// O(n^3) oracle: a point is a hull vertex iff some half-plane through
    /// it contains all other points strictly on one side (with no other
    /// point beyond it on the boundary line segment between supports).
    fn half_plane_hull_vertices(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let n = pts.len();
        let mut vertices = Vec::new();
        'point: for (i, &p) in pts.iter().enumerate() {
            // p is a vertex iff it is NOT inside or on the hull of the
            // remaining points: check every directed line through two
            // other points; p must lie strictly outside some edge of any
            // polygon formed by the rest. Equivalently: p is a vertex iff
            // it cannot be written as lying inside/on the others' hull,
            // tested by half-plane inclusion below.
            let others: Vec<(f64, f64)> = pts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &q)| q)
                .collect();
            if others.len() < 2 {
                vertices.push(p);
                continue;
            }
            // p lies inside or on the hull of `others` iff for every
            // directed pair (a, b) of others with all others on the left,
            // p is also on the left (or on the line within the segment
            // span). If p violates some supporting half-plane, it is a
            // hull vertex.
            let mut inside = true;
            for a in 0..others.len() {
                for b in 0..others.len() {
                    if a == b {
                        continue;
                    }
                    let supporting = others
                        .iter()
                        .all(|&q| cross(others[a], others[b], q) >= -1e-9);
                    if supporting && cross(others[a], others[b], p) < -1e-9 {
                        inside = false;
                    }
                }
            }
            if !inside {
                vertices.push(p);
                continue 'point;
            }
            // Collinear-on-boundary points are not vertices (strict hull).
        }
        vertices
    }

    #[test]
    fn mask_by_hull_full_rectangle_keeps_image() {
        let img = RgbImage::filled(6, 5, [9, 8, 7]);
        let hull = convex_hull(&[(0.0, 0.0), (5.0, 0.0), (5.0, 4.0), (0.0, 4.0)]).unwrap();
        assert_eq!(mask_by_hull(&img, &hull), img);
    }

    #[test]
    fn mask_by_hull_triangle_zeroes_outside() {
        let img = RgbImage::filled(10, 10, [50, 60, 70]);
        let hull = convex_hull(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]).unwrap();
        let out = mask_by_hull(&img, &hull);
        assert_eq!(out.get(9, 9), [0, 0, 0]);
        assert_eq!(out.get(8, 0), [0, 0, 0]);
        assert_eq!(out.get(1, 1), [50, 60, 70]);
        assert_eq!(out.get(0, 4), [50, 60, 70]); // vertex counts inside
    }

    #[test]
    fn mask_by_hull_idempotent() {
        let mut img = RgbImage::filled(12, 12, [20, 30, 40]);
        img.set(3, 3, [200, 10, 10]);
        let hull =
            convex_hull(&[(1.0, 1.0), (9.0, 2.0), (10.0, 8.0), (4.0, 10.0), (0.5, 6.0)]).unwrap();
        let once = mask_by_hull(&img, &hull);
        let twice = mask_by_hull(&once, &hull);
        assert_eq!(once, twice);
    }

    #[test]
    fn mask_by_hull_matches_crossing_number_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for case in 0..30 {
            let pts: Vec<(f64, f64)> = (0..8)
                .map(|_| (rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64))
                .collect();
            let hull = match convex_hull(&pts) {
                Ok(h) => h,
                Err(_) => continue,
            };
            let img = RgbImage::filled(20, 20, [255, 255, 255]);
            let out = mask_by_hull(&img, &hull);
            for y in 0..20 {
                for x in 0..20 {
                    let kept = out.get(x, y) != [0, 0, 0];
                    let inside = crossing_number_inside(&hull.vertices, x as f64, y as f64);
                    assert_eq!(kept, inside, "case {case} pixel ({x},{y})");
                }
            }
        }
    }

    /// Independent crossing-number implementation with explicit on-edge
    /// handling, used as the point-membership oracle.
    fn crossing_number_inside(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
        let n = poly.len();
        for i in 0..n {
            let (ax, ay) = poly[i];
            let (bx, by) = poly[(i + 1) % n];
            let d = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
            if d.abs() <= 1e-9
                && x >= ax.min(bx) - 1e-9
                && x <= ax.max(bx) + 1e-9
                && y >= ay.min(by) - 1e-9
                && y <= ay.max(by) + 1e-9
            {
                return true;
            }
        }
        let mut crossings = 0;
        for i in 0..n {
            let (ax, ay) = poly[i];
            let (bx, by) = poly[(i + 1) % n];
            if (ay > y) != (by > y) {
                let x_at = ax + (y - ay) / (by - ay) * (bx - ax);
                if x < x_at {
                    crossings += 1;
                }
            }
        }
        crossings % 2 == 1
    }

    #[test]
    fn segment_requires_quads() {
        let img = RgbImage::filled(10, 10, [0, 0, 0]);
        assert!(matches!(
            segment_text_region(&img, &[], &SegmentConfig::default()),
            Err(SegmentError::NoText)
        ));
    }

    #[test]
    fn segment_glyph_fixture() {
        // Bright glyph block inside a dark image; one covering quad.
        let mut img = RgbImage::filled(40, 20, [10, 10, 10]);
        for y in 6..14 {
            for x in 10..30 {
                img.set(x, y, [240, 240, 240]);
            }
        }
        let quad = Quad::axis_aligned(8.0, 4.0, 32.0, 16.0, 0.9);
        let cfg = SegmentConfig {
            grow_step: 5.0,
            max_growth: 4.0,
        };
        let result = segment_text_region(&img, &[quad], &cfg).unwrap();
        // Hull covers exactly the glyph block's extremes.
        for p in [(10.0, 6.0), (29.0, 6.0), (29.0, 13.0), (10.0, 13.0)] {
            assert!(result.hull.contains(p.0, p.1));
        }
        // Outside the hull the masked image is zero.
        assert_eq!(result.masked.get(0, 0), [0, 0, 0]);
        assert_eq!(result.masked.get(39, 19), [0, 0, 0]);
        // Glyph pixels survive.
        assert_eq!(result.masked.get(15, 10), [240, 240, 240]);
        // Grown boxes contain the original envelope.
        assert!(result.grown_boxes[0].contains_box(&BBox::new(8.0, 4.0, 32.0, 16.0).unwrap()));
    }

    #[test]
    fn segment_two_words_bridge_gap() {
        let mut img = RgbImage::filled(60, 16, [5, 5, 5]);
        for (x0, x1) in [(4usize, 20usize), (40, 56)] {
            for y in 4..12 {
                for x in x0..x1 {
                    img.set(x, y, [250, 250, 250]);
                }
            }
        }
        let quads = [
            Quad::axis_aligned(4.0, 4.0, 20.0, 12.0, 0.9),
            Quad::axis_aligned(40.0, 4.0, 56.0, 12.0, 0.9),
        ];
        let cfg = SegmentConfig {
            grow_step: 5.0,
            max_growth: 30.0,
        };
        let result = segment_text_region(&img, &quads, &cfg).unwrap();
        // Boxes meet in the gap.
        assert_eq!(result.grown_boxes.len(), 2);
        assert!((result.grown_boxes[0].x_max - result.grown_boxes[1].x_min).abs() < 1e-9);
        // Hull covers both word centers.
        assert!(result.hull.contains(12.0, 8.0));
        assert!(result.hull.contains(48.0, 8.0));
    }
}
