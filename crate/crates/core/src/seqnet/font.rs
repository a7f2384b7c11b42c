//! Bundled 8x8 bitmap toy font (uppercase letters and digits) and strip
//! rendering for desk-scale training fixtures.

use crate::imgproc::GrayImage;

use super::{SeqNetError, STRIP_HEIGHT, STRIP_WIDTH};

pub const GLYPH_WIDTH: usize = 8;
pub const GLYPH_HEIGHT: usize = 8;
/// Rendered glyph cell after 2x scaling.
pub const CELL: usize = 16;

/// Rows are bytes, most-significant bit leftmost.
fn glyph(c: char) -> Option<[u8; 8]> {
    let rows = match c {
        'A' => [0x38, 0x6C, 0xC6, 0xC6, 0xFE, 0xC6, 0xC6, 0x00],
        'B' => [0xFC, 0xC6, 0xC6, 0xFC, 0xC6, 0xC6, 0xFC, 0x00],
        'C' => [0x7C, 0xC6, 0xC0, 0xC0, 0xC0, 0xC6, 0x7C, 0x00],
        'D' => [0xF8, 0xCC, 0xC6, 0xC6, 0xC6, 0xCC, 0xF8, 0x00],
        'E' => [0xFE, 0xC0, 0xC0, 0xFC, 0xC0, 0xC0, 0xFE, 0x00],
        'F' => [0xFE, 0xC0, 0xC0, 0xFC, 0xC0, 0xC0, 0xC0, 0x00],
        'G' => [0x7C, 0xC6, 0xC0, 0xCE, 0xC6, 0xC6, 0x7C, 0x00],
        'H' => [0xC6, 0xC6, 0xC6, 0xFE, 0xC6, 0xC6, 0xC6, 0x00],
        'I' => [0x7C, 0x10, 0x10, 0x10, 0x10, 0x10, 0x7C, 0x00],
        'J' => [0x1E, 0x06, 0x06, 0x06, 0xC6, 0xC6, 0x7C, 0x00],
        'K' => [0xC6, 0xCC, 0xD8, 0xF0, 0xD8, 0xCC, 0xC6, 0x00],
        'L' => [0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xFE, 0x00],
        'M' => [0xC6, 0xEE, 0xFE, 0xD6, 0xC6, 0xC6, 0xC6, 0x00],
        'N' => [0xC6, 0xE6, 0xF6, 0xDE, 0xCE, 0xC6, 0xC6, 0x00],
        'O' => [0x7C, 0xC6, 0xC6, 0xC6, 0xC6, 0xC6, 0x7C, 0x00],
        'P' => [0xFC, 0xC6, 0xC6, 0xFC, 0xC0, 0xC0, 0xC0, 0x00],
        'Q' => [0x7C, 0xC6, 0xC6, 0xC6, 0xD6, 0xCC, 0x76, 0x00],
        'R' => [0xFC, 0xC6, 0xC6, 0xFC, 0xD8, 0xCC, 0xC6, 0x00],
        'S' => [0x7C, 0xC6, 0xC0, 0x7C, 0x06, 0xC6, 0x7C, 0x00],
        'T' => [0xFE, 0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x00],
        'U' => [0xC6, 0xC6, 0xC6, 0xC6, 0xC6, 0xC6, 0x7C, 0x00],
        'V' => [0xC6, 0xC6, 0xC6, 0xC6, 0x6C, 0x38, 0x10, 0x00],
        'W' => [0xC6, 0xC6, 0xC6, 0xD6, 0xFE, 0xEE, 0xC6, 0x00],
        'X' => [0xC6, 0x6C, 0x38, 0x38, 0x6C, 0xC6, 0xC6, 0x00],
        'Y' => [0xC6, 0xC6, 0x6C, 0x38, 0x10, 0x10, 0x10, 0x00],
        'Z' => [0xFE, 0x0C, 0x18, 0x30, 0x60, 0xC0, 0xFE, 0x00],
        '0' => [0x7C, 0xCE, 0xD6, 0xD6, 0xE6, 0xC6, 0x7C, 0x00],
        '1' => [0x18, 0x38, 0x18, 0x18, 0x18, 0x18, 0x7E, 0x00],
        '2' => [0x7C, 0xC6, 0x06, 0x3C, 0x60, 0xC0, 0xFE, 0x00],
        '3' => [0x7C, 0xC6, 0x06, 0x3C, 0x06, 0xC6, 0x7C, 0x00],
        '4' => [0x0C, 0x1C, 0x3C, 0x6C, 0xFE, 0x0C, 0x0C, 0x00],
        '5' => [0xFE, 0xC0, 0xFC, 0x06, 0x06, 0xC6, 0x7C, 0x00],
        '6' => [0x7C, 0xC0, 0xFC, 0xC6, 0xC6, 0xC6, 0x7C, 0x00],
        '7' => [0xFE, 0x06, 0x0C, 0x18, 0x30, 0x30, 0x30, 0x00],
        '8' => [0x7C, 0xC6, 0xC6, 0x7C, 0xC6, 0xC6, 0x7C, 0x00],
        '9' => [0x7C, 0xC6, 0xC6, 0x7E, 0x06, 0x06, 0x7C, 0x00],
        _ => return None,
    };
    Some(rows)
}

/// Paint a word onto a gray raster at `(x0, y0)`, one 16x16 cell per
/// character (glyphs scaled 2x), foreground 255.
pub fn draw_word(img: &mut GrayImage, word: &str, x0: usize, y0: usize) -> Result<(), SeqNetError> {
    let mut cx = x0;
    for c in word.chars() {
        let rows = glyph(c).ok_or_else(|| {
            SeqNetError::Alphabet(format!("no toy glyph for character {c:?}"))
        })?;
        for (gy, row) in rows.iter().enumerate() {
            for gx in 0..GLYPH_WIDTH {
                if row & (0x80 >> gx) != 0 {
                    for sy in 0..2 {
                        for sx in 0..2 {
                            let x = cx + gx * 2 + sx;
                            let y = y0 + gy * 2 + sy;
                            if x < img.width() && y < img.height() {
                                img.set(x, y, 255);
                            }
                        }
                    }
                }
            }
        }
        cx += CELL;
    }
    Ok(())
}

/// Render a word as a recognizer input strip: height 32, one 16-pixel
/// cell per character, `pad_windows` empty 8-pixel windows on each side,
/// background 0 and glyph pixels 255.
pub fn render_word_strip(word: &str, pad_windows: usize) -> Result<GrayImage, SeqNetError> {
    let chars = word.chars().count();
    let pad_px = pad_windows * STRIP_WIDTH;
    let width = chars * CELL + 2 * pad_px;
    let mut img = GrayImage::filled(width.max(STRIP_WIDTH), STRIP_HEIGHT, 0);
    draw_word(&mut img, word, pad_px, (STRIP_HEIGHT - CELL) / 2)?;
    Ok(img)
}

/// Cut a height-32 strip into consecutive 8-pixel-wide column windows,
/// flattened row-major and scaled to `[0, 1]`. The last window is
/// zero-padded when the width is not a multiple of 8.
pub fn strip_windows(img: &GrayImage) -> Result<Vec<Vec<f64>>, SeqNetError> {
    if img.height() != STRIP_HEIGHT {
        return Err(SeqNetError::ShapeMismatch(format!(
            "strip height {} != {STRIP_HEIGHT}",
            img.height()
        )));
    }
    let t = img.width().div_ceil(STRIP_WIDTH);
    let mut windows = Vec::with_capacity(t);
    for w in 0..t {
        let mut v = vec![0.0; STRIP_HEIGHT * STRIP_WIDTH];
        for y in 0..STRIP_HEIGHT {
            for x in 0..STRIP_WIDTH {
                let gx = w * STRIP_WIDTH + x;
                if gx < img.width() {
                    v[y * STRIP_WIDTH + x] = img.get(gx, y) as f64 / 255.0;
                }
            }
        }
        windows.push(v);
    }
    Ok(windows)
}
