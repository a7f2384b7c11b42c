//! Image correction applied before text detection: brightness
//! classification, gamma correction, non-local-means denoising and
//! regularized Wiener deblurring.

mod io;
mod wiener;

pub use io::{load_gray, load_rgb, write_pgm};
pub use wiener::wiener_deblur;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImgError {
    #[error("empty input")]
    EmptyImage,
    #[error("gamma must be > 0, got {0}")]
    InvalidGamma(f64),
    #[error("patch and window sizes must be odd and positive (patch {patch}, window {window})")]
    InvalidNeighborhood { patch: usize, window: usize },
    #[error("patch must not exceed window (patch {patch}, window {window})")]
    PatchExceedsWindow { patch: usize, window: usize },
    #[error("point-spread function must sum to 1 (sum {0})")]
    PsfNotNormalized(f64),
    #[error("regularization balance must be > 0, got {0}")]
    InvalidBalance(f64),
    #[error("pixel buffer length {len} does not match {width}x{height}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("image i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("image decode: {0}")]
    Decode(String),
}

/// Single-channel raster with row-major intensities in `[0, 255]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImgError> {
        if data.len() != width * height {
            return Err(ImgError::DimensionMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    /// Sample with coordinates clamped to the image bounds.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn mean_intensity(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let sum: u64 = self.data.iter().map(|&v| v as u64).sum();
        sum as f64 / self.data.len() as f64
    }
}

/// Three-channel raster; all channels share dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    channels: [Vec<u8>; 3],
}

impl RgbImage {
    pub fn new(width: usize, height: usize, channels: [Vec<u8>; 3]) -> Result<Self, ImgError> {
        for ch in &channels {
            if ch.len() != width * height {
                return Err(ImgError::DimensionMismatch {
                    width,
                    height,
                    len: ch.len(),
                });
            }
        }
        Ok(Self {
            width,
            height,
            channels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let channels = [
            vec![rgb[0]; width * height],
            vec![rgb[1]; width * height],
            vec![rgb[2]; width * height],
        ];
        Self {
            width,
            height,
            channels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channel(&self, c: usize) -> &[u8] {
        &self.channels[c]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = y * self.width + x;
        [self.channels[0][i], self.channels[1][i], self.channels[2][i]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = y * self.width + x;
        self.channels[0][i] = rgb[0];
        self.channels[1][i] = rgb[1];
        self.channels[2][i] = rgb[2];
    }

    /// Rec. 601 luma (0.299 R + 0.587 G + 0.114 B), rounded per pixel.
    pub fn to_luma(&self) -> GrayImage {
        let data = (0..self.width * self.height)
            .map(|i| {
                let l = 0.299 * self.channels[0][i] as f64
                    + 0.587 * self.channels[1][i] as f64
                    + 0.114 * self.channels[2][i] as f64;
                l.round().clamp(0.0, 255.0) as u8
            })
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Apply a grayscale operation to each channel independently.
    pub fn map_channels<F>(&self, mut f: F) -> Result<RgbImage, ImgError>
    where
        F: FnMut(&GrayImage) -> Result<GrayImage, ImgError>,
    {
        let mut out = Vec::with_capacity(3);
        for ch in &self.channels {
            let plane = GrayImage {
                width: self.width,
                height: self.height,
                data: ch.clone(),
            };
            out.push(f(&plane)?.data);
        }
        let channels = [out.remove(0), out.remove(0), out.remove(0)];
        RgbImage::new(self.width, self.height, channels)
    }
}

/// Tunables for the correction chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionConfig {
    /// Gamma exponent; applied as `1/gamma` so values above 1 brighten.
    pub gamma: f64,
    /// Mean-intensity cutoff below which an image is classified dark.
    pub dark_threshold: f64,
    /// Non-local-means filter bandwidth `h`.
    pub nlm_strength: f64,
    /// Patch side length in pixels (odd).
    pub nlm_patch: usize,
    /// Search window side length in pixels (odd).
    pub nlm_window: usize,
    /// Wiener regularization weight.
    pub wiener_balance: f64,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            gamma: 2.5,
            dark_threshold: 80.0,
            nlm_strength: 10.0,
            nlm_patch: 3,
            nlm_window: 7,
            wiener_balance: 1e-3,
        }
    }
}

impl CorrectionConfig {
    pub fn validate(&self) -> Result<(), ImgError> {
        if self.gamma <= 0.0 {
            return Err(ImgError::InvalidGamma(self.gamma));
        }
        if self.nlm_patch % 2 == 0 || self.nlm_window % 2 == 0 || self.nlm_patch == 0 {
            return Err(ImgError::InvalidNeighborhood {
                patch: self.nlm_patch,
                window: self.nlm_window,
            });
        }
        if self.nlm_patch > self.nlm_window {
            return Err(ImgError::PatchExceedsWindow {
                patch: self.nlm_patch,
                window: self.nlm_window,
            });
        }
        if self.wiener_balance <= 0.0 {
            return Err(ImgError::InvalidBalance(self.wiener_balance));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Brightness {
    Dark,
    Bright,
}

/// Classify an image as dark or bright from its intensity histogram.
///
/// Dark iff the mean intensity is strictly below `cfg.dark_threshold`.
pub fn classify_brightness(img: &GrayImage, cfg: &CorrectionConfig) -> Result<Brightness, ImgError> {
    if img.is_empty() {
        return Err(ImgError::EmptyImage);
    }
    if img.mean_intensity() < cfg.dark_threshold {
        Ok(Brightness::Dark)
    } else {
        Ok(Brightness::Bright)
    }
}

/// Power-law intensity correction: `out = round(255 * (in/255)^(1/gamma))`.
///
/// `gamma = 1` is the identity; `gamma > 1` brightens.
pub fn gamma_correct(img: &GrayImage, gamma: f64) -> Result<GrayImage, ImgError> {
    if gamma <= 0.0 {
        return Err(ImgError::InvalidGamma(gamma));
    }
    let exponent = 1.0 / gamma;
    // 256-entry lookup table; the map is pointwise.
    let lut: Vec<u8> = (0..256u32)
        .map(|v| {
            let y = 255.0 * (v as f64 / 255.0).powf(exponent);
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    let data = img.data.iter().map(|&v| lut[v as usize]).collect();
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        data,
    })
}

/// Non-local-means denoising.
///
/// Each output pixel is the weighted mean of the pixels in its search
/// window, weighted by patch similarity: for pixels `p`, `q`,
/// `d2 = mean((patch(p) - patch(q))^2)` with patch samples clamped at the
/// borders, and `w = exp(-d2 / h^2)`.
pub fn denoise_nlm(img: &GrayImage, cfg: &CorrectionConfig) -> Result<GrayImage, ImgError> {
    if img.is_empty() {
        return Err(ImgError::EmptyImage);
    }
    cfg.validate()?;
    let pr = (cfg.nlm_patch / 2) as isize;
    let wr = (cfg.nlm_window / 2) as isize;
    let h2 = cfg.nlm_strength * cfg.nlm_strength;
    let patch_area = (cfg.nlm_patch * cfg.nlm_patch) as f64;

    let (w, h) = (img.width as isize, img.height as isize);
    let mut out = vec![0u8; img.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut weight_sum = 0.0;
            let mut value_sum = 0.0;
            for qy in (y - wr).max(0)..=(y + wr).min(h - 1) {
                for qx in (x - wr).max(0)..=(x + wr).min(w - 1) {
                    let mut d2 = 0.0;
                    for dy in -pr..=pr {
                        for dx in -pr..=pr {
                            let a = img.get_clamped(x + dx, y + dy) as f64;
                            let b = img.get_clamped(qx + dx, qy + dy) as f64;
                            d2 += (a - b) * (a - b);
                        }
                    }
                    d2 /= patch_area;
                    let weight = (-d2 / h2).exp();
                    weight_sum += weight;
                    value_sum += weight * img.get(qx as usize, qy as usize) as f64;
                }
            }
            out[(y * w + x) as usize] = (value_sum / weight_sum).round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        data: out,
    })
}
