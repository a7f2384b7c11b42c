//! Frequency-domain regularized deconvolution.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{GrayImage, ImgError};

/// Deblur by regularized inverse filtering:
/// `OUT = conj(H) * IN / (|H|^2 + balance)` in the frequency domain, where
/// `H` is the transform of the point-spread function embedded at the origin
/// with circular wrap. Output is rounded and clipped to `[0, 255]`.
///
/// The PSF must sum to 1 (DC gain 1) and `balance` must be positive.
pub fn wiener_deblur(
    img: &GrayImage,
    psf: &[Vec<f64>],
    balance: f64,
) -> Result<GrayImage, ImgError> {
    if img.is_empty() {
        return Err(ImgError::EmptyImage);
    }
    if balance <= 0.0 {
        return Err(ImgError::InvalidBalance(balance));
    }
    let psf_sum: f64 = psf.iter().flatten().sum();
    if (psf_sum - 1.0).abs() > 1e-6 {
        return Err(ImgError::PsfNotNormalized(psf_sum));
    }
    let kh = psf.len();
    let kw = psf.first().map_or(0, |r| r.len());
    if kh == 0 || kw == 0 || kh > img.height() || kw > img.width() {
        return Err(ImgError::DimensionMismatch {
            width: kw,
            height: kh,
            len: kw * kh,
        });
    }

    let (w, h) = (img.width(), img.height());
    let mut input: Vec<Complex64> = img
        .data()
        .iter()
        .map(|&v| Complex64::new(v as f64, 0.0))
        .collect();

    // PSF padded to image size with its center wrapped to (0, 0).
    let mut kernel = vec![Complex64::new(0.0, 0.0); w * h];
    let (cy, cx) = (kh / 2, kw / 2);
    for (i, row) in psf.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let y = (i + h - cy) % h;
            let x = (j + w - cx) % w;
            kernel[y * w + x] = Complex64::new(v, 0.0);
        }
    }

    let mut planner = FftPlanner::new();
    fft2(&mut input, w, h, &mut planner, false);
    fft2(&mut kernel, w, h, &mut planner, false);

    for (f, g) in input.iter_mut().zip(kernel.iter()) {
        *f = g.conj() * *f / (g.norm_sqr() + balance);
    }

    fft2(&mut input, w, h, &mut planner, true);
    let scale = 1.0 / (w * h) as f64;
    let data = input
        .iter()
        .map(|c| (c.re * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(w, h, data)
}

/// Circular convolution with a kernel centered at its middle element.
/// Shares the boundary model of [`wiener_deblur`], so blur-then-deblur
/// round trips are exact up to regularization.
pub fn convolve_wrap(img: &GrayImage, kernel: &[Vec<f64>]) -> Result<GrayImage, ImgError> {
    if img.is_empty() {
        return Err(ImgError::EmptyImage);
    }
    let kh = kernel.len() as isize;
    let kw = kernel.first().map_or(0, |r| r.len()) as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let (cy, cx) = (kh / 2, kw / 2);
    let mut out = vec![0u8; img.data().len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for ky in 0..kh {
                for kx in 0..kw {
                    let sy = (y + ky - cy).rem_euclid(h) as usize;
                    let sx = (x + kx - cx).rem_euclid(w) as usize;
                    acc += kernel[ky as usize][kx as usize] * img.get(sx, sy) as f64;
                }
            }
            out[(y * w + x) as usize] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
    GrayImage::new(img.width(), img.height(), out)
}

fn fft2(
    buf: &mut [Complex64],
    width: usize,
    height: usize,
    planner: &mut FftPlanner<f64>,
    inverse: bool,
) {
    let row_fft = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    for row in buf.chunks_exact_mut(width) {
        row_fft.process(row);
    }

    let col_fft = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = buf[y * width + x];
        }
        col_fft.process(&mut column);
        for y in 0..height {
            buf[y * width + x] = column[y];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box3() -> Vec<Vec<f64>> {
        vec![vec![1.0 / 9.0; 3]; 3]
    }

    #[test]
    fn identity_psf_reconstructs() {
        let data: Vec<u8> = (0..64).map(|i| (i * 4) as u8).collect();
        let img = GrayImage::new(8, 8, data).unwrap();
        let out = wiener_deblur(&img, &[vec![1.0]], 1e-9).unwrap();
        let max_diff = img
            .data()
            .iter()
            .zip(out.data())
            .map(|(&a, &b)| (a as i16 - b as i16).abs())
            .max()
            .unwrap();
        assert!(max_diff <= 1, "max abs diff {max_diff}");
    }

    #[test]
    fn constant_image_preserved() {
        let img = GrayImage::filled(10, 6, 131);
        let out = wiener_deblur(&img, &box3(), 1e-3).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn unnormalized_psf_rejected() {
        let img = GrayImage::filled(8, 8, 10);
        assert!(matches!(
            wiener_deblur(&img, &[vec![0.0]], 1e-3),
            Err(ImgError::PsfNotNormalized(_))
        ));
        assert!(wiener_deblur(&img, &[vec![0.7]], 1e-3).is_err());
    }

    #[test]
    fn deblur_reduces_step_edge_mse() {
        // Step edge, blurred by a 3x3 box; deblurring must beat the blur.
        let mut data = vec![0u8; 16 * 16];
        for y in 0..16 {
            for x in 8..16 {
                data[y * 16 + x] = 200;
            }
        }
        let original = GrayImage::new(16, 16, data).unwrap();
        let blurred = convolve_wrap(&original, &box3()).unwrap();
        let deblurred = wiener_deblur(&blurred, &box3(), 1e-3).unwrap();

        let mse = |a: &GrayImage, b: &GrayImage| -> f64 {
            a.data()
                .iter()
                .zip(b.data())
                .map(|(&p, &q)| {
                    let d = p as f64 - q as f64;
                    d * d
                })
                .sum::<f64>()
                / a.data().len() as f64
        };
        let mse_blurred = mse(&blurred, &original);
        let mse_deblurred = mse(&deblurred, &original);
        assert!(
            mse_deblurred < mse_blurred,
            "deblurred {mse_deblurred} vs blurred {mse_blurred}"
        );
    }

    #[test]
    fn range_and_dimensions_preserved() {
        let img = GrayImage::new(5, 7, (0..35).map(|i| (i * 7 % 256) as u8).collect()).unwrap();
        let out = wiener_deblur(&img, &box3(), 0.5).unwrap();
        assert_eq!(out.width(), 5);
        assert_eq!(out.height(), 7);
    }
}
