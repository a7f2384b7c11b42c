//! Raster loading (PNG, binary PGM/PPM, JPEG) and PGM debug dumps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{GrayImage, ImgError, RgbImage};

pub fn load_gray(path: &Path) -> Result<GrayImage, ImgError> {
    let img = image::open(path).map_err(|e| ImgError::Decode(e.to_string()))?;
    let luma = img.to_luma8();
    GrayImage::new(luma.width() as usize, luma.height() as usize, luma.into_raw())
}

pub fn load_rgb(path: &Path) -> Result<RgbImage, ImgError> {
    let img = image::open(path).map_err(|e| ImgError::Decode(e.to_string()))?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut channels = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for px in rgb.pixels() {
        channels[0].push(px.0[0]);
        channels[1].push(px.0[1]);
        channels[2].push(px.0[2]);
    }
    RgbImage::new(w, h, channels)
}

/// Write a binary (P5) PGM, the format used for intermediate debug dumps.
pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<(), ImgError> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.write_all(img.data())?;
    out.flush()?;
    Ok(())
}
