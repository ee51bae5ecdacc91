use std::path::Path;

use image::{GrayImage, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};

use super::grid::{BinaryImage, ColorImage, Grid};

fn open(path: &Path) -> Result<image::DynamicImage> {
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    Ok(reader.with_guessed_format().map_err(|e| Error::io(path, e))?.decode()?)
}

/// Any PNG as RGB with channels scaled to `[0, 1]`.
pub fn load_color_png(path: impl AsRef<Path>) -> Result<ColorImage> {
    let img = open(path.as_ref())?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Grid::from_fn(h as usize, w as usize, |r, c| {
        let p = img.get_pixel(c as u32, r as u32).0;
        p.map(|v| v as f32 / 255.0)
    }))
}

/// Any PNG as a binary image; a pixel is set when its luma exceeds 127.
pub fn load_binary_png(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let img = open(path.as_ref())?.to_luma8();
    let (w, h) = img.dimensions();
    Ok(Grid::from_fn(h as usize, w as usize, |r, c| img.get_pixel(c as u32, r as u32).0[0] > 127))
}

pub fn save_color_png(image: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    let (h, w) = image.size();
    let out = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        Rgb(image.get(y as usize, x as usize).map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
    });
    Ok(out.save_with_format(path, image::ImageFormat::Png)?)
}

/// Set pixels become 255, others 0 (8-bit single channel).
pub fn save_binary_png(image: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    let (h, w) = image.size();
    let out = GrayImage::from_fn(w as u32, h as u32, |x, y| {
        Luma([if *image.get(y as usize, x as usize) { 255 } else { 0 }])
    });
    Ok(out.save_with_format(path, image::ImageFormat::Png)?)
}
