use crate::error::{Error, Result};

use super::grid::Grid;

/// Side length of refiner crops in pixels.
pub const CROP_SIZE: usize = 240;

/// Pixel types that can be bilinearly resampled.
pub trait Sample: Copy {
    const ZERO: Self;
    fn weighted(taps: [(Self, f32); 4]) -> Self;
}

impl Sample for f32 {
    const ZERO: Self = 0.0;
    fn weighted(taps: [(Self, f32); 4]) -> Self {
        taps.iter().map(|(v, w)| v * w).sum()
    }
}

impl Sample for [f32; 3] {
    const ZERO: Self = [0.0; 3];
    fn weighted(taps: [(Self, f32); 4]) -> Self {
        let mut out = [0.0; 3];
        for (v, w) in taps {
            for c in 0..3 {
                out[c] += v[c] * w;
            }
        }
        out
    }
}

/// Square window centered on `bbox` (`[x0, y0, x1, y1]`, pixel-edge
/// coordinates) with side equal to the longer bbox side.
pub fn square_window(bbox: [f64; 4]) -> [f64; 4] {
    let side = (bbox[2] - bbox[0]).max(bbox[3] - bbox[1]);
    let (cx, cy) = ((bbox[0] + bbox[2]) / 2.0, (bbox[1] + bbox[3]) / 2.0);
    [cx - side / 2.0, cy - side / 2.0, cx + side / 2.0, cy + side / 2.0]
}

fn check_bbox(bbox: [f64; 4], size: (usize, usize)) -> Result<()> {
    if !bbox.iter().all(|v| v.is_finite()) || bbox[2] <= bbox[0] || bbox[3] <= bbox[1] {
        return Err(Error::InvalidArgument(format!("degenerate bbox {bbox:?}")));
    }
    let (h, w) = (size.0 as f64, size.1 as f64);
    if bbox[2] <= 0.0 || bbox[3] <= 0.0 || bbox[0] >= w || bbox[1] >= h {
        return Err(Error::InvalidArgument(format!("bbox {bbox:?} does not intersect the image")));
    }
    Ok(())
}

/// Source coordinate sampled for output pixel `i` of a window starting at
/// `start` with `scale` source pixels per output pixel.
#[inline]
fn source_coordinate(start: f64, scale: f64, i: usize) -> f64 {
    start + (i as f64 + 0.5) * scale - 0.5
}

/// Square crop around `bbox`, zero outside the image, resampled bilinearly to
/// `out_size × out_size`.
pub fn crop_and_resize<T: Sample>(image: &Grid<T>, bbox: [f64; 4], out_size: usize) -> Result<Grid<T>> {
    check_bbox(bbox, image.size())?;
    if out_size == 0 {
        return Err(Error::InvalidArgument("output size must be positive".into()));
    }
    let win = square_window(bbox);
    let scale = (win[2] - win[0]) / out_size as f64;
    let fetch = |r: i64, c: i64| image.get_signed(r, c).copied().unwrap_or(T::ZERO);
    Ok(Grid::from_fn(out_size, out_size, |i, j| {
        let y = source_coordinate(win[1], scale, i);
        let x = source_coordinate(win[0], scale, j);
        let (y0, x0) = (y.floor(), x.floor());
        let (fy, fx) = ((y - y0) as f32, (x - x0) as f32);
        let (r, c) = (y0 as i64, x0 as i64);
        T::weighted([
            (fetch(r, c), (1.0 - fy) * (1.0 - fx)),
            (fetch(r, c + 1), (1.0 - fy) * fx),
            (fetch(r + 1, c), fy * (1.0 - fx)),
            (fetch(r + 1, c + 1), fy * fx),
        ])
    }))
}

/// Binary crop: bilinear resample of the 0/1 image, thresholded at 0.5.
pub fn crop_and_resize_binary(image: &Grid<bool>, bbox: [f64; 4], out_size: usize) -> Result<Grid<bool>> {
    let as_float = image.map(|&b| if b { 1.0f32 } else { 0.0 });
    Ok(crop_and_resize(&as_float, bbox, out_size)?.map(|&v| v >= 0.5))
}
