use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::crop::CROP_SIZE;
use super::grid::{BinaryImage, ColorImage, Grid};

pub const CHANNELS: usize = 5;
pub const EDGE_CHANNEL: usize = 3;
pub const MASK_CHANNEL: usize = 4;
const MAGIC: &[u8; 4] = b"SPK5";

/// Channel-major `(5, H, W)` array: R, G, B, edge, mask, all in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinerInput {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl RefinerInput {
    /// `(channels, height, width)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (CHANNELS, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    /// Splits back into the color crop, edge image and mask.
    pub fn disassemble(&self) -> (ColorImage, BinaryImage, BinaryImage) {
        let (h, w) = (self.height, self.width);
        let n = h * w;
        let color = Grid::from_fn(h, w, |r, c| {
            let i = r * w + c;
            [self.data[i], self.data[n + i], self.data[2 * n + i]]
        });
        let binary = |ch: usize| Grid::from_fn(h, w, |r, c| self.channel(ch)[r * w + c] > 0.5);
        (color, binary(EDGE_CHANNEL), binary(MASK_CHANNEL))
    }

    /// `"SPK5"`, `u16` height, `u16` width, then `5·H·W` little-endian `f32`.
    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.height as u16).to_le_bytes())?;
        out.write_all(&(self.width as u16).to_le_bytes())?;
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&bytes)
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("refiner input: {m}"));
        let mut header = [0u8; 8];
        input.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
        if &header[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let height = u16::from_le_bytes([header[4], header[5]]) as usize;
        let width = u16::from_le_bytes([header[6], header[7]]) as usize;
        let mut bytes = vec![0u8; CHANNELS * height * width * 4];
        input.read_exact(&mut bytes).map_err(|_| bad("truncated data"))?;
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(RefinerInput { height, width, data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

fn unit(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Stacks a 240×240 color crop, edge image and mask into a [`RefinerInput`].
pub fn assemble_refiner_input(image: &ColorImage, edges: &BinaryImage, mask: &BinaryImage) -> Result<RefinerInput> {
    let size = (CROP_SIZE, CROP_SIZE);
    image.require_size(size)?;
    edges.require_size(size)?;
    mask.require_size(size)?;
    let n = CROP_SIZE * CROP_SIZE;
    let mut data = vec![0.0f32; CHANNELS * n];
    for (i, px) in image.data().iter().enumerate() {
        for c in 0..3 {
            data[c * n + i] = unit(px[c]);
        }
    }
    for (i, (&e, &m)) in edges.data().iter().zip(mask.data()).enumerate() {
        data[EDGE_CHANNEL * n + i] = if e { 1.0 } else { 0.0 };
        data[MASK_CHANNEL * n + i] = if m { 1.0 } else { 0.0 };
    }
    Ok(RefinerInput {
        height: CROP_SIZE,
        width: CROP_SIZE,
        data,
    })
}
