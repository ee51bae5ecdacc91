use crate::error::{Error, Result};

/// Row-major 2D buffer; `(row, col)` indexing with pixel centers at integer
/// image coordinates `(v, u) = (row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

pub type BinaryImage = Grid<bool>;
pub type DepthImage = Grid<f64>;
/// RGB image with channel values in `[0, 1]`.
pub type ColorImage = Grid<[f32; 3]>;

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Grid {
            height,
            width,
            data: vec![value; height * width],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::CountMismatch {
                left: data.len(),
                left_what: "values",
                right: height * width,
                right_what: "grid cells",
            });
        }
        Ok(Grid { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Grid { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`.
    pub fn size(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.width + col]
    }

    /// Value at signed coordinates, `None` outside the grid.
    #[inline]
    pub fn get_signed(&self, row: i64, col: i64) -> Option<&T> {
        if row < 0 || col < 0 || row >= self.height as i64 || col >= self.width as i64 {
            None
        } else {
            Some(self.get(row as usize, col as usize))
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub(crate) fn require_size(&self, size: (usize, usize)) -> Result<()> {
        if self.size() != size {
            return Err(Error::SizeMismatch {
                expected: size,
                actual: self.size(),
            });
        }
        Ok(())
    }
}

impl BinaryImage {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Pixel-edge bounding box `[x0, y0, x1, y1]` of the set pixels (end exclusive).
    pub fn bbox(&self) -> Option<[f64; 4]> {
        let (mut r0, mut c0, mut r1, mut c1) = (usize::MAX, usize::MAX, 0, 0);
        for r in 0..self.height {
            for c in 0..self.width {
                if *self.get(r, c) {
                    r0 = r0.min(r);
                    c0 = c0.min(c);
                    r1 = r1.max(r);
                    c1 = c1.max(c);
                }
            }
        }
        (r0 != usize::MAX).then(|| [c0 as f64, r0 as f64, (c1 + 1) as f64, (r1 + 1) as f64])
    }

    /// Chebyshev dilation by `radius` pixels.
    pub fn dilate(&self, radius: usize) -> BinaryImage {
        let r = radius as i64;
        Grid::from_fn(self.height, self.width, |row, col| {
            (-r..=r).any(|dr| {
                (-r..=r).any(|dc| {
                    self.get_signed(row as i64 + dr, col as i64 + dc)
                        .copied()
                        .unwrap_or(false)
                })
            })
        })
    }

    /// `(row, col)` of every set pixel in row-major order.
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        (0..self.data.len())
            .filter(|&i| self.data[i])
            .map(|i| (i / self.width, i % self.width))
            .collect()
    }
}
