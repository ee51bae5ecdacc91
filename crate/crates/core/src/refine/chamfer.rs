use crate::error::Result;
use crate::render::{BinaryImage, Grid};

/// Squared 1D distance transform of `f` (Felzenszwalb & Huttenlocher).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let mut q = 1;
    while q < n {
        if f[q].is_infinite() {
            q += 1;
            continue;
        }
        if f[v[k]].is_infinite() {
            v[k] = q;
            q += 1;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0: q dominates everything to its left
                v[0] = q;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
        q += 1;
    }
    k = 0;
    for (q, slot) in out.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *slot = if f[p].is_infinite() { f64::INFINITY } else { d * d + f[p] };
    }
}

/// Exact Euclidean distance from every pixel to the nearest set pixel;
/// `+inf` everywhere when no pixel is set.
pub fn distance_transform(img: &BinaryImage) -> Grid<f32> {
    let (h, w) = img.size();
    let n = h.max(w);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    let mut sq = Grid::filled(h, w, f64::INFINITY);
    for c in 0..w {
        for r in 0..h {
            f[r] = if *img.get(r, c) { 0.0 } else { f64::INFINITY };
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for r in 0..h {
            *sq.get_mut(r, c) = out[r];
        }
    }
    for r in 0..h {
        for c in 0..w {
            f[c] = *sq.get(r, c);
        }
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        for c in 0..w {
            *sq.get_mut(r, c) = out[c];
        }
    }
    sq.map(|d| d.sqrt() as f32)
}

/// Distance lookup at a possibly out-of-image pixel: the value at the nearest
/// in-image pixel plus the distance to it.
#[inline]
pub(crate) fn lookup(field: &Grid<f32>, row: i32, col: i32) -> f32 {
    let (h, w) = (field.height() as i32, field.width() as i32);
    if row >= 0 && col >= 0 && row < h && col < w {
        return *field.get(row as usize, col as usize);
    }
    let (rc, cc) = (row.clamp(0, h - 1), col.clamp(0, w - 1));
    let extra = (((row - rc) * (row - rc) + (col - cc) * (col - cc)) as f32).sqrt();
    field.get(rc as usize, cc as usize) + extra
}

/// Distance field extended by `pad` pixels on every side (values from
/// [`lookup`]) and stored row-major, so shifted sums need no bounds checks.
pub(crate) struct PaddedField {
    values: Vec<f32>,
    stride: usize,
    pad: usize,
}

impl PaddedField {
    pub fn new(field: &Grid<f32>, pad: usize) -> Self {
        let stride = Self::stride_for(field.width(), pad);
        let h = field.height();
        let mut values = Vec::with_capacity((h + 2 * pad) * stride);
        for r in 0..h + 2 * pad {
            for c in 0..stride {
                values.push(lookup(field, r as i32 - pad as i32, c as i32 - pad as i32));
            }
        }
        PaddedField { values, stride, pad }
    }

    pub fn stride_for(width: usize, pad: usize) -> usize {
        width + 2 * pad
    }

    /// Linear index of in-image pixel `(row, col)` in a field of `stride`
    /// padded by `pad`.
    #[inline]
    pub fn index_in(stride: usize, pad: usize, row: i32, col: i32) -> usize {
        (row as usize + pad) * stride + col as usize + pad
    }

    #[inline]
    pub fn index(&self, row: i32, col: i32) -> usize {
        Self::index_in(self.stride, self.pad, row, col)
    }

    /// Index offset of a `(dv, du)` shift; valid while `|dv|, |du| <= pad`.
    #[inline]
    pub fn offset(&self, shift: (i32, i32)) -> isize {
        debug_assert!(shift.0.unsigned_abs() as usize <= self.pad && shift.1.unsigned_abs() as usize <= self.pad);
        shift.0 as isize * self.stride as isize + shift.1 as isize
    }

    /// Sum over `indices` moved by `offset`; `None` once the partial sum
    /// exceeds `budget`.
    #[inline]
    pub fn shifted_sum(&self, indices: &[usize], offset: isize, budget: f32) -> Option<f32> {
        let mut sum = 0.0f32;
        let mut chunks = indices.chunks_exact(16);
        for chunk in &mut chunks {
            sum += chunk.iter().map(|&i| self.values[i.wrapping_add_signed(offset)]).sum::<f32>();
            if sum > budget {
                return None;
            }
        }
        sum += chunks
            .remainder()
            .iter()
            .map(|&i| self.values[i.wrapping_add_signed(offset)])
            .sum::<f32>();
        (sum <= budget).then_some(sum)
    }

    /// Exact `f64` sum over `indices` moved by `offset`.
    #[inline]
    pub fn sum(&self, indices: &[usize], offset: isize) -> f64 {
        indices.iter().map(|&i| self.values[i.wrapping_add_signed(offset)] as f64).sum()
    }
}

/// Mean of the two directed chamfer distances between the set pixels of `a`
/// and `b`; `+inf` if either is empty.
pub fn chamfer_distance(a: &BinaryImage, b: &BinaryImage) -> Result<f64> {
    b.require_size(a.size())?;
    let (pa, pb) = (a.pixels(), b.pixels());
    if pa.is_empty() || pb.is_empty() {
        return Ok(f64::INFINITY);
    }
    let (da, db) = (distance_transform(a), distance_transform(b));
    let directed = |pixels: &[(usize, usize)], field: &Grid<f32>| {
        pixels.iter().map(|&(r, c)| *field.get(r, c) as f64).sum::<f64>() / pixels.len() as f64
    };
    Ok(0.5 * (directed(&pa, &db) + directed(&pb, &da)))
}
