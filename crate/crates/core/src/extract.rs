//! Downsampling for model input and mapping grid windows back to
//! full-resolution crops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;

pub type ImageId = u64;

/// Axis-aligned rectangle in source-image pixels. `x0, y0` are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    pub source_image_id: ImageId,
}

impl PixelRect {
    pub fn full(img: &ImageTensor, source_image_id: ImageId) -> Self {
        PixelRect {
            x0: 0,
            y0: 0,
            width: img.width(),
            height: img.height(),
            source_image_id,
        }
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.width >= 1
            && self.height >= 1
            && self.x0 + self.width <= width
            && self.y0 + self.height <= height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.width && y >= self.y0 && y < self.y0 + self.height
    }
}

/// Box-filter (area average) downsampling to `out_h x out_w`.
///
/// Integer ratios take a block-mean fast path. Other ratios weight each
/// source pixel by its exact overlap with the output footprint. Results are
/// not rounded.
pub fn downsample(img: &ImageTensor, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    let (in_h, in_w) = img.hw();
    if out_h == 0 || out_w == 0 {
        return Err(Error::Dimension(format!("downsample to {out_h}x{out_w}")));
    }
    if out_h > in_h || out_w > in_w {
        return Err(Error::Upscale {
            from_h: in_h,
            from_w: in_w,
            to_h: out_h,
            to_w: out_w,
        });
    }
    if in_h % out_h == 0 && in_w % out_w == 0 {
        return Ok(block_mean(img, in_h / out_h, in_w / out_w));
    }
    let wy = axis_weights(in_h, out_h);
    let wx = axis_weights(in_w, out_w);
    let ch = img.channels();
    let mut data = Vec::with_capacity(out_h * out_w * ch);
    let mut acc = vec![0.0f64; ch];
    for ry in &wy {
        for rx in &wx {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for &(y, fy) in ry {
                for &(x, fx) in rx {
                    let w = fy * fx;
                    for (c, a) in acc.iter_mut().enumerate() {
                        *a += w * img.get(x, y, c) as f64;
                    }
                }
            }
            data.extend(acc.iter().map(|&a| a as f32));
        }
    }
    Ok(ImageTensor::from_parts_unchecked(out_w, out_h, ch, data))
}

fn block_mean(img: &ImageTensor, ky: usize, kx: usize) -> ImageTensor {
    let (in_h, in_w) = img.hw();
    let (out_h, out_w) = (in_h / ky, in_w / kx);
    let ch = img.channels();
    let norm = (ky * kx) as f64;
    let mut data = Vec::with_capacity(out_h * out_w * ch);
    for oy in 0..out_h {
        for ox in 0..out_w {
            for c in 0..ch {
                let mut s = 0.0f64;
                for y in oy * ky..(oy + 1) * ky {
                    for x in ox * kx..(ox + 1) * kx {
                        s += img.get(x, y, c) as f64;
                    }
                }
                data.push((s / norm) as f32);
            }
        }
    }
    ImageTensor::from_parts_unchecked(out_w, out_h, ch, data)
}

/// Per output index, the source indices and their normalized overlap weights.
/// Works in units of `1/out` so overlaps are exact integers.
fn axis_weights(inp: usize, out: usize) -> Vec<Vec<(usize, f64)>> {
    (0..out)
        .map(|o| {
            let lo = o * inp;
            let hi = (o + 1) * inp;
            (lo / out..=(hi - 1) / out)
                .filter_map(|i| {
                    let a = (i * out).max(lo);
                    let b = ((i + 1) * out).min(hi);
                    (b > a).then(|| (i, (b - a) as f64 / inp as f64))
                })
                .collect()
        })
        .collect()
}

/// Side length in pixels of a key region covering fraction `alpha` of `dim`:
/// the whole axis when `alpha >= 1`, otherwise `2 * floor(alpha * dim / 2)`,
/// never less than one pixel.
pub fn key_side(alpha: f64, dim: usize) -> usize {
    if alpha >= 1.0 {
        return dim;
    }
    let half = (alpha * dim as f64 / 2.0).floor() as usize;
    (2 * half).clamp(1, dim)
}

/// Grid cell `(i, j)` to its center pixel in the original image.
pub fn grid_to_pixel(center: (usize, usize), patch: usize, scale: (f64, f64)) -> (i64, i64) {
    let (i, j) = center;
    let p = patch as f64;
    (
        ((i as f64 + 0.5) * p * scale.0).round() as i64,
        ((j as f64 + 0.5) * p * scale.1).round() as i64,
    )
}

/// Maps a grid-window center to a full-resolution key region.
///
/// The region is centered on [`grid_to_pixel`] with sides from [`key_side`]
/// and is translated, never shrunk, to fit inside `original_hw`.
pub fn map_center_to_original(
    center: (usize, usize),
    patch: usize,
    scale: (f64, f64),
    alpha: f64,
    original_hw: (usize, usize),
    source_image_id: ImageId,
) -> Result<PixelRect> {
    let (h, w) = original_hw;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("alpha {alpha} outside (0, 1]")));
    }
    // Rounding can put the center of the last cell on the far edge; only a
    // center that is outside before rounding is an error.
    let exact_y = (center.0 as f64 + 0.5) * patch as f64 * scale.0;
    let exact_x = (center.1 as f64 + 0.5) * patch as f64 * scale.1;
    let (cy, cx) = grid_to_pixel(center, patch, scale);
    if !(exact_y < h as f64 && exact_x < w as f64) {
        return Err(Error::OutOfBounds {
            x0: cx,
            y0: cy,
            width: 1,
            height: 1,
            img_w: w,
            img_h: h,
        });
    }
    let side_h = key_side(alpha, h);
    let side_w = key_side(alpha, w);
    let y0 = (cy - (side_h / 2) as i64).clamp(0, (h - side_h) as i64) as usize;
    let x0 = (cx - (side_w / 2) as i64).clamp(0, (w - side_w) as i64) as usize;
    Ok(PixelRect {
        x0,
        y0,
        width: side_w,
        height: side_h,
        source_image_id,
    })
}

/// Exact pixel copy of `rect`.
pub fn crop(img: &ImageTensor, rect: &PixelRect) -> Result<ImageTensor> {
    if !rect.fits(img.width(), img.height()) {
        return Err(Error::OutOfBounds {
            x0: rect.x0 as i64,
            y0: rect.y0 as i64,
            width: rect.width,
            height: rect.height,
            img_w: img.width(),
            img_h: img.height(),
        });
    }
    let ch = img.channels();
    let mut data = Vec::with_capacity(rect.width * rect.height * ch);
    for y in rect.y0..rect.y0 + rect.height {
        let start = (y * img.width() + rect.x0) * ch;
        data.extend_from_slice(&img.data()[start..start + rect.width * ch]);
    }
    Ok(ImageTensor::from_parts_unchecked(
        rect.width,
        rect.height,
        ch,
        data,
    ))
}
