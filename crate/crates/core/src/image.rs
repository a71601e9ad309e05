use crate::error::{Error, Result};

/// Row-major, channel-interleaved raster with real-valued samples in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Unsupported(format!("{channels} channels")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "{} samples for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        if let Some(v) = data
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0)
        {
            return Err(Error::Malformed(format!("sample {v} outside [0, 255]")));
        }
        Ok(ImageTensor {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_u8(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            bytes.iter().map(|&b| b as f32).collect(),
        )
    }

    pub fn filled(width: usize, height: usize, pixel: &[f32]) -> Result<Self> {
        let data = pixel
            .iter()
            .copied()
            .cycle()
            .take(width * height * pixel.len())
            .collect();
        Self::new(width, height, pixel.len(), data)
    }

    /// Builds an image from a per-pixel function returning one value per channel.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width)`
    pub fn hw(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Samples rounded half away from zero and clamped to `0..=255`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    /// Converts between gray and RGB. Gray to RGB replicates; RGB to gray
    /// takes the channel mean.
    pub fn to_channels(&self, channels: usize) -> Result<ImageTensor> {
        match (self.channels, channels) {
            (a, b) if a == b => Ok(self.clone()),
            (1, 3) => {
                let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
                ImageTensor::new(self.width, self.height, 3, data)
            }
            (3, 1) => Ok(self.luma()),
            (_, c) => Err(Error::Unsupported(format!("{c} channels"))),
        }
    }

    /// Channel-mean grayscale, computed in 64-bit.
    pub fn luma(&self) -> ImageTensor {
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| (px.iter().map(|&v| v as f64).sum::<f64>() / self.channels as f64) as f32)
            .collect();
        ImageTensor {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        ImageTensor {
            width,
            height,
            channels,
            data,
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }
}

/// Round half away from zero, clamp to a byte.
#[inline]
pub fn quantize(v: f32) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear resampling with half-pixel centers.
///
/// Source coordinate of output pixel `x` is `(x + 0.5) * in_w / out_w - 0.5`,
/// clamped to the valid range. Interpolation runs in 64-bit and every written
/// sample is rounded half away from zero, so a same-size resize is an exact
/// copy of an integer-valued image.
pub fn resize_bilinear(img: &ImageTensor, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::Dimension(format!("resize to {out_h}x{out_w}")));
    }
    let (in_h, in_w, ch) = (img.height, img.width, img.channels);
    let coords = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|o| {
                let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(inp - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let ys = coords(out_h, in_h);
    let xs = coords(out_w, in_w);
    let mut data = Vec::with_capacity(out_h * out_w * ch);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..ch {
                let p00 = img.get(x0, y0, c) as f64;
                let p01 = img.get(x1, y0, c) as f64;
                let p10 = img.get(x0, y1, c) as f64;
                let p11 = img.get(x1, y1, c) as f64;
                let top = p00 * (1.0 - fx) + p01 * fx;
                let bottom = p10 * (1.0 - fx) + p11 * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                data.push(v.round().clamp(0.0, 255.0) as f32);
            }
        }
    }
    Ok(ImageTensor::from_parts_unchecked(out_w, out_h, ch, data))
}
