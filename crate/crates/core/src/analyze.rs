//! Effective sample size and Laplacian noise / SNR statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssParams {
    pub d_prime: f64,
    pub m: f64,
    pub n: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl EssParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} outside [0, 1]")));
            }
        }
        for (name, v) in [("d_prime", self.d_prime), ("m", self.m), ("n", self.n)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Effective sample size of a composite dataset: `|D'| * (m*gamma + n*beta)`.
pub fn ess(p: &EssParams) -> f64 {
    p.d_prime * (p.m * p.gamma + p.n * p.beta)
}

/// 4-neighbour Laplacian.
pub const LAPLACIAN: [[f64; 3]; 3] = [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]];

/// L2 norm of [`LAPLACIAN`]: the standard deviation of its response to
/// unit-variance white noise.
pub fn laplacian_norm() -> f64 {
    LAPLACIAN
        .iter()
        .flatten()
        .map(|k| k * k)
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub signal_mean: f64,
    pub noise_sigma: f64,
    pub snr_db: f64,
}

/// Mean-absolute-deviation noise estimate from the Laplacian response.
///
/// Color images are reduced to their channel mean. Over the valid interior
/// `r = I * L`, and for Gaussian noise `E|r| = sqrt(2/pi) * ||L|| * sigma`, so
///
/// ```text
/// sigma = sqrt(pi/2) * sum|r| / (||L|| * (W-2) * (H-2))
/// ```
///
/// with `||L|| = sqrt(20)`. Signal is the mean intensity and
/// `snr_db = 20 log10(signal / sigma)`.
pub fn laplacian_snr(image: &ImageTensor) -> Result<SnrEstimate> {
    let (h, w) = image.hw();
    if h < 3 || w < 3 {
        return Err(Error::Dimension(format!(
            "{h}x{w} image is smaller than the 3x3 kernel"
        )));
    }
    let gray = if image.channels() == 1 {
        image.clone()
    } else {
        image.luma()
    };
    let px = |x: usize, y: usize| gray.get(x, y, 0) as f64;
    let mut abs_sum = 0.0f64;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let r = px(x, y - 1) + px(x - 1, y) + px(x + 1, y) + px(x, y + 1) - 4.0 * px(x, y);
            abs_sum += r.abs();
        }
    }
    let interior = ((w - 2) * (h - 2)) as f64;
    let noise_sigma = (std::f64::consts::PI / 2.0).sqrt() * abs_sum / (laplacian_norm() * interior);
    if noise_sigma == 0.0 {
        return Err(Error::InfiniteSnr);
    }
    let signal_mean = gray.data().iter().map(|&v| v as f64).sum::<f64>() / (w * h) as f64;
    Ok(SnrEstimate {
        signal_mean,
        noise_sigma,
        snr_db: 20.0 * (signal_mean / noise_sigma).log10(),
    })
}

pub const SNR_BINS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `bins` equal-width bins over `[min, max]`; the maximum lands in the
    /// last bin. When all values coincide everything goes in bin 0.
    pub fn fixed_width(values: &[f64], bins: usize) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (max - min) / bins as f64;
        let edges = (0..=bins).map(|i| min + width * i as f64).collect();
        let mut counts = vec![0usize; bins];
        for &v in values {
            let idx = if width > 0.0 {
                (((v - min) / width).floor() as usize).min(bins - 1)
            } else {
                0
            };
            counts[idx] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSnr {
    pub name: String,
    #[serde(flatten)]
    pub estimate: SnrEstimate,
}

/// SNR report over an image set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub estimator: String,
    pub unit: String,
    pub per_image: Vec<ImageSnr>,
    pub histogram: Histogram,
    pub mean_snr_db: f64,
    pub constant_images: Vec<String>,
}

pub fn snr_distribution<'a>(
    images: impl IntoIterator<Item = (&'a str, &'a ImageTensor)>,
) -> Result<SnrReport> {
    let mut per_image = Vec::new();
    let mut constant_images = Vec::new();
    for (name, img) in images {
        match laplacian_snr(img) {
            Ok(estimate) => per_image.push(ImageSnr {
                name: name.to_string(),
                estimate,
            }),
            Err(Error::InfiniteSnr) => constant_images.push(name.to_string()),
            Err(e) => return Err(e.in_file(name)),
        }
    }
    if per_image.is_empty() {
        if constant_images.is_empty() {
            return Err(Error::Config("empty image set".into()));
        }
        return Err(Error::AllConstant(constant_images.len()));
    }
    let values: Vec<f64> = per_image.iter().map(|s| s.estimate.snr_db).collect();
    Ok(SnrReport {
        estimator: "immerkaer-3x3".into(),
        unit: "dB".into(),
        histogram: Histogram::fixed_width(&values, SNR_BINS),
        mean_snr_db: values.iter().sum::<f64>() / values.len() as f64,
        per_image,
        constant_images,
    })
}
