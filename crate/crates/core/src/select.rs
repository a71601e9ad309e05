//! Area and realism scoring, maximal-attention window search, class ranking.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::ImageId;
use crate::vit::{AttentionGrid, PredictionDistribution};

pub const DEFAULT_ALPHA: f64 = 0.8;
pub const DEFAULT_ETA: f64 = 30.0;

/// How the best window's attention is turned into an area score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaMode {
    /// Raw window sum.
    #[default]
    Sum,
    /// Window sum divided by the window's cell count.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub alpha: f64,
    pub eta: f64,
    #[serde(default)]
    pub area_mode: AreaMode,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            alpha: DEFAULT_ALPHA,
            eta: DEFAULT_ETA,
            area_mode: AreaMode::Sum,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha {} outside (0, 1]",
                self.alpha
            )));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!(
                "eta {} must be finite and >= 0",
                self.eta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredImage {
    pub image_id: ImageId,
    pub confidence: f64,
    pub area_score: f64,
    pub realism: f64,
    pub center: (usize, usize),
    pub window: (usize, usize),
}

/// Result of the window search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMax {
    pub top_left: (usize, usize),
    pub center: (usize, usize),
    pub sum: f64,
}

/// Window size in grid cells for side ratio `alpha`.
pub fn window_dims(grid_hw: (usize, usize), alpha: f64) -> (usize, usize) {
    let (rows, cols) = grid_hw;
    let side = |n: usize| ((alpha * n as f64).floor() as usize).clamp(1, n.max(1));
    (side(rows), side(cols))
}

/// Summed-area table with a zero top row and left column, in 64-bit.
#[derive(Debug, Clone)]
pub struct SummedAreaTable {
    cols: usize,
    table: Vec<f64>,
}

impl SummedAreaTable {
    pub fn new(values: &[f32], rows: usize, cols: usize) -> Self {
        let stride = cols + 1;
        let mut table = vec![0.0f64; (rows + 1) * stride];
        for r in 0..rows {
            let mut row_sum = 0.0f64;
            for c in 0..cols {
                row_sum += values[r * cols + c] as f64;
                table[(r + 1) * stride + c + 1] = table[r * stride + c + 1] + row_sum;
            }
        }
        SummedAreaTable { cols, table }
    }

    /// Sum over rows `r..r+h`, columns `c..c+w`.
    #[inline]
    pub fn window_sum(&self, r: usize, c: usize, h: usize, w: usize) -> f64 {
        let s = self.cols + 1;
        let t = &self.table;
        t[(r + h) * s + c + w] - t[r * s + c + w] - t[(r + h) * s + c] + t[r * s + c]
    }
}

/// Finds the `h x w` placement with the largest attention sum.
///
/// Ties go to the smallest top-left row, then column. The reported center is
/// `top_left + (h / 2, w / 2)`.
pub fn window_sum_argmax(grid: &AttentionGrid, h: usize, w: usize) -> Result<WindowMax> {
    let (rows, cols) = (grid.rows(), grid.cols());
    if h == 0 || w == 0 || h > rows || w > cols {
        return Err(Error::WindowTooLarge { h, w, rows, cols });
    }
    let sat = SummedAreaTable::new(grid.scores(), rows, cols);
    let mut best = (0, 0);
    let mut best_sum = f64::NEG_INFINITY;
    for r in 0..=rows - h {
        for c in 0..=cols - w {
            let s = sat.window_sum(r, c, h, w);
            if s > best_sum {
                best_sum = s;
                best = (r, c);
            }
        }
    }
    Ok(WindowMax {
        top_left: best,
        center: (best.0 + h / 2, best.1 + w / 2),
        sum: best_sum,
    })
}

/// Area score of the best `alpha`-sized window.
pub fn area_score(grid: &AttentionGrid, alpha: f64, mode: AreaMode) -> Result<f64> {
    Ok(best_window(grid, alpha, mode)?.1)
}

fn best_window(
    grid: &AttentionGrid,
    alpha: f64,
    mode: AreaMode,
) -> Result<(WindowMax, f64, (usize, usize))> {
    let (h, w) = window_dims((grid.rows(), grid.cols()), alpha);
    let m = window_sum_argmax(grid, h, w)?;
    let score = match mode {
        AreaMode::Sum => m.sum,
        AreaMode::Mean => m.sum / (h * w) as f64,
    };
    Ok((m, score, (h, w)))
}

pub fn realism_score(confidence: f64, area: f64, eta: f64) -> f64 {
    confidence + eta * area
}

/// Scores one image from its model outputs.
pub fn score_image(
    image_id: ImageId,
    prediction: &PredictionDistribution,
    grid: &AttentionGrid,
    cfg: &SelectorConfig,
) -> Result<ScoredImage> {
    let (m, area, window) = best_window(grid, cfg.alpha, cfg.area_mode)?;
    let confidence = prediction.confidence();
    Ok(ScoredImage {
        image_id,
        confidence,
        area_score: area,
        realism: realism_score(confidence, area, cfg.eta),
        center: m.center,
        window,
    })
}

/// Realism descending, then image id ascending.
pub fn rank_order(a: &ScoredImage, b: &ScoredImage) -> Ordering {
    b.realism
        .total_cmp(&a.realism)
        .then_with(|| a.image_id.cmp(&b.image_id))
}

pub fn rank_class(mut scored: Vec<ScoredImage>) -> Vec<ScoredImage> {
    scored.sort_by(rank_order);
    scored
}
