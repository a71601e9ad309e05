//! A small pre-norm Vision Transformer, run forward only.
//!
//! Weight matrices are stored `[in, out]` and applied as `y = x W + b`.
//! Tensor names:
//!
//! | name | shape |
//! |---|---|
//! | `patch_embed.weight` / `.bias` | `[P*P*Ch, d]` / `[d]` |
//! | `cls_token` | `[d]` |
//! | `pos_embed` | `[K+1, d]` |
//! | `blocks.{b}.norm1.weight` / `.bias` | `[d]` |
//! | `blocks.{b}.attn.{q,k,v,proj}.weight` / `.bias` | `[d, d]` / `[d]` |
//! | `blocks.{b}.norm2.weight` / `.bias` | `[d]` |
//! | `blocks.{b}.mlp.fc1.weight` / `.bias` | `[d, 4d]` / `[4d]` |
//! | `blocks.{b}.mlp.fc2.weight` / `.bias` | `[4d, d]` / `[d]` |
//! | `norm.weight` / `.bias` | `[d]` |
//! | `head.weight` / `.bias` | `[d, C]` / `[C]` |
//!
//! Pixels enter scaled to `[0, 1]`. Layer norm uses `eps = 1e-6`; the MLP
//! uses the tanh approximation of GELU.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{downsample, ImageId};
use crate::image::ImageTensor;
use crate::rng::{hash_str, tag, KeyedRng};

pub const MLP_RATIO: usize = 4;
const LN_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub depth: usize,
    pub heads: usize,
    pub embed_dim: usize,
    pub patch_size: usize,
    pub num_classes: usize,
    /// `(height, width)` of the model input.
    pub input_hw: (usize, usize),
    pub channels: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("depth", self.depth),
            ("heads", self.heads),
            ("embed_dim", self.embed_dim),
            ("patch_size", self.patch_size),
            ("num_classes", self.num_classes),
            ("input height", self.input_hw.0),
            ("input width", self.input_hw.1),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if !self.embed_dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "embed_dim {} not divisible by {} heads",
                self.embed_dim, self.heads
            )));
        }
        if !self.input_hw.0.is_multiple_of(self.patch_size)
            || !self.input_hw.1.is_multiple_of(self.patch_size)
        {
            return Err(Error::Config(format!(
                "input {}x{} not divisible by patch size {}",
                self.input_hw.0, self.input_hw.1, self.patch_size
            )));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::Config(format!("{} input channels", self.channels)));
        }
        Ok(())
    }

    pub fn grid_hw(&self) -> (usize, usize) {
        (
            self.input_hw.0 / self.patch_size,
            self.input_hw.1 / self.patch_size,
        )
    }

    pub fn num_patches(&self) -> usize {
        let (r, c) = self.grid_hw();
        r * c
    }

    pub fn patch_dim(&self) -> usize {
        self.patch_size * self.patch_size * self.channels
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.heads
    }

    /// Every tensor the model needs, with its shape.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let d = self.embed_dim;
        let hidden = MLP_RATIO * d;
        let mut v = vec![
            ("patch_embed.weight".to_string(), vec![self.patch_dim(), d]),
            ("patch_embed.bias".to_string(), vec![d]),
            ("cls_token".to_string(), vec![d]),
            ("pos_embed".to_string(), vec![self.num_patches() + 1, d]),
        ];
        for b in 0..self.depth {
            let p = |s: &str| format!("blocks.{b}.{s}");
            v.push((p("norm1.weight"), vec![d]));
            v.push((p("norm1.bias"), vec![d]));
            for m in ["q", "k", "v", "proj"] {
                v.push((p(&format!("attn.{m}.weight")), vec![d, d]));
                v.push((p(&format!("attn.{m}.bias")), vec![d]));
            }
            v.push((p("norm2.weight"), vec![d]));
            v.push((p("norm2.bias"), vec![d]));
            v.push((p("mlp.fc1.weight"), vec![d, hidden]));
            v.push((p("mlp.fc1.bias"), vec![hidden]));
            v.push((p("mlp.fc2.weight"), vec![hidden, d]));
            v.push((p("mlp.fc2.bias"), vec![d]));
        }
        v.push(("norm.weight".to_string(), vec![d]));
        v.push(("norm.bias".to_string(), vec![d]));
        v.push(("head.weight".to_string(), vec![d, self.num_classes]));
        v.push(("head.bias".to_string(), vec![self.num_classes]));
        v
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            depth: 4,
            heads: 4,
            embed_dim: 64,
            patch_size: 4,
            num_classes: 10,
            input_hw: (32, 32),
            channels: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} holds {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }
}

/// Named tensors plus the configuration they parameterize.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub config: ModelConfig,
    pub tensors: BTreeMap<String, Tensor>,
}

impl ModelWeights {
    pub fn new(config: ModelConfig, tensors: BTreeMap<String, Tensor>) -> Result<Self> {
        let w = ModelWeights { config, tensors };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let expected = self.config.tensor_shapes();
        for (name, shape) in &expected {
            let t = self
                .tensors
                .get(name)
                .ok_or_else(|| Error::MissingTensor(name.clone()))?;
            if &t.shape != shape {
                return Err(Error::TensorShape {
                    name: name.clone(),
                    expected: shape.clone(),
                    found: t.shape.clone(),
                });
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Malformed(format!(
                    "tensor `{name}` has non-finite values"
                )));
            }
        }
        if self.tensors.len() != expected.len() {
            let known: std::collections::BTreeSet<&str> =
                expected.iter().map(|(n, _)| n.as_str()).collect();
            let extra = self
                .tensors
                .keys()
                .find(|k| !known.contains(k.as_str()))
                .cloned()
                .unwrap_or_default();
            return Err(Error::Malformed(format!("unexpected tensor `{extra}`")));
        }
        Ok(())
    }

    /// Deterministic weights for `seed`.
    ///
    /// Each tensor draws from its own stream keyed by `(seed, name)`.
    /// Matrices are uniform in `±1/sqrt(fan_in)` (query and key
    /// projections `±2/sqrt(fan_in)` for visibly non-uniform attention),
    /// biases and embeddings uniform in `±0.1` / `±0.5`, layer-norm scales
    /// uniform in `1 ± 0.1`.
    pub fn synthetic(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut tensors = BTreeMap::new();
        for (name, shape) in config.tensor_shapes() {
            let mut rng = KeyedRng::new(seed, &[tag::WEIGHTS, hash_str(&name)]);
            let n: usize = shape.iter().product();
            let (center, half) = if name.ends_with("norm1.weight")
                || name.ends_with("norm2.weight")
                || name == "norm.weight"
            {
                (1.0, 0.1)
            } else if name.ends_with(".weight") {
                let fan_in = shape[0] as f64;
                let gain = if name.ends_with("attn.q.weight") || name.ends_with("attn.k.weight") {
                    2.0
                } else {
                    1.0
                };
                (0.0, gain / fan_in.sqrt())
            } else if name == "cls_token" || name == "pos_embed" {
                (0.0, 0.5)
            } else {
                (0.0, 0.1)
            };
            let data = (0..n)
                .map(|_| (center + half * (2.0 * rng.next_f64() - 1.0)) as f32)
                .collect();
            tensors.insert(name, Tensor { shape, data });
        }
        ModelWeights::new(config, tensors)
    }

    fn get(&self, name: &str) -> &[f32] {
        // Presence and shape are checked in `validate`.
        &self.tensors[name].data
    }
}

/// Raw classifier outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionDistribution {
    pub logits: Vec<f32>,
}

impl PredictionDistribution {
    pub fn probabilities(&self) -> Vec<f32> {
        softmax(&self.logits)
    }

    /// Largest softmax probability.
    pub fn confidence(&self) -> f64 {
        softmax_f64(&self.logits.iter().map(|&v| v as f64).collect::<Vec<_>>())
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> usize {
        self.logits
            .iter()
            .enumerate()
            .fold((0, f32::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            })
            .0
    }
}

/// Per-patch attention received, laid out as the patch grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionGrid {
    rows: usize,
    cols: usize,
    scores: Vec<f32>,
    pub source_image_id: ImageId,
}

impl AttentionGrid {
    pub fn new(
        rows: usize,
        cols: usize,
        scores: Vec<f32>,
        source_image_id: ImageId,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || scores.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} scores for a {rows}x{cols} grid",
                scores.len()
            )));
        }
        if let Some(v) = scores.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Malformed(format!("attention score {v}")));
        }
        Ok(AttentionGrid {
            rows,
            cols,
            scores,
            source_image_id,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    pub fn at(&self, r: usize, c: usize) -> f32 {
        self.scores[r * self.cols + c]
    }
}

/// Splits an image into non-overlapping `patch x patch` tokens.
///
/// Tokens are in row-major patch order; each token lists its pixels
/// row-major with channels interleaved.
pub fn patchify(image: &ImageTensor, patch: usize) -> Result<Vec<Vec<f32>>> {
    let (h, w, ch) = (image.height(), image.width(), image.channels());
    if patch == 0 || h % patch != 0 || w % patch != 0 {
        return Err(Error::Dimension(format!(
            "{h}x{w} image not divisible into {patch}x{patch} patches"
        )));
    }
    let mut tokens = Vec::with_capacity((h / patch) * (w / patch));
    for pr in 0..h / patch {
        for pc in 0..w / patch {
            let mut t = Vec::with_capacity(patch * patch * ch);
            for y in pr * patch..(pr + 1) * patch {
                t.extend_from_slice(
                    &image.data()[(y * w + pc * patch) * ch..(y * w + (pc + 1) * patch) * ch],
                );
            }
            tokens.push(t);
        }
    }
    Ok(tokens)
}

/// Max-subtracted softmax with a 64-bit normalizer.
pub fn softmax(v: &[f32]) -> Vec<f32> {
    let max = v.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f64> = v.iter().map(|&x| ((x - max) as f64).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| (e / sum) as f32).collect()
}

pub fn softmax_f64(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Everything a forward pass exposes for inspection.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub prediction: PredictionDistribution,
    pub grid: AttentionGrid,
    /// Block whose attention produced `grid`.
    pub block: usize,
    /// Per head, the row-stochastic `(K+1) x (K+1)` matrix, row-major.
    pub attention: Vec<Vec<f32>>,
}

/// Model plus the block whose attention becomes the saliency grid.
#[derive(Debug, Clone)]
pub struct Vit {
    weights: ModelWeights,
    attention_block: usize,
}

impl Vit {
    /// Uses the last block's attention.
    pub fn new(weights: ModelWeights) -> Result<Self> {
        weights.validate()?;
        let last = weights.config.depth - 1;
        Ok(Vit {
            weights,
            attention_block: last,
        })
    }

    pub fn with_attention_block(mut self, block: usize) -> Result<Self> {
        if block >= self.weights.config.depth {
            return Err(Error::Config(format!(
                "attention block {block} but depth is {}",
                self.weights.config.depth
            )));
        }
        self.attention_block = block;
        Ok(self)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.weights.config
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn attention_block(&self) -> usize {
        self.attention_block
    }

    pub fn forward(
        &self,
        image: &ImageTensor,
        image_id: ImageId,
    ) -> Result<(PredictionDistribution, AttentionGrid)> {
        let t = self.forward_traced(image, image_id)?;
        Ok((t.prediction, t.grid))
    }

    pub fn forward_traced(&self, image: &ImageTensor, image_id: ImageId) -> Result<ForwardTrace> {
        forward_impl(&self.weights, image, image_id, self.attention_block)
    }
}

/// Forward pass taking attention from the last block.
pub fn forward(
    weights: &ModelWeights,
    image: &ImageTensor,
) -> Result<(PredictionDistribution, AttentionGrid)> {
    weights.validate()?;
    let t = forward_impl(weights, image, 0, weights.config.depth - 1)?;
    Ok((t.prediction, t.grid))
}

fn forward_impl(
    w: &ModelWeights,
    image: &ImageTensor,
    image_id: ImageId,
    attention_block: usize,
) -> Result<ForwardTrace> {
    let cfg = &w.config;
    if image.hw() != cfg.input_hw || image.channels() != cfg.channels {
        return Err(Error::Dimension(format!(
            "model expects {}x{}x{}, got {}x{}x{}",
            cfg.input_hw.0,
            cfg.input_hw.1,
            cfg.channels,
            image.height(),
            image.width(),
            image.channels()
        )));
    }
    let d = cfg.embed_dim;
    let k = cfg.num_patches();
    let n = k + 1;

    let tokens = patchify(image, cfg.patch_size)?;
    let flat: Vec<f32> = tokens.iter().flatten().map(|&v| v / 255.0).collect();
    let embedded = linear(
        &flat,
        k,
        w.get("patch_embed.weight"),
        w.get("patch_embed.bias"),
        cfg.patch_dim(),
        d,
    );

    let pos = w.get("pos_embed");
    let mut x = Vec::with_capacity(n * d);
    x.extend(w.get("cls_token").iter().zip(&pos[..d]).map(|(a, b)| a + b));
    x.extend(embedded.iter().zip(&pos[d..]).map(|(a, b)| a + b));

    let mut captured = None;
    for b in 0..cfg.depth {
        let p = |s: &str| format!("blocks.{b}.{s}");
        let h = layer_norm(&x, n, d, w.get(&p("norm1.weight")), w.get(&p("norm1.bias")));
        let (attn_out, attn) = self_attention(w, b, &h, n, cfg);
        add_in_place(&mut x, &attn_out);
        if b == attention_block {
            captured = Some(attn);
        }

        let h = layer_norm(&x, n, d, w.get(&p("norm2.weight")), w.get(&p("norm2.bias")));
        let hidden = MLP_RATIO * d;
        let mut m = linear(
            &h,
            n,
            w.get(&p("mlp.fc1.weight")),
            w.get(&p("mlp.fc1.bias")),
            d,
            hidden,
        );
        m.iter_mut().for_each(|v| *v = gelu(*v));
        let m = linear(
            &m,
            n,
            w.get(&p("mlp.fc2.weight")),
            w.get(&p("mlp.fc2.bias")),
            hidden,
            d,
        );
        add_in_place(&mut x, &m);
    }

    let cls = layer_norm(&x[..d], 1, d, w.get("norm.weight"), w.get("norm.bias"));
    let logits = linear(
        &cls,
        1,
        w.get("head.weight"),
        w.get("head.bias"),
        d,
        cfg.num_classes,
    );

    let attention = captured.ok_or_else(|| {
        Error::Config(format!(
            "attention block {attention_block} but depth is {}",
            cfg.depth
        ))
    })?;
    let (rows, cols) = cfg.grid_hw();
    let scores = patch_attention(&attention, n);
    Ok(ForwardTrace {
        prediction: PredictionDistribution { logits },
        grid: AttentionGrid::new(rows, cols, scores, image_id)?,
        block: attention_block,
        attention,
    })
}

/// Mean over heads and all query rows of the attention each patch column
/// receives; the class-token column is dropped.
fn patch_attention(attention: &[Vec<f32>], n: usize) -> Vec<f32> {
    let mut acc = vec![0.0f64; n - 1];
    for a in attention {
        for q in 0..n {
            for (kk, s) in acc.iter_mut().enumerate() {
                *s += a[q * n + kk + 1] as f64;
            }
        }
    }
    let norm = (attention.len() * n) as f64;
    acc.into_iter().map(|s| (s / norm) as f32).collect()
}

fn self_attention(
    w: &ModelWeights,
    block: usize,
    h: &[f32],
    n: usize,
    cfg: &ModelConfig,
) -> (Vec<f32>, Vec<Vec<f32>>) {
    let d = cfg.embed_dim;
    let hd = cfg.head_dim();
    let p = |s: &str| format!("blocks.{block}.attn.{s}");
    let q = linear(h, n, w.get(&p("q.weight")), w.get(&p("q.bias")), d, d);
    let k = linear(h, n, w.get(&p("k.weight")), w.get(&p("k.bias")), d, d);
    let v = linear(h, n, w.get(&p("v.weight")), w.get(&p("v.bias")), d, d);
    let scale = 1.0 / (hd as f32).sqrt();

    let mut concat = vec![0.0f32; n * d];
    let mut maps = Vec::with_capacity(cfg.heads);
    let mut logits = vec![0.0f32; n];
    for head in 0..cfg.heads {
        let off = head * hd;
        let mut a = vec![0.0f32; n * n];
        for i in 0..n {
            let qi = &q[i * d + off..i * d + off + hd];
            for (j, l) in logits.iter_mut().enumerate() {
                let kj = &k[j * d + off..j * d + off + hd];
                *l = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f32>() * scale;
            }
            a[i * n..(i + 1) * n].copy_from_slice(&softmax(&logits));
            let out = &mut concat[i * d + off..i * d + off + hd];
            for j in 0..n {
                let aij = a[i * n + j];
                let vj = &v[j * d + off..j * d + off + hd];
                for (o, &vv) in out.iter_mut().zip(vj) {
                    *o += aij * vv;
                }
            }
        }
        maps.push(a);
    }
    let out = linear(
        &concat,
        n,
        w.get(&p("proj.weight")),
        w.get(&p("proj.bias")),
        d,
        d,
    );
    (out, maps)
}

/// `x [rows, inp] * w [inp, out] + b`.
fn linear(x: &[f32], rows: usize, w: &[f32], b: &[f32], inp: usize, out: usize) -> Vec<f32> {
    let mut y = Vec::with_capacity(rows * out);
    for r in 0..rows {
        let xr = &x[r * inp..(r + 1) * inp];
        let mut acc = b.to_vec();
        for (i, &xv) in xr.iter().enumerate() {
            let wr = &w[i * out..(i + 1) * out];
            for (a, &wv) in acc.iter_mut().zip(wr) {
                *a += xv * wv;
            }
        }
        y.extend(acc);
    }
    y
}

fn layer_norm(x: &[f32], rows: usize, d: usize, gamma: &[f32], beta: &[f32]) -> Vec<f32> {
    let mut y = Vec::with_capacity(rows * d);
    for r in 0..rows {
        let xr = &x[r * d..(r + 1) * d];
        let mean = xr.iter().map(|&v| v as f64).sum::<f64>() / d as f64;
        let var = xr.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        y.extend(
            xr.iter()
                .zip(gamma.iter().zip(beta))
                .map(|(&v, (&g, &b))| ((v as f64 - mean) * inv) as f32 * g + b),
        );
    }
    y
}

fn gelu(x: f32) -> f32 {
    const C: f32 = 0.797_884_6; // sqrt(2 / pi)
    0.5 * x * (1.0 + (C * (x + 0.044_715 * x * x * x)).tanh())
}

fn add_in_place(x: &mut [f32], y: &[f32]) {
    x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
}

/// Anything that turns an image into a class distribution and a patch-level
/// saliency grid.
pub trait AttentionModel: Sync {
    /// `(height, width)` the model consumes.
    fn input_hw(&self) -> (usize, usize);
    fn channels(&self) -> usize;
    fn patch_size(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn infer(
        &self,
        image: &ImageTensor,
        image_id: ImageId,
    ) -> Result<(PredictionDistribution, AttentionGrid)>;

    /// Downsamples (box filter) and converts channels to the model's input.
    fn prepare(&self, image: &ImageTensor) -> Result<ImageTensor> {
        let (h, w) = self.input_hw();
        let img = image.to_channels(self.channels())?;
        if img.hw() == (h, w) {
            Ok(img)
        } else {
            downsample(&img, h, w)
        }
    }
}

impl AttentionModel for Vit {
    fn input_hw(&self) -> (usize, usize) {
        self.config().input_hw
    }

    fn channels(&self) -> usize {
        self.config().channels
    }

    fn patch_size(&self) -> usize {
        self.config().patch_size
    }

    fn num_classes(&self) -> usize {
        self.config().num_classes
    }

    fn infer(
        &self,
        image: &ImageTensor,
        image_id: ImageId,
    ) -> Result<(PredictionDistribution, AttentionGrid)> {
        self.forward(image, image_id)
    }
}

/// Saliency from brightness: each grid cell gets its patch's mean luma,
/// normalized so the grid sums to one (uniform for an all-black image).
/// Logits are all zero.
#[derive(Debug, Clone, Copy)]
pub struct LuminanceSaliency {
    pub input_hw: (usize, usize),
    pub patch_size: usize,
    pub channels: usize,
    pub num_classes: usize,
}

impl AttentionModel for LuminanceSaliency {
    fn input_hw(&self) -> (usize, usize) {
        self.input_hw
    }

    fn channels(&self) -> usize {
        self.channels
    }

    fn patch_size(&self) -> usize {
        self.patch_size
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn infer(
        &self,
        image: &ImageTensor,
        image_id: ImageId,
    ) -> Result<(PredictionDistribution, AttentionGrid)> {
        let tokens = patchify(image, self.patch_size)?;
        let means: Vec<f64> = tokens
            .iter()
            .map(|t| t.iter().map(|&v| v as f64).sum::<f64>() / t.len() as f64)
            .collect();
        let total: f64 = means.iter().sum();
        let scores = if total > 0.0 {
            means.iter().map(|m| (m / total) as f32).collect()
        } else {
            vec![1.0 / means.len() as f32; means.len()]
        };
        let grid = AttentionGrid::new(
            image.height() / self.patch_size,
            image.width() / self.patch_size,
            scores,
            image_id,
        )?;
        Ok((
            PredictionDistribution {
                logits: vec![0.0; self.num_classes],
            },
            grid,
        ))
    }
}
