//! Self-checks run by `focusdd verify`: each suite compares a production
//! routine against a direct, slow recomputation on seeded random inputs.

use serde::Serialize;

use crate::extract::{crop, PixelRect};
use crate::image::ImageTensor;
use crate::io::{self, ntf, ImageFormat};
use crate::rng::KeyedRng;
use crate::select::window_sum_argmax;
use crate::vit::{AttentionGrid, ModelConfig, ModelWeights, Vit};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            first_failure: self.first_failure,
        }
    }
}

/// Grid values are multiples of 2^-24 so every window sum is exact in f64.
fn random_grid(rng: &mut KeyedRng, rows: usize, cols: usize) -> AttentionGrid {
    let scores = (0..rows * cols)
        .map(|_| (rng.next_u64() >> 40) as f32 / (1u64 << 24) as f32)
        .collect();
    AttentionGrid::new(rows, cols, scores, 0).expect("valid grid")
}

fn brute_force_window(grid: &AttentionGrid, h: usize, w: usize) -> ((usize, usize), f64) {
    let mut best = ((0, 0), f64::NEG_INFINITY);
    for r in 0..=grid.rows() - h {
        for c in 0..=grid.cols() - w {
            let mut s = 0.0f64;
            for dr in 0..h {
                for dc in 0..w {
                    s += grid.at(r + dr, c + dc) as f64;
                }
            }
            if s > best.1 {
                best = ((r + h / 2, c + w / 2), s);
            }
        }
    }
    best
}

pub fn window_argmax_suite(seed: u64, grids: usize) -> SuiteResult {
    let mut t = Tally::new("window-argmax");
    let mut rng = KeyedRng::new(seed, &[101]);
    for g in 0..grids {
        let rows = 4 + rng.below(13);
        let cols = 4 + rng.below(13);
        let grid = random_grid(&mut rng, rows, cols);
        let h = 1 + rng.below(rows);
        let w = 1 + rng.below(cols);
        let fast = window_sum_argmax(&grid, h, w).expect("window fits");
        let (center, sum) = brute_force_window(&grid, h, w);
        t.check(fast.center == center && fast.sum == sum, || {
            format!(
                "grid {g} ({rows}x{cols}, window {h}x{w}): {:?} vs {:?}",
                (fast.center, fast.sum),
                (center, sum)
            )
        });
    }
    t.finish()
}

fn random_image(rng: &mut KeyedRng, max_side: usize) -> ImageTensor {
    let w = 1 + rng.below(max_side);
    let h = 1 + rng.below(max_side);
    let ch = if rng.below(2) == 0 { 1 } else { 3 };
    let bytes: Vec<u8> = (0..w * h * ch).map(|_| rng.below(256) as u8).collect();
    ImageTensor::from_u8(w, h, ch, &bytes).expect("valid image")
}

pub fn crop_suite(seed: u64, cases: usize) -> SuiteResult {
    let mut t = Tally::new("crop-indexing");
    let mut rng = KeyedRng::new(seed, &[102]);
    for i in 0..cases {
        let img = random_image(&mut rng, 24);
        let width = 1 + rng.below(img.width());
        let height = 1 + rng.below(img.height());
        let rect = PixelRect {
            x0: rng.below(img.width() - width + 1),
            y0: rng.below(img.height() - height + 1),
            width,
            height,
            source_image_id: 0,
        };
        let out = crop(&img, &rect).expect("rect inside");
        let mut ok = out.hw() == (height, width);
        for y in 0..height {
            for x in 0..width {
                for c in 0..img.channels() {
                    ok &= out.data()[(y * width + x) * img.channels() + c]
                        == img.data()
                            [((rect.y0 + y) * img.width() + rect.x0 + x) * img.channels() + c];
                }
            }
        }
        t.check(ok, || format!("case {i}: {rect:?}"));
    }
    t.finish()
}

pub fn image_round_trip_suite(seed: u64, cases: usize) -> SuiteResult {
    let mut t = Tally::new("image-round-trip");
    let mut rng = KeyedRng::new(seed, &[103]);
    for i in 0..cases {
        let img = random_image(&mut rng, 40);
        for format in [ImageFormat::Png, ImageFormat::Pnm] {
            let ok = io::encode_image(&img, format)
                .and_then(|b| io::decode_image(&b))
                .map(|back| back == img)
                .unwrap_or(false);
            t.check(ok, || format!("case {i} {format:?}"));
        }
    }
    t.finish()
}

pub fn weights_round_trip_suite(seed: u64, cases: usize) -> SuiteResult {
    let mut t = Tally::new("weights-round-trip");
    let mut rng = KeyedRng::new(seed, &[104]);
    for i in 0..cases {
        let heads = 1 + rng.below(3);
        let cfg = ModelConfig {
            depth: 1 + rng.below(2),
            heads,
            embed_dim: heads * (1 + rng.below(4)),
            patch_size: 2,
            num_classes: 1 + rng.below(5),
            input_hw: (2 * (1 + rng.below(3)), 2 * (1 + rng.below(3))),
            channels: if rng.below(2) == 0 { 1 } else { 3 },
        };
        let w = ModelWeights::synthetic(cfg, rng.next_u64()).expect("valid config");
        let ok = ntf::to_bytes(&w)
            .and_then(|b| ntf::from_bytes(&b))
            .map(|back| {
                back.config == w.config
                    && back
                        .tensors
                        .iter()
                        .zip(&w.tensors)
                        .all(|((na, a), (nb, b))| {
                            na == nb
                                && a.shape == b.shape
                                && a.data
                                    .iter()
                                    .zip(&b.data)
                                    .all(|(x, y)| x.to_bits() == y.to_bits())
                        })
            })
            .unwrap_or(false);
        t.check(ok, || format!("case {i}: {cfg:?}"));
    }
    t.finish()
}

pub fn attention_rows_suite(seed: u64, cases: usize) -> SuiteResult {
    let mut t = Tally::new("attention-rows");
    let cfg = ModelConfig {
        depth: 2,
        heads: 2,
        embed_dim: 16,
        patch_size: 4,
        num_classes: 4,
        input_hw: (16, 16),
        channels: 3,
    };
    let mut rng = KeyedRng::new(seed, &[105]);
    for i in 0..cases {
        let vit = Vit::new(ModelWeights::synthetic(cfg, rng.next_u64()).expect("valid"))
            .expect("valid weights");
        let bytes: Vec<u8> = (0..16 * 16 * 3).map(|_| rng.below(256) as u8).collect();
        let img = ImageTensor::from_u8(16, 16, 3, &bytes).expect("valid image");
        let trace = vit.forward_traced(&img, 0).expect("forward");
        let n = cfg.num_patches() + 1;
        let ok = trace.attention.iter().all(|a| {
            a.chunks(n)
                .all(|row| (row.iter().map(|&v| v as f64).sum::<f64>() - 1.0).abs() < 1e-5)
        });
        t.check(ok, || format!("case {i}"));
    }
    t.finish()
}

pub fn run_all(seed: u64) -> Vec<SuiteResult> {
    vec![
        window_argmax_suite(seed, 200),
        crop_suite(seed, 100),
        image_round_trip_suite(seed, 50),
        weights_round_trip_suite(seed, 20),
        attention_rows_suite(seed, 10),
    ]
}
