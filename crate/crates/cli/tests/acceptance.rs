//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Every reference value here is recomputed independently of the library
//! (brute force, direct loops, finite differences, Monte-Carlo) or is a
//! closed-form constant.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use focusdd::analyze::{ess, laplacian_snr, EssParams};
use focusdd::compose::{
    compose, distill_class, CellSource, ClassImage, DistillConfig, SourceRegion,
};
use focusdd::extract::{crop, map_center_to_original, ImageId, PixelRect};
use focusdd::image::{resize_bilinear, ImageTensor};
use focusdd::io::{self, ntf, ImageFormat};
use focusdd::label::{soft_ce_grad, soft_ce_loss};
use focusdd::rng::KeyedRng;
use focusdd::select::{rank_class, score_image, window_sum_argmax, SelectorConfig};
use focusdd::synth::{blob_scene, class_tint, write_planted_dataset, Blob};
use focusdd::vit::{
    AttentionGrid, LuminanceSaliency, ModelConfig, ModelWeights, PredictionDistribution, Vit,
};
use focusdd::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> AttentionGrid {
    // Multiples of 2^-20 keep every window sum exact in f64.
    let scores = (0..rows * cols)
        .map(|_| rng.gen_range(0u32..1 << 20) as f32 / (1u32 << 20) as f32)
        .collect();
    AttentionGrid::new(rows, cols, scores, 0).unwrap()
}

fn window_argmax_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut fast_time = Duration::ZERO;
    let mut windows = 0usize;
    for g in 0..500 {
        let rows = rng.gen_range(4..=16);
        let cols = rng.gen_range(4..=16);
        let grid = random_grid(&mut rng, rows, cols);
        for h in 1..=rows {
            for w in 1..=cols {
                let t = Instant::now();
                let fast = window_sum_argmax(&grid, h, w).map_err(|e| e.to_string())?;
                fast_time += t.elapsed();
                let mut best = ((0, 0), f64::NEG_INFINITY);
                for r in 0..=rows - h {
                    for c in 0..=cols - w {
                        let mut s = 0.0f64;
                        for y in r..r + h {
                            for x in c..c + w {
                                s += grid.at(y, x) as f64;
                            }
                        }
                        if s > best.1 {
                            best = ((r + h / 2, c + w / 2), s);
                        }
                    }
                }
                if (fast.center, fast.sum) != best {
                    return Err(format!(
                        "grid {g} {rows}x{cols} window {h}x{w}: {:?} vs {best:?}",
                        (fast.center, fast.sum)
                    ));
                }
                windows += 1;
            }
        }
    }
    check(
        fast_time < Duration::from_secs(5),
        format!("500 grids, {windows} windows exact, search time {fast_time:.2?}"),
    )
}

fn attention_invariants() -> Outcome {
    let cfg = ModelConfig {
        depth: 2,
        heads: 4,
        embed_dim: 32,
        patch_size: 4,
        num_classes: 6,
        input_hw: (16, 16),
        channels: 3,
    };
    let n = cfg.num_patches() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_row, mut worst_grid) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let vit = Vit::new(ModelWeights::synthetic(cfg, rng.gen()).unwrap()).unwrap();
        let bytes: Vec<u8> = (0..16 * 16 * 3).map(|_| rng.gen()).collect();
        let img = ImageTensor::from_u8(16, 16, 3, &bytes).unwrap();
        let t = vit.forward_traced(&img, 0).map_err(|e| e.to_string())?;
        for a in &t.attention {
            for q in 0..n {
                let s: f64 = a[q * n..(q + 1) * n].iter().map(|&v| v as f64).sum();
                worst_row = worst_row.max((s - 1.0).abs());
            }
        }
        for k in 0..n - 1 {
            let mut s = 0.0f64;
            for h in 0..cfg.heads {
                for q in 0..n {
                    s += t.attention[h][q * n + k + 1] as f64;
                }
            }
            let want = s / (cfg.heads * n) as f64;
            worst_grid = worst_grid.max((t.grid.scores()[k] as f64 - want).abs());
        }
    }
    check(
        worst_row < 1e-5 && worst_grid < 1e-6,
        format!(
            "50 forwards, max |row sum - 1| = {worst_row:.2e}, max grid error = {worst_grid:.2e}"
        ),
    )
}

fn realism_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SelectorConfig {
        eta: 0.0,
        ..SelectorConfig::default()
    };
    for set in 0..100 {
        let count = rng.gen_range(1..30);
        let scored: Vec<_> = (0..count)
            .map(|i| {
                // Few distinct logit levels so confidence ties are common.
                let logits = (0..4).map(|_| rng.gen_range(0..3) as f32).collect();
                let grid = random_grid(&mut rng, 6, 6);
                score_image(
                    i as ImageId * 7 % 31,
                    &PredictionDistribution { logits },
                    &grid,
                    &cfg,
                )
            })
            .collect::<focusdd::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let mut ids: Vec<ImageId> = scored.iter().map(|s| s.image_id).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != scored.len() {
            continue;
        }
        let mut want: Vec<(f64, ImageId)> =
            scored.iter().map(|s| (s.confidence, s.image_id)).collect();
        want.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let got: Vec<ImageId> = rank_class(scored).iter().map(|s| s.image_id).collect();
        let want: Vec<ImageId> = want.into_iter().map(|w| w.1).collect();
        if got != want {
            return Err(format!("set {set}: {got:?} vs {want:?}"));
        }
    }
    Ok("100 score sets ordered by confidence, ties by id".into())
}

fn center_mapping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..100 {
        let patch = rng.gen_range(1..=16);
        let grid = rng.gen_range(1..=14);
        let input = patch * grid;
        let h = rng.gen_range(input..=input * 3);
        let w = rng.gen_range(input..=input * 3);
        let scale = (h as f64 / input as f64, w as f64 / input as f64);
        let center = (rng.gen_range(0..grid), rng.gen_range(0..grid));
        let full = map_center_to_original(center, patch, scale, 1.0, (h, w), 0)
            .map_err(|e| e.to_string())?;
        if (full.x0, full.y0, full.width, full.height) != (0, 0, w, h) {
            return Err(format!("case {case}: alpha 1 gave {full:?} on {h}x{w}"));
        }
        let alpha: f64 = rng.gen_range(0.05..1.0);
        let r = map_center_to_original(center, patch, scale, alpha, (h, w), 0)
            .map_err(|e| e.to_string())?;
        let side = |dim: usize| (2 * (alpha * dim as f64 / 2.0).floor() as usize).max(1);
        let in_bounds = r.x0 + r.width <= w && r.y0 + r.height <= h;
        if (r.height, r.width) != (side(h), side(w)) || !in_bounds {
            return Err(format!("case {case}: alpha {alpha} on {h}x{w} gave {r:?}"));
        }
    }
    Ok("100 configs: alpha 1 is the full image; sides 2*floor(alpha*dim/2), in bounds".into())
}

fn composition_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..50 {
        let sources: Vec<ImageTensor> = (0..4)
            .map(|_| {
                let (w, h) = (rng.gen_range(2..120), rng.gen_range(2..120));
                let ch = if rng.gen_bool(0.3) { 1 } else { 3 };
                let bytes: Vec<u8> = (0..w * h * ch).map(|_| rng.gen()).collect();
                ImageTensor::from_u8(w, h, ch, &bytes).unwrap()
            })
            .collect();
        let cells: Vec<CellSource> = sources
            .iter()
            .enumerate()
            .map(|(i, img)| CellSource {
                image: img,
                source_image_id: i as ImageId,
                source_rect: SourceRegion::Crop(PixelRect::full(img, i as ImageId).into()),
            })
            .collect();
        let side = 2 * rng.gen_range(2..120);
        let d =
            compose(&cells[..3], &cells[3..], (side, side), 0, case).map_err(|e| e.to_string())?;
        // Through the PNG writer, as the pipeline stores it.
        let bytes = io::encode_image(&d.composite, ImageFormat::Png).map_err(|e| e.to_string())?;
        let stored = io::decode_image(&bytes).map_err(|e| e.to_string())?;
        for (rec, src) in d.cells.iter().zip(&sources) {
            let got = crop(&stored, &rec.cell.to_pixel_rect(0)).map_err(|e| e.to_string())?;
            let src = src.to_channels(stored.channels()).unwrap();
            let want = resize_bilinear(&src, rec.cell.h, rec.cell.w).unwrap();
            if got != want {
                return Err(format!("case {case}: cell {:?} differs", rec.cell));
            }
        }
    }
    Ok("50 composites, every cell bit-exact".into())
}

fn ess_arithmetic() -> Outcome {
    let base = EssParams {
        d_prime: 10.0,
        m: 3.0,
        n: 1.0,
        gamma: 1.0,
        beta: 1.0,
    };
    let v = ess(&base);
    if v != 40.0 {
        return Err(format!("ess(10, 3, 1, 1, 1) = {v}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / b.abs() };
    for _ in 0..1000 {
        let p = EssParams {
            d_prime: rng.gen_range(0.0..1e4),
            m: rng.gen_range(0.0..20.0),
            n: rng.gen_range(0.0..20.0),
            gamma: rng.gen_range(0.0..=0.5),
            beta: rng.gen_range(0.0..=0.5),
        };
        let k: f64 = rng.gen_range(0.0..10.0);
        let (g2, b2): (f64, f64) = (rng.gen_range(0.0..=0.5), rng.gen_range(0.0..=0.5));
        let only_g = |g: f64| {
            ess(&EssParams {
                gamma: g,
                beta: 0.0,
                ..p
            })
        };
        let only_b = |b: f64| {
            ess(&EssParams {
                gamma: 0.0,
                beta: b,
                ..p
            })
        };
        // Homogeneous in d', additive in gamma and in beta, and the two
        // terms add up to the whole.
        worst = worst
            .max(rel(
                ess(&EssParams {
                    d_prime: k * p.d_prime,
                    ..p
                }),
                k * ess(&p),
            ))
            .max(rel(only_g(p.gamma + g2), only_g(p.gamma) + only_g(g2)))
            .max(rel(only_b(p.beta + b2), only_b(p.beta) + only_b(b2)))
            .max(rel(ess(&p), only_g(p.gamma) + only_b(p.beta)));
    }
    check(
        worst <= 1e-12,
        format!("ess = 40; 1000 linearity draws, worst relative error {worst:.1e}"),
    )
}

fn soft_ce_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let c = rng.gen_range(2..=10);
        let regions = rng.gen_range(1..=4);
        let logits: Vec<Vec<f64>> = (0..regions)
            .map(|_| (0..c).map(|_| rng.gen_range(-4.0..4.0)).collect())
            .collect();
        let labels: Vec<Vec<f64>> = (0..regions)
            .map(|_| {
                let w: Vec<f64> = (0..c).map(|_| rng.gen_range(0.01..1.0)).collect();
                let t: f64 = w.iter().sum();
                w.into_iter().map(|v| v / t).collect()
            })
            .collect();
        let grad = soft_ce_grad(&logits, &labels).map_err(|e| e.to_string())?;
        let h = 1e-3;
        for r in 0..regions {
            for i in 0..c {
                let mut up = logits.clone();
                up[r][i] += h;
                let mut down = logits.clone();
                down[r][i] -= h;
                let fd = (soft_ce_loss(&up, &labels).unwrap()
                    - soft_ce_loss(&down, &labels).unwrap())
                    / (2.0 * h);
                worst = worst.max((grad[r][i] - fd).abs() / grad[r][i].abs().max(1e-2));
            }
        }
    }
    let mut uniform_err = 0.0f64;
    for c in 2..=10usize {
        let logits = vec![vec![0.0; c]; 3];
        let labels = vec![vec![1.0 / c as f64; c]; 3];
        let per_region = soft_ce_loss(&logits, &labels).unwrap() / 3.0;
        uniform_err = uniform_err.max((per_region - (c as f64).ln()).abs());
    }
    check(
        worst < 1e-4 && uniform_err < 1e-9,
        format!("50 instances, worst FD relative error {worst:.1e}; uniform loss vs ln C error {uniform_err:.1e}"),
    )
}

fn snr_estimator() -> Outcome {
    let mut total = 0.0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + trial);
        let normal = Normal::new(128.0, 10.0).unwrap();
        let data = (0..256 * 256)
            .map(|_| (normal.sample(&mut rng) as f32).clamp(0.0, 255.0))
            .collect();
        let img = ImageTensor::new(256, 256, 1, data).unwrap();
        total += laplacian_snr(&img).map_err(|e| e.to_string())?.noise_sigma;
    }
    let mean = total / 100.0;
    let flat = ImageTensor::filled(256, 256, &[128.0]).unwrap();
    let sentinel = matches!(laplacian_snr(&flat), Err(Error::InfiniteSnr));
    check(
        (mean - 10.0).abs() <= 1.5 && sentinel,
        format!("mean sigma estimate {mean:.3} (true 10); constant image sentinel: {sentinel}"),
    )
}

fn planted_object() -> Outcome {
    let model = LuminanceSaliency {
        input_hw: (32, 32),
        patch_size: 4,
        channels: 3,
        num_classes: 3,
    };
    let cfg = DistillConfig::new(1);
    let mut hits = 0;
    for trial in 0..100u64 {
        let mut all = true;
        for class in 0..3u32 {
            let mut rng = KeyedRng::new(trial, &[class as u64]);
            let blobs: Vec<Blob> = (0..6)
                .map(|_| Blob::random(64, 64, 6.4 * (0.8 + 0.6 * rng.next_f64()), &mut rng))
                .collect();
            let images: Vec<ClassImage> = blobs
                .iter()
                .enumerate()
                .map(|(i, b)| ClassImage {
                    image_id: i as ImageId,
                    image: blob_scene(64, 64, b, class_tint(class), &mut rng).unwrap(),
                })
                .collect();
            let out = distill_class(&model, class, &images, &cfg).map_err(|e| e.to_string())?;
            let top = out.ranked[0].image_id as usize;
            let (x, y) = blobs[top].center_pixel();
            all &= out.keys.patches[0].rect.contains(x, y);
        }
        hits += usize::from(all);
    }
    check(
        hits >= 90,
        format!("{hits}/100 trials with every class's top key crop on its blob"),
    )
}

fn digests(root: &Path) -> BTreeMap<String, String> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, String>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let digest = Sha256::digest(fs::read(&p).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), hex);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    write_planted_dataset(&data, 3, 12, 64, 10).map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_focusdd");
    let weights = tmp.path().join("w.ntf");
    let status = Command::new(bin)
        .args(["gen-weights", "--seed", "3", "--classes", "3", "--out"])
        .arg(&weights)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("gen-weights exited with {status}"));
    }
    let mut runs = Vec::new();
    for workers in [1, 8] {
        let out = tmp.path().join(format!("out{workers}"));
        let o = Command::new(bin)
            .env("FOCUSDD_LOG", "warn")
            .args([
                "distill",
                "--ipc",
                "3",
                "--seed",
                "42",
                "--out-size",
                "64",
                "--workers",
                &workers.to_string(),
            ])
            .arg("--data")
            .arg(&data)
            .arg("--weights")
            .arg(&weights)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!(
                "distill --workers {workers}: {}",
                String::from_utf8_lossy(&o.stderr)
            ));
        }
        runs.push(digests(&out));
    }
    let elapsed = start.elapsed();
    let files = runs[0].len();
    check(
        runs[0] == runs[1] && files == 3 * 3 + 2 && elapsed < Duration::from_secs(60),
        format!("{files} files identical across 1 and 8 workers; total {elapsed:.2?}"),
    )
}

fn io_round_trips() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let (w, h) = (rng.gen_range(1..70), rng.gen_range(1..70));
        let ch = if rng.gen_bool(0.5) { 1 } else { 3 };
        let bytes: Vec<u8> = (0..w * h * ch).map(|_| rng.gen()).collect();
        let img = ImageTensor::from_u8(w, h, ch, &bytes).unwrap();
        for ext in ["png", "ppm"] {
            let path = tmp.path().join(format!("{case}.{ext}"));
            io::write_image(&img, &path).map_err(|e| e.to_string())?;
            let back = io::read_image(&path).map_err(|e| e.to_string())?;
            if back != img {
                return Err(format!("case {case} .{ext}: {w}x{h}x{ch} differs"));
            }
        }
        let heads = rng.gen_range(1..=3);
        let cfg = ModelConfig {
            depth: rng.gen_range(1..=3),
            heads,
            embed_dim: heads * rng.gen_range(1..=6),
            patch_size: 2,
            num_classes: rng.gen_range(1..=8),
            input_hw: (2 * rng.gen_range(1..=4), 2 * rng.gen_range(1..=4)),
            channels: if rng.gen_bool(0.5) { 1 } else { 3 },
        };
        let weights = ModelWeights::synthetic(cfg, rng.gen()).unwrap();
        let path = tmp.path().join(format!("{case}.ntf"));
        ntf::save(&weights, &path).map_err(|e| e.to_string())?;
        let back = ntf::load(&path).map_err(|e| e.to_string())?;
        let same = back.config == weights.config
            && back.tensors.len() == weights.tensors.len()
            && back
                .tensors
                .iter()
                .zip(&weights.tensors)
                .all(|((a, ta), (b, tb))| {
                    a == b
                        && ta.shape == tb.shape
                        && ta
                            .data
                            .iter()
                            .map(|v| v.to_bits())
                            .eq(tb.data.iter().map(|v| v.to_bits()))
                });
        if !same {
            return Err(format!("case {case}: NTF round trip differs"));
        }
    }
    Ok("100 cases: PNG, PNM and NTF bit-exact".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("window-argmax oracle", window_argmax_oracle),
        ("attention invariants", attention_invariants),
        ("realism reduction", realism_reduction),
        ("center mapping", center_mapping),
        ("composition fidelity", composition_fidelity),
        ("ess arithmetic", ess_arithmetic),
        ("soft-ce gradient", soft_ce_gradient),
        ("snr estimator", snr_estimator),
        ("planted-object selection", planted_object),
        ("determinism", determinism),
        ("io round-trips", io_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
