//! Browser demo: a generated class of blob scenes, scored and distilled with
//! the brightness-saliency model.

use focusdd::analyze::laplacian_snr;
use focusdd::compose::{distill_class, ClassImage, DistillConfig};
use focusdd::extract::ImageId;
use focusdd::image::ImageTensor;
use focusdd::rng::KeyedRng;
use focusdd::select::{score_image, window_dims, SelectorConfig};
use focusdd::synth::{blob_scene, class_tint, Blob};
use focusdd::vit::{AttentionModel, LuminanceSaliency};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const SIDE: usize = 96;
const IMAGES: usize = 6;
const MODEL_INPUT: usize = 32;
const MODEL_PATCH: usize = 4;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn rgba(img: &ImageTensor) -> Vec<u8> {
    let rgb = img.to_channels(3).expect("1 or 3 channels");
    rgb.to_u8()
        .chunks(3)
        .flat_map(|p| [p[0], p[1], p[2], 255])
        .collect()
}

#[derive(Serialize)]
struct Rect {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
}

#[derive(Serialize)]
struct ImageScore {
    image: usize,
    rank: usize,
    area_score: f64,
    realism: f64,
    /// Row-major saliency grid.
    grid: Vec<f32>,
    grid_side: usize,
    window: (usize, usize),
    center: (usize, usize),
    key: Rect,
    blob: (f64, f64),
}

#[derive(Serialize)]
struct Cell {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    source: u64,
    kind: String,
}

#[wasm_bindgen]
pub struct Demo {
    images: Vec<ClassImage>,
    blobs: Vec<Blob>,
    model: LuminanceSaliency,
}

#[wasm_bindgen]
impl Demo {
    /// A class of scenes, each with one bright blob of random size and place.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64) -> Result<Demo, JsError> {
        let mut images = Vec::with_capacity(IMAGES);
        let mut blobs = Vec::with_capacity(IMAGES);
        for i in 0..IMAGES {
            let mut rng = KeyedRng::new(seed, &[i as u64]);
            let blob = Blob::random(
                SIDE,
                SIDE,
                SIDE as f64 * (0.05 + 0.1 * rng.next_f64()),
                &mut rng,
            );
            let image = blob_scene(SIDE, SIDE, &blob, class_tint((seed % 3) as u32), &mut rng)
                .map_err(js_err)?;
            images.push(ClassImage {
                image_id: i as ImageId,
                image,
            });
            blobs.push(blob);
        }
        Ok(Demo {
            images,
            blobs,
            model: LuminanceSaliency {
                input_hw: (MODEL_INPUT, MODEL_INPUT),
                patch_size: MODEL_PATCH,
                channels: 3,
                num_classes: 1,
            },
        })
    }

    pub fn side(&self) -> usize {
        SIDE
    }

    pub fn count(&self) -> usize {
        self.images.len()
    }

    /// RGBA bytes of scene `index`.
    pub fn image(&self, index: usize) -> Result<Vec<u8>, JsError> {
        let ci = self
            .images
            .get(index)
            .ok_or_else(|| js_err("no such image"))?;
        Ok(rgba(&ci.image))
    }

    /// Scores every scene: saliency grid, best window, key rectangle and
    /// rank. JSON array in scene order.
    pub fn score(&self, alpha: f64, eta: f64) -> Result<String, JsError> {
        let cfg = DistillConfig {
            alpha,
            eta,
            ..DistillConfig::new(1)
        };
        cfg.validate().map_err(js_err)?;
        let out = distill_class(&self.model, 0, &self.images, &cfg).map_err(js_err)?;
        let selector = SelectorConfig {
            alpha,
            eta,
            ..Default::default()
        };
        let mut rows = Vec::with_capacity(self.images.len());
        for (i, ci) in self.images.iter().enumerate() {
            let input = self.model.prepare(&ci.image).map_err(js_err)?;
            let (pred, grid) = self.model.infer(&input, ci.image_id).map_err(js_err)?;
            let s = score_image(ci.image_id, &pred, &grid, &selector).map_err(js_err)?;
            let rank = out
                .ranked
                .iter()
                .position(|r| r.image_id == ci.image_id)
                .unwrap_or(0);
            let rect = focusdd::extract::map_center_to_original(
                s.center,
                MODEL_PATCH,
                (
                    SIDE as f64 / MODEL_INPUT as f64,
                    SIDE as f64 / MODEL_INPUT as f64,
                ),
                alpha,
                (SIDE, SIDE),
                ci.image_id,
            )
            .map_err(js_err)?;
            rows.push(ImageScore {
                image: i,
                rank,
                area_score: s.area_score,
                realism: s.realism,
                grid: grid.scores().to_vec(),
                grid_side: grid.rows(),
                window: window_dims((grid.rows(), grid.cols()), alpha),
                center: s.center,
                key: Rect {
                    x: rect.x0,
                    y: rect.y0,
                    w: rect.width,
                    h: rect.height,
                },
                blob: self.blobs[i].center,
            });
        }
        serde_json::to_string(&rows).map_err(js_err)
    }

    /// The 2x2 composite (`side x side` RGBA): three key crops and one
    /// background.
    pub fn composite(
        &self,
        alpha: f64,
        eta: f64,
        side: usize,
        seed: u64,
    ) -> Result<Vec<u8>, JsError> {
        Ok(rgba(&self.distill(alpha, eta, side, seed)?.0))
    }

    /// Cell layout of [`Demo::composite`] as JSON.
    pub fn composite_cells(
        &self,
        alpha: f64,
        eta: f64,
        side: usize,
        seed: u64,
    ) -> Result<String, JsError> {
        let cells: Vec<Cell> = self
            .distill(alpha, eta, side, seed)?
            .1
            .into_iter()
            .map(|c| Cell {
                x: c.cell.x,
                y: c.cell.y,
                w: c.cell.w,
                h: c.cell.h,
                source: c.source_image_id,
                kind: format!("{:?}", c.kind).to_lowercase(),
            })
            .collect();
        serde_json::to_string(&cells).map_err(js_err)
    }
}

impl Demo {
    fn distill(
        &self,
        alpha: f64,
        eta: f64,
        side: usize,
        seed: u64,
    ) -> Result<(ImageTensor, Vec<focusdd::compose::CellRecord>), JsError> {
        let cfg = DistillConfig {
            alpha,
            eta,
            seed,
            out_hw: (side, side),
            ..DistillConfig::new(1)
        };
        cfg.validate().map_err(js_err)?;
        let mut out = distill_class(&self.model, 0, &self.images, &cfg).map_err(js_err)?;
        let d = out.composites.remove(0);
        Ok((d.composite, d.cells))
    }
}

#[derive(Serialize)]
struct NoiseReport {
    sigma: f64,
    estimated_sigma: f64,
    snr_db: f64,
}

/// Adds uniform noise of standard deviation `sigma` to a flat gray image
/// and returns the Laplacian noise estimate as JSON.
#[wasm_bindgen]
pub fn noise_estimate(sigma: f64, seed: u64) -> Result<String, JsError> {
    if !(sigma > 0.0 && sigma <= 60.0) {
        return Err(js_err("sigma must be in (0, 60]"));
    }
    let mut rng = KeyedRng::new(seed, &[]);
    // Uniform on [-a, a] has standard deviation a / sqrt(3).
    let a = sigma * 3f64.sqrt();
    let img = ImageTensor::from_fn(128, 128, 1, |_, _, _| {
        (128.0 + a * (2.0 * rng.next_f64() - 1.0)) as f32
    })
    .map_err(js_err)?;
    let est = laplacian_snr(&img).map_err(js_err)?;
    serde_json::to_string(&NoiseReport {
        sigma,
        estimated_sigma: est.noise_sigma,
        snr_db: est.snr_db,
    })
    .map_err(js_err)
}
