//! Key-patch and background sets, 2x2 composites, and the full
//! distillation pipeline.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{crop, downsample, map_center_to_original, ImageId, PixelRect};
use crate::image::{resize_bilinear, ImageTensor};
use crate::io::{self, ClassId, DatasetManifest};
use crate::rng::{tag, weighted_sample, KeyedRng};
use crate::select::{rank_class, score_image, ScoredImage, SelectorConfig};
use crate::vit::AttentionModel;

pub const DEFAULT_PATCHES_PER_COMPOSITE: usize = 3;
pub const DEFAULT_BACKGROUNDS_PER_COMPOSITE: usize = 1;
pub const DEFAULT_OUT_HW: (usize, usize) = (224, 224);

/// How key patches are dealt to composites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyOrder {
    /// Composite `j` takes ranked patches `m*j .. m*j + m`, wrapping.
    #[default]
    Sequential,
    /// Same blocks over a seeded shuffle of the ranked set.
    Shuffled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub ipc: usize,
    /// Size of the key-patch set (M).
    pub key_images: usize,
    /// Size of the background set (N).
    pub background_images: usize,
    /// Key patches per composite (m).
    pub patches_per_composite: usize,
    /// Backgrounds per composite (n).
    pub backgrounds_per_composite: usize,
    pub out_hw: (usize, usize),
    pub seed: u64,
    pub alpha: f64,
    pub eta: f64,
    #[serde(default)]
    pub area_mode: crate::select::AreaMode,
    #[serde(default)]
    pub key_order: KeyOrder,
}

impl DistillConfig {
    /// Defaults for `ipc`: M = 3 * ipc, N = ipc, m = 3, n = 1.
    pub fn new(ipc: usize) -> Self {
        let sel = SelectorConfig::default();
        DistillConfig {
            ipc,
            key_images: 3 * ipc,
            background_images: ipc,
            patches_per_composite: DEFAULT_PATCHES_PER_COMPOSITE,
            backgrounds_per_composite: DEFAULT_BACKGROUNDS_PER_COMPOSITE,
            out_hw: DEFAULT_OUT_HW,
            seed: 0,
            alpha: sel.alpha,
            eta: sel.eta,
            area_mode: sel.area_mode,
            key_order: KeyOrder::Sequential,
        }
    }

    pub fn selector(&self) -> SelectorConfig {
        SelectorConfig {
            alpha: self.alpha,
            eta: self.eta,
            area_mode: self.area_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.selector().validate()?;
        if self.ipc == 0 {
            return Err(Error::Config("ipc must be at least 1".into()));
        }
        if self.key_images == 0 {
            return Err(Error::Config("key image count must be at least 1".into()));
        }
        if self.patches_per_composite + self.backgrounds_per_composite != 4 {
            return Err(Error::Config(format!(
                "the 2x2 layout needs m + n = 4, got {} + {}",
                self.patches_per_composite, self.backgrounds_per_composite
            )));
        }
        let (h, w) = self.out_hw;
        if h < 2 || w < 2 || h % 2 != 0 || w % 2 != 0 {
            return Err(Error::Dimension(format!(
                "composite size {h}x{w} must be even"
            )));
        }
        Ok(())
    }
}

/// Rectangle in composite or source pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl From<PixelRect> for Region {
    fn from(r: PixelRect) -> Self {
        Region {
            x: r.x0,
            y: r.y0,
            w: r.width,
            h: r.height,
        }
    }
}

impl Region {
    pub fn to_pixel_rect(self, source_image_id: ImageId) -> PixelRect {
        PixelRect {
            x0: self.x,
            y0: self.y,
            width: self.w,
            height: self.h,
            source_image_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WholeImage {
    DownsampledFull,
}

/// Where a cell's pixels came from in its source image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceRegion {
    Crop(Region),
    Whole(WholeImage),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    Key,
    Background,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell: Region,
    pub source_image_id: ImageId,
    pub source_rect: SourceRegion,
    pub kind: CellKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistilledImage {
    pub composite: ImageTensor,
    pub cells: Vec<CellRecord>,
    pub class_id: ClassId,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyPatch {
    pub image: ImageTensor,
    pub rect: PixelRect,
    pub realism: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyPatchSet {
    pub class_id: ClassId,
    pub patches: Vec<KeyPatch>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub image_id: ImageId,
    pub image: ImageTensor,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSet {
    pub class_id: ClassId,
    pub images: Vec<Background>,
}

/// One source image of a class, at full resolution.
#[derive(Debug, Clone)]
pub struct ClassImage {
    pub image_id: ImageId,
    pub image: ImageTensor,
}

/// One cell's input to [`compose`].
#[derive(Debug, Clone, Copy)]
pub struct CellSource<'a> {
    pub image: &'a ImageTensor,
    pub source_image_id: ImageId,
    pub source_rect: SourceRegion,
}

/// Scores every image of a class and ranks them.
pub fn score_class<M: AttentionModel + ?Sized>(
    model: &M,
    images: &[ClassImage],
    selector: &SelectorConfig,
) -> Result<Vec<ScoredImage>> {
    let scored = images
        .par_iter()
        .map(|ci| {
            let input = model.prepare(&ci.image)?;
            let (pred, grid) = model.infer(&input, ci.image_id)?;
            score_image(ci.image_id, &pred, &grid, selector)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_class(scored))
}

/// Crops the key region of each of the top `key_count` ranked images.
pub fn build_key_set<M: AttentionModel + ?Sized>(
    model: &M,
    class_id: ClassId,
    images: &[ClassImage],
    ranked: &[ScoredImage],
    key_count: usize,
    alpha: f64,
) -> Result<KeyPatchSet> {
    if images.is_empty() {
        return Err(Error::EmptyClass(class_id.to_string()));
    }
    let by_id: HashMap<ImageId, &ImageTensor> =
        images.iter().map(|ci| (ci.image_id, &ci.image)).collect();
    let (in_h, in_w) = model.input_hw();
    let patches = ranked
        .iter()
        .take(key_count)
        .map(|s| {
            let img = by_id.get(&s.image_id).ok_or_else(|| {
                Error::Malformed(format!(
                    "scored image {} not in class {class_id}",
                    s.image_id
                ))
            })?;
            let (h, w) = img.hw();
            let scale = (h as f64 / in_h as f64, w as f64 / in_w as f64);
            let rect = map_center_to_original(
                s.center,
                model.patch_size(),
                scale,
                alpha,
                (h, w),
                s.image_id,
            )?;
            Ok(KeyPatch {
                image: crop(img, &rect)?,
                rect,
                realism: s.realism,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KeyPatchSet { class_id, patches })
}

/// Confidence-weighted draw of up to `count` backgrounds without replacement.
pub fn select_backgrounds(
    class_id: ClassId,
    candidates: Vec<Background>,
    count: usize,
    rng: &mut KeyedRng,
) -> BackgroundSet {
    let weights: Vec<f64> = candidates.iter().map(|c| c.confidence).collect();
    let picks = weighted_sample(&weights, count, rng);
    let mut slots: Vec<Option<Background>> = candidates.into_iter().map(Some).collect();
    let images = picks
        .into_iter()
        .map(|i| slots[i].take().expect("indices are distinct"))
        .collect();
    BackgroundSet { class_id, images }
}

/// Cell `p` of the 2x2 layout, row-major.
pub fn cell_region(p: usize, out_hw: (usize, usize)) -> Region {
    let (ch, cw) = (out_hw.0 / 2, out_hw.1 / 2);
    Region {
        x: (p % 2) * cw,
        y: (p / 2) * ch,
        w: cw,
        h: ch,
    }
}

/// Tiles keys then backgrounds into a 2x2 composite, row-major.
///
/// Each source is bilinearly resized to the cell size. The composite is RGB
/// if any source is RGB.
pub fn compose(
    keys: &[CellSource<'_>],
    backgrounds: &[CellSource<'_>],
    out_hw: (usize, usize),
    class_id: ClassId,
    index: usize,
) -> Result<DistilledImage> {
    let (out_h, out_w) = out_hw;
    if out_h < 2 || out_w < 2 || out_h % 2 != 0 || out_w % 2 != 0 {
        return Err(Error::Dimension(format!(
            "composite size {out_h}x{out_w} must be even"
        )));
    }
    if keys.len() + backgrounds.len() != 4 {
        return Err(Error::Config(format!(
            "2x2 composite needs 4 sources, got {} keys and {} backgrounds",
            keys.len(),
            backgrounds.len()
        )));
    }
    if keys.is_empty() {
        return Err(Error::Config("composite without key patches".into()));
    }
    let ch = keys
        .iter()
        .chain(backgrounds)
        .map(|s| s.image.channels())
        .max()
        .unwrap_or(3);
    let mut composite =
        ImageTensor::from_parts_unchecked(out_w, out_h, ch, vec![0.0; out_h * out_w * ch]);
    let sources = keys
        .iter()
        .map(|s| (s, CellKind::Key))
        .chain(backgrounds.iter().map(|s| (s, CellKind::Background)));
    let mut cells = Vec::with_capacity(4);
    for (p, (src, kind)) in sources.enumerate() {
        let cell = cell_region(p, out_hw);
        let resized = resize_bilinear(&src.image.to_channels(ch)?, cell.h, cell.w)?;
        let data = composite.data_mut();
        for y in 0..cell.h {
            let dst = ((cell.y + y) * out_w + cell.x) * ch;
            let row = &resized.data()[y * cell.w * ch..(y + 1) * cell.w * ch];
            data[dst..dst + cell.w * ch].copy_from_slice(row);
        }
        cells.push(CellRecord {
            cell,
            source_image_id: src.source_image_id,
            source_rect: src.source_rect,
            kind,
        });
    }
    Ok(DistilledImage {
        composite,
        cells,
        class_id,
        index,
    })
}

/// Everything produced for one class.
#[derive(Debug, Clone)]
pub struct ClassDistillation {
    pub class_id: ClassId,
    pub ranked: Vec<ScoredImage>,
    pub keys: KeyPatchSet,
    pub backgrounds: BackgroundSet,
    /// True when the class had no images outside the key set, so
    /// backgrounds were drawn from the whole class.
    pub backgrounds_overlap_keys: bool,
    pub composites: Vec<DistilledImage>,
}

/// Runs the per-class pipeline on in-memory images.
pub fn distill_class<M: AttentionModel + ?Sized>(
    model: &M,
    class_id: ClassId,
    images: &[ClassImage],
    cfg: &DistillConfig,
) -> Result<ClassDistillation> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(Error::EmptyClass(class_id.to_string()));
    }
    let ranked = score_class(model, images, &cfg.selector())?;
    let mut keys = build_key_set(model, class_id, images, &ranked, cfg.key_images, cfg.alpha)?;
    if cfg.key_order == KeyOrder::Shuffled {
        let mut rng = KeyedRng::new(cfg.seed, &[tag::KEY_SHUFFLE, class_id as u64]);
        rng.shuffle(&mut keys.patches);
    }

    let by_id: HashMap<ImageId, &ImageTensor> =
        images.iter().map(|ci| (ci.image_id, &ci.image)).collect();
    let (in_h, in_w) = model.input_hw();
    let background_of = |s: &ScoredImage| -> Result<Background> {
        Ok(Background {
            image_id: s.image_id,
            image: downsample(by_id[&s.image_id], in_h, in_w)?,
            confidence: s.confidence,
        })
    };
    let n_keys = keys.patches.len();
    let mut overlap = false;
    let mut candidates: Vec<&ScoredImage> = ranked.iter().skip(n_keys).collect();
    if candidates.len() < cfg.backgrounds_per_composite {
        log::warn!(
            "class {class_id}: {} images leave too few background candidates; drawing from the whole class",
            images.len()
        );
        overlap = true;
        candidates = ranked.iter().collect();
    }
    let candidates = candidates
        .into_iter()
        .map(background_of)
        .collect::<Result<Vec<_>>>()?;
    let mut rng = KeyedRng::new(cfg.seed, &[tag::BACKGROUND_SET, class_id as u64]);
    let count = cfg.background_images.max(cfg.backgrounds_per_composite);
    let backgrounds = select_backgrounds(class_id, candidates, count, &mut rng);

    let m = cfg.patches_per_composite;
    let composites = (0..cfg.ipc)
        .map(|j| {
            let key_sources: Vec<CellSource> = (0..m)
                .map(|t| {
                    let k = &keys.patches[(m * j + t) % n_keys];
                    CellSource {
                        image: &k.image,
                        source_image_id: k.rect.source_image_id,
                        source_rect: SourceRegion::Crop(k.rect.into()),
                    }
                })
                .collect();
            let mut rng =
                KeyedRng::new(cfg.seed, &[tag::BACKGROUND_PICK, class_id as u64, j as u64]);
            let bg_sources: Vec<CellSource> = rng
                .sample_indices(backgrounds.images.len(), cfg.backgrounds_per_composite)
                .into_iter()
                .map(|i| {
                    let b = &backgrounds.images[i];
                    CellSource {
                        image: &b.image,
                        source_image_id: b.image_id,
                        source_rect: SourceRegion::Whole(WholeImage::DownsampledFull),
                    }
                })
                .collect();
            compose(&key_sources, &bg_sources, cfg.out_hw, class_id, j)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ClassDistillation {
        class_id,
        ranked,
        keys,
        backgrounds,
        backgrounds_overlap_keys: overlap,
        composites,
    })
}

/// One line of `provenance.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub image: String,
    pub class_id: ClassId,
    pub index: usize,
    pub cells: Vec<CellRecord>,
}

/// Relative output path of a composite.
pub fn composite_path(class_id: ClassId, index: usize) -> String {
    format!("{class_id}/{index}.png")
}

#[derive(Debug, Clone)]
pub struct DistillSummary {
    pub classes: Vec<ClassDistillation>,
    pub files: Vec<PathBuf>,
}

/// Builds a worker pool of `workers` threads (0 = available parallelism).
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Loads a class's images in manifest order.
pub fn load_class(manifest: &DatasetManifest, class_id: ClassId) -> Result<Vec<ClassImage>> {
    manifest
        .class_records(class_id)
        .par_iter()
        .map(|r| {
            Ok(ClassImage {
                image_id: r.image_id,
                image: io::read_image(&r.path)?,
            })
        })
        .collect()
}

/// Full pipeline: every class of `manifest` is distilled and written to
/// `out_dir` as `<class_id>/<index>.png`, plus `provenance.jsonl` and
/// `config.json`. Output bytes depend only on inputs and `cfg`.
pub fn distill_dataset<M: AttentionModel + ?Sized>(
    manifest: &DatasetManifest,
    model: &M,
    cfg: &DistillConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<DistillSummary> {
    cfg.validate()?;
    let pool = worker_pool(workers)?;
    let classes = pool.install(|| {
        manifest
            .classes
            .par_iter()
            .map(|c| {
                let ctx = |e: Error| e.in_class(c.class_name.clone());
                let images = load_class(manifest, c.class_id).map_err(ctx)?;
                let out = distill_class(model, c.class_id, &images, cfg).map_err(ctx)?;
                log::info!(
                    "class {} ({}): {} images, {} composites",
                    c.class_id,
                    c.class_name,
                    images.len(),
                    out.composites.len()
                );
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    fs::create_dir_all(out_dir).map_err(|e| Error::from(e).in_file(out_dir))?;
    let mut files = Vec::new();
    let mut provenance = String::new();
    for class in &classes {
        let dir = out_dir.join(class.class_id.to_string());
        fs::create_dir_all(&dir).map_err(|e| Error::from(e).in_file(&dir))?;
        for d in &class.composites {
            let rel = composite_path(d.class_id, d.index);
            let path = out_dir.join(&rel);
            io::write_image(&d.composite, &path)?;
            files.push(path);
            provenance.push_str(&serde_json::to_string(&ProvenanceRecord {
                image: rel,
                class_id: d.class_id,
                index: d.index,
                cells: d.cells.clone(),
            })?);
            provenance.push('\n');
        }
    }
    let prov_path = out_dir.join("provenance.jsonl");
    fs::write(&prov_path, provenance).map_err(|e| Error::from(e).in_file(&prov_path))?;
    files.push(prov_path);
    let cfg_path = out_dir.join("config.json");
    let mut cfg_json = serde_json::to_string_pretty(cfg)?;
    cfg_json.push('\n');
    fs::write(&cfg_path, cfg_json).map_err(|e| Error::from(e).in_file(&cfg_path))?;
    files.push(cfg_path);
    Ok(DistillSummary { classes, files })
}

/// Reads `provenance.jsonl` back.
pub fn read_provenance(path: impl AsRef<Path>) -> Result<Vec<ProvenanceRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                Error::Malformed(format!("provenance line {}: {e}", i + 1)).in_file(path)
            })
        })
        .collect()
}
