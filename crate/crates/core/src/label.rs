//! Region-level soft labels, the soft cross-entropy objective, and
//! per-epoch real-image sampling for fine-tuning.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compose::{read_provenance, ProvenanceRecord};
use crate::error::{Error, Result};
use crate::extract::{crop, ImageId, PixelRect};
use crate::image::{resize_bilinear, ImageTensor};
use crate::io::{self, ClassId, DatasetManifest};
use crate::rng::{tag, KeyedRng};
use crate::vit::{softmax_f64, AttentionModel};

const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSoftLabel {
    pub region: PixelRect,
    pub label: Vec<f32>,
}

/// Crops each region, resizes it to the teacher input and records the
/// teacher's softmax.
pub fn relabel<M: AttentionModel + ?Sized>(
    teacher: &M,
    composite: &ImageTensor,
    regions: &[PixelRect],
) -> Result<Vec<RegionSoftLabel>> {
    let (th, tw) = teacher.input_hw();
    regions
        .iter()
        .map(|r| {
            let patch = crop(composite, r)?.to_channels(teacher.channels())?;
            let input = resize_bilinear(&patch, th, tw)?;
            let (pred, _) = teacher.infer(&input, r.source_image_id)?;
            Ok(RegionSoftLabel {
                region: *r,
                label: pred.probabilities(),
            })
        })
        .collect()
}

/// `count` random sub-rectangles of a `width x height` image. Each side is a
/// uniform fraction in `scale` of the image side; placement is uniform.
pub fn random_regions(
    width: usize,
    height: usize,
    count: usize,
    scale: (f64, f64),
    rng: &mut KeyedRng,
) -> Result<Vec<PixelRect>> {
    let (lo, hi) = scale;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::Config(format!("crop scale range ({lo}, {hi})")));
    }
    let side = |dim: usize, rng: &mut KeyedRng| {
        let f = lo + (hi - lo) * rng.next_f64();
        ((f * dim as f64).round() as usize).clamp(1, dim)
    };
    Ok((0..count)
        .map(|_| {
            let w = side(width, rng);
            let h = side(height, rng);
            PixelRect {
                x0: rng.below(width - w + 1),
                y0: rng.below(height - h + 1),
                width: w,
                height: h,
                source_image_id: 0,
            }
        })
        .collect())
}

/// Which regions of a composite get labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionMode {
    /// The composite's provenance cells.
    Cells,
    /// Seeded random crops, keyed by `(seed, class_id, index)`.
    RandomCrops {
        count: usize,
        scale: (f64, f64),
        seed: u64,
    },
}

/// One region of a `labels.jsonl` line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRegion {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub label: Vec<f32>,
}

/// One line of `labels.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub image: String,
    pub regions: Vec<LabeledRegion>,
}

fn regions_for(
    rec: &ProvenanceRecord,
    composite: &ImageTensor,
    mode: RegionMode,
) -> Result<Vec<PixelRect>> {
    match mode {
        RegionMode::Cells => Ok(rec
            .cells
            .iter()
            .map(|c| c.cell.to_pixel_rect(c.source_image_id))
            .collect()),
        RegionMode::RandomCrops { count, scale, seed } => {
            let mut rng = KeyedRng::new(
                seed,
                &[tag::RANDOM_CROP, rec.class_id as u64, rec.index as u64],
            );
            random_regions(
                composite.width(),
                composite.height(),
                count,
                scale,
                &mut rng,
            )
        }
    }
}

/// Labels every composite listed in `dir/provenance.jsonl` and writes
/// `dir/labels.jsonl`, one line per composite in provenance order.
pub fn relabel_distilled<M: AttentionModel + ?Sized>(
    teacher: &M,
    dir: &Path,
    mode: RegionMode,
) -> Result<Vec<LabelRecord>> {
    let provenance = read_provenance(dir.join("provenance.jsonl"))?;
    let records = provenance
        .par_iter()
        .map(|rec| {
            let path = dir.join(&rec.image);
            let composite = io::read_image(&path)?;
            let regions = regions_for(rec, &composite, mode)?;
            let labels = relabel(teacher, &composite, &regions).map_err(|e| e.in_file(&path))?;
            Ok(LabelRecord {
                image: rec.image.clone(),
                regions: labels
                    .into_iter()
                    .map(|l| LabeledRegion {
                        x: l.region.x0,
                        y: l.region.y0,
                        w: l.region.width,
                        h: l.region.height,
                        label: l.label,
                    })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    let out = dir.join("labels.jsonl");
    fs::write(&out, text).map_err(|e| Error::from(e).in_file(&out))?;
    Ok(records)
}

fn check_dims(student: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<()> {
    if student.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} logit rows for {} label rows",
            student.len(),
            labels.len()
        )));
    }
    for (i, (s, l)) in student.iter().zip(labels).enumerate() {
        if s.len() != l.len() || s.is_empty() {
            return Err(Error::Dimension(format!(
                "region {i}: {} logits, {} label entries",
                s.len(),
                l.len()
            )));
        }
    }
    Ok(())
}

/// `-sum_regions sum_classes label * log(softmax(logits))`, log floored at 1e-12.
pub fn soft_ce_loss(student_logits: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<f64> {
    check_dims(student_logits, labels)?;
    Ok(student_logits
        .iter()
        .zip(labels)
        .map(|(z, y)| {
            softmax_f64(z)
                .iter()
                .zip(y)
                .map(|(p, y)| -y * p.max(LOG_FLOOR).ln())
                .sum::<f64>()
        })
        .sum())
}

/// Gradient of [`soft_ce_loss`] with respect to the logits:
/// `softmax(z) * sum(y) - y` per region.
pub fn soft_ce_grad(student_logits: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    check_dims(student_logits, labels)?;
    Ok(student_logits
        .iter()
        .zip(labels)
        .map(|(z, y)| {
            let mass: f64 = y.iter().sum();
            softmax_f64(z)
                .iter()
                .zip(y)
                .map(|(p, y)| p * mass - y)
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DftClassSample {
    pub class_id: ClassId,
    pub image_ids: Vec<ImageId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DftManifest {
    pub epoch: u64,
    pub seed: u64,
    pub classes: Vec<DftClassSample>,
}

#[derive(Serialize)]
struct DftLine {
    class_id: ClassId,
    image_id: ImageId,
}

impl DftManifest {
    /// One `{class_id, image_id}` object per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for c in &self.classes {
            for &image_id in &c.image_ids {
                out.push_str(&serde_json::to_string(&DftLine {
                    class_id: c.class_id,
                    image_id,
                })?);
                out.push('\n');
            }
        }
        Ok(out)
    }
}

/// Draws `ipc` images per class without replacement from a stream keyed by
/// `(seed, epoch, class_id)`. Ids are listed ascending.
pub fn dft_sample(manifest: &DatasetManifest, ipc: usize, seed: u64, epoch: u64) -> DftManifest {
    let classes = manifest
        .classes
        .iter()
        .map(|c| {
            let ids: Vec<ImageId> = manifest
                .class_records(c.class_id)
                .iter()
                .map(|r| r.image_id)
                .collect();
            let mut rng = KeyedRng::new(seed, &[tag::DFT, epoch, c.class_id as u64]);
            let mut image_ids: Vec<ImageId> = rng
                .sample_indices(ids.len(), ipc)
                .into_iter()
                .map(|i| ids[i])
                .collect();
            image_ids.sort_unstable();
            DftClassSample {
                class_id: c.class_id,
                image_ids,
            }
        })
        .collect();
    DftManifest {
        epoch,
        seed,
        classes,
    }
}
