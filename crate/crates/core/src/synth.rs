//! Generated scenes with a known object location: a bright disc on a dim,
//! noisy, class-tinted background.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{quantize, ImageTensor};
use crate::io::{self, ClassId, DatasetManifest};
use crate::rng::KeyedRng;

const BACKGROUND_MAX: f64 = 60.0;
const BLOB_PEAK: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    /// Center in pixels, `(x, y)`.
    pub center: (f64, f64),
    pub radius: f64,
}

impl Blob {
    /// A blob fully inside a `width x height` image.
    pub fn random(width: usize, height: usize, radius: f64, rng: &mut KeyedRng) -> Self {
        let span = |dim: usize, rng: &mut KeyedRng| {
            let lo = radius.min(dim as f64 / 2.0);
            lo + (dim as f64 - 2.0 * lo) * rng.next_f64()
        };
        let x = span(width, rng);
        let y = span(height, rng);
        Blob {
            center: (x, y),
            radius,
        }
    }

    /// Pixel containing the center.
    pub fn center_pixel(&self) -> (usize, usize) {
        (
            self.center.0.floor() as usize,
            self.center.1.floor() as usize,
        )
    }
}

/// RGB scene with `blob`, background noise in `[0, 60]` tinted by `tint`
/// (per-channel multipliers in `[0, 1]`). Samples are whole numbers so the
/// scene survives an 8-bit round trip.
pub fn blob_scene(
    width: usize,
    height: usize,
    blob: &Blob,
    tint: [f64; 3],
    rng: &mut KeyedRng,
) -> Result<ImageTensor> {
    let mut noise = vec![0.0f64; width * height];
    noise.iter_mut().for_each(|v| *v = rng.next_f64());
    ImageTensor::from_fn(width, height, 3, |x, y, c| {
        let dx = x as f64 + 0.5 - blob.center.0;
        let dy = y as f64 + 0.5 - blob.center.1;
        let d = (dx * dx + dy * dy).sqrt() / blob.radius;
        // Flat core, linear falloff over the outer half of the radius.
        let cover = (2.0 - 2.0 * d).clamp(0.0, 1.0);
        let bg = BACKGROUND_MAX * noise[y * width + x] * tint[c];
        quantize((bg + cover * (BLOB_PEAK - bg)) as f32) as f32
    })
}

/// Per-class tint: class 0 reddish, 1 greenish, 2 bluish, and so on.
pub fn class_tint(class_id: ClassId) -> [f64; 3] {
    let mut t = [0.4; 3];
    t[class_id as usize % 3] = 1.0;
    t
}

/// One generated image and where its blob is.
#[derive(Debug, Clone)]
pub struct PlantedImage {
    pub path: PathBuf,
    pub class_id: ClassId,
    pub blob: Blob,
}

/// Writes `<root>/class_<c>/<i>.png` for `classes x per_class` blob scenes
/// and returns the blob of every image in the order [`io::scan`] assigns ids.
pub fn write_planted_dataset(
    root: &Path,
    classes: usize,
    per_class: usize,
    side: usize,
    seed: u64,
) -> Result<Vec<PlantedImage>> {
    if side < 4 {
        return Err(Error::Dimension(format!("scene side {side} below 4")));
    }
    let radius = side as f64 / 10.0;
    let mut out = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let dir = root.join(format!("class_{c}"));
        fs::create_dir_all(&dir).map_err(|e| Error::from(e).in_file(&dir))?;
        for i in 0..per_class {
            let mut rng = KeyedRng::new(seed, &[c as u64, i as u64]);
            let r = radius * (0.8 + 0.6 * rng.next_f64());
            let blob = Blob::random(side, side, r, &mut rng);
            let img = blob_scene(side, side, &blob, class_tint(c as ClassId), &mut rng)?;
            // Zero-padded so lexicographic order is numeric order.
            let path = dir.join(format!("{i:04}.png"));
            io::write_image(&img, &path)?;
            out.push(PlantedImage {
                path,
                class_id: c as ClassId,
                blob,
            });
        }
    }
    Ok(out)
}

/// [`write_planted_dataset`] followed by a scan of the same root.
pub fn planted_manifest(
    root: &Path,
    classes: usize,
    per_class: usize,
    side: usize,
    seed: u64,
) -> Result<(DatasetManifest, Vec<PlantedImage>)> {
    let planted = write_planted_dataset(root, classes, per_class, side, seed)?;
    Ok((io::scan(root)?, planted))
}
