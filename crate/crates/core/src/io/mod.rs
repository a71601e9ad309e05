//! On-disk formats: images, weights and manifests.

pub mod manifest;
pub mod ntf;
pub mod png;
pub mod pnm;

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImageTensor;

pub use manifest::{scan, ClassEntry, ClassId, DatasetManifest, ImageRecord};
pub use ntf::{load as load_weights, save as save_weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Pnm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "png" => Some(ImageFormat::Png),
            "ppm" | "pgm" | "pnm" => Some(ImageFormat::Pnm),
            _ => None,
        }
    }
}

/// Decodes PNG or binary PNM, detected from the leading bytes.
pub fn decode_image(bytes: &[u8]) -> Result<ImageTensor> {
    if bytes.starts_with(&png::SIGNATURE) {
        png::decode(bytes)
    } else if pnm::is_pnm(bytes) {
        pnm::decode(bytes)
    } else if bytes.len() < png::SIGNATURE.len() && png::SIGNATURE.starts_with(bytes) {
        Err(Error::Truncated {
            offset: bytes.len(),
            what: "PNG signature",
        })
    } else {
        Err(Error::Unsupported("unrecognized image format".into()))
    }
}

pub fn encode_image(img: &ImageTensor, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Png => png::encode(img),
        ImageFormat::Pnm => pnm::encode(img),
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    decode_image(&bytes).map_err(|e| e.in_file(path))
}

/// Writes PNG or PNM depending on the extension (PNG when unknown).
pub fn write_image(img: &ImageTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path).unwrap_or(ImageFormat::Png);
    let bytes = encode_image(img, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}
