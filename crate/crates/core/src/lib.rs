//! Attention-guided dataset distillation.
//!
//! A small Vision Transformer scores every image of a class by prediction
//! confidence plus the attention mass of its best window. The top images
//! contribute full-resolution crops of that window; lower-ranked images
//! contribute downsampled context. Crops and context are tiled into 2x2
//! composites, which a teacher then labels region by region.
//!
//! Module map:
//!
//! - [`vit`]: forward pass, attention grid, synthetic weights
//! - [`select`]: window search, area/realism scores, ranking
//! - [`extract`]: downsampling, grid-to-pixel mapping, cropping
//! - [`compose`]: key/background sets, composites, the full pipeline
//! - [`label`]: region soft labels, soft cross-entropy, per-epoch sampling
//! - [`analyze`]: effective sample size and Laplacian SNR
//! - [`io`]: PNG/PNM, NTF weights, manifests
//! - [`synth`]: generated scenes with a known object location

pub mod analyze;
pub mod compose;
pub mod error;
pub mod extract;
pub mod image;
pub mod io;
pub mod label;
pub mod rng;
pub mod select;
pub mod synth;
pub mod verify;
pub mod vit;

pub use error::{Error, Result};
pub use image::ImageTensor;
