use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch for tensor `{name}`: expected {expected:?}, found {found:?}")]
    TensorShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("missing tensor `{0}`")]
    MissingTensor(String),

    #[error("window {h}x{w} does not fit in a {rows}x{cols} grid")]
    WindowTooLarge {
        h: usize,
        w: usize,
        rows: usize,
        cols: usize,
    },

    #[error("rectangle {x0},{y0} {width}x{height} lies outside a {img_w}x{img_h} image")]
    OutOfBounds {
        x0: i64,
        y0: i64,
        width: usize,
        height: usize,
        img_w: usize,
        img_h: usize,
    },

    #[error("cannot upscale {from_h}x{from_w} to {to_h}x{to_w} with a box filter")]
    Upscale {
        from_h: usize,
        from_w: usize,
        to_h: usize,
        to_w: usize,
    },

    #[error("class {0} has no images")]
    EmptyClass(String),

    #[error("infinite SNR: image has zero high-frequency response")]
    InfiniteSnr,

    #[error("all {0} images are constant; SNR is undefined")]
    AllConstant(usize),

    #[error("truncated stream at byte offset {offset}: {what}")]
    Truncated { offset: usize, what: &'static str },

    #[error("CRC mismatch in `{chunk}` chunk at byte offset {offset}")]
    Crc { chunk: String, offset: usize },

    #[error("unsupported image: {0}")]
    Unsupported(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("class {class}: {source}")]
    InClass {
        class: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn in_class(self, class: impl Into<String>) -> Self {
        Error::InClass {
            class: class.into(),
            source: Box::new(self),
        }
    }
}
