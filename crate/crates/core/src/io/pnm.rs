//! Binary PGM (`P5`) and PPM (`P6`) with a maxval of 255.

use crate::error::{Error, Result};
use crate::image::ImageTensor;

pub fn is_pnm(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == b'P' && (bytes[1] == b'5' || bytes[1] == b'6')
}

pub fn decode(bytes: &[u8]) -> Result<ImageTensor> {
    if bytes.len() < 2 {
        return Err(Error::Truncated {
            offset: bytes.len(),
            what: "PNM magic",
        });
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        m => {
            return Err(Error::Unsupported(format!(
                "PNM magic `{}`",
                String::from_utf8_lossy(m)
            )))
        }
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, f) in fields.iter_mut().enumerate() {
        skip_space_and_comments(bytes, &mut pos);
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            if pos >= bytes.len() {
                return Err(Error::Truncated {
                    offset: pos,
                    what: "PNM header",
                });
            }
            return Err(Error::Malformed(format!(
                "PNM header field {i} at offset {pos}"
            )));
        }
        *f = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("PNM header number at offset {start}")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Unsupported(format!("PNM maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Malformed(format!("{width}x{height} PNM")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        Some(_) => {
            return Err(Error::Malformed(format!(
                "PNM header ends badly at offset {pos}"
            )))
        }
        None => {
            return Err(Error::Truncated {
                offset: pos,
                what: "PNM header",
            })
        }
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Malformed("PNM dimensions overflow".into()))?;
    if bytes.len() - pos < need {
        return Err(Error::Truncated {
            offset: bytes.len(),
            what: "PNM raster",
        });
    }
    ImageTensor::from_u8(width, height, channels, &bytes[pos..pos + need])
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

pub fn encode(img: &ImageTensor) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::Unsupported(format!("{c} channels"))),
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_u8());
    Ok(out)
}
