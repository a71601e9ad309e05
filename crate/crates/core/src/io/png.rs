//! 8-bit grayscale and RGB PNG, non-interlaced.

use std::io::{Read, Write};

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::image::ImageTensor;

pub const SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

const COLOR_GRAY: u8 = 0;
const COLOR_RGB: u8 = 2;

struct Header {
    width: usize,
    height: usize,
    channels: usize,
}

pub fn decode(bytes: &[u8]) -> Result<ImageTensor> {
    if bytes.len() < SIGNATURE.len() {
        return Err(Error::Truncated {
            offset: bytes.len(),
            what: "PNG signature",
        });
    }
    if bytes[..8] != SIGNATURE {
        return Err(Error::Malformed("not a PNG signature".into()));
    }
    let mut pos = 8;
    let mut header: Option<Header> = None;
    let mut idat = Vec::new();
    loop {
        if bytes.len() < pos + 8 {
            return Err(Error::Truncated {
                offset: bytes.len(),
                what: "chunk header",
            });
        }
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let kind: [u8; 4] = bytes[pos + 4..pos + 8].try_into().unwrap();
        let data_start = pos + 8;
        let end = data_start
            .checked_add(len)
            .and_then(|e| e.checked_add(4))
            .filter(|&e| e <= bytes.len())
            .ok_or(Error::Truncated {
                offset: bytes.len(),
                what: "chunk body",
            })?;
        let data = &bytes[data_start..data_start + len];
        let stored = u32::from_be_bytes(bytes[end - 4..end].try_into().unwrap());
        let mut hasher = crc32fast::Hasher::new();
        hasher.update(&kind);
        hasher.update(data);
        let name = String::from_utf8_lossy(&kind).into_owned();
        if hasher.finalize() != stored {
            return Err(Error::Crc {
                chunk: name,
                offset: pos,
            });
        }
        match &kind {
            b"IHDR" => header = Some(parse_ihdr(data)?),
            b"IDAT" => {
                if header.is_none() {
                    return Err(Error::Malformed(format!(
                        "IDAT before IHDR at offset {pos}"
                    )));
                }
                idat.extend_from_slice(data);
            }
            b"IEND" => break,
            // PLTE is only a suggestion for gray/RGB images.
            b"PLTE" => {}
            _ if kind[0].is_ascii_uppercase() => {
                return Err(Error::Unsupported(format!("critical chunk `{name}`")))
            }
            _ => {}
        }
        pos = end;
    }
    let h = header.ok_or_else(|| Error::Malformed("missing IHDR".into()))?;
    let stride = h.width * h.channels;
    let mut raw = Vec::with_capacity(h.height * (stride + 1));
    ZlibDecoder::new(idat.as_slice())
        .read_to_end(&mut raw)
        .map_err(|e| Error::Malformed(format!("image data does not inflate: {e}")))?;
    if raw.len() < h.height * (stride + 1) {
        return Err(Error::Truncated {
            offset: raw.len(),
            what: "decompressed scanlines",
        });
    }
    let pixels = unfilter(&raw, h.height, stride, h.channels)?;
    ImageTensor::from_u8(h.width, h.height, h.channels, &pixels)
}

fn parse_ihdr(d: &[u8]) -> Result<Header> {
    if d.len() != 13 {
        return Err(Error::Malformed(format!("IHDR length {}", d.len())));
    }
    let width = u32::from_be_bytes(d[0..4].try_into().unwrap()) as usize;
    let height = u32::from_be_bytes(d[4..8].try_into().unwrap()) as usize;
    let (depth, color, compression, filter, interlace) = (d[8], d[9], d[10], d[11], d[12]);
    if width == 0 || height == 0 {
        return Err(Error::Malformed(format!("{width}x{height} PNG")));
    }
    if depth != 8 {
        return Err(Error::Unsupported(format!("PNG bit depth {depth}")));
    }
    let channels = match color {
        COLOR_GRAY => 1,
        COLOR_RGB => 3,
        c => return Err(Error::Unsupported(format!("PNG color type {c}"))),
    };
    if compression != 0 || filter != 0 {
        return Err(Error::Unsupported("PNG compression/filter method".into()));
    }
    if interlace != 0 {
        return Err(Error::Unsupported("interlaced PNG".into()));
    }
    Ok(Header {
        width,
        height,
        channels,
    })
}

fn unfilter(raw: &[u8], height: usize, stride: usize, bpp: usize) -> Result<Vec<u8>> {
    let mut out = vec![0u8; height * stride];
    for y in 0..height {
        let line = &raw[y * (stride + 1)..(y + 1) * (stride + 1)];
        let (kind, src) = (line[0], &line[1..]);
        let (done, rest) = out.split_at_mut(y * stride);
        let prev = if y == 0 {
            None
        } else {
            Some(&done[(y - 1) * stride..])
        };
        let cur = &mut rest[..stride];
        for x in 0..stride {
            let a = if x >= bpp { cur[x - bpp] } else { 0 };
            let b = prev.map_or(0, |p| p[x]);
            let c = if x >= bpp {
                prev.map_or(0, |p| p[x - bpp])
            } else {
                0
            };
            let pred = match kind {
                0 => 0,
                1 => a,
                2 => b,
                3 => ((a as u16 + b as u16) / 2) as u8,
                4 => paeth(a, b, c),
                k => return Err(Error::Malformed(format!("scanline {y} filter type {k}"))),
            };
            cur[x] = src[x].wrapping_add(pred);
        }
    }
    Ok(out)
}

fn paeth(a: u8, b: u8, c: u8) -> u8 {
    let p = a as i16 + b as i16 - c as i16;
    let (pa, pb, pc) = (
        (p - a as i16).abs(),
        (p - b as i16).abs(),
        (p - c as i16).abs(),
    );
    if pa <= pb && pa <= pc {
        a
    } else if pb <= pc {
        b
    } else {
        c
    }
}

/// Encodes with filter type 0 on every scanline.
pub fn encode(img: &ImageTensor) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => COLOR_GRAY,
        3 => COLOR_RGB,
        c => return Err(Error::Unsupported(format!("{c} channels"))),
    };
    let (w, h) = (img.width(), img.height());
    let mut ihdr = Vec::with_capacity(13);
    ihdr.extend_from_slice(&(w as u32).to_be_bytes());
    ihdr.extend_from_slice(&(h as u32).to_be_bytes());
    ihdr.extend_from_slice(&[8, color, 0, 0, 0]);

    let stride = w * img.channels();
    let pixels = img.to_u8();
    let mut z = ZlibEncoder::new(Vec::new(), Compression::default());
    for row in pixels.chunks_exact(stride) {
        z.write_all(&[0])?;
        z.write_all(row)?;
    }
    let idat = z.finish()?;

    let mut out = Vec::with_capacity(idat.len() + 64);
    out.extend_from_slice(&SIGNATURE);
    write_chunk(&mut out, b"IHDR", &ihdr);
    write_chunk(&mut out, b"IDAT", &idat);
    write_chunk(&mut out, b"IEND", &[]);
    Ok(out)
}

fn write_chunk(out: &mut Vec<u8>, kind: &[u8; 4], data: &[u8]) {
    out.extend_from_slice(&(data.len() as u32).to_be_bytes());
    out.extend_from_slice(kind);
    out.extend_from_slice(data);
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(kind);
    hasher.update(data);
    out.extend_from_slice(&hasher.finalize().to_be_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(w: usize, h: usize, ch: usize) -> ImageTensor {
        ImageTensor::from_fn(w, h, ch, |x, y, c| {
            ((x * 29 + y * 53 + c * 101) % 256) as f32
        })
        .unwrap()
    }

    #[test]
    fn round_trip_gray_and_rgb() {
        for ch in [1, 3] {
            let img = sample(16, 16, ch);
            let bytes = encode(&img).unwrap();
            assert_eq!(decode(&bytes).unwrap(), img);
        }
    }

    #[test]
    fn every_filter_type_decodes() {
        // Encode rows with each filter by hand and check against the plain image.
        let img = sample(5, 5, 3);
        let px = img.to_u8();
        let stride = 15;
        let mut raw = Vec::new();
        for y in 0..5 {
            let kind = y as u8;
            raw.push(kind);
            for x in 0..stride {
                let a = if x >= 3 { px[y * stride + x - 3] } else { 0 };
                let b = if y > 0 { px[(y - 1) * stride + x] } else { 0 };
                let c = if y > 0 && x >= 3 {
                    px[(y - 1) * stride + x - 3]
                } else {
                    0
                };
                let pred = match kind {
                    0 => 0,
                    1 => a,
                    2 => b,
                    3 => ((a as u16 + b as u16) / 2) as u8,
                    _ => paeth(a, b, c),
                };
                raw.push(px[y * stride + x].wrapping_sub(pred));
            }
        }
        let mut z = ZlibEncoder::new(Vec::new(), Compression::default());
        z.write_all(&raw).unwrap();
        let mut out = SIGNATURE.to_vec();
        let mut ihdr = Vec::new();
        ihdr.extend_from_slice(&5u32.to_be_bytes());
        ihdr.extend_from_slice(&5u32.to_be_bytes());
        ihdr.extend_from_slice(&[8, 2, 0, 0, 0]);
        write_chunk(&mut out, b"IHDR", &ihdr);
        write_chunk(&mut out, b"IDAT", &z.finish().unwrap());
        write_chunk(&mut out, b"IEND", &[]);
        assert_eq!(decode(&out).unwrap(), img);
    }

    #[test]
    fn truncated_stream_reports_offset() {
        let bytes = encode(&sample(4, 4, 1)).unwrap();
        let cut = &bytes[..bytes.len() - 20];
        match decode(cut) {
            Err(Error::Truncated { offset, .. }) => assert_eq!(offset, cut.len()),
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn crc_failure_is_detected() {
        let mut bytes = encode(&sample(4, 4, 1)).unwrap();
        bytes[20] ^= 0xFF; // inside IHDR data
        assert!(matches!(decode(&bytes), Err(Error::Crc { .. })));
    }

    #[test]
    fn unsupported_depth_and_color() {
        let mut out = SIGNATURE.to_vec();
        let mut ihdr = Vec::new();
        ihdr.extend_from_slice(&1u32.to_be_bytes());
        ihdr.extend_from_slice(&1u32.to_be_bytes());
        ihdr.extend_from_slice(&[16, 0, 0, 0, 0]);
        write_chunk(&mut out, b"IHDR", &ihdr);
        assert!(matches!(decode(&out), Err(Error::Unsupported(_))));

        let mut out = SIGNATURE.to_vec();
        let mut ihdr = Vec::new();
        ihdr.extend_from_slice(&1u32.to_be_bytes());
        ihdr.extend_from_slice(&1u32.to_be_bytes());
        ihdr.extend_from_slice(&[8, 6, 0, 0, 0]);
        write_chunk(&mut out, b"IHDR", &ihdr);
        assert!(matches!(decode(&out), Err(Error::Unsupported(_))));
    }
}
