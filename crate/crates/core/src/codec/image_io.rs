//! 8-bit RGB image files and conversion to and from `[3, h, w]` tensors.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ColorType, ImageEncoder, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct LoadedImage {
    pub image: RgbImage,
    /// Set when the file was not 8-bit RGB and had to be converted.
    pub converted_from: Option<String>,
}

pub fn read_image(path: &Path) -> Result<LoadedImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let converted_from = match img.color() {
        ColorType::Rgb8 => None,
        ColorType::L8 | ColorType::La8 | ColorType::L16 | ColorType::La16 => Some("grayscale, replicated to 3 channels".to_string()),
        other => Some(format!("{other:?}, converted to 8-bit RGB")),
    };
    Ok(LoadedImage {
        image: img.to_rgb8(),
        converted_from,
    })
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default()
}

/// Refuses anything but `.png`, `.ppm` and `.pnm`: lossy recompression
/// would destroy the embedded message.
pub fn ensure_lossless(path: &Path) -> Result<()> {
    let reason = match extension(path).as_str() {
        "png" | "ppm" | "pnm" => return Ok(()),
        "jpg" | "jpeg" | "webp" | "gif" | "avif" | "heic" => {
            "lossy or palette format would destroy the embedded message; write .png or .ppm"
        }
        _ => "unknown extension; write .png or .ppm",
    };
    Err(Error::OutputFormat {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    })
}

/// Writes PNG or binary PPM, chosen by extension.
pub fn write_image(path: &Path, img: &RgbImage) -> Result<()> {
    ensure_lossless(path)?;
    let image_err = |source| Error::Image {
        path: path.to_path_buf(),
        source,
    };
    if extension(path) == "png" {
        return img.save_with_format(path, ImageFormat::Png).map_err(image_err);
    }
    let f = BufWriter::new(File::create(path)?);
    PnmEncoder::new(f)
        .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::Rgb8)
        .map_err(image_err)
}

/// `[3, h, w]` in `[0, 1]`.
pub fn to_tensor(img: &RgbImage) -> Tensor {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut data = vec![0.0f32; 3 * h * w];
    for (i, px) in img.pixels().enumerate() {
        for ch in 0..3 {
            data[ch * h * w + i] = px.0[ch] as f32 / 255.0;
        }
    }
    Tensor::new(&[3, h, w], data).unwrap()
}

/// Scales `[3, h, w]` by 255, rounds half away from zero and clamps to
/// `[0, 255]`.
pub fn quantize(t: &Tensor) -> Result<RgbImage> {
    let [c, h, w] = t.shape() else {
        return Err(Error::dim(format!("expected [3, h, w], got {:?}", t.shape())));
    };
    if *c != 3 {
        return Err(Error::dim(format!("expected 3 channels, got {c}")));
    }
    let (h, w) = (*h, *w);
    let d = t.data();
    let mut raw = Vec::with_capacity(3 * h * w);
    for i in 0..h * w {
        for ch in 0..3 {
            raw.push(quantize_value(d[ch * h * w + i]));
        }
    }
    Ok(RgbImage::from_raw(w as u32, h as u32, raw).unwrap())
}

pub fn quantize_value(v: f32) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}
