use std::fs;
use std::path::{Path, PathBuf};

use super::FeatureError;
use crate::harness::write_atomic;

/// `C` planes of `H x W` values, stored planar.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelImage {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
    pub channel_names: Option<Vec<String>>,
}

impl MultiChannelImage {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self, FeatureError> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(FeatureError::InvalidParameter(format!("empty image shape {channels}x{height}x{width}")));
        }
        if data.len() != channels * height * width {
            return Err(FeatureError::Format(format!(
                "{} values for shape {channels}x{height}x{width}",
                data.len()
            )));
        }
        Ok(Self { channels, height, width, data, channel_names: None })
    }

    pub fn from_binary(width: usize, height: usize, bits: &[u8]) -> Result<Self, FeatureError> {
        Self::new(1, height, width, bits.iter().map(|&b| f32::from(b)).collect())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn scaled(&self, s: f32) -> Self {
        Self { data: self.data.iter().map(|v| v * s).collect(), ..self.clone() }
    }
}

/// Planar raw format: `C, H, W` as u32 little-endian, then `C*H*W` f32 LE.
pub fn read_raw_image(path: &Path) -> Result<MultiChannelImage, FeatureError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 {
        return Err(FeatureError::Format(format!("{}: shorter than the 12-byte header", path.display())));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (c, h, w) = (dim(0), dim(1), dim(2));
    let payload = &bytes[12..];
    if payload.len() != 4 * c * h * w {
        return Err(FeatureError::Format(format!(
            "{}: payload is {} bytes, header implies {}",
            path.display(),
            payload.len(),
            4 * c * h * w
        )));
    }
    let data = payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    MultiChannelImage::new(c, h, w, data)
}

pub fn write_raw_image(path: &Path, img: &MultiChannelImage) -> Result<(), FeatureError> {
    let mut out = Vec::with_capacity(12 + 4 * img.data.len());
    for d in [img.channels, img.height, img.width] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in &img.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &out)?;
    Ok(())
}

/// `item_id,path` rows; relative paths resolve against the manifest's directory.
pub fn read_image_manifest(path: &Path) -> Result<Vec<(String, PathBuf)>, FeatureError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(FeatureError::Format("manifest rows need item_id,path".into()));
        }
        let p = PathBuf::from(&rec[1]);
        out.push((rec[0].to_string(), if p.is_absolute() { p } else { base.join(p) }));
    }
    Ok(out)
}
