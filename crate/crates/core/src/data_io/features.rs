use std::collections::HashSet;
use std::path::Path;

use super::{read_file, write_file, Reader};
use crate::error::{Error, Result};
use crate::model::FEATURE_DIM;

pub const FEATURE_MAGIC: &[u8; 4] = b"BNF1";

/// A pooled image embedding keyed by image id.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageFeature {
    id: String,
    values: Vec<f64>,
}

impl ImageFeature {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if id.len() > u16::MAX as usize {
            return Err(Error::IdTooLong(id));
        }
        if values.len() != FEATURE_DIM {
            return Err(Error::FeatureLength {
                id,
                expected: FEATURE_DIM,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(id));
        }
        Ok(ImageFeature { id, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl AsRef<[f64]> for ImageFeature {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Layout: magic, `u32` count, `u32` dim, then per record a `u16` id length,
/// the id bytes and `dim` little-endian `f32` values.
pub fn encode_features(features: &[ImageFeature]) -> Result<Vec<u8>> {
    let mut seen = HashSet::new();
    for f in features {
        if !seen.insert(f.id()) {
            return Err(Error::DuplicateId(f.id.clone()));
        }
    }
    let body: usize = features.iter().map(|f| 2 + f.id.len() + FEATURE_DIM * 4).sum();
    let mut out = Vec::with_capacity(12 + body);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(features.len() as u32).to_le_bytes());
    out.extend_from_slice(&(FEATURE_DIM as u32).to_le_bytes());
    for f in features {
        out.extend_from_slice(&(f.id.len() as u16).to_le_bytes());
        out.extend_from_slice(f.id.as_bytes());
        for &v in &f.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_features(bytes: &[u8]) -> Result<Vec<ImageFeature>> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic").map_err(|_| Error::BadMagic { expected: "BNF1" })? != FEATURE_MAGIC {
        return Err(Error::BadMagic { expected: "BNF1" });
    }
    let count = r.u32("record count")? as usize;
    let dim = r.u32("dimension")?;
    if dim as usize != FEATURE_DIM {
        return Err(Error::BadDimension(dim));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let id_len = r.u16("id length")? as usize;
        let id = std::str::from_utf8(r.take(id_len, "image id")?)
            .map_err(|_| Error::BadHeader("image id is not valid UTF-8".into()))?
            .to_owned();
        let values = r
            .take(FEATURE_DIM * 4, "feature values")?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        out.push(ImageFeature::new(id, values)?);
    }
    if !r.is_empty() {
        return Err(Error::TrailingData(r.remaining()));
    }
    Ok(out)
}

pub fn write_features(path: impl AsRef<Path>, features: &[ImageFeature]) -> Result<()> {
    write_file(path.as_ref(), &encode_features(features)?)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<ImageFeature>> {
    decode_features(&read_file(path.as_ref())?)
}
