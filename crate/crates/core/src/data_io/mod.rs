//! On-disk formats and dataset plumbing.
//!
//! * `BNF1` feature files: pooled 2048-d image embeddings stored as `f32`.
//! * Caption TSV: `image_id<TAB>caption`, several lines per image.
//! * `BNCK1` checkpoints: model config header plus named `f64` tensors.

mod captions;
mod checkpoint;
mod features;
mod fixture;
mod split;

pub use captions::{load_captions, parse_captions, CaptionCorpus, EXPECTED_CAPTIONS_PER_IMAGE};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, load_checkpoint_expecting, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use features::{decode_features, encode_features, read_features, write_features, ImageFeature, FEATURE_MAGIC};
pub use fixture::{fixture_caption, fixture_feature, fixture_image_id, generate_fixture, Fixture, CAPTIONS_FILE, DEFAULT_FIXTURE_WORDS, FEATURES_FILE};
pub use split::{split_dataset, DatasetSplit};

use std::io::ErrorKind;

use crate::error::{Error, Result};

/// Little-endian cursor over an in-memory file image.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(what));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u16(&mut self, what: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    pub(crate) fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.remaining() == 0
    }
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !parent.exists() {
            return Err(Error::io(path, std::io::Error::new(ErrorKind::NotFound, "parent directory does not exist")));
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
