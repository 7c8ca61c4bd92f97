use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{read_file, write_file, Reader};
use crate::error::{Error, Result};
use crate::model::{CaptionModel, ModelConfig};
use crate::text::Vocabulary;

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"BNCK1";

const CONFIG_KEYS: [&str; 6] = ["embed_dim", "hidden_dim", "vocab_size", "feature_dim", "max_len", "seed"];

/// A model plus everything needed to use it on new data.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: CaptionModel,
    pub vocabulary: Option<Vocabulary>,
    /// Free-form `key=value` pairs, e.g. training hyperparameters.
    pub metadata: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn new(model: CaptionModel) -> Self {
        Checkpoint {
            model,
            vocabulary: None,
            metadata: BTreeMap::new(),
        }
    }
}

fn config_values(cfg: &ModelConfig) -> [String; 6] {
    [
        cfg.embed_dim.to_string(),
        cfg.hidden_dim.to_string(),
        cfg.vocab_size.to_string(),
        cfg.feature_dim.to_string(),
        cfg.max_len.to_string(),
        cfg.seed.to_string(),
    ]
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && !k.contains(['=', '\n']) && !CONFIG_KEYS.contains(&k) && k != "vocab"
}

/// Layout: magic, `u32` header length, UTF-8 header of `key=value` lines,
/// then tensors until end of file, each `u16` name length, name, `u32` rank,
/// `u32` dims and `f64` values, all little-endian.
pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let model = &ckpt.model;
    let mut header = String::new();
    for (k, v) in CONFIG_KEYS.iter().zip(config_values(&model.config)) {
        header.push_str(&format!("{k}={v}\n"));
    }
    for (k, v) in &ckpt.metadata {
        if !valid_key(k) || v.contains('\n') {
            return Err(Error::BadHeader(format!("metadata entry {k:?} cannot be stored")));
        }
        header.push_str(&format!("{k}={v}\n"));
    }
    if let Some(vocab) = &ckpt.vocabulary {
        if vocab.len() != model.config.vocab_size {
            return Err(Error::ConfigMismatch(format!(
                "vocabulary has {} entries, model expects {}",
                vocab.len(),
                model.config.vocab_size
            )));
        }
        header.push_str(&format!("vocab={}\n", vocab.words().join(" ")));
    }

    let mut out = Vec::with_capacity(16 + header.len() + model.num_parameters() * 8);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for t in model.tensors() {
        out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for &d in &t.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &x in t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

fn parse_header(text: &str) -> Result<(ModelConfig, Option<Vocabulary>, BTreeMap<String, String>)> {
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::BadHeader(format!("line without '=': {line:?}")))?;
        if fields.insert(k, v).is_some() {
            return Err(Error::BadHeader(format!("duplicate key {k:?}")));
        }
    }
    let mut config = [0u64; 6];
    for (slot, key) in config.iter_mut().zip(CONFIG_KEYS) {
        let raw = fields.remove(key).ok_or_else(|| Error::BadHeader(format!("missing key {key:?}")))?;
        *slot = raw.parse().map_err(|_| Error::BadHeader(format!("{key}={raw:?} is not an unsigned integer")))?;
    }
    let [embed_dim, hidden_dim, vocab_size, feature_dim, max_len, seed] = config;
    let cfg = ModelConfig {
        embed_dim: embed_dim as usize,
        hidden_dim: hidden_dim as usize,
        vocab_size: vocab_size as usize,
        feature_dim: feature_dim as usize,
        max_len: max_len as usize,
        seed,
    };
    cfg.validate().map_err(|e| Error::BadHeader(e.to_string()))?;
    let vocabulary = match fields.remove("vocab") {
        Some(words) => {
            let v = Vocabulary::from_words(words.split(' ').filter(|w| !w.is_empty())).map_err(|e| Error::BadHeader(e.to_string()))?;
            if v.len() != cfg.vocab_size {
                return Err(Error::ConfigMismatch(format!(
                    "stored vocabulary has {} entries, header says {}",
                    v.len(),
                    cfg.vocab_size
                )));
            }
            Some(v)
        }
        None => None,
    };
    let metadata = fields.into_iter().map(|(k, v)| (k.to_owned(), v.to_owned())).collect();
    Ok((cfg, vocabulary, metadata))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::new(bytes);
    let magic = r.take(CHECKPOINT_MAGIC.len(), "magic").unwrap_or(&bytes[..0]);
    if magic != CHECKPOINT_MAGIC {
        if magic.starts_with(b"BNCK") {
            return Err(Error::UnsupportedVersion {
                expected: "BNCK1",
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        return Err(Error::BadMagic { expected: "BNCK1" });
    }
    let header_len = r.u32("header length")? as usize;
    let header = std::str::from_utf8(r.take(header_len, "header")?).map_err(|_| Error::BadHeader("header is not valid UTF-8".into()))?;
    let (config, vocabulary, metadata) = parse_header(header)?;

    let expected: HashMap<String, Vec<usize>> = CaptionModel::tensor_shapes(&config).into_iter().collect();
    let mut loaded: HashMap<String, Vec<f64>> = HashMap::new();
    while !r.is_empty() {
        let name_len = r.u16("tensor name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "tensor name")?)
            .map_err(|_| Error::BadHeader("tensor name is not valid UTF-8".into()))?
            .to_owned();
        let rank = r.u32("tensor rank")? as usize;
        if rank > 8 {
            return Err(Error::BadHeader(format!("tensor {name} has rank {rank}")));
        }
        let dims = (0..rank).map(|_| r.u32("tensor dims").map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let want = expected.get(&name).ok_or_else(|| Error::UnknownTensor(name.clone()))?;
        if *want != dims {
            return Err(Error::TensorShape {
                name,
                expected: want.clone(),
                found: dims,
            });
        }
        if loaded.contains_key(&name) {
            return Err(Error::BadHeader(format!("tensor {name} appears twice")));
        }
        let count: usize = dims.iter().product();
        let data = r
            .take(count * 8, "tensor data")?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        loaded.insert(name, data);
    }

    let mut model = CaptionModel::zeros(config)?;
    for t in model.tensors_mut() {
        let data = loaded.remove(&t.name).ok_or_else(|| Error::MissingTensor(t.name.clone()))?;
        t.data.copy_from_slice(&data);
    }
    Ok(Checkpoint { model, vocabulary, metadata })
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    write_file(path.as_ref(), &encode_checkpoint(ckpt)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    decode_checkpoint(&read_file(path.as_ref())?)
}

/// Loads a checkpoint and requires its tensors to have the shapes `config`
/// implies.
pub fn load_checkpoint_expecting(path: impl AsRef<Path>, config: &ModelConfig) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    let found = CaptionModel::tensor_shapes(&ckpt.model.config);
    for ((name, want), (_, got)) in CaptionModel::tensor_shapes(config).into_iter().zip(found) {
        if want != got {
            return Err(Error::TensorShape {
                name,
                expected: want,
                found: got,
            });
        }
    }
    if ckpt.model.config.max_len != config.max_len {
        return Err(Error::ConfigMismatch(format!(
            "max_len {} != expected {}",
            ckpt.model.config.max_len, config.max_len
        )));
    }
    Ok(ckpt)
}
