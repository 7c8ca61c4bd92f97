use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::captions::EXPECTED_CAPTIONS_PER_IMAGE;
use super::features::{write_features, ImageFeature};
use super::write_file;
use crate::error::{Error, Result};
use crate::model::FEATURE_DIM;

/// Word list used when none is supplied. Words are assigned grammatical roles
/// by position modulo three: subject, place, action.
pub const DEFAULT_FIXTURE_WORDS: &[&str] = &[
    "ছেলে",
    "নদীতে",
    "খেলছে",
    "মেয়ে",
    "মাঠে",
    "হাঁটছে",
    "কুকুর",
    "রাস্তায়",
    "বসে",
    "লোক",
    "বাজারে",
    "দৌড়াচ্ছে",
    "নৌকা",
    "পাহাড়ে",
    "দাঁড়িয়ে",
];

/// Nonzero coordinates per feature. Each is `±1/16`, so the vector has unit
/// norm exactly, in `f32` as well as `f64`.
const ACTIVE_COORDS: usize = 256;

pub const FEATURES_FILE: &str = "features.bnf";
pub const CAPTIONS_FILE: &str = "captions.tsv";

#[derive(Clone, Debug)]
pub struct Fixture {
    pub features_path: PathBuf,
    pub captions_path: PathBuf,
    pub features: Vec<ImageFeature>,
    /// `(image id, caption)` in file order.
    pub captions: Vec<(String, String)>,
}

pub fn fixture_image_id(index: usize) -> String {
    format!("img_{index:04}")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn rng_for(id: &str, seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(id.as_bytes()) ^ seed);
    rng.set_stream(stream);
    rng
}

/// Sparse unit vector determined by `(id, seed)`.
pub fn fixture_feature(id: &str, seed: u64) -> Result<ImageFeature> {
    let mut rng = rng_for(id, seed, 0);
    let mut values = vec![0.0; FEATURE_DIM];
    let amp = 1.0 / (ACTIVE_COORDS as f64).sqrt();
    for i in sample(&mut rng, FEATURE_DIM, ACTIVE_COORDS) {
        values[i] = if rng.random::<bool>() { amp } else { -amp };
    }
    ImageFeature::new(id, values)
}

/// The caption for `id`: a subject, a place and an action picked from
/// `words` by a generator seeded with `(id, seed)`, ending in a full stop.
pub fn fixture_caption<S: AsRef<str>>(id: &str, seed: u64, words: &[S]) -> Result<String> {
    if words.len() < 3 {
        return Err(Error::InvalidConfig(format!("fixture needs at least 3 words, got {}", words.len())));
    }
    let mut rng = rng_for(id, seed, 1);
    let mut pick = |role: usize| {
        let n = (words.len() - role).div_ceil(3);
        words[role + 3 * rng.random_range(0..n)].as_ref().to_owned()
    };
    let (subject, place, action) = (pick(0), pick(1), pick(2));
    Ok(format!("{subject} {place} {action}।"))
}

/// Writes `features.bnf` and `captions.tsv` into `out_dir`. Every image gets
/// five copies of its caption.
pub fn generate_fixture<S: AsRef<str>>(n_images: usize, words: &[S], seed: u64, out_dir: impl AsRef<Path>) -> Result<Fixture> {
    if n_images == 0 {
        return Err(Error::InvalidConfig("fixture needs at least one image".into()));
    }
    let out_dir = out_dir.as_ref();
    let mut features = Vec::with_capacity(n_images);
    let mut captions = Vec::with_capacity(n_images * EXPECTED_CAPTIONS_PER_IMAGE);
    let mut tsv = String::new();
    for i in 0..n_images {
        let id = fixture_image_id(i);
        features.push(fixture_feature(&id, seed)?);
        let caption = fixture_caption(&id, seed, words)?;
        for _ in 0..EXPECTED_CAPTIONS_PER_IMAGE {
            tsv.push_str(&format!("{id}\t{caption}\n"));
            captions.push((id.clone(), caption.clone()));
        }
    }
    let features_path = out_dir.join(FEATURES_FILE);
    let captions_path = out_dir.join(CAPTIONS_FILE);
    write_features(&features_path, &features)?;
    write_file(&captions_path, tsv.as_bytes())?;
    Ok(Fixture {
        features_path,
        captions_path,
        features,
        captions,
    })
}
