//! Mini-batch training with teacher forcing, plus the finite-difference
//! gradient check.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data_io::{fixture_feature, write_file, CaptionCorpus, ImageFeature};
use crate::error::{Error, Result};
use crate::model::{CaptionModel, ModelConfig, PassStats};
use crate::text::{encode_caption, TokenSequence, Vocabulary, NUM_RESERVED};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::adam()),
            other => Err(Error::InvalidConfig(format!("unknown optimizer {other:?} (expected sgd or adam)"))),
        }
    }
}

impl std::fmt::Display for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Optimizer::Sgd => f.write_str("sgd"),
            Optimizer::Adam { .. } => f.write_str("adam"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    /// Global gradient-norm ceiling; `0.0` disables clipping.
    pub grad_clip_norm: f64,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 1e-3,
            batch_size: 16,
            optimizer: Optimizer::adam(),
            grad_clip_norm: 5.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.grad_clip_norm.is_finite() && self.grad_clip_norm >= 0.0) {
            return Err(Error::InvalidConfig(format!("grad_clip_norm must be >= 0, got {}", self.grad_clip_norm)));
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps <= 0.0 {
                return Err(Error::InvalidConfig("adam needs beta1, beta2 in [0, 1) and eps > 0".into()));
            }
        }
        Ok(())
    }

    /// Hyperparameters as `train.*` entries for a checkpoint header.
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("train.epochs".into(), self.epochs.to_string());
        m.insert("train.learning_rate".into(), self.learning_rate.to_string());
        m.insert("train.batch_size".into(), self.batch_size.to_string());
        m.insert("train.optimizer".into(), self.optimizer.to_string());
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            m.insert("train.adam".into(), format!("{beta1},{beta2},{eps}"));
        }
        m.insert("train.grad_clip_norm".into(), self.grad_clip_norm.to_string());
        m.insert("train.seed".into(), self.seed.to_string());
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean negative log-likelihood per predicted token, both decoders.
    pub loss: f64,
    /// Fraction of teacher-forced argmax predictions that hit the target.
    pub accuracy: f64,
}

impl EpochStats {
    fn from_pass(epoch: usize, s: PassStats) -> Self {
        EpochStats {
            epoch,
            loss: s.loss / s.tokens as f64,
            accuracy: s.correct as f64 / s.tokens as f64,
        }
    }
}

/// Image features and the captions paired with them. Each caption is its own
/// training example.
#[derive(Clone, Debug, Default)]
pub struct TrainingSet {
    features: Vec<Vec<f64>>,
    pairs: Vec<(usize, TokenSequence)>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an image and returns its index for [`push_pair`](Self::push_pair).
    pub fn push_image(&mut self, feature: Vec<f64>) -> usize {
        self.features.push(feature);
        self.features.len() - 1
    }

    pub fn push_pair(&mut self, image: usize, caption: TokenSequence) -> Result<()> {
        if image >= self.features.len() {
            return Err(Error::UnknownImage(image.to_string()));
        }
        self.pairs.push((image, caption));
        Ok(())
    }

    /// Pairs every caption of the images in `ids` with its feature.
    pub fn from_corpus<S: AsRef<str>>(features: &[ImageFeature], captions: &CaptionCorpus, ids: &[S], vocab: &Vocabulary) -> Result<Self> {
        let by_id: BTreeMap<&str, &ImageFeature> = features.iter().map(|f| (f.id(), f)).collect();
        let mut set = TrainingSet::new();
        for id in ids {
            let id = id.as_ref();
            let feat = by_id.get(id).ok_or_else(|| Error::UnknownImage(id.to_owned()))?;
            let caps = captions.get(id).ok_or_else(|| Error::UnknownImage(id.to_owned()))?;
            let idx = set.push_image(feat.values().to_vec());
            for c in caps {
                set.push_pair(idx, encode_caption(vocab, c))?;
            }
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn num_images(&self) -> usize {
        self.features.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &TokenSequence)> {
        self.pairs.iter().map(|(i, s)| (self.features[*i].as_slice(), s))
    }

    fn pair(&self, k: usize) -> (&[f64], &TokenSequence) {
        let (i, s) = &self.pairs[k];
        (&self.features[*i], s)
    }
}

/// Teacher-forced loss and accuracy of `model` over a whole set.
pub fn evaluate_set(model: &CaptionModel, data: &TrainingSet) -> Result<EpochStats> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = PassStats::default();
    for (feat, s) in data.pairs() {
        total += model.evaluate_pair(feat, s)?;
    }
    Ok(EpochStats::from_pass(0, total))
}

fn global_norm(g: &CaptionModel) -> f64 {
    g.tensors().iter().flat_map(|t| t.data.iter()).map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales `g` in place to `g · min(1, max_norm / ‖g‖)`.
pub fn clip_gradients(g: &mut CaptionModel, max_norm: f64) -> f64 {
    let norm = global_norm(g);
    if max_norm > 0.0 && norm > max_norm {
        let k = max_norm / norm;
        for t in g.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x *= k);
        }
    }
    norm
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

fn apply_update(model: &mut CaptionModel, grads: &CaptionModel, cfg: &TrainConfig, adam: &mut Option<AdamState>) {
    let lr = cfg.learning_rate;
    match (cfg.optimizer, adam) {
        (Optimizer::Adam { beta1, beta2, eps }, Some(state)) => {
            state.t += 1;
            let c1 = 1.0 - beta1.powi(state.t);
            let c2 = 1.0 - beta2.powi(state.t);
            let params = model.tensors_mut().into_iter().flat_map(|t| t.data.iter_mut());
            let gs = grads.tensors().into_iter().flat_map(|t| t.data.iter());
            for (((p, g), m), v) in params.zip(gs).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
        _ => {
            let params = model.tensors_mut().into_iter().flat_map(|t| t.data.iter_mut());
            for (p, g) in params.zip(grads.tensors().into_iter().flat_map(|t| t.data.iter())) {
                *p -= lr * g;
            }
        }
    }
}

/// Trains with shuffled mini-batches. Batch gradients are averaged over the
/// batch's captions. Reported stats are accumulated while the epoch runs, so
/// they describe the weights each batch saw before its update.
pub fn train(model: CaptionModel, data: &TrainingSet, cfg: &TrainConfig) -> Result<(CaptionModel, Vec<EpochStats>)> {
    train_with(model, data, cfg, |_| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_with(
    mut model: CaptionModel,
    data: &TrainingSet,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(CaptionModel, Vec<EpochStats>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (feat, s) in data.pairs() {
        if feat.len() != model.config.feature_dim {
            return Err(Error::shape(
                "train",
                format!("features of length {}", model.config.feature_dim),
                format!("length {}", feat.len()),
            ));
        }
        if s.body().len() > model.config.max_len {
            return Err(Error::SequenceTooLong {
                len: s.body().len(),
                max_len: model.config.max_len,
            });
        }
        if s.max_id() >= model.config.vocab_size {
            return Err(Error::InvalidToken {
                id: s.max_id(),
                vocab_size: model.config.vocab_size,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_params = model.num_parameters();
    let mut adam = matches!(cfg.optimizer, Optimizer::Adam { .. }).then(|| AdamState {
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
        t: 0,
    });
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut grads = model.zeros_like();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut totals = PassStats::default();
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            for t in grads.tensors_mut() {
                t.data.fill(0.0);
            }
            let mut batch_stats = PassStats::default();
            for &k in batch {
                let (feat, s) = data.pair(k);
                batch_stats += model.accumulate_gradients(feat, s, &mut grads)?;
            }
            if !batch_stats.loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    loss: batch_stats.loss,
                });
            }
            let inv = 1.0 / batch.len() as f64;
            for t in grads.tensors_mut() {
                t.data.iter_mut().for_each(|x| *x *= inv);
            }
            clip_gradients(&mut grads, cfg.grad_clip_norm);
            apply_update(&mut model, &grads, cfg, &mut adam);
            totals += batch_stats;
        }
        let stats = EpochStats::from_pass(epoch, totals);
        log::info!("epoch {epoch}: loss {:.6} accuracy {:.4}", stats.loss, stats.accuracy);
        on_epoch(&stats);
        history.push(stats);
    }
    Ok((model, history))
}

/// `epoch,loss,accuracy` with one row per epoch.
pub fn curves_csv(stats: &[EpochStats]) -> String {
    let mut out = String::from("epoch,loss,accuracy\n");
    for s in stats {
        writeln!(out, "{},{},{}", s.epoch, s.loss, s.accuracy).expect("writing to a String");
    }
    out
}

pub fn write_curves(path: impl AsRef<Path>, stats: &[EpochStats]) -> Result<()> {
    write_file(path.as_ref(), curves_csv(stats).as_bytes())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Longest caption body drawn.
    pub max_len: usize,
    /// Half-width of the uniform draw for every parameter, biases included.
    pub weight_scale: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl GradCheckConfig {
    pub fn new(seed: u64) -> Self {
        GradCheckConfig {
            vocab_size: 10,
            embed_dim: 4,
            hidden_dim: 5,
            max_len: 5,
            weight_scale: 0.5,
            epsilon: 1e-5,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor and flat index where the worst error occurred.
    pub worst: (String, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub parameters_checked: usize,
}

/// Compares backpropagated gradients with central differences for every
/// parameter of a small random model on one random caption. The relative
/// error is `|ga − gn| / max(|ga|, |gn|, 1e-12)`; entries where both are zero
/// count as exact.
pub fn gradient_check(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mcfg = ModelConfig {
        embed_dim: cfg.embed_dim,
        hidden_dim: cfg.hidden_dim,
        vocab_size: cfg.vocab_size,
        feature_dim: crate::model::FEATURE_DIM,
        max_len: cfg.max_len,
        seed: cfg.seed,
    };
    if cfg.vocab_size <= NUM_RESERVED {
        return Err(Error::InvalidConfig(format!("gradient check needs vocab_size > {NUM_RESERVED}")));
    }
    let mut model = CaptionModel::zeros(mcfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for t in model.tensors_mut() {
        for x in t.data.iter_mut() {
            *x = rng.random_range(-cfg.weight_scale..=cfg.weight_scale);
        }
    }
    let len = rng.random_range(1..=cfg.max_len);
    let body: Vec<usize> = (0..len).map(|_| rng.random_range(NUM_RESERVED..cfg.vocab_size)).collect();
    let caption = TokenSequence::from_body(&body)?;
    let feature = fixture_feature(&format!("gradcheck-{}", cfg.seed), cfg.seed)?;
    let feat = feature.values();

    let (_, grads) = model.model_backward(feat, &caption)?;
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.data.to_vec()).collect();
    let names: Vec<String> = grads.tensors().iter().map(|t| t.name.clone()).collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        analytic: 0.0,
        numeric: 0.0,
        parameters_checked: 0,
    };
    let eps = cfg.epsilon;
    for (ti, name) in names.iter().enumerate() {
        for (i, &ga) in analytic[ti].iter().enumerate() {
            let original = model.tensors()[ti].data[i];
            set_param(&mut model, ti, i, original + eps);
            let plus = model.caption_loss(feat, &caption)?;
            set_param(&mut model, ti, i, original - eps);
            let minus = model.caption_loss(feat, &caption)?;
            set_param(&mut model, ti, i, original);

            let gn = (plus - minus) / (2.0 * eps);
            let denom = ga.abs().max(gn.abs()).max(1e-12);
            let rel = (ga - gn).abs() / denom;
            report.parameters_checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = (name.clone(), i);
                report.analytic = ga;
                report.numeric = gn;
            }
        }
    }
    Ok(report)
}

fn set_param(model: &mut CaptionModel, tensor: usize, index: usize, value: f64) {
    model.tensors_mut()[tensor].data[index] = value;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::fixture_feature;

    fn tiny_set() -> TrainingSet {
        let mut set = TrainingSet::new();
        for (k, body) in [vec![4, 5, 6], vec![6, 5], vec![7]].into_iter().enumerate() {
            let i = set.push_image(fixture_feature(&format!("t{k}"), 0).unwrap().values().to_vec());
            set.push_pair(i, TokenSequence::from_body(&body).unwrap()).unwrap();
        }
        set
    }

    fn tiny_model(seed: u64) -> CaptionModel {
        CaptionModel::init(ModelConfig {
            embed_dim: 6,
            hidden_dim: 8,
            vocab_size: 8,
            feature_dim: crate::model::FEATURE_DIM,
            max_len: 5,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn zero_epochs_leave_the_model_alone() {
        let m = tiny_model(1);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (out, stats) = train(m.clone(), &tiny_set(), &cfg).unwrap();
        assert_eq!(out, m);
        assert!(stats.is_empty());
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert!(matches!(
            train(tiny_model(0), &TrainingSet::new(), &TrainConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn same_seed_same_bits() {
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 2,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let (a, sa) = train(tiny_model(3), &tiny_set(), &cfg).unwrap();
        let (b, sb) = train(tiny_model(3), &tiny_set(), &cfg).unwrap();
        assert_eq!(sa, sb);
        let bits = |m: &CaptionModel| m.tensors().iter().flat_map(|t| t.data.iter().map(|x| x.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn loss_drops_with_either_optimizer() {
        for (optimizer, lr) in [(Optimizer::adam(), 1e-2), (Optimizer::Sgd, 0.5)] {
            let cfg = TrainConfig {
                epochs: 60,
                batch_size: 3,
                learning_rate: lr,
                optimizer,
                ..TrainConfig::default()
            };
            let (_, stats) = train(tiny_model(2), &tiny_set(), &cfg).unwrap();
            let (first, last) = (stats[0], *stats.last().unwrap());
            assert!(last.loss < 0.5 * first.loss, "{optimizer}: {} -> {}", first.loss, last.loss);
            assert!(stats.iter().all(|s| s.loss >= 0.0 && (0.0..=1.0).contains(&s.accuracy)));
        }
    }

    #[test]
    fn overlong_caption_rejected_before_training() {
        let mut set = tiny_set();
        set.push_pair(0, TokenSequence::from_body(&[4; 6]).unwrap()).unwrap();
        assert!(matches!(
            train(tiny_model(0), &set, &TrainConfig::default()),
            Err(Error::SequenceTooLong { len: 6, max_len: 5 })
        ));
    }

    #[test]
    fn clipping_preserves_direction() {
        let mut g = tiny_model(4);
        let before: Vec<f64> = g.tensors().iter().flat_map(|t| t.data.to_vec()).collect();
        let norm = clip_gradients(&mut g, 0.1);
        assert!(norm > 0.1);
        let after: Vec<f64> = g.tensors().iter().flat_map(|t| t.data.to_vec()).collect();
        let k = 0.1 / norm;
        for (a, b) in after.iter().zip(&before) {
            assert!((a - b * k).abs() <= 1e-15);
        }
        assert!((global_norm(&g) - 0.1).abs() < 1e-12);
        let mut h = tiny_model(4);
        clip_gradients(&mut h, 0.0);
        assert_eq!(h, tiny_model(4));
    }

    #[test]
    fn curves_format() {
        let s = [
            EpochStats {
                epoch: 1,
                loss: 2.5,
                accuracy: 0.25,
            },
            EpochStats {
                epoch: 2,
                loss: 1.0,
                accuracy: 0.5,
            },
        ];
        assert_eq!(curves_csv(&s), "epoch,loss,accuracy\n1,2.5,0.25\n2,1,0.5\n");
    }

    #[test]
    fn gradient_check_is_deterministic_and_tight() {
        let a = gradient_check(&GradCheckConfig::new(11)).unwrap();
        let b = gradient_check(&GradCheckConfig::new(11)).unwrap();
        assert_eq!(a, b);
        assert!(a.max_rel_error < 1e-4, "{a:?}");
        assert!(a.parameters_checked > 10_000);
    }

    #[test]
    fn optimizer_parsing_and_config_errors() {
        assert_eq!("sgd".parse::<Optimizer>().unwrap(), Optimizer::Sgd);
        assert_eq!("adam".parse::<Optimizer>().unwrap(), Optimizer::adam());
        assert!("rmsprop".parse::<Optimizer>().is_err());
        assert!(TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig::default().metadata().contains_key("train.optimizer"));
    }
}
