//! The captioning model: a projected image feature initializes two
//! independent GRU decoders, one reading captions left to right and one right
//! to left, each with its own softmax head over the vocabulary. Both share the
//! word embedding table and the feature projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decode::StepModel;
use crate::error::{Error, Result};
use crate::gru::{gru_cell_backward_into, gru_cell_forward, Direction, GruParams, GruStepCache};
use crate::numerics::{log_softmax, softmax, Matrix, Vector};
use crate::text::{TokenSequence, START};

/// Width of the pooled image embedding every feature must have.
pub const FEATURE_DIM: usize = 2048;

/// Half-width of the uniform weight initializer.
pub const INIT_SCALE: f64 = 0.08;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub vocab_size: usize,
    pub feature_dim: usize,
    /// Longest caption body (words between the markers) accepted or generated.
    pub max_len: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(vocab_size: usize) -> Self {
        ModelConfig {
            embed_dim: 300,
            hidden_dim: 256,
            vocab_size,
            feature_dim: FEATURE_DIM,
            max_len: 20,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("vocab_size", self.vocab_size),
            ("max_len", self.max_len),
        ];
        for (name, value) in fields {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.vocab_size <= START {
            return Err(Error::InvalidConfig(format!(
                "vocab_size {} leaves no room for the reserved tokens",
                self.vocab_size
            )));
        }
        if self.feature_dim != FEATURE_DIM {
            return Err(Error::InvalidConfig(format!("feature_dim must be {FEATURE_DIM}, got {}", self.feature_dim)));
        }
        Ok(())
    }
}

/// One directional decoder: its recurrent cell and softmax head.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderHead {
    pub gru: GruParams,
    pub out_weight: Matrix,
    pub out_bias: Vector,
}

impl DecoderHead {
    fn zeros(cfg: &ModelConfig) -> Self {
        DecoderHead {
            gru: GruParams::zeros(cfg.embed_dim, cfg.hidden_dim),
            out_weight: Matrix::zeros(cfg.vocab_size, cfg.hidden_dim),
            out_bias: Vector::zeros(cfg.vocab_size),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaptionModel {
    pub config: ModelConfig,
    /// `vocab_size × embed_dim`
    pub embedding: Matrix,
    /// `hidden_dim × feature_dim`
    pub feat_weight: Matrix,
    pub feat_bias: Vector,
    pub forward: DecoderHead,
    pub backward: DecoderHead,
}

/// Gradient of the loss with respect to every parameter, laid out as a model.
pub type ModelGrads = CaptionModel;

/// A named, flat view of one parameter tensor.
pub struct TensorRef<'a> {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: &'a mut [f64],
}

impl CaptionModel {
    /// Every parameter zero: all step distributions are uniform.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let cfg = &config;
        Ok(CaptionModel {
            embedding: Matrix::zeros(cfg.vocab_size, cfg.embed_dim),
            feat_weight: Matrix::zeros(cfg.hidden_dim, cfg.feature_dim),
            feat_bias: Vector::zeros(cfg.hidden_dim),
            forward: DecoderHead::zeros(cfg),
            backward: DecoderHead::zeros(cfg),
            config,
        })
    }

    /// Weights uniform in `[-0.08, 0.08]` from a ChaCha8 stream seeded by
    /// `config.seed`, drawn in tensor order; biases zero.
    pub fn init(config: ModelConfig) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed);
        for t in model.tensors_mut() {
            if is_bias(&t.name) {
                continue;
            }
            for x in t.data.iter_mut() {
                *x = rng.random_range(-INIT_SCALE..=INIT_SCALE);
            }
        }
        Ok(model)
    }

    /// A zero-valued gradient accumulator with this model's shapes.
    pub fn zeros_like(&self) -> ModelGrads {
        Self::zeros(self.config.clone()).expect("config already validated")
    }

    pub fn head(&self, direction: Direction) -> &DecoderHead {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }

    fn head_mut(&mut self, direction: Direction) -> &mut DecoderHead {
        match direction {
            Direction::Forward => &mut self.forward,
            Direction::Backward => &mut self.backward,
        }
    }

    /// Tensor names and shapes, in serialization order.
    pub fn tensor_shapes(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
        let (v, e, h, f) = (cfg.vocab_size, cfg.embed_dim, cfg.hidden_dim, cfg.feature_dim);
        let mut shapes = vec![
            ("embedding".to_string(), vec![v, e]),
            ("feat_proj.weight".to_string(), vec![h, f]),
            ("feat_proj.bias".to_string(), vec![h]),
        ];
        for dir in ["fwd", "bwd"] {
            for (name, input) in [("w_z", e), ("u_z", h), ("w_r", e), ("u_r", h), ("w", e), ("u", h)] {
                shapes.push((format!("{dir}.gru.{name}"), vec![h, input]));
            }
            shapes.push((format!("{dir}.out.weight"), vec![v, h]));
            shapes.push((format!("{dir}.out.bias"), vec![v]));
        }
        shapes
    }

    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut slices: Vec<&[f64]> = vec![self.embedding.as_slice(), self.feat_weight.as_slice(), self.feat_bias.as_slice()];
        for head in [&self.forward, &self.backward] {
            slices.extend(head.gru.named().iter().map(|(_, m)| m.as_slice()));
            slices.push(head.out_weight.as_slice());
            slices.push(head.out_bias.as_slice());
        }
        Self::tensor_shapes(&self.config)
            .into_iter()
            .zip(slices)
            .map(|((name, dims), data)| TensorRef { name, dims, data })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let shapes = Self::tensor_shapes(&self.config);
        let mut slices: Vec<&mut [f64]> = vec![self.embedding.as_mut_slice(), self.feat_weight.as_mut_slice(), self.feat_bias.as_mut_slice()];
        for head in [&mut self.forward, &mut self.backward] {
            let DecoderHead { gru, out_weight, out_bias } = head;
            slices.extend(gru.named_mut().into_iter().map(|(_, m)| m.as_mut_slice()));
            slices.push(out_weight.as_mut_slice());
            slices.push(out_bias.as_mut_slice());
        }
        shapes
            .into_iter()
            .zip(slices)
            .map(|((name, dims), data)| TensorMut { name, dims, data })
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// `h0 = tanh(W_f · feature + b_f)`, shared by both decoders.
    pub fn initial_state(&self, feature: &[f64]) -> Result<Vector> {
        if feature.len() != self.config.feature_dim {
            return Err(Error::shape(
                "initial_state",
                format!("feature of length {}", self.config.feature_dim),
                format!("length {}", feature.len()),
            ));
        }
        let mut h0 = Vector::zeros(self.config.hidden_dim);
        for (i, h) in h0.iter_mut().enumerate() {
            let row = self.feat_weight.row(i);
            let a: f64 = row.iter().zip(feature).map(|(w, x)| w * x).sum::<f64>() + self.feat_bias[i];
            *h = a.tanh();
        }
        Ok(h0)
    }

    fn embed(&self, token: usize) -> Result<Vector> {
        self.check_token(token)?;
        Ok(Vector::new(self.embedding.row(token).to_vec()))
    }

    fn check_token(&self, token: usize) -> Result<()> {
        if token >= self.config.vocab_size {
            return Err(Error::InvalidToken {
                id: token,
                vocab_size: self.config.vocab_size,
            });
        }
        Ok(())
    }

    fn logits(&self, direction: Direction, h: &Vector) -> Result<Vector> {
        let head = self.head(direction);
        head.out_weight.matvec(h)?.add(&head.out_bias)
    }

    fn advance(&self, direction: Direction, h_prev: &Vector, token: usize) -> Result<GruStepCache> {
        let x = self.embed(token)?;
        gru_cell_forward(&self.head(direction).gru, &x, h_prev)
    }

    /// Feeds `token` to one decoder, returning the next-token distribution
    /// and the new hidden state.
    pub fn step_distribution(&self, direction: Direction, h_prev: &Vector, token: usize) -> Result<(Vector, Vector)> {
        let cache = self.advance(direction, h_prev, token)?;
        let probs = softmax(&self.logits(direction, &cache.h_t)?)?;
        Ok((probs, cache.h_t))
    }

    /// Log-space counterpart of [`step_distribution`](Self::step_distribution).
    pub fn step_log_probs(&self, direction: Direction, h_prev: &Vector, token: usize) -> Result<(Vector, Vector)> {
        let cache = self.advance(direction, h_prev, token)?;
        let log_probs = log_softmax(&self.logits(direction, &cache.h_t)?)?;
        Ok((log_probs, cache.h_t))
    }

    /// Per-step log-probabilities of `s` under one teacher-forced decoder.
    /// The backward decoder reads the body in reverse.
    pub fn step_scores(&self, feature: &[f64], s: &TokenSequence, direction: Direction) -> Result<Vec<f64>> {
        self.check_sequence(s)?;
        let seq = oriented(s, direction);
        let ids = seq.ids();
        let mut h = self.initial_state(feature)?;
        let mut steps = Vec::with_capacity(ids.len() - 1);
        for t in 0..ids.len() - 1 {
            let (lp, next) = self.step_log_probs(direction, &h, ids[t])?;
            steps.push(lp[ids[t + 1]]);
            h = next;
        }
        Ok(steps)
    }

    /// `log p(s | image)` under one decoder: the sum of per-step log-probabilities.
    pub fn sentence_log_prob(&self, feature: &[f64], s: &TokenSequence, direction: Direction) -> Result<f64> {
        Ok(self.step_scores(feature, s, direction)?.iter().sum())
    }

    pub fn score_sentence(&self, feature: &[f64], s: &TokenSequence, direction: Direction, mode: ScoringMode) -> Result<ScoredSentence> {
        let steps = self.step_scores(feature, s, direction)?;
        Ok(ScoredSentence::from_steps(s.clone(), &steps, direction, mode, false))
    }

    /// Negative log-likelihood of `s` summed over both decoders.
    pub fn caption_loss(&self, feature: &[f64], s: &TokenSequence) -> Result<f64> {
        let f = self.sentence_log_prob(feature, s, Direction::Forward)?;
        let b = self.sentence_log_prob(feature, s, Direction::Backward)?;
        Ok(-(f + b))
    }

    /// Exact gradient of [`caption_loss`](Self::caption_loss).
    pub fn model_backward(&self, feature: &[f64], s: &TokenSequence) -> Result<(f64, ModelGrads)> {
        let mut grads = self.zeros_like();
        let stats = self.accumulate_gradients(feature, s, &mut grads)?;
        Ok((stats.loss, grads))
    }

    /// Loss, teacher-forced accuracy counts and (optionally) gradients for one
    /// pair, added into `grads`.
    pub fn accumulate_gradients(&self, feature: &[f64], s: &TokenSequence, grads: &mut ModelGrads) -> Result<PassStats> {
        self.forward_backward(feature, s, Some(grads))
    }

    /// Loss and accuracy counts without gradients.
    pub fn evaluate_pair(&self, feature: &[f64], s: &TokenSequence) -> Result<PassStats> {
        self.forward_backward(feature, s, None)
    }

    fn check_sequence(&self, s: &TokenSequence) -> Result<()> {
        if s.body().len() > self.config.max_len {
            return Err(Error::SequenceTooLong {
                len: s.body().len(),
                max_len: self.config.max_len,
            });
        }
        self.check_token(s.max_id())
    }

    fn forward_backward(&self, feature: &[f64], s: &TokenSequence, mut grads: Option<&mut ModelGrads>) -> Result<PassStats> {
        self.check_sequence(s)?;
        if let Some(g) = grads.as_deref() {
            if g.config != self.config {
                return Err(Error::ConfigMismatch("gradient accumulator has a different config".into()));
            }
        }
        let h0 = self.initial_state(feature)?;
        let mut stats = PassStats::default();
        let mut d_h0 = Vector::zeros(self.config.hidden_dim);

        for direction in [Direction::Forward, Direction::Backward] {
            let seq = oriented(s, direction);
            let ids = seq.ids();
            let head = self.head(direction);

            let mut steps: Vec<(GruStepCache, Vector)> = Vec::with_capacity(ids.len() - 1);
            let mut h = h0.clone();
            for t in 0..ids.len() - 1 {
                let cache = self.advance(direction, &h, ids[t])?;
                let logits = self.logits(direction, &cache.h_t)?;
                let log_probs = log_softmax(&logits)?;
                let target = ids[t + 1];
                stats.loss -= log_probs[target];
                stats.tokens += 1;
                if logits.argmax() == Some(target) {
                    stats.correct += 1;
                }
                h = cache.h_t.clone();
                steps.push((cache, log_probs));
            }

            let Some(g) = grads.as_deref_mut() else { continue };
            let mut d_h_next = Vector::zeros(self.config.hidden_dim);
            for (t, (cache, log_probs)) in steps.iter().enumerate().rev() {
                let mut d_logits = log_probs.map(f64::exp);
                d_logits[ids[t + 1]] -= 1.0;

                let gh = g.head_mut(direction);
                gh.out_weight.add_outer(1.0, &d_logits, &cache.h_t)?;
                gh.out_bias.axpy(1.0, &d_logits)?;

                let mut d_h = head.out_weight.matvec_transposed(&d_logits)?;
                d_h.axpy(1.0, &d_h_next)?;
                let (d_x, d_h_prev) = gru_cell_backward_into(&head.gru, cache, &d_h, &mut gh.gru)?;
                for (e, dx) in g.embedding.row_mut(ids[t]).iter_mut().zip(d_x.iter()) {
                    *e += dx;
                }
                d_h_next = d_h_prev;
            }
            d_h0.axpy(1.0, &d_h_next)?;
        }

        if let Some(g) = grads {
            let d_pre: Vector = h0.iter().zip(d_h0.iter()).map(|(h, d)| d * (1.0 - h * h)).collect::<Vec<_>>().into();
            g.feat_weight.add_outer(1.0, &d_pre, &Vector::new(feature.to_vec()))?;
            g.feat_bias.axpy(1.0, &d_pre)?;
        }
        Ok(stats)
    }

    /// A single decoder bound to one image, ready for search.
    pub fn decoder(&self, feature: &[f64], direction: Direction) -> Result<DirectedDecoder<'_>> {
        Ok(DirectedDecoder {
            model: self,
            direction,
            h0: self.initial_state(feature)?,
        })
    }
}

fn is_bias(name: &str) -> bool {
    name.ends_with(".bias")
}

fn oriented(s: &TokenSequence, direction: Direction) -> TokenSequence {
    match direction {
        Direction::Forward => s.clone(),
        Direction::Backward => s.reversed_body(),
    }
}

/// Totals from one teacher-forced pass over both decoders.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PassStats {
    /// Negative log-likelihood in nats.
    pub loss: f64,
    /// Number of predicted tokens.
    pub tokens: usize,
    /// Predictions whose argmax equals the target.
    pub correct: usize,
}

impl std::ops::AddAssign for PassStats {
    fn add_assign(&mut self, rhs: Self) {
        self.loss += rhs.loss;
        self.tokens += rhs.tokens;
        self.correct += rhs.correct;
    }
}

/// Sentence-level score used to rank finished hypotheses and to pick between
/// the two decoders.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScoringMode {
    /// Mean per-step log-probability.
    #[default]
    MeanLog,
    /// Arithmetic mean of the per-step probabilities.
    ArithMean,
}

impl std::str::FromStr for ScoringMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_log" | "mean-log" => Ok(ScoringMode::MeanLog),
            "arith_mean" | "arith-mean" => Ok(ScoringMode::ArithMean),
            other => Err(Error::InvalidConfig(format!("unknown scoring mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSentence {
    /// Natural reading order, regardless of which decoder produced it.
    pub ids: TokenSequence,
    pub log_prob: f64,
    pub mean_log_prob: f64,
    pub score: f64,
    pub mode: ScoringMode,
    pub direction: Direction,
    /// The end marker was appended because the length cap was reached.
    pub forced_end: bool,
}

impl ScoredSentence {
    pub fn from_steps(ids: TokenSequence, steps: &[f64], direction: Direction, mode: ScoringMode, forced_end: bool) -> Self {
        let n = steps.len().max(1) as f64;
        let log_prob: f64 = steps.iter().sum();
        let mean_log_prob = log_prob / n;
        let score = match mode {
            ScoringMode::MeanLog => mean_log_prob,
            ScoringMode::ArithMean => steps.iter().map(|lp| lp.exp()).sum::<f64>() / n,
        };
        ScoredSentence {
            ids,
            log_prob,
            mean_log_prob,
            score,
            mode,
            direction,
            forced_end,
        }
    }

    /// Sentence probability, `exp(log_prob)`.
    pub fn probability(&self) -> f64 {
        self.log_prob.exp()
    }
}

/// Keeps whichever direction scores higher; the forward sentence wins ties.
pub fn select_bidirectional(fwd: ScoredSentence, bwd: ScoredSentence) -> ScoredSentence {
    debug_assert_eq!(fwd.mode, bwd.mode, "both sentences must be scored the same way");
    if bwd.score > fwd.score {
        bwd
    } else {
        fwd
    }
}

/// One directional decoder of a [`CaptionModel`] conditioned on an image.
pub struct DirectedDecoder<'a> {
    model: &'a CaptionModel,
    direction: Direction,
    h0: Vector,
}

impl StepModel for DirectedDecoder<'_> {
    type State = Vector;

    fn vocab_size(&self) -> usize {
        self.model.config.vocab_size
    }

    fn initial_state(&self) -> Vector {
        self.h0.clone()
    }

    fn step(&self, state: &Vector, token: usize) -> Result<(Vec<f64>, Vector)> {
        let (lp, h) = self.model.step_log_probs(self.direction, state, token)?;
        Ok((lp.into_inner(), h))
    }

    fn direction(&self) -> Direction {
        self.direction
    }
}
