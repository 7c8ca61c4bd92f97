//! Sentence generation: greedy argmax, beam search, an exhaustive search used
//! as a correctness oracle, and bidirectional generation.
//!
//! All searches run against the [`StepModel`] trait, so they work the same on
//! a trained [`CaptionModel`] decoder and on hand-built probability tables.
//!
//! A generated body holds at most `max_len` tokens. Once a hypothesis reaches
//! that length the end marker is its only continuation, scored with the
//! model's actual end probability and flagged as forced. The pad token is
//! never generated.

use std::cmp::Ordering;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::gru::Direction;
use crate::model::{select_bidirectional, CaptionModel, ScoredSentence, ScoringMode};
use crate::numerics::argmax;
use crate::text::{TokenSequence, END, PAD, START};

/// Upper bound on the number of sentences [`decode_exhaustive`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

/// An autoregressive next-token model.
pub trait StepModel {
    type State: Clone;

    fn vocab_size(&self) -> usize;

    /// State before the start marker is consumed.
    fn initial_state(&self) -> Self::State;

    /// Consumes `token` and returns log-probabilities for the next token
    /// together with the updated state.
    fn step(&self, state: &Self::State, token: usize) -> Result<(Vec<f64>, Self::State)>;

    fn direction(&self) -> Direction {
        Direction::Forward
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeParams {
    pub beam_width: usize,
    pub max_len: usize,
    pub scoring_mode: ScoringMode,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            beam_width: 3,
            max_len: 20,
            scoring_mode: ScoringMode::MeanLog,
        }
    }
}

impl DecodeParams {
    pub fn greedy(max_len: usize) -> Self {
        DecodeParams {
            beam_width: 1,
            max_len,
            ..Default::default()
        }
    }
}

/// A partial or finished sentence during search.
#[derive(Clone, Debug)]
pub struct Hypothesis<S> {
    pub ids: Vec<usize>,
    pub log_prob: f64,
    pub step_log_probs: Vec<f64>,
    pub complete: bool,
    pub forced_end: bool,
    state: Rc<S>,
}

impl<S> Hypothesis<S> {
    fn body_len(&self) -> usize {
        self.ids.len() - 1
    }

    fn finish(self, direction: Direction, mode: ScoringMode) -> Result<ScoredSentence> {
        let ids = TokenSequence::new(self.ids)?;
        Ok(ScoredSentence::from_steps(ids, &self.step_log_probs, direction, mode, self.forced_end))
    }
}

/// Higher score first, then lexicographically smaller ids.
fn rank(a_score: f64, a_ids: &[usize], b_score: f64, b_ids: &[usize]) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_ids.cmp(b_ids))
}

fn best_of(candidates: Vec<ScoredSentence>) -> Option<ScoredSentence> {
    candidates.into_iter().min_by(|a, b| rank(a.score, a.ids.ids(), b.score, b.ids.ids()))
}

fn check_log_probs(log_probs: &[f64], vocab_size: usize) -> Result<()> {
    if log_probs.len() != vocab_size {
        return Err(Error::shape("StepModel::step", format!("{vocab_size} log-probabilities"), log_probs.len()));
    }
    Ok(())
}

/// Takes the most probable non-pad token at every step (ties go to the lowest
/// id) until the end marker or the length cap.
pub fn decode_greedy<M: StepModel>(model: &M, max_len: usize, mode: ScoringMode) -> Result<ScoredSentence> {
    let mut state = model.initial_state();
    let mut ids = vec![START];
    let mut steps = Vec::new();
    let mut forced_end = false;
    loop {
        let (log_probs, next) = model.step(&state, *ids.last().expect("non-empty"))?;
        check_log_probs(&log_probs, model.vocab_size())?;
        let choice = if ids.len() > max_len {
            forced_end = true;
            END
        } else {
            let mut masked = log_probs.clone();
            masked[PAD] = f64::NEG_INFINITY;
            argmax(&masked).expect("vocabulary is non-empty")
        };
        steps.push(log_probs[choice]);
        ids.push(choice);
        if choice == END {
            break;
        }
        state = next;
    }
    Ok(ScoredSentence::from_steps(
        TokenSequence::new(ids)?,
        &steps,
        model.direction(),
        mode,
        forced_end,
    ))
}

/// Classic beam search. Every live hypothesis is expanded over the whole
/// vocabulary and the top `beam_width` expansions by cumulative
/// log-probability survive; those ending in the end marker leave the beam.
/// Finished hypotheses are ranked by `scoring_mode`.
pub fn decode_beam<M: StepModel>(model: &M, params: &DecodeParams) -> Result<ScoredSentence> {
    if params.beam_width == 0 {
        return Err(Error::InvalidConfig("beam width must be at least 1".into()));
    }
    let vocab = model.vocab_size();
    let mut live = vec![Hypothesis {
        ids: vec![START],
        log_prob: 0.0,
        step_log_probs: Vec::new(),
        complete: false,
        forced_end: false,
        state: Rc::new(model.initial_state()),
    }];
    let mut finished: Vec<ScoredSentence> = Vec::new();

    while !live.is_empty() {
        // (parent index, token, cumulative log-prob, forced)
        let mut expansions: Vec<(usize, usize, f64, bool)> = Vec::new();
        let mut successors: Vec<(Vec<f64>, Rc<M::State>)> = Vec::with_capacity(live.len());
        for (i, hyp) in live.iter().enumerate() {
            let (log_probs, next) = model.step(&hyp.state, *hyp.ids.last().expect("non-empty"))?;
            check_log_probs(&log_probs, vocab)?;
            if hyp.body_len() >= params.max_len {
                expansions.push((i, END, hyp.log_prob + log_probs[END], true));
            } else {
                for (tok, &lp) in log_probs.iter().enumerate() {
                    if tok != PAD {
                        expansions.push((i, tok, hyp.log_prob + lp, false));
                    }
                }
            }
            successors.push((log_probs, Rc::new(next)));
        }

        let key = |&(parent, tok, _, _): &(usize, usize, f64, bool)| {
            let mut ids = live[parent].ids.clone();
            ids.push(tok);
            ids
        };
        expansions.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| key(a).cmp(&key(b))));
        expansions.truncate(params.beam_width);

        let mut next_live = Vec::with_capacity(expansions.len());
        for (parent, tok, log_prob, forced) in expansions {
            let p = &live[parent];
            let mut ids = p.ids.clone();
            ids.push(tok);
            let mut step_log_probs = p.step_log_probs.clone();
            step_log_probs.push(successors[parent].0[tok]);
            let hyp = Hypothesis {
                ids,
                log_prob,
                step_log_probs,
                complete: tok == END,
                forced_end: forced,
                state: Rc::clone(&successors[parent].1),
            };
            if hyp.complete {
                finished.push(hyp.finish(model.direction(), params.scoring_mode)?);
            } else {
                next_live.push(hyp);
            }
        }
        live = next_live;
    }

    Ok(best_of(finished).expect("every search path ends with the end marker"))
}

/// Number of distinct sentences with body length `≤ max_len` over
/// `vocab_size` tokens (pad and end excluded from bodies).
pub fn search_space_size(vocab_size: usize, max_len: usize) -> u128 {
    let branching = vocab_size.saturating_sub(2) as u128;
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=max_len {
        total = total.saturating_add(level);
        level = level.saturating_mul(branching);
    }
    total
}

/// Scores every sentence the length cap admits and returns the best one under
/// `mode`, with the same tie-breaking as beam search.
pub fn decode_exhaustive<M: StepModel>(model: &M, max_len: usize, mode: ScoringMode) -> Result<ScoredSentence> {
    let sequences = search_space_size(model.vocab_size(), max_len);
    if sequences > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            sequences,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut best: Option<ScoredSentence> = None;
    let mut ids = vec![START];
    let mut steps = Vec::new();
    enumerate(model, &model.initial_state(), max_len, mode, &mut ids, &mut steps, &mut best)?;
    Ok(best.expect("at least the empty body is enumerated"))
}

fn enumerate<M: StepModel>(
    model: &M,
    state: &M::State,
    max_len: usize,
    mode: ScoringMode,
    ids: &mut Vec<usize>,
    steps: &mut Vec<f64>,
    best: &mut Option<ScoredSentence>,
) -> Result<()> {
    let (log_probs, next) = model.step(state, *ids.last().expect("non-empty"))?;
    check_log_probs(&log_probs, model.vocab_size())?;
    let forced = ids.len() > max_len;

    ids.push(END);
    steps.push(log_probs[END]);
    let candidate = ScoredSentence::from_steps(TokenSequence::new(ids.clone())?, steps, model.direction(), mode, forced);
    let better = match best {
        None => true,
        Some(b) => rank(candidate.score, candidate.ids.ids(), b.score, b.ids.ids()) == Ordering::Less,
    };
    if better {
        *best = Some(candidate);
    }
    ids.pop();
    steps.pop();

    if forced {
        return Ok(());
    }
    for (tok, &lp) in log_probs.iter().enumerate() {
        if tok == PAD || tok == END {
            continue;
        }
        ids.push(tok);
        steps.push(lp);
        enumerate(model, &next, max_len, mode, ids, steps, best)?;
        ids.pop();
        steps.pop();
    }
    Ok(())
}

/// Beam-searches both decoders, restores the backward result to reading
/// order and keeps the higher-scoring sentence.
pub fn decode_bidirectional<F: StepModel, B: StepModel>(forward: &F, backward: &B, params: &DecodeParams) -> Result<ScoredSentence> {
    let mut fwd = decode_beam(forward, params)?;
    fwd.direction = Direction::Forward;
    let mut bwd = decode_beam(backward, params)?;
    bwd.ids = bwd.ids.reversed_body();
    bwd.direction = Direction::Backward;
    Ok(select_bidirectional(fwd, bwd))
}

/// Argmax decoding of one decoder, capped at the model's `max_len`.
pub fn greedy_decode(m: &CaptionModel, feature: &[f64], direction: Direction) -> Result<ScoredSentence> {
    let dec = m.decoder(feature, direction)?;
    let sentence = decode_greedy(&dec, m.config.max_len, ScoringMode::MeanLog)?;
    Ok(natural_order(sentence))
}

pub fn beam_search(m: &CaptionModel, feature: &[f64], direction: Direction, params: &DecodeParams) -> Result<ScoredSentence> {
    let dec = m.decoder(feature, direction)?;
    Ok(natural_order(decode_beam(&dec, params)?))
}

pub fn exhaustive_decode(m: &CaptionModel, feature: &[f64], direction: Direction, max_len: usize, mode: ScoringMode) -> Result<ScoredSentence> {
    let dec = m.decoder(feature, direction)?;
    Ok(natural_order(decode_exhaustive(&dec, max_len, mode)?))
}

pub fn bidirectional_decode(m: &CaptionModel, feature: &[f64], params: &DecodeParams) -> Result<ScoredSentence> {
    let fwd = m.decoder(feature, Direction::Forward)?;
    let bwd = m.decoder(feature, Direction::Backward)?;
    decode_bidirectional(&fwd, &bwd, params)
}

fn natural_order(mut s: ScoredSentence) -> ScoredSentence {
    if s.direction == Direction::Backward {
        s.ids = s.ids.reversed_body();
    }
    s
}
