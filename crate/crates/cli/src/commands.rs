use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use capgen_core::data_io::{
    generate_fixture, load_captions, load_checkpoint, read_features, save_checkpoint, split_dataset, CaptionCorpus, Checkpoint, ImageFeature,
    DEFAULT_FIXTURE_WORDS,
};
use capgen_core::text::{detokenize, tokenize};
use capgen_core::trainer::{train_with, write_curves};
use capgen_core::{
    beam_search, bidirectional_decode, evaluate_corpus, gradient_check, greedy_decode, select_bidirectional, CaptionModel, DecodeParams, Direction, EvalPair,
    GradCheckConfig, ModelConfig, Optimizer, ScoredSentence, ScoringMode, TrainConfig, TrainingSet, Vocabulary,
};

use crate::{CaptionArgs, DirectionArg, EvaluateArgs, FixtureArgs, GradcheckArgs, OptimizerArg, ScoringArg, SearchArgs, SplitPart, TrainArgs};

const SPLIT_RATIOS: (u32, u32, u32) = (6, 1, 1);
const GRADCHECK_TOLERANCE: f64 = 1e-4;

pub fn fixture(a: FixtureArgs) -> Result<ExitCode> {
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let fx = generate_fixture(a.images as usize, DEFAULT_FIXTURE_WORDS, a.seed, &a.out)?;
    println!("{}", fx.features_path.display());
    println!("{}", fx.captions_path.display());
    log::info!("{} images, {} captions", fx.features.len(), fx.captions.len());
    Ok(ExitCode::SUCCESS)
}

fn load_inputs(features: &Path, captions: &Path) -> Result<(Vec<ImageFeature>, CaptionCorpus)> {
    let feats = read_features(features).with_context(|| format!("reading features {}", features.display()))?;
    let corpus = load_captions(captions).with_context(|| format!("reading captions {}", captions.display()))?;
    if corpus.is_empty() {
        bail!("{} contains no captions", captions.display());
    }
    Ok((feats, corpus))
}

fn select_ids(corpus: &CaptionCorpus, part: SplitPart, seed: u64) -> Result<Vec<String>> {
    let ids: Vec<&str> = corpus.ids().collect();
    if part == SplitPart::All {
        return Ok(ids.into_iter().map(String::from).collect());
    }
    let split = split_dataset(&ids, SPLIT_RATIOS, seed)?;
    let mut chosen = split.part(part.name()).expect("known split name").to_vec();
    chosen.sort();
    Ok(chosen)
}

pub fn train(a: TrainArgs) -> Result<ExitCode> {
    let (feats, corpus) = load_inputs(&a.features, &a.captions)?;
    let ids = select_ids(&corpus, a.split, a.split_seed)?;
    let texts: Vec<&String> = ids.iter().flat_map(|id| corpus.get(id).unwrap_or_default()).collect();
    let vocab = Vocabulary::build(&texts, a.min_count as usize)?;
    let set = TrainingSet::from_corpus(&feats, &corpus, &ids, &vocab)?;

    let config = ModelConfig {
        embed_dim: a.embed as usize,
        hidden_dim: a.hidden as usize,
        max_len: a.max_len as usize,
        seed: a.seed,
        ..ModelConfig::new(vocab.len())
    };
    let tc = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch_size as usize,
        optimizer: match a.optimizer {
            OptimizerArg::Sgd => Optimizer::Sgd,
            OptimizerArg::Adam => Optimizer::adam(),
        },
        grad_clip_norm: a.clip,
        seed: a.seed,
    };
    log::info!(
        "training on {} images / {} captions, vocabulary {}, {} parameters",
        set.num_images(),
        set.len(),
        vocab.len(),
        CaptionModel::zeros(config.clone())?.num_parameters()
    );

    let started = Instant::now();
    let model = CaptionModel::init(config)?;
    let (model, stats) = train_with(model, &set, &tc, |s| {
        log::debug!("epoch {} loss {:.6} accuracy {:.4}", s.epoch, s.loss, s.accuracy);
    })?;
    log::info!("trained in {:.1?}", started.elapsed());

    let mut metadata: BTreeMap<String, String> = tc.metadata();
    metadata.insert("data.split".into(), a.split.name().into());
    metadata.insert("data.split_seed".into(), a.split_seed.to_string());
    metadata.insert("data.min_count".into(), a.min_count.to_string());
    let ckpt = Checkpoint {
        model,
        vocabulary: Some(vocab),
        metadata,
    };
    save_checkpoint(&a.out, &ckpt).with_context(|| format!("writing checkpoint {}", a.out.display()))?;
    let curves = a.out.with_extension("csv");
    write_curves(&curves, &stats).with_context(|| format!("writing curves {}", curves.display()))?;

    println!("checkpoint={}", a.out.display());
    println!("curves={}", curves.display());
    if let Some(last) = stats.last() {
        println!("epochs={};loss={:.6};accuracy={:.4}", last.epoch, last.loss, last.accuracy);
    }
    Ok(ExitCode::SUCCESS)
}

fn load_model(path: &Path) -> Result<(CaptionModel, Vocabulary, BTreeMap<String, String>)> {
    let ck = load_checkpoint(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    let vocab = ck.vocabulary.with_context(|| format!("{} has no stored vocabulary", path.display()))?;
    Ok((ck.model, vocab, ck.metadata))
}

fn mode(s: ScoringArg) -> ScoringMode {
    match s {
        ScoringArg::MeanLog => ScoringMode::MeanLog,
        ScoringArg::ArithMean => ScoringMode::ArithMean,
    }
}

fn describe(s: &SearchArgs) -> String {
    let search = if s.greedy { "greedy".to_string() } else { format!("beam-{}", s.beam) };
    let dir = match s.direction {
        DirectionArg::Forward => "forward",
        DirectionArg::Backward => "backward",
        DirectionArg::Both => "both",
    };
    format!("{search} {dir}")
}

fn decode(model: &CaptionModel, feature: &[f64], s: &SearchArgs) -> capgen_core::Result<ScoredSentence> {
    let scoring = mode(s.scoring);
    let params = DecodeParams {
        beam_width: s.beam as usize,
        max_len: model.config.max_len,
        scoring_mode: scoring,
    };
    let one = |dir: Direction| -> capgen_core::Result<ScoredSentence> {
        if s.greedy {
            let g = greedy_decode(model, feature, dir)?;
            model
                .score_sentence(feature, &g.ids, dir, scoring)
                .map(|r| ScoredSentence { forced_end: g.forced_end, ..r })
        } else {
            beam_search(model, feature, dir, &params)
        }
    };
    match s.direction {
        DirectionArg::Forward => one(Direction::Forward),
        DirectionArg::Backward => one(Direction::Backward),
        DirectionArg::Both if s.greedy => Ok(select_bidirectional(one(Direction::Forward)?, one(Direction::Backward)?)),
        DirectionArg::Both => bidirectional_decode(model, feature, &params),
    }
}

pub fn caption(a: CaptionArgs) -> Result<ExitCode> {
    let (model, vocab, _) = load_model(&a.checkpoint)?;
    let feats = read_features(&a.features).with_context(|| format!("reading features {}", a.features.display()))?;
    let feat = feats
        .iter()
        .find(|f| f.id() == a.id)
        .with_context(|| format!("image {:?} is not in {}", a.id, a.features.display()))?;
    let s = decode(&model, feat.values(), &a.search)?;
    let words: Vec<&str> = s.ids.body().iter().map(|&t| vocab.word(t).unwrap_or("<unk>")).collect();
    println!("{}", detokenize(&words));
    eprintln!(
        "direction={} log_prob={:.6} score={:.6}{}",
        s.direction.as_str(),
        s.log_prob,
        s.score,
        if s.forced_end { " (length cap reached)" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}

pub fn evaluate(a: EvaluateArgs) -> Result<ExitCode> {
    let (model, vocab, metadata) = load_model(&a.checkpoint)?;
    let (feats, corpus) = load_inputs(&a.features, &a.captions)?;
    let split_seed = match a.split_seed {
        Some(s) => s,
        None => metadata
            .get("data.split_seed")
            .map(|s| s.parse())
            .transpose()
            .context("checkpoint has a malformed data.split_seed")?
            .unwrap_or(0),
    };
    let ids = select_ids(&corpus, a.split, split_seed)?;
    let by_id: BTreeMap<&str, &ImageFeature> = feats.iter().map(|f| (f.id(), f)).collect();
    let jobs: Vec<(&str, &ImageFeature)> = ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .map(|f| (id.as_str(), *f))
                .with_context(|| format!("image {id:?} has captions but no features"))
        })
        .collect::<Result<_>>()?;

    let decoded: Vec<capgen_core::Result<ScoredSentence>> = jobs.par_iter().map(|(_, f)| decode(&model, f.values(), &a.search)).collect();
    let mut pairs = Vec::with_capacity(jobs.len());
    for ((id, _), s) in jobs.iter().zip(decoded) {
        let s = s?;
        let candidate: Vec<String> = s.ids.body().iter().map(|&t| vocab.word(t).unwrap_or("<unk>").to_owned()).collect();
        let references: Vec<Vec<String>> = corpus.get(id).unwrap_or_default().iter().map(|c| tokenize(c)).collect();
        log::info!("{id}: {}", candidate.join(" "));
        pairs.push(EvalPair::new(candidate, references)?);
    }
    let report = evaluate_corpus(&pairs)?;
    print!("{}", report.render_table(&describe(&a.search)));
    println!("{}", report.machine_line());
    Ok(ExitCode::SUCCESS)
}

pub fn gradcheck(a: GradcheckArgs) -> Result<ExitCode> {
    let mut worst = 0.0f64;
    for seed in a.seed..a.seed + a.runs as u64 {
        let r = gradient_check(&GradCheckConfig::new(seed))?;
        log::info!(
            "seed {seed}: {:.3e} at {}[{}] (analytic {:e}, numeric {:e})",
            r.max_rel_error,
            r.worst.0,
            r.worst.1,
            r.analytic,
            r.numeric
        );
        worst = worst.max(r.max_rel_error);
    }
    println!("max_rel_error={worst:.3e}");
    if worst < GRADCHECK_TOLERANCE {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("gradient check failed: {worst:.3e} >= {GRADCHECK_TOLERANCE:e}");
        Ok(ExitCode::from(2))
    }
}
