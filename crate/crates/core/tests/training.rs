//! Fixture generation, training, decoding and checkpointing together.

use capgen_core::data_io::*;
use capgen_core::text::normalize_caption;
use capgen_core::*;

struct Prepared {
    _dir: tempfile::TempDir,
    fixture: Fixture,
    corpus: CaptionCorpus,
    vocab: Vocabulary,
    set: TrainingSet,
}

fn prepare(n: usize, seed: u64) -> Prepared {
    let dir = tempfile::tempdir().unwrap();
    let fixture = generate_fixture(n, DEFAULT_FIXTURE_WORDS, seed, dir.path()).unwrap();
    let corpus = load_captions(&fixture.captions_path).unwrap();
    let all: Vec<&String> = corpus.by_image.values().flatten().collect();
    let vocab = Vocabulary::build(&all, 1).unwrap();
    let ids: Vec<&str> = corpus.ids().collect();
    let features = read_features(&fixture.features_path).unwrap();
    let set = TrainingSet::from_corpus(&features, &corpus, &ids, &vocab).unwrap();
    Prepared {
        _dir: dir,
        fixture,
        corpus,
        vocab,
        set,
    }
}

fn config(vocab: &Vocabulary) -> ModelConfig {
    ModelConfig {
        embed_dim: 16,
        hidden_dim: 32,
        max_len: 12,
        seed: 7,
        ..ModelConfig::new(vocab.len())
    }
}

#[test]
fn memorizes_a_small_fixture() {
    let p = prepare(6, 5);
    let cfg = TrainConfig {
        epochs: 150,
        learning_rate: 1e-2,
        seed: 1,
        ..TrainConfig::default()
    };
    let (model, stats) = train(CaptionModel::init(config(&p.vocab)).unwrap(), &p.set, &cfg).unwrap();

    for w in stats.windows(21).skip(10) {
        assert!(
            w[20].loss <= w[0].loss,
            "loss rose from {} at epoch {} to {}",
            w[0].loss,
            w[0].epoch,
            w[20].loss
        );
    }
    for s in &stats {
        if s.loss < 0.05 {
            assert_eq!(s.accuracy, 1.0, "epoch {}", s.epoch);
        }
    }
    let last = stats.last().unwrap();
    assert!(last.loss < 0.1, "{last:?}");

    let reeval = trainer::evaluate_set(&model, &p.set).unwrap();
    assert!(reeval.loss < last.loss);

    for f in &p.fixture.features {
        let want = normalize_caption(&p.corpus.get(f.id()).unwrap()[0]);
        for dir in [Direction::Forward, Direction::Backward] {
            let got = greedy_decode(&model, f.values(), dir).unwrap();
            assert_eq!(p.vocab.decode(&got.ids).unwrap(), want, "{} {:?}", f.id(), dir);
        }
        let both = bidirectional_decode(
            &model,
            f.values(),
            &DecodeParams {
                max_len: 12,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.vocab.decode(&both.ids).unwrap(), want);
    }
}

#[test]
fn trained_checkpoint_round_trips_and_keeps_its_vocabulary() {
    let p = prepare(3, 11);
    let tc = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let (model, _) = train(CaptionModel::init(config(&p.vocab)).unwrap(), &p.set, &tc).unwrap();
    let mut ck = Checkpoint::new(model);
    ck.vocabulary = Some(p.vocab.clone());
    ck.metadata = tc.metadata();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bnck");
    save_checkpoint(&path, &ck).unwrap();
    let back = load_checkpoint_expecting(&path, &ck.model.config).unwrap();
    assert_eq!(back, ck);
    assert_eq!(std::fs::read(&path).unwrap(), encode_checkpoint(&back).unwrap());
}

#[test]
fn training_is_reproducible() {
    let p = prepare(4, 2);
    let tc = TrainConfig {
        epochs: 4,
        batch_size: 3,
        seed: 9,
        ..TrainConfig::default()
    };
    let run = || {
        let (m, stats) = train(CaptionModel::init(config(&p.vocab)).unwrap(), &p.set, &tc).unwrap();
        (encode_checkpoint(&Checkpoint::new(m)).unwrap(), stats)
    };
    assert_eq!(run(), run());
    let other = TrainConfig { seed: 10, ..tc.clone() };
    let (m, _) = train(CaptionModel::init(config(&p.vocab)).unwrap(), &p.set, &other).unwrap();
    assert_ne!(encode_checkpoint(&Checkpoint::new(m)).unwrap(), run().0);
}

#[test]
fn split_then_pair_uses_only_the_requested_images() {
    let p = prepare(8, 3);
    let ids: Vec<&str> = p.corpus.ids().collect();
    let split = split_dataset(&ids, (6, 1, 1), 0).unwrap();
    let feats = read_features(&p.fixture.features_path).unwrap();
    let train_set = TrainingSet::from_corpus(&feats, &p.corpus, &split.train, &p.vocab).unwrap();
    assert_eq!(train_set.num_images(), 6);
    assert_eq!(train_set.len(), 30);
    let missing = TrainingSet::from_corpus(&feats, &p.corpus, &["nope"], &p.vocab);
    assert!(matches!(missing, Err(Error::UnknownImage(_))));
}
