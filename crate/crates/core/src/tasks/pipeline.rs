use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    build_bigram_stats, classifier_input, corrupt_name, represent_method, train_cnn, CnnParams,
    CnnTrainConfig, TaskError,
};
use crate::callgraph::CallGraph;
use crate::context::{build_bundle, ContextBundle, Mode};
use crate::corpus::Corpus;
use crate::embedding::{
    build_cooccurrence, train_embeddings, EmbeddingError, GloveConfig, TokenId, Vocabulary,
};
use crate::model::{train, Example, Model, ModelConfig, ModelError, TrainConfig};
use crate::subtoken::SubToken;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("corpus has no method with a non-empty name")]
    NoTrainingMethods,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Task(#[from] TaskError),
}

/// Every hyper-parameter of the training pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub mode: Mode,
    pub min_count: u64,
    pub window: usize,
    pub glove: GloveConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// `None` skips the consistency classifier.
    pub cnn: Option<CnnTrainConfig>,
    /// Corrupted names generated per training method.
    pub negatives: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            mode: Mode::Checking,
            min_count: 1,
            window: 5,
            glove: GloveConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            cnn: Some(CnnTrainConfig::default()),
            negatives: 4,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fitted {
    pub model: Model,
    pub cnn: Option<CnnParams>,
    pub glove_curve: Vec<f64>,
    pub model_curve: Vec<f64>,
    pub cnn_curve: Vec<f64>,
}

/// Bundles of every method in corpus order.
pub fn build_bundles(corpus: &Corpus, graph: &CallGraph, mode: Mode) -> Vec<ContextBundle> {
    (0..corpus.methods.len())
        .map(|m| build_bundle(corpus, graph, m, mode))
        .collect()
}

/// Vocabulary, embeddings, bigram statistics, the encoder-decoder and
/// optionally the classifier, trained on every method with a non-empty
/// name. Seeds for the stages derive from `cfg.seed`.
pub fn fit(corpus: &Corpus, cfg: &FitConfig) -> Result<Fitted, PipelineError> {
    let graph = CallGraph::build(corpus);
    let all = build_bundles(corpus, &graph, cfg.mode);
    let (bundles, names): (Vec<ContextBundle>, Vec<Vec<SubToken>>) = all
        .into_iter()
        .zip(&corpus.methods)
        .filter(|(_, m)| !m.name_subtokens.is_empty())
        .map(|(b, m)| (b, m.name_subtokens.clone()))
        .unzip();
    if bundles.is_empty() {
        return Err(PipelineError::NoTrainingMethods);
    }

    let vocab = Vocabulary::from_bundles(&bundles, &names, cfg.min_count);
    let mut sequences: Vec<Vec<TokenId>> = Vec::new();
    for b in &bundles {
        for kind in crate::context::ContextKind::ALL {
            sequences.push(
                b.get(kind)
                    .real()
                    .map(|t| vocab.id_or_unk(t.as_str()))
                    .collect(),
            );
        }
    }
    for n in &names {
        sequences.push(n.iter().map(|t| vocab.id_or_unk(t.as_str())).collect());
    }
    let table = build_cooccurrence(&sequences, cfg.window);
    let glove = GloveConfig {
        seed: cfg.seed,
        ..cfg.glove.clone()
    };
    let (embedding, glove_curve) = train_embeddings(&table, vocab.len(), &glove)?;

    let stats = build_bigram_stats(&names, &vocab);
    let mut model = Model::new(
        cfg.model.clone(),
        vocab,
        embedding,
        stats,
        cfg.seed.wrapping_add(1),
    )?;
    let examples: Vec<Example> = bundles
        .iter()
        .zip(&names)
        .map(|(b, n)| model.example(b, n))
        .collect();
    let tcfg = TrainConfig {
        seed: cfg.seed.wrapping_add(2),
        ..cfg.train.clone()
    };
    let model_curve = train(&mut model, &examples, &tcfg)?;

    let (cnn, cnn_curve) = match &cfg.cnn {
        Some(ccfg) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(3));
            let mut data = Vec::new();
            for (b, n) in bundles.iter().zip(&names) {
                let rep = represent_method(b, &model);
                data.push((classifier_input(&rep, n, &model), 1));
                for _ in 0..cfg.negatives {
                    if let Some(bad) = corrupt_name(n, &model.vocab, &mut rng) {
                        data.push((classifier_input(&rep, &bad, &model), 0));
                    }
                }
            }
            let mut cnn = CnnParams::random(
                model.config.max_name_len,
                model.embedding.dim(),
                cfg.seed.wrapping_add(4),
            );
            let ccfg = CnnTrainConfig {
                seed: cfg.seed.wrapping_add(5),
                ..ccfg.clone()
            };
            let curve = train_cnn(&mut cnn, &data, &ccfg)?;
            (Some(cnn), curve)
        }
        None => (None, Vec::new()),
    };
    Ok(Fitted {
        model,
        cnn,
        glove_curve,
        model_curve,
        cnn_curve,
    })
}
