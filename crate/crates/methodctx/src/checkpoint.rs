//! Binary checkpoints for the embedding, the encoder-decoder and the
//! consistency classifier. The byte layout is described in
//! `docs/formats.md`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use methodctx_core::context::{ContextKind, Mode};
use methodctx_core::embedding::{EmbeddingMatrix, TokenId, Vocabulary, SPECIAL_TOKENS};
use methodctx_core::linalg::Matrix;
use methodctx_core::model::{BigramStats, Model, ModelConfig, ParamGroup};
use methodctx_core::tasks::CnnParams;

use crate::error::CliError;

pub const MAGIC: [u8; 8] = *b"MCTXCKPT";
pub const FORMAT_VERSION: u32 = 1;

pub const EMBEDDING_FILE: &str = "embedding.bin";
pub const MODEL_FILE: &str = "model.bin";
pub const CLASSIFIER_FILE: &str = "classifier.bin";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Embedding = 1,
    Model = 2,
    Classifier = 3,
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a methodctx checkpoint")]
    BadMagic,
    #[error("checkpoint version {0} is not supported")]
    UnsupportedVersion(u32),
    #[error("expected a {expected:?} checkpoint, found kind {found}")]
    WrongKind { expected: Kind, found: u32 },
    #[error("checkpoint ends early")]
    Truncated,
    #[error("checkpoint has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("vocabulary hash {found:#018x} does not match {expected:#018x}")]
    VocabularyMismatch { expected: u64, found: u64 },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

struct Writer(Vec<u8>);

impl Writer {
    fn new(kind: Kind, vocab_hash: u64) -> Self {
        let mut w = Writer(MAGIC.to_vec());
        w.u32(FORMAT_VERSION);
        w.u32(kind as u32);
        w.u64(vocab_hash);
        w
    }

    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn len(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64s(&mut self, v: &[f64]) {
        self.len(v.len());
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks the header and returns the reader with the recorded
    /// vocabulary hash.
    fn open(bytes: &'a [u8], kind: Kind) -> Result<(Self, u64), CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8).map_err(|_| CheckpointError::BadMagic)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let found = r.u32()?;
        if found != kind as u32 {
            return Err(CheckpointError::WrongKind {
                expected: kind,
                found,
            });
        }
        let hash = r.u64()?;
        Ok((r, hash))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or(CheckpointError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn len(&mut self) -> Result<usize, CheckpointError> {
        let v = self.u64()?;
        let n =
            usize::try_from(v).map_err(|_| CheckpointError::Malformed(format!("length {v}")))?;
        // every counted item occupies at least one byte
        if n > self.bytes.len() - self.pos {
            return Err(CheckpointError::Truncated);
        }
        Ok(n)
    }

    fn f64s(&mut self) -> Result<Vec<f64>, CheckpointError> {
        let n = self.len()?;
        let raw = self.take(n.checked_mul(8).ok_or(CheckpointError::Truncated)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn str(&mut self) -> Result<String, CheckpointError> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| CheckpointError::Malformed("token is not UTF-8".into()))
    }

    fn flag(&mut self) -> Result<bool, CheckpointError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(CheckpointError::Malformed(format!("flag byte {v}"))),
        }
    }

    fn finish(self) -> Result<(), CheckpointError> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            n => Err(CheckpointError::TrailingBytes(n)),
        }
    }
}

fn context_code(k: ContextKind) -> u8 {
    ContextKind::ALL
        .iter()
        .position(|c| *c == k)
        .expect("listed") as u8
}

fn mode_code(m: Mode) -> u8 {
    match m {
        Mode::Checking => 0,
        Mode::Suggestion => 1,
    }
}

pub fn encode_embedding(vocab: &Vocabulary, embedding: &EmbeddingMatrix) -> Vec<u8> {
    let mut w = Writer::new(Kind::Embedding, vocab.fingerprint());
    w.len(vocab.len());
    w.len(embedding.dim());
    for (t, c) in vocab.entries() {
        w.str(t);
        w.u64(c);
    }
    let m = embedding.matrix();
    for v in &m.data {
        w.0.extend_from_slice(&v.to_le_bytes());
    }
    w.0
}

pub fn decode_embedding(bytes: &[u8]) -> Result<(Vocabulary, EmbeddingMatrix), CheckpointError> {
    let (mut r, hash) = Reader::open(bytes, Kind::Embedding)?;
    let n = r.len()?;
    let dim = r.len()?;
    if n < SPECIAL_TOKENS.len() {
        return Err(CheckpointError::Malformed(format!(
            "vocabulary of {n} entries"
        )));
    }
    let mut entries = Vec::with_capacity(n - SPECIAL_TOKENS.len());
    for _ in SPECIAL_TOKENS.len()..n {
        let t = r.str()?;
        entries.push((t, r.u64()?));
    }
    let vocab = Vocabulary::from_entries(entries);
    if vocab.len() != n {
        return Err(CheckpointError::Malformed(
            "repeated vocabulary entry".into(),
        ));
    }
    if vocab.fingerprint() != hash {
        return Err(CheckpointError::VocabularyMismatch {
            expected: hash,
            found: vocab.fingerprint(),
        });
    }
    let cells = n
        .checked_mul(dim)
        .and_then(|c| c.checked_mul(8))
        .ok_or(CheckpointError::Truncated)?;
    let raw = r.take(cells)?;
    let data = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    r.finish()?;
    let embedding = EmbeddingMatrix::new(Matrix::from_vec(n, dim, data))
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    Ok((vocab, embedding))
}

/// `mode` is the context mode the model was trained with.
pub fn encode_model(model: &Model, mode: Mode) -> Vec<u8> {
    let c = &model.config;
    let mut w = Writer::new(Kind::Model, model.vocab.fingerprint());
    w.u8(mode_code(mode));
    w.len(c.hidden);
    w.len(c.attention);
    w.len(c.l_max);
    w.len(c.max_name_len);
    w.u8(c.contexts.len() as u8);
    for k in &c.contexts {
        w.u8(context_code(*k));
    }
    w.u8(c.copy as u8);
    w.u8(c.noncopy as u8);
    w.u8(c.learn_weights as u8);
    w.len(model.embedding.dim());
    let tensors = model.params.tensors();
    w.u32(tensors.len() as u32);
    for (g, t) in tensors {
        w.u8(ParamGroup::ALL
            .iter()
            .position(|x| *x == g)
            .expect("listed") as u8);
        w.f64s(t);
    }
    let uni: Vec<(TokenId, u64)> = model.stats.unigrams().collect();
    w.len(uni.len());
    for (t, c) in uni {
        w.u32(t.0);
        w.u64(c);
    }
    let bi: Vec<(TokenId, TokenId, u64)> = model.stats.bigrams().collect();
    w.len(bi.len());
    for (a, b, c) in bi {
        w.u32(a.0);
        w.u32(b.0);
        w.u64(c);
    }
    w.0
}

/// Rebuilds a model over the vocabulary and embedding it was trained
/// with. Refuses a checkpoint recorded against another vocabulary.
pub fn decode_model(
    bytes: &[u8],
    vocab: Vocabulary,
    embedding: EmbeddingMatrix,
) -> Result<(Model, Mode), CheckpointError> {
    let (mut r, hash) = Reader::open(bytes, Kind::Model)?;
    if hash != vocab.fingerprint() {
        return Err(CheckpointError::VocabularyMismatch {
            expected: vocab.fingerprint(),
            found: hash,
        });
    }
    let mode = match r.u8()? {
        0 => Mode::Checking,
        1 => Mode::Suggestion,
        v => return Err(CheckpointError::Malformed(format!("mode byte {v}"))),
    };
    let hidden = r.len()?;
    let attention = r.len()?;
    let l_max = r.len()?;
    let max_name_len = r.len()?;
    let n_ctx = r.u8()? as usize;
    let mut contexts = Vec::with_capacity(n_ctx);
    for _ in 0..n_ctx {
        let code = r.u8()? as usize;
        contexts.push(
            *ContextKind::ALL
                .get(code)
                .ok_or_else(|| CheckpointError::Malformed(format!("context {code}")))?,
        );
    }
    let config = ModelConfig {
        hidden,
        attention,
        contexts,
        copy: r.flag()?,
        noncopy: r.flag()?,
        learn_weights: r.flag()?,
        l_max,
        max_name_len,
    };
    let dim = r.len()?;
    if dim != embedding.dim() {
        return Err(CheckpointError::Malformed(format!(
            "model expects width {dim}, embedding has {}",
            embedding.dim()
        )));
    }
    let n_tensors = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let g = r.u8()? as usize;
        let group = *ParamGroup::ALL
            .get(g)
            .ok_or_else(|| CheckpointError::Malformed(format!("group {g}")))?;
        tensors.push((group, r.f64s()?));
    }
    let mut unigram = BTreeMap::new();
    for _ in 0..r.len()? {
        let t = TokenId(r.u32()?);
        unigram.insert(t, r.u64()?);
    }
    let mut bigram = BTreeMap::new();
    for _ in 0..r.len()? {
        let a = TokenId(r.u32()?);
        let b = TokenId(r.u32()?);
        bigram.insert((a, b), r.u64()?);
    }
    r.finish()?;
    let stats = BigramStats::from_counts(unigram, bigram);
    let mut model = Model::new(config, vocab, embedding, stats, 0)
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    let mut slots = model.params.tensors_mut();
    if slots.len() != tensors.len() {
        return Err(CheckpointError::Malformed(format!(
            "{} tensors, expected {}",
            tensors.len(),
            slots.len()
        )));
    }
    for ((g, dst), (src_g, src)) in slots.iter_mut().zip(&tensors) {
        if *g != *src_g || dst.len() != src.len() {
            return Err(CheckpointError::Malformed(format!(
                "tensor shape mismatch in {}",
                g.name()
            )));
        }
        dst.copy_from_slice(src);
    }
    drop(slots);
    if !model.params.is_finite() {
        return Err(CheckpointError::Malformed("non-finite parameter".into()));
    }
    Ok((model, mode))
}

pub fn encode_classifier(cnn: &CnnParams, vocab_hash: u64) -> Vec<u8> {
    let mut w = Writer::new(Kind::Classifier, vocab_hash);
    w.len(cnn.time);
    w.len(cnn.channel_dim);
    let tensors = cnn.tensors();
    w.u32(tensors.len() as u32);
    for t in tensors {
        w.f64s(t);
    }
    w.0
}

pub fn decode_classifier(bytes: &[u8], vocab_hash: u64) -> Result<CnnParams, CheckpointError> {
    let (mut r, hash) = Reader::open(bytes, Kind::Classifier)?;
    if hash != vocab_hash {
        return Err(CheckpointError::VocabularyMismatch {
            expected: vocab_hash,
            found: hash,
        });
    }
    let time = r.len()?;
    let channel_dim = r.len()?;
    let mut cnn = CnnParams::random(time, channel_dim, 0);
    let n = r.u32()? as usize;
    let mut slots = cnn.tensors_mut();
    if n != slots.len() {
        return Err(CheckpointError::Malformed(format!(
            "{n} tensors, expected {}",
            slots.len()
        )));
    }
    for dst in slots.iter_mut() {
        let src = r.f64s()?;
        if src.len() != dst.len() {
            return Err(CheckpointError::Malformed(
                "classifier tensor shape mismatch".into(),
            ));
        }
        dst.copy_from_slice(&src);
    }
    r.finish()?;
    if !cnn.is_finite() {
        return Err(CheckpointError::Malformed("non-finite parameter".into()));
    }
    Ok(cnn)
}

/// Everything `train` writes and `check`/`suggest` read.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoints {
    pub model: Model,
    pub mode: Mode,
    pub classifier: Option<CnnParams>,
}

impl Checkpoints {
    /// Writes the checkpoints into `dir`. `classifier.bin` is written only
    /// when there is a classifier.
    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let m = &self.model;
        let write = |name: &str, bytes: Vec<u8>| {
            let p = dir.join(name);
            fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))
        };
        write(EMBEDDING_FILE, encode_embedding(&m.vocab, &m.embedding))?;
        write(MODEL_FILE, encode_model(m, self.mode))?;
        let stale = dir.join(CLASSIFIER_FILE);
        match &self.classifier {
            Some(c) => write(CLASSIFIER_FILE, encode_classifier(c, m.vocab.fingerprint()))?,
            None if stale.exists() => {
                fs::remove_file(&stale).map_err(|e| CliError::io(&stale, e))?
            }
            None => {}
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read(&p).map_err(|e| CliError::io(&p, e))
        };
        let (vocab, embedding) = decode_embedding(&read(EMBEDDING_FILE)?)?;
        let hash = vocab.fingerprint();
        let (model, mode) = decode_model(&read(MODEL_FILE)?, vocab, embedding)?;
        let classifier = if dir.join(CLASSIFIER_FILE).exists() {
            Some(decode_classifier(&read(CLASSIFIER_FILE)?, hash)?)
        } else {
            None
        };
        Ok(Checkpoints {
            model,
            mode,
            classifier,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Model {
        let vocab = Vocabulary::from_entries([
            ("get".to_string(), 3),
            ("size".to_string(), 2),
            ("name".to_string(), 1),
        ]);
        let mut data = vec![0.0; vocab.len() * 3];
        for (i, v) in data.iter_mut().enumerate().skip(3) {
            *v = (i as f64 * 0.37).sin();
        }
        let embedding = EmbeddingMatrix::new(Matrix::from_vec(vocab.len(), 3, data)).unwrap();
        let ids = |s: &[&str]| s.iter().map(|t| vocab.id(t).unwrap()).collect::<Vec<_>>();
        let stats = BigramStats::build(&[ids(&["get", "size"]), ids(&["get", "name"])]);
        let cfg = ModelConfig {
            hidden: 4,
            attention: 3,
            l_max: 6,
            max_name_len: 3,
            ..ModelConfig::default()
        };
        let mut m = Model::new(cfg, vocab, embedding, stats, 5).unwrap();
        m.params.theta_non = -0.25;
        m.params.context_weights = vec![0.1, 0.2, 0.3, 0.4];
        m
    }

    #[test]
    fn model_round_trips_exactly() {
        let m = tiny();
        let emb = encode_embedding(&m.vocab, &m.embedding);
        let bytes = encode_model(&m, Mode::Suggestion);
        let (v, e) = decode_embedding(&emb).unwrap();
        let (back, mode) = decode_model(&bytes, v, e).unwrap();
        assert_eq!(back, m);
        assert_eq!(mode, Mode::Suggestion);
        assert_eq!(encode_model(&back, mode), bytes);
    }

    #[test]
    fn header_layout() {
        let m = tiny();
        let bytes = encode_model(&m, Mode::Checking);
        assert_eq!(&bytes[..8], b"MCTXCKPT");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(
            u32::from_le_bytes(bytes[12..16].try_into().unwrap()),
            Kind::Model as u32
        );
        assert_eq!(
            u64::from_le_bytes(bytes[16..24].try_into().unwrap()),
            m.vocab.fingerprint()
        );
    }

    #[test]
    fn other_vocabulary_is_refused() {
        let m = tiny();
        let bytes = encode_model(&m, Mode::Checking);
        let other = Vocabulary::from_entries([
            ("get".to_string(), 3),
            ("size".to_string(), 2),
            ("rename".to_string(), 1),
        ]);
        let err = decode_model(&bytes, other, m.embedding.clone()).unwrap_err();
        assert!(matches!(err, CheckpointError::VocabularyMismatch { .. }));
        let cnn = CnnParams::random(3, 3, 1);
        let cb = encode_classifier(&cnn, 7);
        assert!(matches!(
            decode_classifier(&cb, 8),
            Err(CheckpointError::VocabularyMismatch { .. })
        ));
        assert_eq!(decode_classifier(&cb, 7).unwrap(), cnn);
    }

    #[test]
    fn damaged_bytes_are_rejected() {
        let m = tiny();
        let bytes = encode_model(&m, Mode::Checking);
        let (v, e) = (m.vocab.clone(), m.embedding.clone());
        assert_eq!(
            decode_model(&bytes[..bytes.len() - 1], v.clone(), e.clone()).unwrap_err(),
            CheckpointError::Truncated
        );
        let mut longer = bytes.clone();
        longer.push(0);
        assert_eq!(
            decode_model(&longer, v.clone(), e.clone()).unwrap_err(),
            CheckpointError::TrailingBytes(1)
        );
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert_eq!(
            decode_model(&magic, v.clone(), e.clone()).unwrap_err(),
            CheckpointError::BadMagic
        );
        let mut version = bytes.clone();
        version[8] = 9;
        assert_eq!(
            decode_model(&version, v.clone(), e.clone()).unwrap_err(),
            CheckpointError::UnsupportedVersion(9)
        );
        let emb = encode_embedding(&v, &e);
        assert!(matches!(
            decode_model(&emb, v, e),
            Err(CheckpointError::WrongKind { .. })
        ));
    }

    #[test]
    fn every_prefix_fails_cleanly() {
        let m = tiny();
        let emb = encode_embedding(&m.vocab, &m.embedding);
        for n in 0..emb.len() {
            assert!(decode_embedding(&emb[..n]).is_err());
        }
        assert!(decode_embedding(&emb).is_ok());
    }

    #[test]
    fn directory_round_trip() {
        let m = tiny();
        let d = tempfile::tempdir().unwrap();
        let cnn = CnnParams::random(3, 3, 2);
        let ck = Checkpoints {
            model: m.clone(),
            mode: Mode::Checking,
            classifier: Some(cnn),
        };
        ck.save(d.path()).unwrap();
        assert_eq!(Checkpoints::load(d.path()).unwrap(), ck);
        let bare = Checkpoints {
            classifier: None,
            ..ck
        };
        bare.save(d.path()).unwrap();
        assert_eq!(Checkpoints::load(d.path()).unwrap(), bare);
    }
}
