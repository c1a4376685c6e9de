//! Emoji probability models: a single per-context distribution over the K
//! vocabulary emojis, behind the [`ProbabilityModel`] trait.
//!
//! Three backends are provided: a trainable bag-of-words softmax model
//! ([`BowModel`]), a context-free unigram baseline ([`UnigramModel`]), and an
//! adapter for externally computed distributions ([`ExternalModel`]) so a
//! heavier encoder can be plugged in without touching the rest of the
//! pipeline.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Combination, EmojiId, Sample};
use crate::dataset::atomic_write;
use crate::emoji::{segment, EmojiTable};
use crate::error::{Error, Result};

/// Default size of the hashed text feature space (2^15 buckets).
pub const DEFAULT_FEATURE_DIM: usize = 1 << 15;

const CHECKPOINT_VERSION: u32 = 1;

/// A probability vector over the K vocabulary emojis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDistribution(Vec<f64>);

impl ProbDistribution {
    /// Validates non-negativity and normalization (|Σp − 1| ≤ 1e-6).
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidInput(
                "probability entries must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(ProbDistribution(p))
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0);
        ProbDistribution(vec![1.0 / k as f64; k])
    }

    fn from_logits(logits: &[f64]) -> Self {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut exp: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
        let sum: f64 = exp.iter().sum();
        for x in &mut exp {
            *x /= sum;
        }
        ProbDistribution(exp)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, id: EmojiId) -> f64 {
        self.0[id.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// The normalized emoji-count distribution of a target combination, used as
/// the training target. Sparse: support is at most 3 ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    entries: Vec<(EmojiId, f64)>,
}

impl LabelDistribution {
    /// Weights sorted by id; they sum to 1 and are multiples of 1/|target|.
    pub fn entries(&self) -> &[(EmojiId, f64)] {
        &self.entries
    }

    /// Shannon entropy in nats; 0 exactly when the label is one-hot.
    pub fn entropy(&self) -> f64 {
        -self
            .entries
            .iter()
            .map(|&(_, q)| q * q.ln())
            .sum::<f64>()
    }
}

/// `q[e] = count(e in target) / |target|`.
pub fn soft_label(target: &Combination, k: usize) -> LabelDistribution {
    let mut counts: Vec<(EmojiId, u32)> = Vec::with_capacity(target.len());
    for &id in target.ids() {
        assert!(id.index() < k, "target id {id} out of range for K={k}");
        match counts.iter_mut().find(|(e, _)| *e == id) {
            Some((_, c)) => *c += 1,
            None => counts.push((id, 1)),
        }
    }
    counts.sort_by_key(|&(id, _)| id);
    let len = target.len() as f64;
    LabelDistribution {
        entries: counts
            .into_iter()
            .map(|(id, c)| (id, c as f64 / len))
            .collect(),
    }
}

/// Anything that can turn a context into a distribution over the vocabulary.
///
/// Implementations are immutable once built; `predict` is pure and safe for
/// concurrent callers.
pub trait ProbabilityModel: Send + Sync {
    fn k(&self) -> usize;

    fn predict(&self, context: &str) -> ProbDistribution;

    /// Index-aware variant used when iterating a dataset in order; backends
    /// keyed by sample position (see [`ExternalModel`]) override this.
    fn predict_sample(&self, _index: usize, context: &str) -> ProbDistribution {
        self.predict(context)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Training hyperparameters for [`train_bow`].
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub feature_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 64,
            learning_rate: 0.5,
            seed: 42,
            feature_dim: DEFAULT_FEATURE_DIM,
        }
    }
}

/// Bag-of-words linear softmax model.
///
/// Text features are lowercased whitespace words plus emoji tokens (each
/// emoji grapheme of the context counts as one word token, normalized),
/// hashed with FNV-1a 64 into a fixed feature space. Weights are stored
/// feature-major (`weights[feature * k + class]`), zero-initialized so the
/// untrained model predicts the uniform distribution.
#[derive(Debug, Clone)]
pub struct BowModel {
    k: usize,
    feature_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    seed: u64,
    vocab_checksum: String,
    table: Arc<EmojiTable>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointPayload {
    k: u64,
    feature_dim: u64,
    seed: u64,
    vocab_checksum: String,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl BowModel {
    pub fn new(
        k: usize,
        feature_dim: usize,
        table: Arc<EmojiTable>,
        vocab_checksum: String,
        seed: u64,
    ) -> Self {
        assert!(k > 0 && feature_dim > 0);
        BowModel {
            k,
            feature_dim,
            weights: vec![0.0; feature_dim * k],
            bias: vec![0.0; k],
            seed,
            vocab_checksum,
            table,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vocab_checksum(&self) -> &str {
        &self.vocab_checksum
    }

    /// Hashed feature indices of a context, with multiplicity. Unknown words
    /// need no special casing: hashing is total.
    pub fn features(&self, context: &str) -> Vec<usize> {
        let stream = segment(context, &self.table);
        let mut out = Vec::new();
        for token in stream.tokens() {
            match &token.kind {
                crate::emoji::TokenKind::Word => {
                    let word = stream.text()[token.span.clone()].to_lowercase();
                    out.push(self.bucket(b"w:", word.as_bytes()));
                }
                crate::emoji::TokenKind::EmojiRun(emojis) => {
                    for e in emojis {
                        if let Some(n) = e.normalized() {
                            out.push(self.bucket(b"e:", n.as_str().as_bytes()));
                        }
                    }
                }
                crate::emoji::TokenKind::Whitespace => {}
            }
        }
        out
    }

    fn bucket(&self, prefix: &[u8], token: &[u8]) -> usize {
        let mut bytes = Vec::with_capacity(prefix.len() + token.len());
        bytes.extend_from_slice(prefix);
        bytes.extend_from_slice(token);
        (fnv1a64(&bytes) % self.feature_dim as u64) as usize
    }

    fn logits(&self, features: &[usize]) -> Vec<f64> {
        let mut logits = self.bias.clone();
        for &f in features {
            let row = &self.weights[f * self.k..(f + 1) * self.k];
            for (z, w) in logits.iter_mut().zip(row) {
                *z += w;
            }
        }
        logits
    }

    pub fn weight(&self, feature: usize, class: usize) -> f64 {
        self.weights[feature * self.k + class]
    }

    pub fn set_weight(&mut self, feature: usize, class: usize, value: f64) {
        self.weights[feature * self.k + class] = value;
    }

    pub fn bias(&self, class: usize) -> f64 {
        self.bias[class]
    }

    pub fn set_bias(&mut self, class: usize, value: f64) {
        self.bias[class] = value;
    }

    /// Mean soft-label cross-entropy of the model on `samples`, in nats.
    pub fn mean_cross_entropy(&self, samples: &[Sample]) -> f64 {
        assert!(!samples.is_empty());
        let mut total = 0.0;
        for sample in samples {
            let p = self.predict(&sample.context);
            let label = soft_label(&sample.target, self.k);
            total += cross_entropy(&p, &label);
        }
        total / samples.len() as f64
    }

    /// Mean analytic gradient of the soft-label cross-entropy over `samples`.
    ///
    /// Returns the bias gradient and the gradient of every touched weight as
    /// sorted `((feature, class), value)` pairs; untouched weights have
    /// gradient zero.
    pub fn loss_gradient(&self, samples: &[Sample]) -> (Vec<f64>, Vec<((usize, usize), f64)>) {
        assert!(!samples.is_empty());
        let n = samples.len() as f64;
        let mut grad_bias = vec![0.0; self.k];
        let mut grad_w: HashMap<usize, Vec<f64>> = HashMap::new();
        for sample in samples {
            let features = self.features(&sample.context);
            let p = ProbDistribution::from_logits(&self.logits(&features));
            let label = soft_label(&sample.target, self.k);
            let mut delta = p.0;
            for &(id, q) in label.entries() {
                delta[id.index()] -= q;
            }
            for (g, d) in grad_bias.iter_mut().zip(&delta) {
                *g += d / n;
            }
            for &f in &features {
                let row = grad_w.entry(f).or_insert_with(|| vec![0.0; self.k]);
                for (g, d) in row.iter_mut().zip(&delta) {
                    *g += d / n;
                }
            }
        }
        let mut flat: Vec<((usize, usize), f64)> = grad_w
            .into_iter()
            .flat_map(|(f, row)| {
                row.into_iter()
                    .enumerate()
                    .map(move |(class, g)| ((f, class), g))
            })
            .collect();
        flat.sort_by_key(|&(key, _)| key);
        (grad_bias, flat)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| {
            let mut writer = BufWriter::new(w);
            bincode::serialize_into(&mut writer, &CHECKPOINT_VERSION)
                .and_then(|()| {
                    bincode::serialize_into(
                        &mut writer,
                        &CheckpointPayload {
                            k: self.k as u64,
                            feature_dim: self.feature_dim as u64,
                            seed: self.seed,
                            vocab_checksum: self.vocab_checksum.clone(),
                            weights: self.weights.clone(),
                            bias: self.bias.clone(),
                        },
                    )
                })
                .map_err(|e| Error::InvalidInput(format!("serializing checkpoint: {e}")))?;
            writer.flush().map_err(|e| Error::io(path, e))
        })
    }

    pub fn load(path: &Path, table: Arc<EmojiTable>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let version: u32 = bincode::deserialize_from(&mut reader)
            .map_err(|e| Error::parse(path, 0, format!("reading checkpoint version: {e}")))?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: version,
            });
        }
        let payload: CheckpointPayload = bincode::deserialize_from(&mut reader)
            .map_err(|e| Error::parse(path, 0, format!("reading checkpoint: {e}")))?;
        let (k, feature_dim) = (payload.k as usize, payload.feature_dim as usize);
        if payload.weights.len() != k * feature_dim || payload.bias.len() != k {
            return Err(Error::InvalidInput(format!(
                "checkpoint {} has inconsistent dimensions",
                path.display()
            )));
        }
        Ok(BowModel {
            k,
            feature_dim,
            weights: payload.weights,
            bias: payload.bias,
            seed: payload.seed,
            vocab_checksum: payload.vocab_checksum,
            table,
        })
    }
}

impl ProbabilityModel for BowModel {
    fn k(&self) -> usize {
        self.k
    }

    fn predict(&self, context: &str) -> ProbDistribution {
        ProbDistribution::from_logits(&self.logits(&self.features(context)))
    }
}

fn cross_entropy(p: &ProbDistribution, label: &LabelDistribution) -> f64 {
    -label
        .entries()
        .iter()
        .map(|&(id, q)| {
            // NaN-propagating floor: a diverged prediction must surface as a
            // non-finite loss, so no f64::max here.
            let pv = p.get(id);
            let pv = if pv < 1e-300 { 1e-300 } else { pv };
            q * pv.ln()
        })
        .sum::<f64>()
}

/// Training output: the fitted model and the mean loss per epoch.
pub struct Training {
    pub model: BowModel,
    pub epoch_loss: Vec<f64>,
}

/// Trains a [`BowModel`] by mini-batch gradient descent on the soft-label
/// cross-entropy. Bit-reproducible for a fixed seed; zero epochs returns the
/// zero-initialized model.
pub fn train_bow(
    samples: &[Sample],
    k: usize,
    table: Arc<EmojiTable>,
    vocab_checksum: String,
    config: &TrainConfig,
) -> Result<Training> {
    if samples.is_empty() {
        return Err(Error::NoSamples("cannot train on an empty dataset".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidInput("batch size must be >= 1".into()));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(Error::InvalidInput("learning rate must be positive".into()));
    }

    let mut model = BowModel::new(k, config.feature_dim, table, vocab_checksum, config.seed);
    let features: Vec<Vec<usize>> = samples.iter().map(|s| model.features(&s.context)).collect();
    let labels: Vec<LabelDistribution> = samples.iter().map(|s| soft_label(&s.target, k)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut grad_bias = vec![0.0; k];
            let mut grad_w: HashMap<usize, Vec<f64>> = HashMap::new();
            for &i in batch {
                let p = ProbDistribution::from_logits(&model.logits(&features[i]));
                loss_sum += cross_entropy(&p, &labels[i]);
                let mut delta = p.0;
                for &(id, q) in labels[i].entries() {
                    delta[id.index()] -= q;
                }
                for (g, d) in grad_bias.iter_mut().zip(&delta) {
                    *g += d;
                }
                for &f in &features[i] {
                    let row = grad_w.entry(f).or_insert_with(|| vec![0.0; k]);
                    for (g, d) in row.iter_mut().zip(&delta) {
                        *g += d;
                    }
                }
            }
            let step = config.learning_rate * scale;
            for (b, g) in model.bias.iter_mut().zip(&grad_bias) {
                *b -= step * g;
            }
            // Feature rows are disjoint, so the map's iteration order cannot
            // affect the result.
            for (f, row) in grad_w {
                let dst = &mut model.weights[f * k..(f + 1) * k];
                for (w, g) in dst.iter_mut().zip(&row) {
                    *w -= step * g;
                }
            }
        }
        let mean = loss_sum / samples.len() as f64;
        if !mean.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        epoch_loss.push(mean);
    }

    Ok(Training { model, epoch_loss })
}

/// Context-free baseline: the corpus frequency distribution of the training
/// targets' emojis.
#[derive(Debug, Clone)]
pub struct UnigramModel {
    p: ProbDistribution,
}

impl UnigramModel {
    pub fn from_samples(samples: &[Sample], k: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoSamples("cannot fit the unigram baseline".into()));
        }
        let mut counts = vec![0u64; k];
        for sample in samples {
            for &id in sample.target.ids() {
                counts[id.index()] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(UnigramModel {
            p: ProbDistribution(p),
        })
    }
}

impl ProbabilityModel for UnigramModel {
    fn k(&self) -> usize {
        self.p.k()
    }

    fn predict(&self, _context: &str) -> ProbDistribution {
        self.p.clone()
    }
}

/// Externally computed distributions, aligned to a dataset by sample index.
///
/// The file is CSV: row i holds K comma-separated floats for sample i. Rows
/// are renormalized to sum to 1; negative entries and zero-sum rows are
/// rejected. `predict` falls back to a context lookup (first occurrence wins
/// for duplicate contexts) and returns uniform for unseen contexts.
#[derive(Debug, Clone)]
pub struct ExternalModel {
    k: usize,
    rows: Vec<ProbDistribution>,
    by_context: HashMap<String, usize>,
}

impl ExternalModel {
    /// `contexts` are the dataset contexts in file order; row i of the CSV
    /// is the distribution for context i.
    pub fn load(path: &Path, contexts: &[String], k: usize) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path, contexts, k)
    }

    pub fn from_reader(
        reader: impl Read,
        path: &Path,
        contexts: &[String],
        k: usize,
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(contexts.len());
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(path, i + 1, format!("bad float {tok:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != k {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected {k} columns, got {}", values.len()),
                ));
            }
            if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::ExternalModel(format!(
                    "{}:{}: negative or non-finite entry",
                    path.display(),
                    i + 1
                )));
            }
            let sum: f64 = values.iter().sum();
            if sum <= 0.0 {
                return Err(Error::ExternalModel(format!(
                    "{}:{}: row sums to zero",
                    path.display(),
                    i + 1
                )));
            }
            rows.push(ProbDistribution(values.iter().map(|&v| v / sum).collect()));
        }
        if rows.len() != contexts.len() {
            return Err(Error::ExternalModel(format!(
                "{} rows for {} samples",
                rows.len(),
                contexts.len()
            )));
        }
        let mut by_context = HashMap::new();
        for (i, context) in contexts.iter().enumerate() {
            by_context.entry(context.clone()).or_insert(i);
        }
        Ok(ExternalModel { k, rows, by_context })
    }
}

impl ProbabilityModel for ExternalModel {
    fn k(&self) -> usize {
        self.k
    }

    fn predict(&self, context: &str) -> ProbDistribution {
        match self.by_context.get(context) {
            Some(&i) => self.rows[i].clone(),
            None => ProbDistribution::uniform(self.k),
        }
    }

    fn predict_sample(&self, index: usize, _context: &str) -> ProbDistribution {
        self.rows[index].clone()
    }
}
