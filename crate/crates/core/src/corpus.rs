//! From raw posts to a dataset: text cleaning, emoji vocabulary, (context,
//! target) sample extraction and candidate-combination mining.
//!
//! All constructions are deterministic: counting phases are order-insensitive
//! and every ranking uses a total order (count descending, then
//! codepoint-lexicographic), so the same corpus always yields byte-identical
//! artifacts.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::emoji::{segment, Emoji, EmojiTable};
use crate::error::{Error, Result};

/// Maximum emoji-combination length; runs longer than this never become
/// targets and the retrieval size penalty is anchored at it.
pub const MAX_COMBINATION_LEN: usize = 3;

/// Default vocabulary size.
pub const DEFAULT_VOCAB_SIZE: usize = 500;

/// Default candidate dictionary size.
pub const DEFAULT_DICT_SIZE: usize = 30_000;

/// Dense index of an emoji in an [`EmojiVocabulary`].
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct EmojiId(pub u32);

impl EmojiId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EmojiId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An ordered sequence of 1 to [`MAX_COMBINATION_LEN`] emoji ids — the
/// prediction target and the retrieval candidate unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Combination {
    ids: Vec<EmojiId>,
}

impl Combination {
    /// Panics if `ids` is empty or longer than [`MAX_COMBINATION_LEN`];
    /// parsing paths validate lengths before constructing.
    pub fn new(ids: Vec<EmojiId>) -> Self {
        assert!(
            (1..=MAX_COMBINATION_LEN).contains(&ids.len()),
            "combination length must be 1..={MAX_COMBINATION_LEN}, got {}",
            ids.len()
        );
        Combination { ids }
    }

    pub fn ids(&self) -> &[EmojiId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length is always >= 1
    }
}

impl FromIterator<u32> for Combination {
    fn from_iter<T: IntoIterator<Item = u32>>(iter: T) -> Self {
        Combination::new(iter.into_iter().map(EmojiId).collect())
    }
}

/// One vocabulary entry: a normalized emoji and its corpus count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub emoji: Emoji,
    pub count: u64,
}

/// The K most frequent normalized emojis of a corpus, id-indexed in count
/// order (ties broken codepoint-lexicographically).
#[derive(Debug, Clone)]
pub struct EmojiVocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, EmojiId>,
}

impl EmojiVocabulary {
    /// Builds from pre-ranked entries, validating the vocabulary invariants.
    pub fn from_entries(entries: Vec<VocabEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut index = HashMap::with_capacity(entries.len());
        let mut prev_count = u64::MAX;
        for (i, entry) in entries.iter().enumerate() {
            if !entry.emoji.is_normalized() {
                return Err(Error::InvalidInput(format!(
                    "vocabulary entry {} ({}) is not in normalized form",
                    i,
                    entry.emoji.to_hex()
                )));
            }
            if entry.count > prev_count {
                return Err(Error::InvalidInput(format!(
                    "vocabulary counts must be non-increasing (entry {i})"
                )));
            }
            prev_count = entry.count;
            if index
                .insert(entry.emoji.as_str().to_string(), EmojiId(i as u32))
                .is_some()
            {
                return Err(Error::InvalidInput(format!(
                    "duplicate vocabulary entry {}",
                    entry.emoji.to_hex()
                )));
            }
        }
        Ok(EmojiVocabulary { entries, index })
    }

    /// Vocabulary size K.
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    /// Id of a normalized emoji, if in the vocabulary.
    pub fn id_of(&self, emoji: &Emoji) -> Option<EmojiId> {
        self.index.get(emoji.as_str()).copied()
    }

    pub fn emoji(&self, id: EmojiId) -> &Emoji {
        &self.entries[id.index()].emoji
    }

    /// Renders a combination as the concatenation of its emojis.
    pub fn render(&self, combination: &Combination) -> String {
        combination
            .ids()
            .iter()
            .map(|&id| self.emoji(id).as_str())
            .collect()
    }

    /// SHA-256 over the canonical entry serialization; embedded in models and
    /// dictionaries to detect id misalignment across vocabularies.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for entry in &self.entries {
            hasher.update(entry.emoji.to_hex().as_bytes());
            hasher.update(b"\t");
            hasher.update(entry.count.to_string().as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One (context, target) pair. The context is the full cleaned-post prefix
/// strictly before the target run and may be empty or contain emojis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub context: String,
    pub target: Combination,
}

fn noise_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)[a-z][a-z0-9+.-]*://\S+|\bwww\.\S+|@\w+|#\w+")
            .expect("noise pattern compiles")
    })
}

/// Removes hyperlinks, @mentions and #hashtags, then collapses whitespace
/// runs to single spaces and trims the ends. Emojis pass through untouched.
pub fn preprocess(raw: &str) -> String {
    let stripped = noise_pattern().replace_all(raw, "");
    let mut out = String::with_capacity(stripped.len());
    for (i, word) in stripped.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Counts every normalized emoji occurrence across the corpus and keeps the
/// `k` most frequent, ties broken codepoint-lexicographically.
pub fn build_vocabulary<I, S>(posts: I, k: usize, table: &EmojiTable) -> Result<EmojiVocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if k == 0 {
        return Err(Error::InvalidInput("vocabulary size K must be >= 1".into()));
    }
    let mut counts: HashMap<Emoji, u64> = HashMap::new();
    for post in posts {
        for (run, _) in segment(post.as_ref(), table).emoji_runs() {
            for emoji in run {
                // Modifier-only graphemes normalize to nothing and are dropped.
                if let Some(normalized) = emoji.normalized() {
                    *counts.entry(normalized).or_insert(0) += 1;
                }
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let mut ranked: Vec<(Emoji, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    EmojiVocabulary::from_entries(
        ranked
            .into_iter()
            .map(|(emoji, count)| VocabEntry { emoji, count })
            .collect(),
    )
}

/// Extracts one sample per maximal emoji run of a cleaned post: the run is
/// the target and the exact text prefix before it is the context.
///
/// Runs longer than `max_len` graphemes, or containing an emoji whose
/// normalized form is outside the vocabulary, yield no sample — but their
/// text still appears inside later samples' contexts.
pub fn extract_samples(
    post: &str,
    vocab: &EmojiVocabulary,
    table: &EmojiTable,
    max_len: usize,
) -> Vec<Sample> {
    let mut samples = Vec::new();
    for (run, span) in segment(post, table).emoji_runs() {
        if run.is_empty() || run.len() > max_len {
            continue;
        }
        let ids: Option<Vec<EmojiId>> = run
            .iter()
            .map(|e| e.normalized().and_then(|n| vocab.id_of(&n)))
            .collect();
        if let Some(ids) = ids {
            samples.push(Sample {
                context: post[..span.start].to_string(),
                target: Combination::new(ids),
            });
        }
    }
    samples
}

/// A candidate combination with its training-set frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub combination: Combination,
    pub frequency: u64,
}

/// The mined top-N emoji combinations, sorted by frequency descending with
/// codepoint-lexicographic tie-breaks — the retrieval search space.
///
/// Every vocabulary emoji is guaranteed present as a length-1 candidate;
/// unmined singles are backfilled with frequency 0 so retrieval is total.
#[derive(Debug, Clone)]
pub struct CandidateDictionary {
    candidates: Vec<Candidate>,
}

impl CandidateDictionary {
    /// Builds from a pre-sorted candidate list, validating order and
    /// uniqueness.
    pub fn from_candidates(candidates: Vec<Candidate>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidInput("candidate dictionary is empty".into()));
        }
        for pair in candidates.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let ordered = match b.frequency.cmp(&a.frequency) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => a.combination < b.combination,
                std::cmp::Ordering::Greater => false,
            };
            if !ordered {
                return Err(Error::InvalidInput(
                    "candidates must be sorted by frequency descending, ties lexicographic, \
                     without duplicates"
                        .into(),
                ));
            }
        }
        Ok(CandidateDictionary { candidates })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Counts each ordered target combination across the samples and keeps the
/// top `n`, then backfills missing vocabulary singles with frequency 0.
pub fn mine_candidates(samples: &[Sample], n: usize, k: usize) -> Result<CandidateDictionary> {
    if n == 0 {
        return Err(Error::InvalidInput("dictionary size N must be >= 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::NoSamples("cannot mine candidates".into()));
    }
    let mut counts: HashMap<&[EmojiId], u64> = HashMap::new();
    for sample in samples {
        *counts.entry(sample.target.ids()).or_insert(0) += 1;
    }
    let mut ranked: Vec<(&[EmojiId], u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(n);

    let mut present: Vec<bool> = vec![false; k];
    for (ids, _) in &ranked {
        if let [only] = ids {
            present[only.index()] = true;
        }
    }
    let mut candidates: Vec<Candidate> = ranked
        .into_iter()
        .map(|(ids, frequency)| Candidate {
            combination: Combination::new(ids.to_vec()),
            frequency,
        })
        .collect();
    for id in 0..k {
        if !present[id] {
            candidates.push(Candidate {
                combination: Combination::new(vec![EmojiId(id as u32)]),
                frequency: 0,
            });
        }
    }
    CandidateDictionary::from_candidates(candidates)
}
