//! On-disk artifact formats.
//!
//! - Corpus: UTF-8 JSON lines, one object per line with a required `"text"`
//!   field; unknown fields are ignored.
//! - Dataset: JSON lines `{"context": string, "target": [emoji strings]}`.
//! - Vocabulary: TSV `rank <TAB> hex scalar sequence <TAB> count`.
//! - Candidate dictionary: TSV `combination <TAB> frequency` where a
//!   combination is `|`-separated emojis, each as space-joined hex scalars.
//!   The first line is a `# vocab_sha256=<hex>` header binding the file to
//!   the vocabulary it was mined against.
//!
//! Writers go through [`atomic_write`]: output lands under the final name
//! only after the whole file has been produced.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    Candidate, CandidateDictionary, Combination, EmojiVocabulary, Sample, VocabEntry,
    MAX_COMBINATION_LEN,
};
use crate::emoji::Emoji;
use crate::error::{Error, Result};

/// Writes `path` via a `.tmp` sibling and a final rename, so a failed write
/// never leaves a partial artifact behind.
pub fn atomic_write(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut writer = BufWriter::new(file);
    let result = write(&mut writer)
        .and_then(|()| writer.flush().map_err(|e| Error::io(&tmp, e)))
        .and_then(|()| std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e)));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

#[derive(Deserialize)]
struct CorpusRecord {
    text: String,
}

/// Streaming reader over a corpus JSONL file, yielding raw post texts.
pub struct CorpusReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
}

impl CorpusReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(CorpusReader {
            lines: BufReader::new(file).lines(),
            path,
            line_no: 0,
        })
    }
}

impl Iterator for CorpusReader {
    type Item = Result<String>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            match self.lines.next()? {
                Err(e) => return Some(Err(Error::io(&self.path, e))),
                Ok(line) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(
                        serde_json::from_str::<CorpusRecord>(&line)
                            .map(|r| r.text)
                            .map_err(|e| Error::parse(&self.path, self.line_no, e.to_string())),
                    );
                }
            }
        }
    }
}

#[derive(Serialize)]
struct DatasetRecordOut<'a> {
    context: &'a str,
    target: Vec<&'a str>,
}

#[derive(Deserialize)]
struct DatasetRecordIn {
    context: String,
    target: Vec<String>,
}

pub fn write_dataset(path: &Path, samples: &[Sample], vocab: &EmojiVocabulary) -> Result<()> {
    atomic_write(path, |w| {
        for sample in samples {
            let record = DatasetRecordOut {
                context: &sample.context,
                target: sample
                    .target
                    .ids()
                    .iter()
                    .map(|&id| vocab.emoji(id).as_str())
                    .collect(),
            };
            let line = serde_json::to_string(&record)
                .map_err(|e| Error::InvalidInput(format!("serializing sample: {e}")))?;
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}

pub fn read_dataset(path: &Path, vocab: &EmojiVocabulary) -> Result<Vec<Sample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecordIn = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if !(1..=MAX_COMBINATION_LEN).contains(&record.target.len()) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("target must have 1..={MAX_COMBINATION_LEN} emojis"),
            ));
        }
        let ids = record
            .target
            .iter()
            .map(|s| {
                if s.is_empty() {
                    return Err(Error::parse(path, i + 1, "empty target emoji"));
                }
                let emoji = Emoji::new(s.as_str());
                vocab.id_of(&emoji).ok_or_else(|| {
                    Error::parse(
                        path,
                        i + 1,
                        format!("target emoji {} is not in the vocabulary", emoji.to_hex()),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push(Sample {
            context: record.context,
            target: Combination::new(ids),
        });
    }
    if samples.is_empty() {
        return Err(Error::NoSamples(format!("{} has no samples", path.display())));
    }
    Ok(samples)
}

pub fn write_vocabulary(path: &Path, vocab: &EmojiVocabulary) -> Result<()> {
    atomic_write(path, |w| {
        for (rank, entry) in vocab.entries().iter().enumerate() {
            writeln!(w, "{rank}\t{}\t{}", entry.emoji.to_hex(), entry.count)
                .map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}

pub fn read_vocabulary(path: &Path) -> Result<EmojiVocabulary> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut cols = line.split('\t');
        let (rank, hex, count) = match (cols.next(), cols.next(), cols.next()) {
            (Some(r), Some(h), Some(c)) => (r, h, c),
            _ => return Err(Error::parse(path, i + 1, "expected rank<TAB>hex<TAB>count")),
        };
        let rank: usize = rank
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad rank {rank:?}")))?;
        if rank != i {
            return Err(Error::parse(
                path,
                i + 1,
                format!("rank {rank} out of order (expected {i})"),
            ));
        }
        let emoji = Emoji::parse_hex(hex).map_err(|msg| Error::parse(path, i + 1, msg))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad count {count:?}")))?;
        entries.push(VocabEntry { emoji, count });
    }
    EmojiVocabulary::from_entries(entries)
}

const DICT_CHECKSUM_PREFIX: &str = "# vocab_sha256=";

pub fn write_candidates(
    path: &Path,
    dict: &CandidateDictionary,
    vocab: &EmojiVocabulary,
) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "{DICT_CHECKSUM_PREFIX}{}", vocab.checksum()).map_err(|e| Error::io(path, e))?;
        for candidate in dict.candidates() {
            let combo = candidate
                .combination
                .ids()
                .iter()
                .map(|&id| vocab.emoji(id).to_hex())
                .collect::<Vec<_>>()
                .join("|");
            writeln!(w, "{combo}\t{}", candidate.frequency).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}

pub fn read_candidates(path: &Path, vocab: &EmojiVocabulary) -> Result<CandidateDictionary> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let header = match lines.next() {
        Some((_, Ok(line))) => line,
        Some((_, Err(e))) => return Err(Error::io(path, e)),
        None => return Err(Error::parse(path, 1, "missing checksum header")),
    };
    let found = header
        .strip_prefix(DICT_CHECKSUM_PREFIX)
        .ok_or_else(|| Error::parse(path, 1, format!("expected {DICT_CHECKSUM_PREFIX:?} header")))?;
    let expected = vocab.checksum();
    if found != expected {
        return Err(Error::ChecksumMismatch {
            artifact: format!("candidate dictionary {}", path.display()),
            expected: found.to_string(),
            found: expected,
        });
    }

    let mut candidates = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let (combo, freq) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected combination<TAB>frequency"))?;
        let ids = combo
            .split('|')
            .map(|hex| {
                let emoji = Emoji::parse_hex(hex).map_err(|msg| Error::parse(path, i + 1, msg))?;
                vocab.id_of(&emoji).ok_or_else(|| {
                    Error::parse(
                        path,
                        i + 1,
                        format!("candidate emoji {} is not in the vocabulary", emoji.to_hex()),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if !(1..=MAX_COMBINATION_LEN).contains(&ids.len()) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("candidate must have 1..={MAX_COMBINATION_LEN} emojis"),
            ));
        }
        let frequency: u64 = freq
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad frequency {freq:?}")))?;
        candidates.push(Candidate {
            combination: Combination::new(ids),
            frequency,
        });
    }
    CandidateDictionary::from_candidates(candidates)
}
