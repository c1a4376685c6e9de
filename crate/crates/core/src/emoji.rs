//! Emoji recognition, normalization and emoji-aware text segmentation.
//!
//! The emoji universe is defined by an [`EmojiTable`] loaded from a TSV file
//! (one emoji per line, column 1 = space-separated hex codepoints, column 2 =
//! optional short name). A table generated from Unicode Emoji v11.0 data is
//! bundled with the crate; see [`EmojiTable::bundled`].

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

/// U+200D ZERO WIDTH JOINER, the glue of multi-person/profession emojis.
pub const ZWJ: char = '\u{200D}';
/// U+FE0F VARIATION SELECTOR-16, requests emoji presentation.
pub const VARIATION_SELECTOR: char = '\u{FE0F}';

/// Fitzpatrick skin tone modifiers, U+1F3FB..=U+1F3FF.
pub fn is_skin_tone(c: char) -> bool {
    ('\u{1F3FB}'..='\u{1F3FF}').contains(&c)
}

/// One emoji grapheme, stored as its sequence of Unicode scalar values.
///
/// May span several scalars (ZWJ sequences, flags, keycaps, skin tone
/// variants). Ordering is codepoint-lexicographic, which for UTF-8 strings
/// coincides with byte order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Emoji(String);

impl Emoji {
    /// Wraps a grapheme. Panics on an empty string, which is never a grapheme.
    pub fn new(s: impl Into<String>) -> Self {
        let s = s.into();
        assert!(!s.is_empty(), "emoji grapheme must be non-empty");
        Emoji(s)
    }

    /// Parses a space-separated hex codepoint sequence, e.g. `"1F468 200D 1F4BB"`.
    pub fn parse_hex(seq: &str) -> std::result::Result<Self, String> {
        let mut out = String::new();
        for tok in seq.split_whitespace() {
            let cp = u32::from_str_radix(tok, 16)
                .map_err(|_| format!("malformed hex codepoint {tok:?}"))?;
            let c = char::from_u32(cp).ok_or_else(|| format!("invalid codepoint U+{cp:04X}"))?;
            out.push(c);
        }
        if out.is_empty() {
            return Err("empty codepoint sequence".to_string());
        }
        Ok(Emoji(out))
    }

    /// Renders the scalar sequence as space-separated uppercase hex.
    pub fn to_hex(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.0.chars().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{:04X}", c as u32));
        }
        out
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn scalars(&self) -> impl Iterator<Item = char> + '_ {
        self.0.chars()
    }

    /// Strips skin tone modifiers and variation selectors.
    ///
    /// Returns `None` for a modifier-only grapheme (e.g. a bare skin tone),
    /// which callers drop. Idempotent: normalizing a normalized emoji is a
    /// no-op.
    pub fn normalized(&self) -> Option<Emoji> {
        let out: String = self
            .0
            .chars()
            .filter(|&c| !is_skin_tone(c) && c != VARIATION_SELECTOR)
            .collect();
        if out.is_empty() {
            None
        } else {
            Some(Emoji(out))
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.0
            .chars()
            .all(|c| !is_skin_tone(c) && c != VARIATION_SELECTOR)
    }
}

impl fmt::Display for Emoji {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Emoji {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Membership table over emoji graphemes.
///
/// Immutable after load; lookups answer both the exact form and the
/// normalized form, so skin-toned and variation-selector variants of a
/// listed emoji are recognized.
#[derive(Debug, Clone)]
pub struct EmojiTable {
    entries: Vec<Emoji>,
    exact: HashSet<String>,
    normalized: HashSet<String>,
}

static BUNDLED: OnceLock<EmojiTable> = OnceLock::new();

impl EmojiTable {
    /// Loads a table from a TSV file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), path)
    }

    /// The table bundled with the crate, generated from Unicode Emoji v11.0
    /// data (2,780 entries; fully-qualified emojis and their skin tone
    /// variants).
    pub fn bundled() -> &'static EmojiTable {
        BUNDLED.get_or_init(|| {
            Self::parse_str(include_str!("../data/emoji-v11.tsv"), "<bundled emoji table>")
                .expect("bundled emoji table is well-formed")
        })
    }

    pub fn from_reader(reader: impl BufRead, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let seq = line.split('\t').next().unwrap_or("");
            let emoji =
                Emoji::parse_hex(seq).map_err(|msg| Error::parse(path, i + 1, msg))?;
            entries.push(emoji);
        }
        Ok(Self::from_entries(entries))
    }

    fn parse_str(data: &str, name: &str) -> Result<Self> {
        Self::from_reader(std::io::Cursor::new(data), name)
    }

    pub fn from_entries(entries: Vec<Emoji>) -> Self {
        let exact: HashSet<String> = entries.iter().map(|e| e.0.clone()).collect();
        let normalized: HashSet<String> = entries
            .iter()
            .filter_map(|e| e.normalized())
            .map(|e| e.0)
            .collect();
        EmojiTable {
            entries,
            exact,
            normalized,
        }
    }

    /// Number of entries as loaded (equals the line count of the source file).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Emoji] {
        &self.entries
    }

    /// Is this grapheme an emoji? True if the exact scalar sequence is
    /// listed, or if its normalized form is the normalized form of a listed
    /// emoji.
    pub fn is_emoji(&self, grapheme: &str) -> bool {
        if self.exact.contains(grapheme) {
            return true;
        }
        match Emoji::new_checked(grapheme).and_then(|e| e.normalized()) {
            Some(n) => self.normalized.contains(n.as_str()),
            None => false,
        }
    }
}

impl Emoji {
    fn new_checked(s: &str) -> Option<Emoji> {
        if s.is_empty() {
            None
        } else {
            Some(Emoji(s.to_string()))
        }
    }
}

/// One token of a segmented text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte range into the source text.
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Whitespace,
    /// A maximal run of consecutive emoji graphemes.
    EmojiRun(Vec<Emoji>),
}

/// Segmented text. Token spans tile the input exactly, so the original text
/// can always be reconstructed.
#[derive(Debug, Clone)]
pub struct TokenStream {
    text: String,
    tokens: Vec<Token>,
}

impl TokenStream {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Word tokens in order, as slices of the source text.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().filter_map(|t| match t.kind {
            TokenKind::Word => Some(&self.text[t.span.clone()]),
            _ => None,
        })
    }

    /// Emoji runs in order, with their byte spans.
    pub fn emoji_runs(&self) -> impl Iterator<Item = (&[Emoji], Range<usize>)> {
        self.tokens.iter().filter_map(|t| match &t.kind {
            TokenKind::EmojiRun(emojis) => Some((emojis.as_slice(), t.span.clone())),
            _ => None,
        })
    }
}

/// Splits a text into words, whitespace and maximal emoji runs.
///
/// Words are separated by whitespace; every emoji grapheme becomes a token of
/// its own even with no surrounding whitespace, and consecutive emoji
/// graphemes merge into one run. A ZWJ grapheme cluster that is not listed in
/// the table as a whole decomposes into its ZWJ-separated components when all
/// of them are emojis; otherwise it is ordinary word text.
pub fn segment(text: &str, table: &EmojiTable) -> TokenStream {
    enum State {
        None,
        Word(usize),
        Space(usize),
        Run(usize, Vec<Emoji>),
    }

    let mut tokens = Vec::new();
    let mut state = State::None;

    let flush = |state: &mut State, end: usize, tokens: &mut Vec<Token>| {
        match std::mem::replace(state, State::None) {
            State::None => {}
            State::Word(start) => tokens.push(Token {
                kind: TokenKind::Word,
                span: start..end,
            }),
            State::Space(start) => tokens.push(Token {
                kind: TokenKind::Whitespace,
                span: start..end,
            }),
            State::Run(start, emojis) => tokens.push(Token {
                kind: TokenKind::EmojiRun(emojis),
                span: start..end,
            }),
        }
    };

    for (off, g) in text.grapheme_indices(true) {
        if g.chars().all(char::is_whitespace) {
            match state {
                State::Space(_) => {}
                _ => {
                    flush(&mut state, off, &mut tokens);
                    state = State::Space(off);
                }
            }
        } else if let Some(pieces) = emoji_pieces(g, table) {
            match &mut state {
                State::Run(_, emojis) => emojis.extend(pieces),
                _ => {
                    flush(&mut state, off, &mut tokens);
                    state = State::Run(off, pieces);
                }
            }
        } else {
            match state {
                State::Word(_) => {}
                _ => {
                    flush(&mut state, off, &mut tokens);
                    state = State::Word(off);
                }
            }
        }
    }
    flush(&mut state, text.len(), &mut tokens);

    TokenStream {
        text: text.to_string(),
        tokens,
    }
}

/// Classifies one grapheme cluster: `Some` with the emojis it contributes to
/// a run, or `None` if it is not emoji material.
fn emoji_pieces(grapheme: &str, table: &EmojiTable) -> Option<Vec<Emoji>> {
    if table.is_emoji(grapheme) {
        return Some(vec![Emoji::new(grapheme)]);
    }
    if grapheme.contains(ZWJ) {
        let parts: Vec<&str> = grapheme.split(ZWJ).collect();
        if !parts.is_empty() && parts.iter().all(|p| !p.is_empty() && table.is_emoji(p)) {
            return Some(parts.into_iter().map(Emoji::new).collect());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_of(emojis: &[&str]) -> EmojiTable {
        EmojiTable::from_entries(emojis.iter().map(|s| Emoji::new(*s)).collect())
    }

    #[test]
    fn parse_hex_single() {
        let e = Emoji::parse_hex("1F600").unwrap();
        assert_eq!(e.as_str(), "😀");
    }

    #[test]
    fn parse_hex_zwj_sequence() {
        let e = Emoji::parse_hex("1F468 200D 1F4BB").unwrap();
        assert_eq!(e.as_str(), "👨\u{200D}💻");
        assert_eq!(e.to_hex(), "1F468 200D 1F4BB");
    }

    #[test]
    fn parse_hex_rejects_garbage() {
        assert!(Emoji::parse_hex("XYZZY").is_err());
        assert!(Emoji::parse_hex("").is_err());
        assert!(Emoji::parse_hex("110000").is_err()); // beyond U+10FFFF
    }

    #[test]
    fn load_table_from_lines() {
        let data = "1F600\tgrinning face\n1F468 200D 1F4BB\tman technologist\n";
        let t = EmojiTable::from_reader(std::io::Cursor::new(data), "test.tsv").unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.is_emoji("😀"));
        assert!(t.is_emoji("👨\u{200D}💻"));
        assert!(!t.is_emoji("x"));
    }

    #[test]
    fn load_table_empty_file() {
        let t = EmojiTable::from_reader(std::io::Cursor::new(""), "empty.tsv").unwrap();
        assert_eq!(t.len(), 0);
        assert!(!t.is_emoji("😀"));
    }

    #[test]
    fn load_table_reports_line_number() {
        let data = "1F600\nBOGUS hex\n";
        let err = EmojiTable::from_reader(std::io::Cursor::new(data), "bad.tsv").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.tsv:2"), "got: {msg}");
    }

    #[test]
    fn normalize_strips_skin_tone() {
        let thumbs_medium = Emoji::new("👍🏽");
        assert_eq!(thumbs_medium.normalized().unwrap().as_str(), "👍");
    }

    #[test]
    fn normalize_identity_without_modifier() {
        let grin = Emoji::new("😀");
        assert_eq!(grin.normalized().unwrap(), grin);
    }

    #[test]
    fn normalize_inside_zwj_sequence() {
        let e = Emoji::parse_hex("1F468 1F3FB 200D 1F4BB").unwrap();
        assert_eq!(e.normalized().unwrap().to_hex(), "1F468 200D 1F4BB");
    }

    #[test]
    fn normalize_strips_variation_selector() {
        let heart = Emoji::parse_hex("2764 FE0F").unwrap();
        assert_eq!(heart.normalized().unwrap().to_hex(), "2764");
    }

    #[test]
    fn normalize_modifier_only_is_dropped() {
        let bare_tone = Emoji::new("\u{1F3FD}");
        assert!(bare_tone.normalized().is_none());
    }

    #[test]
    fn normalize_is_idempotent_on_bundled_table() {
        for e in EmojiTable::bundled().entries() {
            let n1 = e.normalized().expect("bundled entries never normalize to empty");
            let n2 = n1.normalized().unwrap();
            assert_eq!(n1, n2, "normalize not idempotent for {}", e.to_hex());
        }
    }

    #[test]
    fn bundled_table_recognizes_tone_variants() {
        let t = EmojiTable::bundled();
        assert!(t.is_emoji("👍"));
        assert!(t.is_emoji("👍🏽"));
        assert!(t.is_emoji("❤")); // bare U+2764, normalized form of 2764 FE0F
        assert!(t.is_emoji("❤\u{FE0F}"));
        assert!(!t.is_emoji("a"));
        assert!(!t.is_emoji("\u{1F3FD}")); // bare skin tone is not an emoji
    }

    #[test]
    fn segment_words_and_trailing_run() {
        let t = table_of(&["😴"]);
        let s = segment("good night 😴😴", &t);
        let words: Vec<&str> = s.words().collect();
        assert_eq!(words, ["good", "night"]);
        let runs: Vec<_> = s.emoji_runs().collect();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].0, &[Emoji::new("😴"), Emoji::new("😴")]);
    }

    #[test]
    fn segment_emoji_splits_adjacent_word() {
        let t = table_of(&["😂"]);
        let s = segment("wow😂ok", &t);
        let words: Vec<&str> = s.words().collect();
        assert_eq!(words, ["wow", "ok"]);
        assert_eq!(s.emoji_runs().count(), 1);
    }

    #[test]
    fn segment_empty_text() {
        let t = table_of(&["😂"]);
        let s = segment("", &t);
        assert!(s.tokens().is_empty());
    }

    #[test]
    fn segment_spans_tile_input() {
        let t = EmojiTable::bundled();
        let text = " wow😂ok 👍🏽❤️ end\t";
        let s = segment(text, t);
        let mut rebuilt = String::new();
        let mut pos = 0;
        for tok in s.tokens() {
            assert_eq!(tok.span.start, pos, "spans must tile without gaps");
            rebuilt.push_str(&text[tok.span.clone()]);
            pos = tok.span.end;
        }
        assert_eq!(pos, text.len());
        assert_eq!(rebuilt, text);
    }

    #[test]
    fn segment_runs_are_maximal() {
        let t = EmojiTable::bundled();
        let s = segment("a😂😂 😴b😴", t);
        let mut last_was_run = false;
        for tok in s.tokens() {
            let is_run = matches!(tok.kind, TokenKind::EmojiRun(_));
            assert!(!(is_run && last_was_run), "adjacent emoji runs must merge");
            last_was_run = is_run;
        }
        // "😂😂" is one run of two; the space splits the 😴s from it.
        let runs: Vec<usize> = s.emoji_runs().map(|(r, _)| r.len()).collect();
        assert_eq!(runs, [2, 1, 1]);
    }

    #[test]
    fn segment_decomposes_unlisted_zwj_cluster() {
        // Table knows the components but not the joined sequence.
        let t = table_of(&["👨", "💻"]);
        let s = segment("👨\u{200D}💻", &t);
        let runs: Vec<_> = s.emoji_runs().collect();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].0, &[Emoji::new("👨"), Emoji::new("💻")]);
    }

    #[test]
    fn segment_keeps_listed_zwj_cluster_whole() {
        let t = table_of(&["👨", "💻", "👨\u{200D}💻"]);
        let s = segment("👨\u{200D}💻", &t);
        let runs: Vec<_> = s.emoji_runs().collect();
        assert_eq!(runs[0].0, &[Emoji::new("👨\u{200D}💻")]);
    }

    #[test]
    fn segment_non_emoji_symbols_stay_in_words() {
        let t = table_of(&["😂"]);
        let s = segment("a+b=c!", &t);
        let words: Vec<&str> = s.words().collect();
        assert_eq!(words, ["a+b=c!"]);
    }

    #[test]
    fn skin_tone_variants_normalize_to_base() {
        // Every modified form maps to the unmodified form.
        let base = Emoji::new("👍");
        for tone in '\u{1F3FB}'..='\u{1F3FF}' {
            let modified = Emoji::new(format!("👍{tone}"));
            assert_eq!(modified.normalized().unwrap(), base);
        }
    }
}
