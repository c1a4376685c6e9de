//! Deterministic synthetic corpora for tests, benchmarks and demos.
//!
//! Real social-media data cannot ship with the crate, so these generators
//! produce corpora with the same shape: topical contexts, emoji combinations
//! of mixed lengths (including repeated emojis), link/mention/hashtag noise,
//! over-long runs and emoji-free posts. Everything is a pure function of the
//! requested size and seed.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::atomic_write;
use crate::error::{Error, Result};

/// A six-post corpus small enough to trace by hand: it exercises link and
/// mention removal, a skin-toned target, an emoji inside a context, a
/// skipped four-emoji run and an emoji-free post. Extraction yields exactly
/// five samples.
pub fn six_post_fixture() -> Vec<String> {
    vec![
        "good night 😴😴".to_string(),
        "wow😂ok 👍🏽".to_string(),
        "😂😂😂😂 lol".to_string(),
        "love this https://t.co/xyz @bob #mood 😍".to_string(),
        "no emojis here at all".to_string(),
        "party time ❤️🎉".to_string(),
    ]
}

const SEPARABLE: [(&str, &str); 8] = [
    ("crimson harbor lantern", "😂"),
    ("velvet compass meadow", "😴😴"),
    ("granite whisper orchid", "🎉🎉🎉"),
    ("amber falcon thicket", "👍"),
    ("cobalt ember prairie", "😭😭"),
    ("ivory tempest canyon", "🔥🔥🔥"),
    ("scarlet willow summit", "😍"),
    ("obsidian breeze hollow", "🙏🙏"),
];

/// Eight context types with disjoint words, each deterministically paired
/// with one combination of a single repeated emoji — so every soft label is
/// one-hot and a linear model can drive the training loss to zero.
pub fn separable_posts(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (context, combo) = SEPARABLE[rng.gen_range(0..SEPARABLE.len())];
            format!("{context} {combo}")
        })
        .collect()
}

struct Topic {
    words: &'static [&'static str],
    /// Combination candidates with sampling weights.
    combos: &'static [(&'static str, u32)],
    /// The emoji occasionally dropped into the middle of a context.
    signature: &'static str,
}

const TOPICS: [Topic; 8] = [
    Topic {
        words: &["lol", "haha", "funny", "dying", "hilarious", "joke", "cant", "breathe"],
        combos: &[("😂", 30), ("😂😂", 26), ("😂😂😂", 14), ("💀", 12), ("😭😂", 10), ("💀💀", 8)],
        signature: "😂",
    },
    Topic {
        words: &["love", "heart", "miss", "babe", "beautiful", "forever", "crush"],
        combos: &[("❤", 30), ("❤❤", 18), ("😍", 20), ("❤❤❤", 12), ("😍😍", 10), ("❤😍", 10)],
        signature: "❤",
    },
    Topic {
        words: &["fire", "lit", "hype", "insane", "goat", "clutch", "unreal"],
        combos: &[("🔥", 32), ("🔥🔥", 24), ("🔥🔥🔥", 18), ("💯", 14), ("🔥💯", 12)],
        signature: "🔥",
    },
    Topic {
        words: &["party", "birthday", "friday", "weekend", "celebrate", "cheers"],
        combos: &[("🎉", 34), ("🎉🎉", 22), ("✨", 16), ("🎉✨", 14), ("✨✨", 14)],
        signature: "🎉",
    },
    Topic {
        words: &["sad", "crying", "tears", "brutal", "heartbroken", "why", "hurts"],
        combos: &[("😭", 34), ("😭😭", 26), ("😭😭😭", 16), ("🥺", 14), ("😭🥺", 10)],
        signature: "😭",
    },
    Topic {
        words: &["tired", "sleep", "goodnight", "bed", "exhausted", "nap"],
        combos: &[("😴", 40), ("😴😴", 28), ("🥺", 12), ("😴😴😴", 12), ("😴🥺", 8)],
        signature: "😴",
    },
    Topic {
        words: &["thanks", "blessed", "grateful", "appreciate", "kindly", "respect"],
        combos: &[("🙏", 38), ("🙏🙏", 22), ("✨", 12), ("🙏✨", 14), ("🙏🙏🙏", 14)],
        signature: "🙏",
    },
    Topic {
        words: &["hello", "welcome", "goodbye", "later", "everyone", "morning"],
        combos: &[("👋", 38), ("👋👋", 24), ("👍", 16), ("👋👍", 12), ("👍👍", 10)],
        signature: "👋",
    },
];

const FILLERS: [&str; 8] = ["so", "just", "really", "omg", "today", "still", "man", "fr"];

fn pick_weighted<'a>(rng: &mut ChaCha8Rng, combos: &[(&'a str, u32)]) -> &'a str {
    let total: u32 = combos.iter().map(|&(_, w)| w).sum();
    let mut roll = rng.gen_range(0..total);
    for &(combo, w) in combos {
        if roll < w {
            return combo;
        }
        roll -= w;
    }
    combos[combos.len() - 1].0
}

/// Topic-shaped corpus for end-to-end runs: each post carries a few topical
/// words and ends in a combination drawn from the topic's mix. About 8% of
/// posts carry link/mention/hashtag noise, 3% an over-long run, 2% no emoji
/// at all, and 10% an extra topical emoji inside the context.
pub fn topic_posts(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut posts = Vec::with_capacity(count);
    for _ in 0..count {
        let roll: f64 = rng.gen();
        if roll < 0.02 {
            posts.push(format!(
                "{} {} nothing else",
                FILLERS[rng.gen_range(0..FILLERS.len())],
                FILLERS[rng.gen_range(0..FILLERS.len())]
            ));
            continue;
        }
        let topic = &TOPICS[rng.gen_range(0..TOPICS.len())];
        let n_words = rng.gen_range(2..=4);
        let mut words: Vec<&str> = (0..n_words)
            .map(|_| topic.words[rng.gen_range(0..topic.words.len())])
            .collect();
        if rng.gen::<f64>() < 0.3 {
            let at = rng.gen_range(0..=words.len());
            words.insert(at, FILLERS[rng.gen_range(0..FILLERS.len())]);
        }
        if rng.gen::<f64>() < 0.10 {
            let at = rng.gen_range(1..=words.len());
            words.insert(at, topic.signature);
        }
        let mut post = words.join(" ");
        if rng.gen::<f64>() < 0.08 {
            post.push_str(match rng.gen_range(0..3) {
                0 => " https://t.co/abc123",
                1 => " @somebody",
                _ => " #vibes",
            });
        }
        if roll < 0.05 {
            // Over-long run: four copies of the signature, never a target.
            post.push(' ');
            for _ in 0..4 {
                post.push_str(topic.signature);
            }
        } else {
            post.push(' ');
            post.push_str(pick_weighted(&mut rng, topic.combos));
        }
        posts.push(post);
    }
    posts
}

/// Writes posts as a corpus JSONL file.
pub fn write_corpus(path: &Path, posts: &[String]) -> Result<()> {
    atomic_write(path, |w| {
        for text in posts {
            let line = serde_json::json!({ "text": text });
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, extract_samples, preprocess};
    use crate::emoji::EmojiTable;

    #[test]
    fn generators_are_seed_deterministic() {
        assert_eq!(separable_posts(100, 9), separable_posts(100, 9));
        assert_eq!(topic_posts(200, 9), topic_posts(200, 9));
        assert_ne!(topic_posts(200, 9), topic_posts(200, 10));
    }

    #[test]
    fn topic_posts_survive_the_pipeline() {
        let table = EmojiTable::bundled();
        let posts: Vec<String> = topic_posts(500, 1).iter().map(|p| preprocess(p)).collect();
        let vocab = build_vocabulary(&posts, 500, table).unwrap();
        assert!(vocab.k() >= 10, "expected a diverse vocabulary, got {}", vocab.k());
        let n_samples: usize = posts
            .iter()
            .map(|p| extract_samples(p, &vocab, table, 3).len())
            .sum();
        assert!(n_samples > 400, "got only {n_samples} samples");
    }

    #[test]
    fn separable_posts_use_one_hot_combos() {
        for (_, combo) in SEPARABLE {
            let emojis: Vec<char> = combo.chars().collect();
            assert!(emojis.iter().all(|&c| c == emojis[0]));
        }
    }
}
