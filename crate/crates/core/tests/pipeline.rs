//! End-to-end pipeline checks on the hand-traceable fixture corpus.

use std::sync::Arc;

use emoji_combo_core::{
    build_vocabulary, compare_strategies, default_grid, extract_samples, mine_candidates,
    preprocess, train_bow, Combination, EmojiTable, Sample, TrainConfig,
};

fn cleaned_fixture() -> Vec<String> {
    emoji_combo_core::synth::six_post_fixture()
        .iter()
        .map(|p| preprocess(p))
        .collect()
}

#[test]
fn fixture_preprocessing() {
    let posts = cleaned_fixture();
    assert_eq!(posts[1], "wow😂ok 👍🏽");
    assert_eq!(posts[3], "love this 😍");
    assert_eq!(posts[5], "party time ❤️🎉");
}

#[test]
fn fixture_vocabulary_ids_and_counts() {
    let table = EmojiTable::bundled();
    let vocab = build_vocabulary(cleaned_fixture(), 500, table).unwrap();
    // 😂 ×5, 😴 ×2, then four count-1 entries in codepoint order:
    // ❤ U+2764 < 🎉 U+1F389 < 👍 U+1F44D < 😍 U+1F60D.
    let got: Vec<(String, u64)> = vocab
        .entries()
        .iter()
        .map(|e| (e.emoji.as_str().to_string(), e.count))
        .collect();
    assert_eq!(
        got,
        vec![
            ("😂".to_string(), 5),
            ("😴".to_string(), 2),
            ("❤".to_string(), 1),
            ("🎉".to_string(), 1),
            ("👍".to_string(), 1),
            ("😍".to_string(), 1),
        ]
    );
}

#[test]
fn fixture_extraction_hand_traced() {
    let table = EmojiTable::bundled();
    let posts = cleaned_fixture();
    let vocab = build_vocabulary(&posts, 500, table).unwrap();
    let samples: Vec<Sample> = posts
        .iter()
        .flat_map(|p| extract_samples(p, &vocab, table, 3))
        .collect();

    let expected: Vec<(&str, Vec<u32>)> = vec![
        ("good night ", vec![1, 1]),       // 😴😴
        ("wow", vec![0]),                  // 😂
        ("wow😂ok ", vec![4]),             // 👍🏽 normalized to 👍
        ("love this ", vec![5]),           // 😍
        ("party time ", vec![2, 3]),       // ❤️🎉 normalized to ❤,🎉
    ];
    assert_eq!(samples.len(), expected.len());
    for (sample, (context, ids)) in samples.iter().zip(&expected) {
        assert_eq!(&sample.context, context);
        assert_eq!(
            sample.target,
            Combination::from_iter(ids.iter().copied()),
            "target mismatch for context {context:?}"
        );
    }
}

#[test]
fn fixture_dictionary_order() {
    let table = EmojiTable::bundled();
    let posts = cleaned_fixture();
    let vocab = build_vocabulary(&posts, 500, table).unwrap();
    let samples: Vec<Sample> = posts
        .iter()
        .flat_map(|p| extract_samples(p, &vocab, table, 3))
        .collect();
    let dict = mine_candidates(&samples, 30_000, vocab.k()).unwrap();
    let got: Vec<(Vec<u32>, u64)> = dict
        .candidates()
        .iter()
        .map(|c| (c.combination.ids().iter().map(|i| i.0).collect(), c.frequency))
        .collect();
    // Five mined singles/pairs at frequency 1 in lexicographic order, then
    // the three unmined singles backfilled at frequency 0.
    assert_eq!(
        got,
        vec![
            (vec![0], 1),
            (vec![1, 1], 1),
            (vec![2, 3], 1),
            (vec![4], 1),
            (vec![5], 1),
            (vec![1], 0),
            (vec![2], 0),
            (vec![3], 0),
        ]
    );
}

#[test]
fn fixture_full_run_is_deterministic() {
    let table = EmojiTable::bundled();
    let run = || {
        let posts = cleaned_fixture();
        let vocab = build_vocabulary(&posts, 500, table).unwrap();
        let samples: Vec<Sample> = posts
            .iter()
            .flat_map(|p| extract_samples(p, &vocab, table, 3))
            .collect();
        let dict = mine_candidates(&samples, 30_000, vocab.k()).unwrap();
        let config = TrainConfig {
            epochs: 10,
            batch_size: 2,
            learning_rate: 0.5,
            seed: 13,
            feature_dim: 1024,
        };
        let trained = train_bow(
            &samples,
            vocab.k(),
            Arc::new(table.clone()),
            vocab.checksum(),
            &config,
        )
        .unwrap();
        let reports =
            compare_strategies(&trained.model, &samples, &dict, &default_grid()).unwrap();
        (
            emoji_combo_core::report_csv(&reports),
            trained.epoch_loss,
        )
    };
    let (csv_a, loss_a) = run();
    let (csv_b, loss_b) = run();
    assert_eq!(csv_a, csv_b);
    assert_eq!(loss_a, loss_b);
    assert!(csv_a.lines().count() == 9); // header + 8 grid rows
}

#[test]
fn bundled_tone_variants_normalize_into_the_table() {
    let table = EmojiTable::bundled();
    let mut tone_entries = 0;
    for entry in table.entries() {
        if entry.scalars().any(emoji_combo_core::emoji::is_skin_tone) {
            tone_entries += 1;
            let base = entry.normalized().unwrap();
            assert!(
                table.is_emoji(base.as_str()),
                "normalized form {} of {} missing from table",
                base.to_hex(),
                entry.to_hex()
            );
        }
    }
    assert!(tone_entries > 1000, "expected many tone variants, got {tone_entries}");
}

#[test]
fn separable_fixture_trains_to_low_loss() {
    let table = EmojiTable::bundled();
    let posts: Vec<String> = emoji_combo_core::synth::separable_posts(5000, 11)
        .iter()
        .map(|p| preprocess(p))
        .collect();
    let vocab = build_vocabulary(&posts, 500, table).unwrap();
    let samples: Vec<Sample> = posts
        .iter()
        .flat_map(|p| extract_samples(p, &vocab, table, 3))
        .collect();
    assert_eq!(samples.len(), 5000);
    let config = TrainConfig {
        epochs: 50,
        batch_size: 64,
        learning_rate: 0.5,
        seed: 1,
        feature_dim: 4096,
    };
    let trained = train_bow(
        &samples,
        vocab.k(),
        Arc::new(table.clone()),
        vocab.checksum(),
        &config,
    )
    .unwrap();
    let final_loss = *trained.epoch_loss.last().unwrap();
    assert!(
        final_loss < 0.1,
        "separable fixture should reach < 0.1 nats, got {final_loss}"
    );
    // Loss is non-increasing in trend: the last epoch beats the first.
    assert!(trained.epoch_loss.last().unwrap() < trained.epoch_loss.first().unwrap());
}
