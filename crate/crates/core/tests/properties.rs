//! Property tests for the spec-level invariants: lossless segmentation,
//! normalization behavior, score algebra and metric bounds.

use std::sync::Arc;

use proptest::prelude::*;

use emoji_combo_core::{
    aggregate, greedy_topk, mine_candidates, naive_top3, sample_score, score_candidate,
    BowModel, Combination, EmojiId, EmojiTable, ProbDistribution, ProbabilityModel, Sample,
    TokenKind, SCORE_FLOOR,
};

const EMOJI_POOL: [&str; 12] = [
    "😂", "😴", "👍🏽", "❤️", "🎉", "👨\u{200D}💻", "🇺🇸", "#️⃣", "✨", "🥺", "💀", "😭",
];

fn mixed_text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            "[a-z]{1,6}".prop_map(|w| w),
            prop_oneof![Just(" ".to_string()), Just("  ".to_string()), Just("\t".to_string())],
            prop::sample::select(EMOJI_POOL.to_vec()).prop_map(|e| e.to_string()),
        ],
        0..12,
    )
    .prop_map(|pieces| pieces.concat())
}

fn distribution(k: usize) -> impl Strategy<Value = ProbDistribution> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|raw| {
        let sum: f64 = raw.iter().sum();
        ProbDistribution::new(raw.into_iter().map(|x| x / sum).collect()).unwrap()
    })
}

fn permutations(ids: &[u32]) -> Vec<Vec<u32>> {
    match ids.len() {
        1 => vec![ids.to_vec()],
        2 => vec![ids.to_vec(), vec![ids[1], ids[0]]],
        3 => {
            let (a, b, c) = (ids[0], ids[1], ids[2]);
            vec![
                vec![a, b, c],
                vec![a, c, b],
                vec![b, a, c],
                vec![b, c, a],
                vec![c, a, b],
                vec![c, b, a],
            ]
        }
        _ => unreachable!(),
    }
}

proptest! {
    #[test]
    fn segmentation_spans_tile_any_string(text in any::<String>()) {
        let stream = emoji_combo_core::segment(&text, EmojiTable::bundled());
        let mut pos = 0;
        for token in stream.tokens() {
            prop_assert_eq!(token.span.start, pos);
            pos = token.span.end;
        }
        prop_assert_eq!(pos, text.len());
    }

    #[test]
    fn segmentation_spans_tile_emoji_text(text in mixed_text()) {
        let stream = emoji_combo_core::segment(&text, EmojiTable::bundled());
        let mut rebuilt = String::new();
        for token in stream.tokens() {
            rebuilt.push_str(&text[token.span.clone()]);
        }
        prop_assert_eq!(rebuilt, text);
    }

    #[test]
    fn emoji_runs_are_maximal(text in mixed_text()) {
        let stream = emoji_combo_core::segment(&text, EmojiTable::bundled());
        let mut last_was_run = false;
        for token in stream.tokens() {
            let is_run = matches!(token.kind, TokenKind::EmojiRun(_));
            prop_assert!(!(is_run && last_was_run), "adjacent emoji runs in {:?}", text);
            last_was_run = is_run;
        }
    }

    #[test]
    fn scores_are_order_invariant_bitwise(
        (k, p, ids) in (3usize..12).prop_flat_map(|k| {
            (Just(k), distribution(k), prop::collection::vec(0..k as u32, 1..=3))
        })
    ) {
        let _ = k;
        let scores: Vec<u64> = permutations(&ids)
            .into_iter()
            .map(|perm| {
                score_candidate(&p, &Combination::from_iter(perm)).to_bits()
            })
            .collect();
        for &s in &scores[1..] {
            prop_assert_eq!(s, scores[0]);
        }
    }

    #[test]
    fn scores_stay_in_floor_bounds(
        (k, p, ids) in (3usize..12).prop_flat_map(|k| {
            (Just(k), distribution(k), prop::collection::vec(0..k as u32, 1..=3))
        })
    ) {
        let _ = k;
        let s = score_candidate(&p, &Combination::from_iter(ids));
        prop_assert!(s >= 0.0);
        prop_assert!(s <= -SCORE_FLOOR.ln());
    }

    #[test]
    fn greedy_is_prefix_monotone(
        (p, t1, t2) in distribution(20).prop_flat_map(|p| {
            (Just(p), 0.01f64..=1.0, 0.01f64..=1.0)
        })
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let short = greedy_topk(&p, lo, 3);
        let long = greedy_topk(&p, hi, 3);
        prop_assert!(short.len() <= long.len());
        prop_assert_eq!(short.ids(), &long.ids()[..short.len()]);
    }

    #[test]
    fn naive_equals_greedy_at_threshold_one(p in distribution(30)) {
        let top3_mass: f64 = {
            let mut sorted: Vec<f64> = p.as_slice().to_vec();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            sorted[..3].iter().sum()
        };
        prop_assume!(top3_mass < 1.0);
        prop_assert_eq!(greedy_topk(&p, 1.0, 3), naive_top3(&p).unwrap());
    }

    #[test]
    fn penalty_algebra_exact(
        (k, p, ids, pen1, pen2) in (3usize..10).prop_flat_map(|k| {
            (
                Just(k),
                distribution(k),
                prop::collection::vec(0..k as u32, 1..=3),
                prop::sample::select(vec![0.0, 0.2, 0.3, 0.4]),
                prop::sample::select(vec![0.0, 0.2, 0.3, 0.4]),
            )
        })
    ) {
        let _ = k;
        let c = Combination::from_iter(ids);
        let s = score_candidate(&p, &c);
        let missing = (3 - c.len()) as f64;
        let s1 = s + pen1 * missing;
        let s2 = s + pen2 * missing;
        prop_assert!(((s2 - s1) - (pen2 - pen1) * missing).abs() <= 1e-12);
    }

    #[test]
    fn predictions_always_normalize(
        (weights, context) in (
            prop::collection::vec(-3.0f64..3.0, 6 * 32),
            mixed_text(),
        )
    ) {
        let mut model = BowModel::new(
            6,
            32,
            Arc::new(EmojiTable::bundled().clone()),
            String::new(),
            0,
        );
        for f in 0..32 {
            for c in 0..6 {
                model.set_weight(f, c, weights[f * 6 + c]);
            }
        }
        let p = model.predict(&context);
        let sum: f64 = p.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-6);
        prop_assert!(p.as_slice().iter().all(|&x| x >= 0.0));
        prop_assert_eq!(p.k(), 6);
    }

    #[test]
    fn sample_scores_stay_bounded(
        (pred, target) in (
            prop::collection::vec(0u32..6, 1..=3),
            prop::collection::vec(0u32..6, 1..=3),
        )
    ) {
        let s = sample_score(
            &Combination::from_iter(pred),
            &Combination::from_iter(target),
        );
        prop_assert!(s.tp <= s.pred_size.min(s.target_size));
        prop_assert!(s.tp <= 3);
        let r = aggregate("x", "", [s]).unwrap();
        prop_assert!(r.precision >= 0.0 && r.precision <= 1.0);
        prop_assert!(r.recall >= 0.0 && r.recall <= 1.0);
        prop_assert!(r.f1 >= 0.0 && r.f1 <= 1.0);
    }

    #[test]
    fn mined_frequencies_match_sample_counts(
        targets in prop::collection::vec(prop::collection::vec(0u32..5, 1..=3), 1..60)
    ) {
        let samples: Vec<Sample> = targets
            .iter()
            .map(|ids| Sample {
                context: String::new(),
                target: Combination::from_iter(ids.iter().copied()),
            })
            .collect();
        let dict = mine_candidates(&samples, 1000, 5).unwrap();
        for cand in dict.candidates() {
            let recount = samples
                .iter()
                .filter(|s| s.target == cand.combination)
                .count() as u64;
            prop_assert_eq!(recount, cand.frequency);
        }
        // Totality: every vocabulary emoji appears as a length-1 candidate.
        for id in 0..5u32 {
            prop_assert!(dict
                .candidates()
                .iter()
                .any(|c| c.combination.ids() == [EmojiId(id)]));
        }
    }
}
