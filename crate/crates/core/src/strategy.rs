//! Combination strategies: turning one probability distribution into a
//! predicted emoji combination.
//!
//! Three strategies are provided. Naive top-3 always takes the three most
//! probable emojis. Greedy takes emojis in probability order until their
//! cumulative mass reaches a threshold (or three emojis). Retrieval ranks
//! mined candidate combinations by the cross-entropy between the candidate's
//! emoji distribution and the predicted distribution, with an additive size
//! penalty for short candidates and training-frequency tie-breaking; lower
//! scores are better.

use crate::corpus::{Candidate, CandidateDictionary, Combination, EmojiId, MAX_COMBINATION_LEN};
use crate::error::{Error, Result};
use crate::model::ProbDistribution;

/// Probability floor inside the logarithm; keeps every score finite and
/// bounds them by `-ln(SCORE_FLOOR)`.
pub const SCORE_FLOOR: f64 = 1e-12;

/// The normalized emoji-count distribution of one candidate:
/// `d[e] = count(e in candidate) / |candidate|`.
///
/// Entries are held in ascending id order, so every ordering of the same
/// multiset produces the identical structure — and therefore the identical
/// floating-point score.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateDistribution {
    entries: Vec<(EmojiId, f64)>,
    len: usize,
}

impl CandidateDistribution {
    pub fn from_combination(combination: &Combination) -> Self {
        let mut counts: Vec<(EmojiId, u32)> = Vec::with_capacity(combination.len());
        for &id in combination.ids() {
            match counts.iter_mut().find(|(e, _)| *e == id) {
                Some((_, c)) => *c += 1,
                None => counts.push((id, 1)),
            }
        }
        counts.sort_by_key(|&(id, _)| id);
        let len = combination.len();
        CandidateDistribution {
            entries: counts
                .into_iter()
                .map(|(id, c)| (id, c as f64 / len as f64))
                .collect(),
            len,
        }
    }

    pub fn entries(&self) -> &[(EmojiId, f64)] {
        &self.entries
    }

    /// Length of the underlying combination.
    pub fn combination_len(&self) -> usize {
        self.len
    }

    /// Cross-entropy against a predicted distribution, accumulated in
    /// canonical (ascending id) order.
    pub fn cross_entropy(&self, p: &ProbDistribution) -> f64 {
        let mut acc = 0.0;
        for &(id, w) in &self.entries {
            let pv = p.get(id);
            let pv = if pv < SCORE_FLOOR { SCORE_FLOOR } else { pv };
            acc += w * pv.ln();
        }
        -acc
    }
}

/// Picks the three most probable emojis, ordered by descending probability
/// (ties by ascending id).
pub fn naive_top3(p: &ProbDistribution) -> Result<Combination> {
    if p.k() < 3 {
        return Err(Error::InvalidInput(format!(
            "naive top-3 needs K >= 3, got K = {}",
            p.k()
        )));
    }
    Ok(Combination::new(ranked_ids(p).take(3).collect()))
}

/// Takes emojis in descending probability order until the cumulative
/// probability reaches `threshold` or `max_len` emojis were taken. Always
/// emits at least one emoji.
pub fn greedy_topk(p: &ProbDistribution, threshold: f64, max_len: usize) -> Combination {
    assert!(
        threshold > 0.0 && threshold <= 1.0,
        "threshold must be in (0, 1], got {threshold}"
    );
    assert!((1..=MAX_COMBINATION_LEN).contains(&max_len));
    let mut ids = Vec::new();
    let mut cumulative = 0.0;
    for id in ranked_ids(p) {
        cumulative += p.get(id);
        ids.push(id);
        if cumulative >= threshold || ids.len() == max_len {
            break;
        }
    }
    Combination::new(ids)
}

fn ranked_ids(p: &ProbDistribution) -> impl Iterator<Item = EmojiId> {
    let mut order: Vec<(usize, f64)> = p.as_slice().iter().copied().enumerate().collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    order.into_iter().map(|(i, _)| EmojiId(i as u32))
}

/// Eq. score of one candidate: the cross-entropy between the candidate's
/// emoji distribution and the prediction. Order-invariant by construction.
pub fn score_candidate(p: &ProbDistribution, candidate: &Combination) -> f64 {
    CandidateDistribution::from_combination(candidate).cross_entropy(p)
}

/// A retrieval result: the winning candidate with its penalized score and
/// the training frequency used for tie-breaking.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    pub combination: Combination,
    pub score: f64,
    pub frequency: u64,
}

/// Reusable retrieval scorer with the per-candidate distributions
/// precomputed once.
pub struct Ranker<'a> {
    candidates: &'a [Candidate],
    distributions: Vec<CandidateDistribution>,
}

impl<'a> Ranker<'a> {
    pub fn new(dict: &'a CandidateDictionary) -> Self {
        Ranker {
            candidates: dict.candidates(),
            distributions: dict
                .candidates()
                .iter()
                .map(|c| CandidateDistribution::from_combination(&c.combination))
                .collect(),
        }
    }

    /// Returns the candidate minimizing `S + penalty * (3 - len)`; ties go to
    /// the higher training frequency, then the lexicographically smaller id
    /// sequence.
    pub fn predict(&self, p: &ProbDistribution, penalty: f64) -> RankedPrediction {
        assert!(penalty >= 0.0, "size penalty must be non-negative");
        let mut best: Option<(usize, f64)> = None;
        for (i, dist) in self.distributions.iter().enumerate() {
            let score = dist.cross_entropy(p)
                + penalty * (MAX_COMBINATION_LEN - dist.combination_len()) as f64;
            let better = match best {
                None => true,
                Some((j, best_score)) => {
                    match score.partial_cmp(&best_score).unwrap() {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Greater => false,
                        std::cmp::Ordering::Equal => {
                            let (a, b) = (&self.candidates[i], &self.candidates[j]);
                            a.frequency > b.frequency
                                || (a.frequency == b.frequency
                                    && a.combination < b.combination)
                        }
                    }
                }
            };
            if better {
                best = Some((i, score));
            }
        }
        let (i, score) = best.expect("dictionary is never empty");
        RankedPrediction {
            combination: self.candidates[i].combination.clone(),
            score,
            frequency: self.candidates[i].frequency,
        }
    }
}

/// One-shot retrieval over a dictionary. Builds a [`Ranker`] internally;
/// callers ranking many distributions should hold a `Ranker` instead.
pub fn retrieval_predict(
    p: &ProbDistribution,
    dict: &CandidateDictionary,
    penalty: f64,
) -> RankedPrediction {
    Ranker::new(dict).predict(p, penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Candidate;

    fn dist(p: &[f64]) -> ProbDistribution {
        ProbDistribution::new(p.to_vec()).unwrap()
    }

    fn combo(ids: &[u32]) -> Combination {
        Combination::from_iter(ids.iter().copied())
    }

    fn dict_of(entries: &[(&[u32], u64)]) -> CandidateDictionary {
        CandidateDictionary::from_candidates(
            entries
                .iter()
                .map(|&(ids, frequency)| Candidate {
                    combination: combo(ids),
                    frequency,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn naive_sorts_by_probability() {
        let c = naive_top3(&dist(&[0.1, 0.4, 0.2, 0.3])).unwrap();
        assert_eq!(c, combo(&[1, 3, 2]));
    }

    #[test]
    fn naive_breaks_ties_by_id() {
        let c = naive_top3(&ProbDistribution::uniform(5)).unwrap();
        assert_eq!(c, combo(&[0, 1, 2]));
    }

    #[test]
    fn naive_one_hot_fills_with_smallest_ids() {
        let mut p = vec![0.0; 10];
        p[7] = 1.0;
        let c = naive_top3(&dist(&p)).unwrap();
        assert_eq!(c, combo(&[7, 0, 1]));
    }

    #[test]
    fn naive_needs_three_classes() {
        assert!(naive_top3(&ProbDistribution::uniform(2)).is_err());
    }

    #[test]
    fn greedy_stops_at_threshold() {
        let p = dist(&[0.5, 0.3, 0.2]);
        assert_eq!(greedy_topk(&p, 0.4, 3), combo(&[0]));
    }

    #[test]
    fn greedy_takes_two_when_needed() {
        let p = dist(&[0.35, 0.25, 0.2, 0.2]);
        assert_eq!(greedy_topk(&p, 0.4, 3), combo(&[0, 1]));
    }

    #[test]
    fn greedy_caps_at_max_len() {
        let p = ProbDistribution::uniform(500);
        assert_eq!(greedy_topk(&p, 0.4, 3).len(), 3);
    }

    #[test]
    fn greedy_with_threshold_one_matches_naive() {
        let p = dist(&[0.3, 0.25, 0.2, 0.15, 0.1]);
        assert_eq!(greedy_topk(&p, 1.0, 3), naive_top3(&p).unwrap());
    }

    #[test]
    fn greedy_prefixes_grow_with_threshold() {
        let p = dist(&[0.4, 0.3, 0.2, 0.1]);
        let short = greedy_topk(&p, 0.2, 3);
        let long = greedy_topk(&p, 0.9, 3);
        assert_eq!(long.ids()[..short.len()], *short.ids());
    }

    #[test]
    fn score_zero_for_certain_single() {
        let p = dist(&[1.0, 0.0, 0.0]);
        assert_eq!(score_candidate(&p, &combo(&[0])), 0.0);
    }

    #[test]
    fn score_uniform_is_log_k() {
        let p = ProbDistribution::uniform(500);
        let s = score_candidate(&p, &combo(&[123]));
        assert!((s - 500f64.ln()).abs() < 1e-9, "got {s}");
    }

    #[test]
    fn score_hand_derived_pair() {
        let p = dist(&[0.5, 0.3, 0.2]);
        let s = score_candidate(&p, &combo(&[0, 1]));
        let expected = -(0.5 * 0.5f64.ln() + 0.5 * 0.3f64.ln());
        assert!((s - 0.948560).abs() < 1e-6, "got {s}");
        assert_eq!(s, expected);
    }

    #[test]
    fn score_is_order_invariant_bitwise() {
        let p = dist(&[0.05, 0.4, 0.3, 0.25]);
        let orderings = [[0u32, 1, 2], [2, 1, 0], [1, 0, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1]];
        let scores: Vec<f64> = orderings
            .iter()
            .map(|ids| score_candidate(&p, &combo(ids)))
            .collect();
        for s in &scores[1..] {
            assert_eq!(s.to_bits(), scores[0].to_bits());
        }
    }

    #[test]
    fn score_respects_floor_bound() {
        let p = dist(&[1.0, 0.0, 0.0]);
        let s = score_candidate(&p, &combo(&[1, 2, 2]));
        assert!(s <= -SCORE_FLOOR.ln() + 1e-9);
        assert!(s >= 0.0);
    }

    #[test]
    fn retrieval_certain_candidate_wins() {
        let dict = dict_of(&[(&[0], 5), (&[1], 4), (&[0, 1], 3), (&[2], 0)]);
        let p = dist(&[1.0, 0.0, 0.0]);
        let out = retrieval_predict(&p, &dict, 0.0);
        assert_eq!(out.combination, combo(&[0]));
        assert_eq!(out.score, 0.0);
    }

    #[test]
    fn penalty_shifts_scores_by_missing_length() {
        let p = dist(&[0.5, 0.3, 0.2]);
        let single = combo(&[0]);
        let triple = combo(&[0, 1, 2]);
        let pen = 0.3;
        let s1 = score_candidate(&p, &single) + pen * 2.0;
        let s3 = score_candidate(&p, &triple);
        let dict = dict_of(&[(&[0], 1), (&[0, 1, 2], 1)]);
        let out = retrieval_predict(&p, &dict, pen);
        let expected = if s1 <= s3 { combo(&[0]) } else { combo(&[0, 1, 2]) };
        assert_eq!(out.combination, expected);
        // And the penalized difference is exactly pen * (3 - 1) apart from
        // the raw-score difference.
        let raw1 = score_candidate(&p, &single);
        assert!((s1 - raw1 - 0.6).abs() < 1e-15);
    }

    #[test]
    fn retrieval_frequency_breaks_reordering_ties() {
        let dict = dict_of(&[(&[0, 1], 3), (&[1, 0], 1)]);
        let p = dist(&[0.6, 0.3, 0.1]);
        let out = retrieval_predict(&p, &dict, 0.0);
        assert_eq!(out.combination, combo(&[0, 1]));
        assert_eq!(out.frequency, 3);

        let flipped = dict_of(&[(&[1, 0], 3), (&[0, 1], 1)]);
        let out = retrieval_predict(&p, &flipped, 0.0);
        assert_eq!(out.combination, combo(&[1, 0]));
    }

    #[test]
    fn penalty_algebra_is_linear() {
        let p = dist(&[0.25, 0.25, 0.3, 0.2]);
        for ids in [&[2u32][..], &[0, 1], &[3, 2, 0]] {
            let c = combo(ids);
            let s = score_candidate(&p, &c);
            for (pen1, pen2) in [(0.0, 0.2), (0.2, 0.4), (0.0, 0.4)] {
                let s1 = s + pen1 * (3 - c.len()) as f64;
                let s2 = s + pen2 * (3 - c.len()) as f64;
                let expected = (pen2 - pen1) * (3 - c.len()) as f64;
                assert!(((s2 - s1) - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn retrieval_matches_brute_force_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for round in 0..60 {
            let k = rng.gen_range(3..=10);
            let mut p: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            if round % 4 == 0 {
                // Exercise the floor: zero out a couple of entries.
                p[0] = 0.0;
                if k > 4 {
                    p[4] = 0.0;
                }
            }
            let total: f64 = p.iter().sum();
            for x in &mut p {
                *x /= total;
            }
            let p = dist(&p);

            let n_cands = rng.gen_range(1..=40);
            let mut combos: Vec<Vec<u32>> = Vec::new();
            for _ in 0..n_cands {
                let len = rng.gen_range(1..=3);
                let ids: Vec<u32> = (0..len).map(|_| rng.gen_range(0..k) as u32).collect();
                if !combos.contains(&ids) {
                    combos.push(ids);
                }
            }
            // Seed reordering ties.
            if combos[0].len() > 1 {
                let mut rev = combos[0].clone();
                rev.reverse();
                if !combos.contains(&rev) {
                    combos.push(rev);
                }
            }
            let mut candidates: Vec<Candidate> = combos
                .into_iter()
                .map(|ids| Candidate {
                    combination: combo(&ids),
                    frequency: rng.gen_range(0..20),
                })
                .collect();
            candidates.sort_by(|a, b| {
                b.frequency
                    .cmp(&a.frequency)
                    .then_with(|| a.combination.cmp(&b.combination))
            });
            let dict = CandidateDictionary::from_candidates(candidates.clone()).unwrap();
            let pen = [0.0, 0.2, 0.3, 0.4][rng.gen_range(0..4)];

            let got = retrieval_predict(&p, &dict, pen);

            // Independent exhaustive argmin with the same tie rules.
            let mut best: Option<(f64, u64, &Candidate)> = None;
            for c in &candidates {
                let mut weights: std::collections::BTreeMap<u32, u32> =
                    std::collections::BTreeMap::new();
                for id in c.combination.ids() {
                    *weights.entry(id.0).or_insert(0) += 1;
                }
                let mut acc = 0.0;
                for (&id, &cnt) in &weights {
                    let pv = p.as_slice()[id as usize];
                    let pv = if pv < 1e-12 { 1e-12 } else { pv };
                    acc += (cnt as f64 / c.combination.len() as f64) * pv.ln();
                }
                let s = -acc + pen * (3 - c.combination.len()) as f64;
                let replace = match &best {
                    None => true,
                    Some((bs, bf, bc)) => {
                        s < *bs
                            || (s == *bs
                                && (c.frequency > *bf
                                    || (c.frequency == *bf && c.combination < bc.combination)))
                    }
                };
                if replace {
                    best = Some((s, c.frequency, c));
                }
            }
            let oracle = best.unwrap();
            assert_eq!(
                got.combination, oracle.2.combination,
                "round {round}: retrieval disagrees with oracle"
            );
        }
    }
}
