//! Multiset precision/recall/F1 scoring of predicted combinations and the
//! strategy comparison grid.
//!
//! Metrics are order-insensitive and micro-averaged: counts are pooled over
//! all samples before any division. An exact-sequence-match rate is reported
//! as a supplementary column. Percentages are computed from exact fractions
//! and rounded only at display time.

use crate::corpus::{CandidateDictionary, Combination, Sample};
use crate::error::{Error, Result};
use crate::model::ProbabilityModel;
use crate::strategy::{greedy_topk, naive_top3, Ranker};

/// Per-sample counts: multiset true positives and the two sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleScore {
    pub tp: usize,
    pub pred_size: usize,
    pub target_size: usize,
    /// Whether the predicted sequence equals the target exactly, order
    /// included (supplementary metric).
    pub exact: bool,
}

/// Multiset intersection size: `tp = Σ_e min(count_pred(e), count_target(e))`.
pub fn sample_score(pred: &Combination, target: &Combination) -> SampleScore {
    let mut tp = 0;
    let mut counted: Vec<u32> = Vec::with_capacity(3);
    for &id in pred.ids() {
        if counted.contains(&id.0) {
            continue;
        }
        counted.push(id.0);
        let in_pred = pred.ids().iter().filter(|&&x| x == id).count();
        let in_target = target.ids().iter().filter(|&&x| x == id).count();
        tp += in_pred.min(in_target);
    }
    SampleScore {
        tp,
        pred_size: pred.len(),
        target_size: target.len(),
        exact: pred == target,
    }
}

/// One row of the strategy comparison. Metric fields are exact fractions in
/// [0, 1]; the `*_pct` accessors scale for display.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub strategy: String,
    pub params: String,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub exact_match: f64,
    pub n_samples: usize,
}

impl EvalReport {
    pub fn recall_pct(&self) -> f64 {
        self.recall * 100.0
    }

    pub fn precision_pct(&self) -> f64 {
        self.precision * 100.0
    }

    /// F1 scaled by 100.
    pub fn f1_x100(&self) -> f64 {
        self.f1 * 100.0
    }

    pub fn exact_match_pct(&self) -> f64 {
        self.exact_match * 100.0
    }
}

/// Micro-averaged aggregation over per-sample scores.
pub fn aggregate(
    strategy: impl Into<String>,
    params: impl Into<String>,
    scores: impl IntoIterator<Item = SampleScore>,
) -> Result<EvalReport> {
    let (mut tp, mut pred, mut target, mut exact, mut n) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for s in scores {
        tp += s.tp;
        pred += s.pred_size;
        target += s.target_size;
        exact += s.exact as usize;
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoSamples("cannot aggregate zero scores".into()));
    }
    let precision = tp as f64 / pred as f64;
    let recall = tp as f64 / target as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(EvalReport {
        strategy: strategy.into(),
        params: params.into(),
        recall,
        precision,
        f1,
        exact_match: exact as f64 / n as f64,
        n_samples: n,
    })
}

/// One strategy configuration of the comparison grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategySpec {
    Naive,
    Greedy { threshold: f64 },
    Retrieval { penalty: f64 },
}

impl StrategySpec {
    pub fn label(&self) -> &'static str {
        match self {
            StrategySpec::Naive => "naive",
            StrategySpec::Greedy { .. } => "greedy",
            StrategySpec::Retrieval { .. } => "retrieval",
        }
    }

    pub fn params(&self) -> String {
        match self {
            StrategySpec::Naive => String::new(),
            StrategySpec::Greedy { threshold } => format!("thr={threshold}"),
            StrategySpec::Retrieval { penalty } => format!("pen={penalty}"),
        }
    }
}

/// The standard 8-row grid: naive, greedy at thresholds 0.4/0.3/0.2, and
/// retrieval at penalties 0/0.2/0.3/0.4.
pub fn default_grid() -> Vec<StrategySpec> {
    vec![
        StrategySpec::Naive,
        StrategySpec::Greedy { threshold: 0.4 },
        StrategySpec::Greedy { threshold: 0.3 },
        StrategySpec::Greedy { threshold: 0.2 },
        StrategySpec::Retrieval { penalty: 0.0 },
        StrategySpec::Retrieval { penalty: 0.2 },
        StrategySpec::Retrieval { penalty: 0.3 },
        StrategySpec::Retrieval { penalty: 0.4 },
    ]
}

/// Evaluates every grid configuration over the same per-sample predictions
/// of the same model. Deterministic for fixed inputs.
pub fn compare_strategies(
    model: &dyn ProbabilityModel,
    samples: &[Sample],
    dict: &CandidateDictionary,
    grid: &[StrategySpec],
) -> Result<Vec<EvalReport>> {
    if samples.is_empty() {
        return Err(Error::NoSamples("cannot evaluate on an empty dataset".into()));
    }
    let ranker = Ranker::new(dict);
    let mut per_spec: Vec<Vec<SampleScore>> = vec![Vec::with_capacity(samples.len()); grid.len()];
    for (i, sample) in samples.iter().enumerate() {
        let p = model.predict_sample(i, &sample.context);
        for (spec, scores) in grid.iter().zip(&mut per_spec) {
            let pred = match spec {
                StrategySpec::Naive => naive_top3(&p)?,
                StrategySpec::Greedy { threshold } => greedy_topk(&p, *threshold, 3),
                StrategySpec::Retrieval { penalty } => {
                    ranker.predict(&p, *penalty).combination
                }
            };
            scores.push(sample_score(&pred, &sample.target));
        }
    }
    grid.iter()
        .zip(per_spec)
        .map(|(spec, scores)| aggregate(spec.label(), spec.params(), scores))
        .collect()
}

/// Renders reports as CSV with the fixed column order.
pub fn report_csv(reports: &[EvalReport]) -> String {
    let mut out =
        String::from("strategy,params,recall_pct,precision_pct,f1_x100,exact_match_pct,n_samples\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{}\n",
            r.strategy,
            r.params,
            r.recall_pct(),
            r.precision_pct(),
            r.f1_x100(),
            r.exact_match_pct(),
            r.n_samples
        ));
    }
    out
}
