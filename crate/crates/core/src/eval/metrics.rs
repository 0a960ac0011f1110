//! Threshold-free and threshold-swept classification metrics over
//! `(label, score)` pairs. Higher scores mean "more likely positive".

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("need at least one positive and one negative sample ({positives} positives, {negatives} negatives)")]
    SingleClass { positives: usize, negatives: usize },
    #[error("sample {index} has a non-finite score")]
    NonFiniteScore { index: usize },
    #[error("sample {index} has label {label}; labels must be 0 or 1")]
    InvalidLabel { index: usize, label: u8 },
    #[error("threshold grid is empty")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub label: u8,
    pub score: f64,
}

impl EvalSample {
    pub fn new(label: u8, score: f64) -> Self {
        Self { label, score }
    }

    fn positive(&self) -> bool {
        self.label == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub positives: usize,
    pub negatives: usize,
    pub curve_points: Vec<CurvePoint>,
}

fn validate(samples: &[EvalSample]) -> Result<(usize, usize), EvalError> {
    let mut pos = 0;
    for (index, s) in samples.iter().enumerate() {
        if s.label > 1 {
            return Err(EvalError::InvalidLabel {
                index,
                label: s.label,
            });
        }
        if !s.score.is_finite() {
            return Err(EvalError::NonFiniteScore { index });
        }
        pos += s.positive() as usize;
    }
    let neg = samples.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass {
            positives: pos,
            negatives: neg,
        });
    }
    Ok((pos, neg))
}

/// Mann-Whitney U of the positives, doubled so that half-credit ties stay
/// integral. Returns `(2U, n_pos, n_neg)`.
pub fn mann_whitney_u_doubled(samples: &[EvalSample]) -> Result<(u64, usize, usize), EvalError> {
    let (pos, neg) = validate(samples)?;
    let mut order: Vec<&EvalSample> = samples.iter().collect();
    order.sort_by(|a, b| a.score.total_cmp(&b.score));

    // Sum over positives of twice their (mid)rank.
    let mut rank_sum_doubled: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && order[end].score == order[start].score {
            end += 1;
        }
        let group = (end - start) as u64;
        let doubled_midrank = 2 * start as u64 + group + 1;
        let group_pos = order[start..end].iter().filter(|s| s.positive()).count() as u64;
        rank_sum_doubled += group_pos * doubled_midrank;
        start = end;
    }
    let pos64 = pos as u64;
    Ok((rank_sum_doubled - pos64 * (pos64 + 1), pos, neg))
}

/// ROC-AUC as the normalized Mann-Whitney statistic; ties count one half.
pub fn roc_auc(samples: &[EvalSample]) -> Result<f64, EvalError> {
    let (u2, pos, neg) = mann_whitney_u_doubled(samples)?;
    Ok(u2 as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Cumulative confusion counts at each distinct score, highest first.
/// Entry `i` counts samples with `score >= thresholds[i]`.
fn cumulative_counts(samples: &[EvalSample]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<&EvalSample> = samples.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < order.len() {
        let threshold = order[i].score;
        while i < order.len() && order[i].score == threshold {
            if order[i].positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((threshold, tp, fp));
    }
    out
}

/// Area under the precision-recall curve with step-wise (non-interpolated)
/// integration: `sum_k (R_k - R_{k-1}) * P_k` over distinct thresholds.
pub fn pr_auc(samples: &[EvalSample]) -> Result<f64, EvalError> {
    let (pos, _) = validate(samples)?;
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for (_, tp, fp) in cumulative_counts(samples) {
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

/// ROC/PR curve points (predicate `score >= threshold`) with the ROC area
/// integrated by the trapezoid rule.
pub fn summarize(samples: &[EvalSample]) -> Result<CurveSummary, EvalError> {
    let (pos, neg) = validate(samples)?;
    let n = samples.len() as f64;
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        tpr: 0.0,
        fpr: 0.0,
        precision: 1.0,
        recall: 0.0,
        accuracy: neg as f64 / n,
    }];
    let mut trapezoid = 0.0;
    for (threshold, tp, fp) in cumulative_counts(samples) {
        let tpr = tp as f64 / pos as f64;
        let fpr = fp as f64 / neg as f64;
        let last = points.last().unwrap();
        trapezoid += (fpr - last.fpr) * (tpr + last.tpr) / 2.0;
        points.push(CurvePoint {
            threshold,
            tpr,
            fpr,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tpr,
            accuracy: (tp + (neg - fp)) as f64 / n,
        });
    }
    Ok(CurveSummary {
        roc_auc: trapezoid,
        pr_auc: pr_auc(samples)?,
        positives: pos,
        negatives: neg,
        curve_points: points,
    })
}

/// Accuracy of the rule "reject iff `score > gamma`" at each grid value.
pub fn threshold_sweep(samples: &[EvalSample], grid: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let n = samples.len().max(1) as f64;
    Ok(grid
        .iter()
        .map(|&gamma| {
            let correct = samples
                .iter()
                .filter(|s| (s.score > gamma) == s.positive())
                .count();
            (gamma, correct as f64 / n)
        })
        .collect())
}

/// `0.1, 0.2, ..., 0.9`.
pub fn default_threshold_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn samples(pairs: &[(u8, f64)]) -> Vec<EvalSample> {
        pairs.iter().map(|&(l, s)| EvalSample::new(l, s)).collect()
    }

    /// O(n^2) pair counting, ties worth one half.
    fn pair_count_auc(s: &[EvalSample]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for p in s.iter().filter(|x| x.label == 1) {
            for q in s.iter().filter(|x| x.label == 0) {
                den += 1.0;
                if p.score > q.score {
                    num += 1.0;
                } else if p.score == q.score {
                    num += 0.5;
                }
            }
        }
        num / den
    }

    #[test]
    fn separated_and_tied() {
        let sep = samples(&[(0, 0.1), (0, 0.2), (1, 0.8), (1, 0.9)]);
        assert_eq!(roc_auc(&sep).unwrap(), 1.0);
        assert_eq!(pr_auc(&sep).unwrap(), 1.0);
        let ties = samples(&[(0, 0.5), (1, 0.5), (0, 0.5), (1, 0.5), (1, 0.5)]);
        assert_eq!(roc_auc(&ties).unwrap(), 0.5);
        assert_eq!(summarize(&ties).unwrap().roc_auc, 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        let all_pos = samples(&[(1, 0.1), (1, 0.2)]);
        assert!(matches!(
            roc_auc(&all_pos),
            Err(EvalError::SingleClass { .. })
        ));
        assert!(matches!(
            pr_auc(&all_pos),
            Err(EvalError::SingleClass { .. })
        ));
        assert!(roc_auc(&[]).is_err());
        assert!(matches!(
            roc_auc(&samples(&[(2, 0.1), (0, 0.2)])),
            Err(EvalError::InvalidLabel { .. })
        ));
        assert!(matches!(
            roc_auc(&samples(&[(1, f64::NAN), (0, 0.2)])),
            Err(EvalError::NonFiniteScore { .. })
        ));
    }

    #[test]
    fn rank_and_trapezoid_match_pair_counting() {
        let mut rng = SplitMix64::new(31);
        let s: Vec<EvalSample> = (0..200)
            .map(|_| {
                let label = (rng.next_f64() < 0.4) as u8;
                // Coarse grid so ties are common.
                let score = ((rng.next_normal() + label as f64) * 4.0).round() / 4.0;
                EvalSample::new(label, score)
            })
            .collect();
        let oracle = pair_count_auc(&s);
        assert!((roc_auc(&s).unwrap() - oracle).abs() <= 1e-9);
        assert!((summarize(&s).unwrap().roc_auc - oracle).abs() <= 1e-9);
    }

    #[test]
    fn pr_auc_hand_example() {
        // Descending: 0.9(+) 0.8(-) 0.7(+) 0.6(-).
        // Thresholds: R=1/2,P=1 ; R=1/2,P=1/2 ; R=1,P=2/3 ; R=1,P=1/2.
        // AP = 0.5*1 + 0.5*(2/3) = 5/6.
        let s = samples(&[(1, 0.9), (0, 0.8), (1, 0.7), (0, 0.6)]);
        assert!((pr_auc(&s).unwrap() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn random_scores_pr_auc_near_prevalence() {
        let mut rng = SplitMix64::new(77);
        let s: Vec<EvalSample> = (0..2000)
            .map(|i| EvalSample::new((i % 2) as u8, rng.next_f64()))
            .collect();
        let ap = pr_auc(&s).unwrap();
        assert!((0.45..=0.55).contains(&ap), "{ap}");
    }

    #[test]
    fn sweep_examples() {
        let s = samples(&[(0, 0.1), (0, 0.3), (1, 0.7), (1, 0.9), (1, 0.8)]);
        let sweep = threshold_sweep(&s, &[0.5, 0.0]).unwrap();
        assert_eq!(sweep[0], (0.5, 1.0));
        // gamma below every score: accuracy equals positive prevalence.
        assert_eq!(sweep[1], (0.0, 3.0 / 5.0));
        assert!(threshold_sweep(&s, &[]).is_err());
        assert_eq!(default_threshold_grid().len(), 9);
    }

    #[test]
    fn curve_points_are_bounded() {
        let s = samples(&[(0, 0.1), (1, 0.3), (0, 0.3), (1, 0.9)]);
        let summary = summarize(&s).unwrap();
        assert_eq!(summary.curve_points.len(), 4);
        let last = summary.curve_points.last().unwrap();
        assert_eq!((last.tpr, last.fpr), (1.0, 1.0));
        for p in &summary.curve_points {
            assert!((0.0..=1.0).contains(&p.accuracy));
        }
    }
}
