use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::dimension(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::validation("scores contain NaN"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::validation(
            "metric needs at least one positive and one negative",
        ));
    }
    Ok((pos, neg))
}

/// Step-wise area under the precision-recall curve,
/// `sum_n (R_n - R_{n-1}) P_n` over the distinct score thresholds in
/// descending order. Tied scores enter together, so the result does not
/// depend on input order.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check_inputs(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let (mut seen, mut hits) = (0usize, 0usize);
    let mut sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let new_hits = idx[start..end].iter().filter(|&&i| labels[i]).count();
        seen += end - start;
        hits += new_hits;
        sum += new_hits as f64 * hits as f64 / seen as f64;
        start = end;
    }
    Ok(sum / pos as f64)
}

/// Area under the ROC curve via the rank-sum statistic; ties get average
/// ranks, i.e. count one half.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share their mean
        let avg = (start + 1 + end) as f64 / 2.0;
        rank_sum += avg * idx[start..end].iter().filter(|&&i| labels[i]).count() as f64;
        start = end;
    }
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Rank of one positive among sampled negatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOutcome {
    /// `1 + #{neg > pos} + #{neg == pos} / 2`.
    pub rank: f64,
}

impl RankOutcome {
    pub fn recall_at(&self, k: usize) -> f64 {
        if self.rank <= k as f64 {
            1.0
        } else {
            0.0
        }
    }

    pub fn reciprocal_rank(&self) -> f64 {
        1.0 / self.rank
    }
}

pub fn rank_of(pos_score: f64, neg_scores: &[f64]) -> RankOutcome {
    let mut above = 0.0;
    for &n in neg_scores {
        if n > pos_score {
            above += 1.0;
        } else if n == pos_score {
            above += 0.5;
        }
    }
    RankOutcome { rank: 1.0 + above }
}

/// `(recall@1, recall@5, reciprocal rank)` for one positive.
pub fn rank_metrics(pos_score: f64, neg_scores: &[f64]) -> (f64, f64, f64) {
    let r = rank_of(pos_score, neg_scores);
    (r.recall_at(1), r.recall_at(5), r.reciprocal_rank())
}

/// Averages rank outcomes over positives.
#[derive(Debug, Clone, Default)]
pub struct RankAccumulator {
    ranks: Vec<f64>,
}

impl RankAccumulator {
    pub fn push(&mut self, r: RankOutcome) {
        self.ranks.push(r.rank);
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn recall_at(&self, k: usize) -> f64 {
        if self.ranks.is_empty() {
            return 0.0;
        }
        self.ranks.iter().filter(|&&r| r <= k as f64).count() as f64 / self.ranks.len() as f64
    }

    pub fn mrr(&self) -> f64 {
        if self.ranks.is_empty() {
            return 0.0;
        }
        self.ranks.iter().map(|r| 1.0 / r).sum::<f64>() / self.ranks.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    #[default]
    Transductive,
    Inductive,
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::Transductive => "transductive",
            Setting::Inductive => "inductive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ap: f64,
    pub auc: f64,
    /// Empty when rank evaluation was disabled.
    pub recall_at: BTreeMap<usize, f64>,
    pub mrr: Option<f64>,
    pub setting: Setting,
    pub n_eval: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_walked_ap() {
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn separated_and_tied() {
        let labels = [true, true, false, false];
        assert_eq!(average_precision(&[4.0, 3.0, 2.0, 1.0], &labels).unwrap(), 1.0);
        assert_eq!(auc_roc(&[4.0, 3.0, 2.0, 1.0], &labels).unwrap(), 1.0);
        assert_eq!(auc_roc(&[1.0; 4], &labels).unwrap(), 0.5);
        // one threshold holding everything: precision is the positive rate
        assert_eq!(average_precision(&[1.0; 4], &labels).unwrap(), 0.5);
        let a = average_precision(&[2.0, 1.0, 1.0, 0.0], &[false, true, false, true]).unwrap();
        let b = average_precision(&[2.0, 1.0, 1.0, 0.0], &[false, false, true, true]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        assert!(average_precision(&[0.1, 0.2], &[true, true]).is_err());
        assert!(auc_roc(&[0.1, 0.2], &[false, false]).is_err());
    }

    #[test]
    fn rank_counting() {
        let negs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(rank_metrics(1000.0, &negs), (1.0, 1.0, 1.0));
        assert_eq!(rank_metrics(-1.0, &negs), (0.0, 0.0, 1.0 / 101.0));
        // above exactly 95 negatives (0..=94)
        assert_eq!(rank_metrics(94.5, &negs), (0.0, 0.0, 1.0 / 6.0));
        assert_eq!(rank_of(50.0, &negs).rank, 50.5);
    }
}
