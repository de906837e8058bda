//! Ranking metrics and the repeated-scenario experiment harness.

mod experiment;

pub use experiment::{
    run_experiment, write_curves_csv, write_report_csv, write_report_json, write_timing_json,
    ExperimentConfig, ExperimentReport, MethodSummary, TrialResult,
};

use crate::error::{Error, Result};
use crate::pipeline::SuspicionRanking;

pub const DEFAULT_MAP_N: usize = 20;

/// A ranking together with the true fraud label of each consumer.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRanking {
    pub ranking: SuspicionRanking,
    pub fraud: Vec<bool>,
}

impl LabeledRanking {
    pub fn new(ranking: SuspicionRanking, fraud: Vec<bool>) -> Result<Self> {
        if ranking.len() != fraud.len() {
            return Err(Error::Shape(format!(
                "{} ranked consumers but {} labels",
                ranking.len(),
                fraud.len()
            )));
        }
        Ok(LabeledRanking { ranking, fraud })
    }

    pub fn auc(&self) -> Result<f64> {
        auc(&self.ranking.ranks, &self.fraud)
    }

    pub fn map_at_n(&self, n: usize) -> Result<f64> {
        map_at_n(&self.ranking.ranks, &self.fraud, n)
    }
}

/// `(Σ_{fraud} rank − |F|(|F|+1)/2) / (|F|·|B|)` with ranks ascending in
/// suspicion.
pub fn auc(ranks: &[f64], fraud: &[bool]) -> Result<f64> {
    if ranks.len() != fraud.len() {
        return Err(Error::Shape(format!("{} ranks but {} labels", ranks.len(), fraud.len())));
    }
    let f = fraud.iter().filter(|&&x| x).count();
    let b = fraud.len() - f;
    if f == 0 || b == 0 {
        return Err(Error::Metric(format!(
            "AUC needs both classes, got {f} fraudulent and {b} benign"
        )));
    }
    let sum: f64 = ranks.iter().zip(fraud).filter(|(_, &x)| x).map(|(r, _)| r).sum();
    let (f, b) = (f as f64, b as f64);
    Ok((sum - f * (f + 1.0) / 2.0) / (f * b))
}

/// Consumer indices from most to least suspicious; equal ranks keep input
/// order.
pub fn suspicion_order(ranks: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_by(|&a, &b| ranks[b].total_cmp(&ranks[a]).then(a.cmp(&b)));
    order
}

/// With thieves at top-`n` positions `k_1 < … < k_r`, the mean of `i / k_i`;
/// 0 when no thief reaches the top `n`.
pub fn map_at_n(ranks: &[f64], fraud: &[bool], n: usize) -> Result<f64> {
    if ranks.len() != fraud.len() {
        return Err(Error::Shape(format!("{} ranks but {} labels", ranks.len(), fraud.len())));
    }
    if n == 0 {
        return Err(Error::Parameter("MAP@N needs N >= 1".into()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &c) in suspicion_order(ranks).iter().take(n).enumerate() {
        if fraud[c] {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(if hits == 0 { 0.0 } else { sum / hits as f64 })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::average_ranks;
    use proptest::prelude::*;
    use rand::Rng as _;

    /// Area under the empirical ROC curve by the trapezoid rule, sweeping
    /// thresholds over distinct scores from high to low.
    fn trapezoid_auc(scores: &[f64], fraud: &[bool]) -> f64 {
        let p = fraud.iter().filter(|&&x| x).count() as f64;
        let n = fraud.len() as f64 - p;
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let (mut tpr0, mut fpr0, mut area) = (0.0, 0.0, 0.0);
        for t in thresholds {
            let tp = scores.iter().zip(fraud).filter(|(s, &f)| **s >= t && f).count() as f64;
            let fp = scores.iter().zip(fraud).filter(|(s, &f)| **s >= t && !f).count() as f64;
            let (tpr, fpr) = (tp / p, fp / n);
            area += (fpr - fpr0) * (tpr + tpr0) / 2.0;
            tpr0 = tpr;
            fpr0 = fpr;
        }
        area
    }

    fn mann_whitney(scores: &[f64], fraud: &[bool]) -> f64 {
        let mut u = 0.0;
        let mut pairs = 0.0;
        for (i, &fi) in fraud.iter().enumerate() {
            for (j, &fj) in fraud.iter().enumerate() {
                if fi && !fj {
                    pairs += 1.0;
                    u += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        u / pairs
    }

    #[test]
    fn auc_examples() {
        let fraud = [false, false, false, true, true];
        assert_eq!(auc(&[1.0, 2.0, 3.0, 4.0, 5.0], &fraud).unwrap(), 1.0);
        assert_eq!(auc(&[5.0, 4.0, 3.0, 1.0, 2.0], &fraud).unwrap(), 0.0);
        assert!(matches!(auc(&[1.0, 2.0], &[true, true]), Err(Error::Metric(_))));
    }

    #[test]
    fn map_examples() {
        let mut fraud = vec![false; 30];
        fraud[0] = true;
        fraud[3] = true;
        let ranks: Vec<f64> = (0..30).map(|i| 30.0 - i as f64).collect();
        assert_eq!(map_at_n(&ranks, &fraud, 20).unwrap(), 0.75);
        let none = vec![false; 30];
        assert_eq!(map_at_n(&ranks, &none, 20).unwrap(), 0.0);
        let mut late = vec![false; 30];
        late[25] = true;
        assert_eq!(map_at_n(&ranks, &late, 20).unwrap(), 0.0);
    }

    #[test]
    fn single_trial_has_zero_spread() {
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }

    #[test]
    fn matches_roc_and_mann_whitney_oracles() {
        let mut rng = crate::rng::stream(17, &[]);
        for _ in 0..200 {
            let n = rng.random_range(3..60);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
            let mut fraud: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
            fraud[0] = true;
            fraud[1] = false;
            let a = auc(&average_ranks(&scores), &fraud).unwrap();
            assert!((a - trapezoid_auc(&scores, &fraud)).abs() < 1e-12);
            assert!((a - mann_whitney(&scores, &fraud)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn reversal_and_bounds(v in prop::collection::vec(-1.0f64..1.0, 4..50), mask in prop::collection::vec(any::<bool>(), 50)) {
            let mut fraud: Vec<bool> = mask[..v.len()].to_vec();
            fraud[0] = true;
            fraud[1] = false;
            let mut distinct = v.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            prop_assume!(distinct.len() == v.len());
            let up = auc(&average_ranks(&v), &fraud).unwrap();
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            let down = auc(&average_ranks(&neg), &fraud).unwrap();
            prop_assert!((up + down - 1.0).abs() < 1e-12);
            let t: Vec<f64> = v.iter().map(|x| x.powi(3) * 2.0 + 5.0).collect();
            prop_assert_eq!(auc(&average_ranks(&t), &fraud).unwrap(), up);
            let m = map_at_n(&average_ranks(&v), &fraud, 20).unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
        }

        #[test]
        fn map_is_one_when_the_top_is_all_thieves(n_fraud in 1usize..30, n in 1usize..40) {
            let total = 40;
            let fraud: Vec<bool> = (0..total).map(|i| i < n_fraud).collect();
            let ranks: Vec<f64> = (0..total).map(|i| (total - i) as f64).collect();
            prop_assert_eq!(map_at_n(&ranks, &fraud, n).unwrap(), 1.0);
        }
    }
}
