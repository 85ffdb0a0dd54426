//! Accuracy and macro-averaged precision, recall and F1 for binary labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts and scores with `label` treated as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: u8,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassMetrics {
    fn from_counts(label: u8, tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            label,
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Index 0 scores label 0 as positive, index 1 label 1.
    pub classes: [ClassMetrics; 2],
}

impl MetricsReport {
    pub fn total(&self) -> u64 {
        let c = &self.classes[1];
        c.tp + c.fp + c.fn_ + c.tn
    }
}

/// Per-class counts and their unweighted mean over both classes. A zero
/// denominator makes that score 0.
pub fn metrics(predictions: &[u8], labels: &[u8]) -> Result<MetricsReport> {
    if predictions.len() != labels.len() {
        return Err(Error::shape(format!("{} predictions", labels.len()), predictions.len()));
    }
    if labels.is_empty() {
        return Err(Error::Invalid("no predictions to score".into()));
    }
    let mut m = [[0u64; 2]; 2];
    for (&p, &y) in predictions.iter().zip(labels) {
        m[usize::from(y != 0)][usize::from(p != 0)] += 1;
    }
    let (tn, fp, fn_, tp) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let pos = ClassMetrics::from_counts(1, tp, fp, fn_, tn);
    let neg = ClassMetrics::from_counts(0, tn, fn_, fp, tp);
    Ok(MetricsReport {
        accuracy: ratio(tp + tn, labels.len() as u64),
        macro_precision: (neg.precision + pos.precision) / 2.0,
        macro_recall: (neg.recall + pos.recall) / 2.0,
        macro_f1: (neg.f1 + pos.f1) / 2.0,
        classes: [neg, pos],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn build(tp: usize, fp: usize, fn_: usize, tn: usize) -> (Vec<u8>, Vec<u8>) {
        let mut p = Vec::new();
        let mut y = Vec::new();
        for (n, pred, label) in [(tp, 1, 1), (fp, 1, 0), (fn_, 0, 1), (tn, 0, 0)] {
            p.extend(std::iter::repeat_n(pred, n));
            y.extend(std::iter::repeat_n(label, n));
        }
        (p, y)
    }

    #[test]
    fn hand_computed_confusion() {
        let (p, y) = build(3, 1, 2, 4);
        let r = metrics(&p, &y).unwrap();
        let pos = r.classes[1];
        assert_eq!((pos.tp, pos.fp, pos.fn_, pos.tn), (3, 1, 2, 4));
        assert!((pos.precision - 0.75).abs() < 1e-15);
        assert!((pos.recall - 0.6).abs() < 1e-15);
        assert!((pos.f1 - 2.0 / 3.0).abs() < 1e-15);
        // negative class: tp 4, fp 2, fn 1 -> precision 2/3, recall 4/5, f1 8/11
        let neg = r.classes[0];
        assert!((neg.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((neg.recall - 0.8).abs() < 1e-15);
        assert!((neg.f1 - 8.0 / 11.0).abs() < 1e-15);
        assert!((r.accuracy - 0.7).abs() < 1e-15);
        assert!((r.macro_precision - 17.0 / 24.0).abs() < 1e-15);
        assert!((r.macro_recall - 0.7).abs() < 1e-15);
        assert!((r.macro_f1 - 23.0 / 33.0).abs() < 1e-15);
    }

    #[test]
    fn majority_predictor_has_half_macro_recall() {
        let (p, y) = build(90, 10, 0, 0);
        let r = metrics(&p, &y).unwrap();
        assert_eq!(r.macro_recall, 0.5);
        assert_eq!(r.classes[0].f1, 0.0);
    }

    #[test]
    fn perfect_predictions() {
        let y = vec![0, 1, 1, 0, 1];
        let r = metrics(&y, &y).unwrap();
        assert_eq!(
            (r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn input_errors() {
        assert!(metrics(&[], &[]).is_err());
        assert!(metrics(&[1], &[1, 0]).is_err());
    }

    proptest! {
        #[test]
        fn report_is_consistent(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..200)) {
            let (p, y): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let r = metrics(&p, &y).unwrap();
            let c = r.classes[1];
            prop_assert_eq!(r.total(), p.len() as u64);
            prop_assert!((r.accuracy - (c.tp + c.tn) as f64 / p.len() as f64).abs() < 1e-15);
            for k in r.classes {
                let hm = if k.precision + k.recall == 0.0 { 0.0 } else { 2.0 * k.precision * k.recall / (k.precision + k.recall) };
                prop_assert!((k.f1 - hm).abs() < 1e-15);
                prop_assert!((0.0..=1.0).contains(&k.f1));
            }
            prop_assert_eq!(r.classes[0].tp, c.tn);
        }
    }
}
