//! Confusion counts and imbalance-aware scores, with label 1 (minority) as
//! the positive class.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[u8], predicted: &[u8]) -> Self {
        let mut cm = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p);
        }
        cm
    }

    pub fn record(&mut self, truth: u8, predicted: u8) {
        match (truth == 1, predicted == 1) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> Metrics {
        metrics(self)
    }
}

/// Scores with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub gmean: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub balanced_accuracy: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let tpr = ratio(cm.tp, cm.tp + cm.fn_);
    let tnr = ratio(cm.tn, cm.tn + cm.fp);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let both = tpr.zip(tnr);
    let f1 = precision
        .zip(tpr)
        .and_then(|(p, r)| (p + r > 0.0).then(|| 2.0 * p * r / (p + r)));
    Metrics {
        tpr,
        tnr,
        gmean: both.map(|(a, b)| (a * b).sqrt()),
        precision,
        recall: tpr,
        f1,
        balanced_accuracy: both.map(|(a, b)| (a + b) / 2.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let m = metrics(&ConfusionMatrix { tp: 8, fn_: 2, tn: 90, fp: 10 });
        assert!((m.tpr.unwrap() - 0.8).abs() < 1e-15);
        assert!((m.tnr.unwrap() - 0.9).abs() < 1e-15);
        assert!((m.gmean.unwrap() - 0.72f64.sqrt()).abs() < 1e-15);
        assert!((m.gmean.unwrap() - 0.8485).abs() < 1e-4);
        assert!((m.precision.unwrap() - 8.0 / 18.0).abs() < 1e-15);
        let (p, r) = (8.0 / 18.0, 0.8);
        assert!((m.f1.unwrap() - 2.0 * p * r / (p + r)).abs() < 1e-15);
        assert!((m.balanced_accuracy.unwrap() - 0.85).abs() < 1e-15);
    }

    #[test]
    fn empty_positive_class_is_undefined() {
        let m = metrics(&ConfusionMatrix { tp: 0, fn_: 0, tn: 5, fp: 1 });
        assert_eq!(m.tpr, None);
        assert_eq!(m.recall, None);
        assert_eq!(m.gmean, None);
        assert_eq!(m.balanced_accuracy, None);
        assert_eq!(m.precision, Some(0.0));
        assert_eq!(m.f1, None);
    }

    #[test]
    fn perfect_predictions() {
        let y = [1u8, 0, 0, 1, 0];
        let cm = ConfusionMatrix::from_predictions(&y, &y);
        assert_eq!(cm.total(), 5);
        let m = cm.metrics();
        for v in [m.tpr, m.tnr, m.gmean, m.precision, m.recall, m.f1, m.balanced_accuracy] {
            assert_eq!(v, Some(1.0));
        }
    }
}
