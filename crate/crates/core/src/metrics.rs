use serde::{Deserialize, Serialize};

/// One-vs-rest confusion counts for a single class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub counts: ClassCounts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl ClassMetrics {
    pub fn from_counts(counts: ClassCounts) -> Self {
        let ClassCounts { tp, fp, fn_, tn } = counts;
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            counts,
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            precision,
            recall,
            f_score: f_score(precision, recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f_score: f64,
}

impl Metrics {
    pub fn from_predictions(labels: &[usize], predicted: &[usize], num_classes: usize) -> Self {
        assert_eq!(labels.len(), predicted.len());
        let mut confusion = vec![vec![0usize; num_classes]; num_classes];
        for (&a, &p) in labels.iter().zip(predicted) {
            confusion[a][p] += 1;
        }
        Self::from_confusion(confusion)
    }

    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> Self {
        let k = confusion.len();
        let n: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
        let per_class: Vec<ClassMetrics> = (0..k)
            .map(|c| {
                let tp = confusion[c][c];
                let actual: usize = confusion[c].iter().sum();
                let predicted: usize = confusion.iter().map(|row| row[c]).sum();
                let (fn_, fp) = (actual - tp, predicted - tp);
                ClassMetrics::from_counts(ClassCounts { tp, fp, fn_, tn: n - tp - fp - fn_ })
            })
            .collect();
        let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
        Self {
            n,
            accuracy: ratio(correct, n),
            macro_precision: mean(|m| m.precision),
            macro_recall: mean(|m| m.recall),
            macro_f_score: mean(|m| m.f_score),
            per_class,
            confusion,
        }
    }

    /// Metrics of class 1, the "expression present" side of a binary task.
    pub fn positive(&self) -> &ClassMetrics {
        &self.per_class[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_binary_example() {
        let m = ClassMetrics::from_counts(ClassCounts { tp: 2, fp: 1, fn_: 1, tn: 6 });
        assert!((m.accuracy - 0.8).abs() < 1e-15);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.f_score - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn confusion_matches_counts() {
        // actual 0: 6 right, 1 wrong; actual 1: 2 right, 1 wrong
        let m = Metrics::from_confusion(vec![vec![6, 1], vec![1, 2]]);
        assert_eq!(m.positive().counts, ClassCounts { tp: 2, fp: 1, fn_: 1, tn: 6 });
        assert!((m.accuracy - 0.8).abs() < 1e-15);
        for c in &m.per_class {
            let ClassCounts { tp, fp, fn_, tn } = c.counts;
            assert_eq!(tp + fp + fn_ + tn, 10);
        }
    }

    #[test]
    fn perfect_classifier() {
        let labels = [0, 1, 2, 1, 0];
        let m = Metrics::from_predictions(&labels, &labels, 3);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_precision, 1.0);
        assert_eq!(m.macro_recall, 1.0);
        assert_eq!(m.macro_f_score, 1.0);
    }

    #[test]
    fn never_predicted_class_scores_zero() {
        let m = Metrics::from_predictions(&[0, 1, 1], &[0, 0, 0], 2);
        assert_eq!(m.positive().precision, 0.0);
        assert_eq!(m.positive().f_score, 0.0);
        assert!((m.macro_recall - 0.5).abs() < 1e-15);
    }
}
