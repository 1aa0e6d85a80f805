//! Accuracy and macro F1 over the fixed 3-class polarity set.

use crate::features::Polarity;
use crate::{Error, Result};

/// 3×3 counts, rows = gold, cols = predicted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_pairs(preds: &[Polarity], golds: &[Polarity]) -> Result<ConfusionMatrix> {
        if preds.len() != golds.len() {
            return Err(Error::Domain(format!(
                "{} predictions for {} gold labels",
                preds.len(),
                golds.len()
            )));
        }
        if preds.is_empty() {
            return Err(Error::Domain("cannot score an empty prediction list".into()));
        }
        let mut m = ConfusionMatrix::default();
        for (&p, &g) in preds.iter().zip(golds) {
            m.counts[g.index()][p.index()] += 1;
        }
        Ok(m)
    }

    pub fn count(&self, gold: Polarity, pred: Polarity) -> usize {
        self.counts[gold.index()][pred.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let trace: usize = (0..3).map(|c| self.counts[c][c]).sum();
        trace as f64 / self.total() as f64
    }

    /// Per-class F1 with every 0/0 defined as 0.
    pub fn per_class_f1(&self) -> [f64; 3] {
        let mut f1 = [0.0; 3];
        for (c, slot) in f1.iter_mut().enumerate() {
            let tp = self.counts[c][c];
            let fp: usize = (0..3).filter(|&g| g != c).map(|g| self.counts[g][c]).sum();
            let fn_: usize = (0..3).filter(|&p| p != c).map(|p| self.counts[c][p]).sum();
            let precision = ratio_or_zero(tp, tp + fp);
            let recall = ratio_or_zero(tp, tp + fn_);
            *slot = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
        }
        f1
    }

    /// Unweighted mean of per-class F1 over all 3 classes; classes
    /// absent from both sides contribute 0.
    pub fn macro_f1(&self) -> f64 {
        let f1 = self.per_class_f1();
        (f1[0] + f1[1] + f1[2]) / 3.0
    }

    /// Nested-array rendering, rows = gold: `[[..],[..],[..]]`.
    pub fn render(&self) -> String {
        let row = |r: [usize; 3]| format!("[{},{},{}]", r[0], r[1], r[2]);
        format!(
            "[{},{},{}]",
            row(self.counts[0]),
            row(self.counts[1]),
            row(self.counts[2])
        )
    }
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Fraction of matching positions.
pub fn accuracy(preds: &[Polarity], golds: &[Polarity]) -> Result<f64> {
    Ok(ConfusionMatrix::from_pairs(preds, golds)?.accuracy())
}

/// Mean per-class F1 over the fixed 3-class set.
pub fn macro_f1(preds: &[Polarity], golds: &[Polarity]) -> Result<f64> {
    Ok(ConfusionMatrix::from_pairs(preds, golds)?.macro_f1())
}
