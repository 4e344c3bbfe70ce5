//! Coarse and fine-grained evaluation against gold labels.

use serde::Serialize;

use crate::model::FineGrainedViolation;

/// Pair-level confusion counts with violation as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn add(&mut self, gold: bool, predicted: bool) {
        match (gold, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn from_labels<I: IntoIterator<Item = (bool, bool)>>(labels: I) -> Self {
        let mut c = Self::default();
        for (g, p) in labels {
            c.add(g, p);
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> Ratio {
        Ratio::of(self.tp + self.tn, self.total())
    }

    pub fn prf(&self) -> Prf {
        Prf::from_counts(self.tp, self.fp, self.fn_)
    }

    pub fn metrics(&self) -> CoarseMetrics {
        let prf = self.prf();
        CoarseMetrics {
            accuracy: self.accuracy(),
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
        }
    }
}

/// A proportion in [0, 1]. Zero denominators give 0 marked undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratio {
    pub value: f64,
    pub undefined: bool,
}

impl Ratio {
    pub fn of(num: u64, den: u64) -> Self {
        if den == 0 {
            Self {
                value: 0.0,
                undefined: true,
            }
        } else {
            Self {
                value: num as f64 / den as f64,
                undefined: false,
            }
        }
    }

    /// Percentage rounded half-up to one decimal.
    pub fn percent(&self) -> f64 {
        round_percent(self.value)
    }
}

pub fn round_percent(value: f64) -> f64 {
    // The epsilon keeps values like 0.8485 from rounding down through
    // binary representation error.
    ((value * 1000.0) + 0.5 + 1e-9).floor() / 10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: Ratio,
    pub recall: Ratio,
    pub f1: Ratio,
}

impl Prf {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = Ratio::of(tp, tp + fp);
        let recall = Ratio::of(tp, tp + fn_);
        // 2PR / (P + R) = 2tp / (2tp + fp + fn).
        let f1 = Ratio::of(2 * tp, 2 * tp + fp + fn_);
        Self { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoarseMetrics {
    pub accuracy: Ratio,
    pub precision: Ratio,
    pub recall: Ratio,
    pub f1: Ratio,
}

/// Side-tagged token overlap between gold and predicted violations.
pub fn match_fine(gold: &FineGrainedViolation, predicted: &FineGrainedViolation) -> u64 {
    (gold.source.intersection(&predicted.source).count() + gold.followup.intersection(&predicted.followup).count()) as u64
}

/// Token-level counts summed over pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FineCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl FineCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, fp, fn_ }
    }

    pub fn add(&mut self, gold: &FineGrainedViolation, predicted: &FineGrainedViolation) {
        let m = match_fine(gold, predicted);
        self.tp += m;
        self.fp += predicted.len() as u64 - m;
        self.fn_ += gold.len() as u64 - m;
    }

    pub fn prf(&self) -> Prf {
        Prf::from_counts(self.tp, self.fp, self.fn_)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_metrics_from_counts() {
        let m = Confusion::new(28, 17, 5, 125).metrics();
        assert_eq!(m.accuracy.percent(), 87.4);
        assert_eq!(m.precision.percent(), 62.2);
        assert_eq!(m.recall.percent(), 84.8);
        assert_eq!(m.f1.percent(), 71.8);
    }

    #[test]
    fn fine_metrics_from_counts() {
        let p = FineCounts::new(104, 19, 18).prf();
        assert_eq!(p.precision.percent(), 84.6);
        assert_eq!(p.recall.percent(), 85.2);
        assert_eq!(p.f1.percent(), 84.9);
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let p = Prf::from_counts(0, 0, 0);
        assert!(p.precision.undefined && p.recall.undefined && p.f1.undefined);
        assert_eq!(p.f1.value, 0.0);
        assert!(Confusion::default().accuracy().undefined);
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_percent(0.8485), 84.9);
        assert_eq!(round_percent(0.84849), 84.8);
        assert_eq!(round_percent(1.0), 100.0);
        assert_eq!(round_percent(0.0), 0.0);
    }

    #[test]
    fn fine_overlap_is_side_tagged() {
        let g = FineGrainedViolation::new([0, 22], [20, 21]);
        let p = FineGrainedViolation::new([22, 21], [20]);
        assert_eq!(match_fine(&g, &p), 2);
        let mut c = FineCounts::default();
        c.add(&g, &p);
        assert_eq!(c, FineCounts::new(2, 1, 2));
    }

    #[test]
    fn confusion_counts_labels() {
        let c = Confusion::from_labels([(true, true), (true, false), (false, true), (false, false), (false, false)]);
        assert_eq!(c, Confusion::new(1, 1, 1, 2));
        assert_eq!(c.total(), 5);
    }
}
