//! Confusion-matrix segmentation metrics, concentration error, sequence
//! length statistics and subsampling quality.
//!
//! Naming follows the usual river-ice convention: `rec` is mean per-class
//! accuracy, `prec` is mean per-class IoU, `fw_rec` is pixel accuracy.

use serde::Serialize;

use crate::codec::encode_static;
use crate::error::{Error, Result};
use crate::mask::{subsample_to, upsample, LabelMask};
use crate::scheme::SchemeConfig;

/// `counts[i][j]` = pixels of true class `i` predicted as class `j`, classes `0..=C`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    classes: u32,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: u32) -> Self {
        let n = classes as usize + 1;
        ConfusionMatrix {
            classes,
            counts: vec![0; n * n],
        }
    }

    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(
                "confusion matrix must be square with at least 2 classes",
            ));
        }
        Ok(ConfusionMatrix {
            classes: n as u32 - 1,
            counts: rows.concat(),
        })
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    fn dim(&self) -> usize {
        self.classes as usize + 1
    }

    pub fn get(&self, truth: u32, pred: u32) -> u64 {
        self.counts[truth as usize * self.dim() + pred as usize]
    }

    /// `t_i`: ground-truth pixels of class `i`.
    pub fn truth_total(&self, class: u32) -> u64 {
        let n = self.dim();
        self.counts[class as usize * n..(class as usize + 1) * n]
            .iter()
            .sum()
    }

    /// `sum_j n_ji`: pixels predicted as class `i`.
    pub fn pred_total(&self, class: u32) -> u64 {
        (0..self.dim())
            .map(|j| self.counts[j * self.dim() + class as usize])
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn accumulate(&mut self, gt: &LabelMask, pred: &LabelMask) -> Result<()> {
        if gt.height() != pred.height() || gt.width() != pred.width() {
            return Err(Error::invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                gt.height(),
                gt.width(),
                pred.height(),
                pred.width()
            )));
        }
        let n = self.dim();
        for (&t, &p) in gt.labels().iter().zip(pred.labels()) {
            if t > self.classes || p > self.classes {
                return Err(Error::LabelRange {
                    label: t.max(p),
                    classes: self.classes,
                });
            }
            self.counts[t as usize * n + p as usize] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::invalid("cannot merge matrices over different class sets"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

pub fn accumulate(gt: &LabelMask, pred: &LabelMask, mut cm: ConfusionMatrix) -> Result<ConfusionMatrix> {
    cm.accumulate(gt, pred)?;
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassSelection {
    pub include_background: bool,
}

impl Default for ClassSelection {
    fn default() -> Self {
        ClassSelection {
            include_background: true,
        }
    }
}

impl ClassSelection {
    pub fn foreground_only() -> Self {
        ClassSelection {
            include_background: false,
        }
    }

    fn classes(&self, cm: &ConfusionMatrix) -> Vec<u32> {
        let first = u32::from(!self.include_background);
        (first..=cm.classes).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: u32,
    pub rec: Option<f64>,
    pub prec: Option<f64>,
    pub dice: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub per_class: Vec<ClassMetrics>,
    pub rec: f64,
    pub prec: f64,
    pub dice: f64,
    pub fw_rec: f64,
    /// Frequency-weighted IoU normalized by `(sum_k t_k)^-1`.
    pub fw_prec: f64,
    /// The same sum with the leading factor written as `sum_k (t_k)^-1`.
    pub fw_prec_literal: f64,
    /// Classes left out of a mean because its denominator was zero.
    pub excluded: Vec<u32>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

pub fn compute_metrics(cm: &ConfusionMatrix, selection: ClassSelection) -> Result<Metrics> {
    if cm.total() == 0 {
        return Err(Error::UndefinedMetrics("confusion matrix is empty".into()));
    }
    let classes = selection.classes(cm);
    let per_class: Vec<ClassMetrics> = classes
        .iter()
        .map(|&i| {
            let nii = cm.get(i, i);
            let t = cm.truth_total(i);
            let p = cm.pred_total(i);
            ClassMetrics {
                class: i,
                rec: ratio(nii, t),
                prec: ratio(nii, t + p - nii),
                dice: ratio(2 * nii, t + p),
            }
        })
        .collect();
    let excluded = per_class
        .iter()
        .filter(|m| m.rec.is_none() || m.prec.is_none() || m.dice.is_none())
        .map(|m| m.class)
        .collect();
    let undefined = || Error::UndefinedMetrics("no selected class has a nonzero denominator".into());
    let rec = mean(per_class.iter().map(|m| m.rec)).ok_or_else(undefined)?;
    let prec = mean(per_class.iter().map(|m| m.prec)).ok_or_else(undefined)?;
    let dice = mean(per_class.iter().map(|m| m.dice)).ok_or_else(undefined)?;

    let diag: u64 = classes.iter().map(|&i| cm.get(i, i)).sum();
    let truth: u64 = classes.iter().map(|&i| cm.truth_total(i)).sum();
    let fw_rec = ratio(diag, truth).ok_or_else(undefined)?;
    let weighted: f64 = per_class
        .iter()
        .filter_map(|m| m.prec.map(|iou| cm.truth_total(m.class) as f64 * iou))
        .sum();
    let fw_prec = weighted / truth as f64;
    let inverse_sum: f64 = classes
        .iter()
        .map(|&i| cm.truth_total(i))
        .filter(|&t| t > 0)
        .map(|t| 1.0 / t as f64)
        .sum();
    Ok(Metrics {
        per_class,
        rec,
        prec,
        dice,
        fw_rec,
        fw_prec,
        fw_prec_literal: inverse_sum * weighted,
        excluded,
    })
}

pub fn mask_metrics(gt: &LabelMask, pred: &LabelMask, selection: ClassSelection) -> Result<Metrics> {
    let classes = gt.classes().max(pred.classes());
    let cm = accumulate(gt, pred, ConfusionMatrix::new(classes))?;
    compute_metrics(&cm, selection)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationError {
    pub per_image: Vec<f64>,
    pub median: f64,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Absolute difference of the `class` pixel fraction per image, with the median over images.
pub fn concentration_mae(pairs: &[(LabelMask, LabelMask)], class: u32) -> Result<ConcentrationError> {
    if pairs.is_empty() {
        return Err(Error::UndefinedMetrics("no image pairs".into()));
    }
    let fraction = |m: &LabelMask| m.labels().iter().filter(|&&l| l == class).count() as f64 / m.len() as f64;
    let per_image = pairs
        .iter()
        .map(|(gt, pred)| {
            if gt.height() != pred.height() || gt.width() != pred.width() {
                return Err(Error::invalid("shape mismatch in concentration pair"));
            }
            Ok((fraction(gt) - fraction(pred)).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    let median = median(&per_image).expect("non-empty");
    Ok(ConcentrationError { per_image, median })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthStats {
    pub count: usize,
    pub mean: f64,
    pub max: usize,
    /// `(threshold, percentage of sequences strictly longer)`.
    pub exceeding: Vec<(usize, f64)>,
}

/// Summarizes sequence lengths the way the length-statistics tables do.
pub fn length_stats(lengths: &[usize], thresholds: &[usize]) -> Result<LengthStats> {
    if lengths.is_empty() {
        return Err(Error::invalid("no sequences to summarize"));
    }
    let n = lengths.len();
    let exceeding = thresholds
        .iter()
        .map(|&t| {
            let over = lengths.iter().filter(|&&l| l > t).count();
            (t, 100.0 * over as f64 / n as f64)
        })
        .collect();
    Ok(LengthStats {
        count: n,
        mean: lengths.iter().sum::<usize>() as f64 / n as f64,
        max: *lengths.iter().max().expect("non-empty"),
        exceeding,
    })
}

pub fn seq_length_stats(
    masks: &[LabelMask],
    cfg: &SchemeConfig,
    thresholds: &[usize],
) -> Result<LengthStats> {
    let lengths = masks
        .iter()
        .map(|m| encode_static(m, cfg).map(|s| s.len()))
        .collect::<Result<Vec<_>>>()?;
    length_stats(&lengths, thresholds)
}

/// Metrics of the pooled-then-replicated mask against the original.
pub fn subsample_quality_to(
    mask: &LabelMask,
    out_height: usize,
    out_width: usize,
    selection: ClassSelection,
) -> Result<Metrics> {
    let small = subsample_to(mask, out_height, out_width)?;
    let restored = upsample(&small, mask.height() / out_height, mask.width() / out_width)?;
    mask_metrics(mask, &restored, selection)
}

pub fn subsample_quality(mask: &LabelMask, side: usize, selection: ClassSelection) -> Result<Metrics> {
    subsample_quality_to(mask, side, side, selection)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulate_hand_case() {
        let gt = LabelMask::from_rows(&[vec![1, 1], vec![0, 2]], 2).unwrap();
        let pred = LabelMask::from_rows(&[vec![1, 2], vec![0, 2]], 2).unwrap();
        let cm = accumulate(&gt, &pred, ConfusionMatrix::new(2)).unwrap();
        assert_eq!(
            (cm.get(1, 1), cm.get(1, 2), cm.get(0, 0), cm.get(2, 2)),
            (1, 1, 1, 1)
        );
        assert_eq!(cm.total(), 4);
        let one = accumulate(&gt, &gt, ConfusionMatrix::new(2)).unwrap();
        assert_eq!(one.get(1, 1), 2);
        assert_eq!(one.get(1, 2), 0);
        let bad = LabelMask::zeros(1, 2, 2).unwrap();
        assert!(accumulate(&gt, &bad, ConfusionMatrix::new(2)).is_err());
    }

    #[test]
    fn hand_confusion_values() {
        let cm = ConfusionMatrix::from_counts(&[vec![0, 0, 0], vec![0, 3, 1], vec![0, 0, 2]]).unwrap();
        let m = compute_metrics(&cm, ClassSelection::foreground_only()).unwrap();
        let c1 = &m.per_class[0];
        assert_eq!(c1.prec, Some(0.75));
        assert!((c1.dice.unwrap() - 6.0 / 7.0).abs() < 1e-15);
        let p = c1.prec.unwrap();
        assert!((c1.dice.unwrap() - 2.0 * p / (1.0 + p)).abs() < 1e-15);
        assert_eq!(c1.rec, Some(0.75));
        assert_eq!(m.fw_rec, 5.0 / 6.0);
    }

    #[test]
    fn perfect_and_all_wrong() {
        let m = LabelMask::from_rows(&[vec![0, 1, 2, 2]], 2).unwrap();
        let r = mask_metrics(&m, &m, ClassSelection::default()).unwrap();
        for v in [r.rec, r.prec, r.dice, r.fw_rec, r.fw_prec] {
            assert_eq!(v, 1.0);
        }
        let gt = LabelMask::new(1, 3, 1, vec![1; 3]).unwrap();
        let pred = LabelMask::zeros(1, 3, 1).unwrap();
        let r = mask_metrics(&gt, &pred, ClassSelection::foreground_only()).unwrap();
        assert_eq!((r.rec, r.prec, r.dice), (0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_denominator_classes_are_flagged() {
        let gt = LabelMask::from_rows(&[vec![0, 1]], 2).unwrap();
        let r = mask_metrics(&gt, &gt, ClassSelection::default()).unwrap();
        assert_eq!(r.excluded, vec![2]);
        assert_eq!(r.rec, 1.0);
        assert!(matches!(
            compute_metrics(&ConfusionMatrix::new(2), ClassSelection::default()),
            Err(Error::UndefinedMetrics(_))
        ));
    }

    #[test]
    fn fw_prec_variants() {
        let cm = ConfusionMatrix::from_counts(&[vec![4, 0], vec![1, 1]]).unwrap();
        let m = compute_metrics(&cm, ClassSelection::default()).unwrap();
        let iou0 = 4.0 / 5.0;
        let iou1 = 1.0 / 2.0;
        let weighted = 4.0 * iou0 + 2.0 * iou1;
        assert!((m.fw_prec - weighted / 6.0).abs() < 1e-15);
        assert!((m.fw_prec_literal - (0.25 + 0.5) * weighted).abs() < 1e-12);
    }

    #[test]
    fn concentration() {
        let half = LabelMask::from_rows(&[vec![1, 0]], 1).unwrap();
        let full = LabelMask::from_rows(&[vec![1, 1]], 1).unwrap();
        assert_eq!(
            concentration_mae(&[(half.clone(), half.clone())], 1)
                .unwrap()
                .median,
            0.0
        );
        assert_eq!(concentration_mae(&[(half.clone(), full)], 1).unwrap().median, 0.5);
        assert_eq!(median(&[0.4, 0.1, 0.2]), Some(0.2));
        assert!(concentration_mae(&[], 1).is_err());
    }

    #[test]
    fn length_thresholds() {
        let s = length_stats(&[10, 30], &[20]).unwrap();
        assert_eq!(s.exceeding, vec![(20, 50.0)]);
        assert_eq!((s.mean, s.max), (20.0, 30));
        let s = length_stats(&[0, 0], &[5]).unwrap();
        assert_eq!((s.mean, s.max, s.exceeding[0].1), (0.0, 0, 0.0));
        let s = length_stats(&[3], &[0]).unwrap();
        assert_eq!(s.exceeding[0].1, 100.0);
    }

    #[test]
    fn subsample_quality_trivial_cases() {
        let m = LabelMask::new(4, 4, 1, vec![1; 16]).unwrap();
        let q = subsample_quality(&m, 2, ClassSelection::default()).unwrap();
        assert_eq!((q.rec, q.prec, q.dice), (1.0, 1.0, 1.0));
        let varied = LabelMask::from_rows(&[vec![0, 1, 2, 0], vec![1, 1, 0, 2]], 2).unwrap();
        let q = subsample_quality_to(&varied, 2, 4, ClassSelection::default()).unwrap();
        assert_eq!((q.rec, q.prec, q.dice, q.fw_rec), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn checkerboard_against_brute_force() {
        // 4x4 checkerboard pooled 2x: every block ties 2-2, foreground wins,
        // so the restored mask is all ones. Brute-force reference below.
        let labels: Vec<u32> = (0..16).map(|i| ((i / 4 + i % 4) % 2) as u32).collect();
        let m = LabelMask::new(4, 4, 1, labels.clone()).unwrap();
        let q = subsample_quality(&m, 2, ClassSelection::default()).unwrap();
        let restored = [1u32; 16];
        let mut n = [[0u64; 2]; 2];
        for (t, p) in labels.iter().zip(restored) {
            n[*t as usize][p as usize] += 1;
        }
        let iou1 = n[1][1] as f64 / (n[1][0] + n[1][1] + n[0][1]) as f64;
        let iou0 = 0.0;
        assert_eq!(q.prec, (iou0 + iou1) / 2.0);
        assert_eq!(q.rec, 0.5);
        assert_eq!(q.fw_rec, 0.5);
    }
}
