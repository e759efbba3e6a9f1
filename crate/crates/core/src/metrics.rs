//! IoU matching between ground-truth and predicted instances, and the
//! per-image precision / recall / F1.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelmap::{boundary_ids, relabel_connected, LabelMap};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Which maps lose their border-touching instances before matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRemoval {
    #[default]
    Both,
    GtOnly,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub iou_threshold: f64,
    /// `true` requires IoU > threshold, `false` accepts IoU >= threshold.
    pub strict_inequality: bool,
    pub remove_boundary: BoundaryRemoval,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            strict_inequality: true,
            remove_boundary: BoundaryRemoval::Both,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "iou_threshold must lie in (0, 1), got {}",
                self.iou_threshold
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn passes(&self, iou: f64) -> bool {
        if self.strict_inequality {
            iou > self.iou_threshold
        } else {
            iou >= self.iou_threshold
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt_label: u32,
    pub pred_label: u32,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub pairs: Vec<MatchedPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Sparse IoU table. Rows follow `gt_ids`, columns follow `pred_ids`; only
/// co-occurring pairs are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct IouMatrix {
    pub gt_ids: Vec<u32>,
    pub pred_ids: Vec<u32>,
    entries: HashMap<(usize, usize), f64>,
}

impl IouMatrix {
    pub fn get(&self, gt_index: usize, pred_index: usize) -> f64 {
        self.entries
            .get(&(gt_index, pred_index))
            .copied()
            .unwrap_or(0.0)
    }

    /// Nonzero entries as `(gt_index, pred_index, iou)`, sorted by index.
    pub fn nonzero(&self) -> Vec<(usize, usize, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(&(i, j), &x)| (i, j, x)).collect();
        v.sort_by_key(|&(i, j, _)| (i, j));
        v
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.pred_ids.len()]; self.gt_ids.len()];
        for (&(i, j), &x) in &self.entries {
            dense[i][j] = x;
        }
        dense
    }
}

fn check_dims(gt: &LabelMap, pred: &LabelMap) -> Result<()> {
    if gt.dims() != pred.dims() {
        return Err(Error::DimensionMismatch {
            left: gt.dims(),
            right: pred.dims(),
        });
    }
    Ok(())
}

/// IoU for every co-occurring (gt, pred) instance pair from a single joint
/// pass over the pixels.
pub fn iou_matrix(gt: &LabelMap, pred: &LabelMap) -> Result<IouMatrix> {
    check_dims(gt, pred)?;
    let gt_counts = gt.pixel_counts();
    let pred_counts = pred.pixel_counts();
    let gt_ids: Vec<u32> = gt_counts.keys().copied().collect();
    let pred_ids: Vec<u32> = pred_counts.keys().copied().collect();
    let gt_index: HashMap<u32, usize> = gt_ids.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let pred_index: HashMap<u32, usize> =
        pred_ids.iter().enumerate().map(|(i, &l)| (l, i)).collect();

    let mut overlap: HashMap<(usize, usize), usize> = HashMap::new();
    for (&g, &p) in gt.labels().iter().zip(pred.labels()) {
        if g != 0 && p != 0 {
            *overlap.entry((gt_index[&g], pred_index[&p])).or_insert(0) += 1;
        }
    }

    let entries = overlap
        .into_iter()
        .map(|((i, j), inter)| {
            let union = gt_counts[&gt_ids[i]] + pred_counts[&pred_ids[j]] - inter;
            ((i, j), inter as f64 / union as f64)
        })
        .collect();
    Ok(IouMatrix {
        gt_ids,
        pred_ids,
        entries,
    })
}

fn apply_boundary_rule(gt: &LabelMap, pred: &LabelMap, rule: BoundaryRemoval) -> (LabelMap, LabelMap) {
    match rule {
        BoundaryRemoval::Both => (gt.without(&boundary_ids(gt)), pred.without(&boundary_ids(pred))),
        BoundaryRemoval::GtOnly => (gt.without(&boundary_ids(gt)), pred.clone()),
        BoundaryRemoval::None => (gt.clone(), pred.clone()),
    }
}

/// Matches predictions to ground truth after the configured boundary removal.
///
/// Candidate pairs are those passing the threshold test. Above 0.5 each
/// instance has at most one candidate, so the match is unique; at or below
/// 0.5 candidates are taken greedily by descending IoU (ties by ascending
/// gt then pred id) to keep the result one-to-one.
pub fn match_instances(gt: &LabelMap, pred: &LabelMap, cfg: &MatchConfig) -> Result<MatchResult> {
    check_dims(gt, pred)?;
    cfg.validate()?;
    let (gt, pred) = apply_boundary_rule(gt, pred, cfg.remove_boundary);
    let ious = iou_matrix(&gt, &pred)?;

    let mut candidates: Vec<(usize, usize, f64)> = ious
        .nonzero()
        .into_iter()
        .filter(|&(_, _, iou)| cfg.passes(iou))
        .collect();
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut gt_used = vec![false; ious.gt_ids.len()];
    let mut pred_used = vec![false; ious.pred_ids.len()];
    let mut pairs = Vec::new();
    for (i, j, iou) in candidates {
        if gt_used[i] || pred_used[j] {
            continue;
        }
        gt_used[i] = true;
        pred_used[j] = true;
        pairs.push(MatchedPair {
            gt_label: ious.gt_ids[i],
            pred_label: ious.pred_ids[j],
            iou,
        });
    }
    pairs.sort_by_key(|p| p.gt_label);

    let tp = pairs.len();
    Ok(MatchResult {
        tp,
        fp: ious.pred_ids.len() - tp,
        fn_: ious.gt_ids.len() - tp,
        pairs,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and their harmonic mean; every 0/0 is taken as 0.
pub fn precision_recall_f1(tp: usize, fp: usize, fn_: usize) -> MetricsRecord {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    MetricsRecord {
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEvaluation {
    pub matches: MatchResult,
    pub metrics: MetricsRecord,
}

/// Boundary removal, connected-component normalization of both maps,
/// matching, then F1.
pub fn evaluate_image_pair_detailed(
    gt: &LabelMap,
    pred: &LabelMap,
    cfg: &MatchConfig,
) -> Result<ImageEvaluation> {
    check_dims(gt, pred)?;
    cfg.validate()?;
    let (gt, pred) = apply_boundary_rule(gt, pred, cfg.remove_boundary);
    let gt = relabel_connected(&gt);
    let pred = relabel_connected(&pred);
    let matches = match_instances(&gt, &pred, cfg)?;
    let metrics = precision_recall_f1(matches.tp, matches.fp, matches.fn_);
    Ok(ImageEvaluation { matches, metrics })
}

pub fn evaluate_image_pair(gt: &LabelMap, pred: &LabelMap, cfg: &MatchConfig) -> Result<MetricsRecord> {
    evaluate_image_pair_detailed(gt, pred, cfg).map(|e| e.metrics)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fill(map: &mut LabelMap, cells: &[(usize, usize)], label: u32) {
        for &(r, c) in cells {
            map.set(r, c, label);
        }
    }

    fn rect(r0: usize, c0: usize, h: usize, w: usize) -> Vec<(usize, usize)> {
        (r0..r0 + h).flat_map(|r| (c0..c0 + w).map(move |c| (r, c))).collect()
    }

    #[test]
    fn identity_iou_is_diagonal() {
        let mut m = LabelMap::empty(10, 10).unwrap();
        fill(&mut m, &rect(1, 1, 2, 2), 1);
        fill(&mut m, &rect(5, 1, 2, 2), 2);
        fill(&mut m, &rect(1, 5, 2, 2), 3);
        let d = iou_matrix(&m, &m).unwrap().to_dense();
        for (i, row) in d.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(x, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn disjoint_iou_is_zero() {
        let mut g = LabelMap::empty(6, 6).unwrap();
        let mut p = LabelMap::empty(6, 6).unwrap();
        fill(&mut g, &rect(0, 0, 2, 2), 1);
        fill(&mut p, &rect(3, 3, 2, 2), 1);
        let m = iou_matrix(&g, &p).unwrap();
        assert_eq!(m.to_dense(), vec![vec![0.0]]);
        assert!(m.nonzero().is_empty());
    }

    #[test]
    fn nested_cell_iou() {
        let mut g = LabelMap::empty(8, 8).unwrap();
        let mut p = LabelMap::empty(8, 8).unwrap();
        fill(&mut g, &rect(2, 2, 4, 4), 1);
        fill(&mut p, &rect(2, 2, 3, 4), 5);
        assert_eq!(iou_matrix(&g, &p).unwrap().get(0, 0), 0.75);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let a = LabelMap::empty(3, 3).unwrap();
        let b = LabelMap::empty(3, 4).unwrap();
        assert!(matches!(iou_matrix(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(match_instances(&a, &b, &MatchConfig::default()).is_err());
    }

    #[test]
    fn identity_and_empty_prediction() {
        let mut g = LabelMap::empty(10, 10).unwrap();
        fill(&mut g, &rect(1, 1, 2, 2), 1);
        fill(&mut g, &rect(5, 1, 2, 2), 2);
        fill(&mut g, &rect(1, 5, 2, 2), 3);
        let r = match_instances(&g, &g, &MatchConfig::default()).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (3, 0, 0));

        let empty = LabelMap::empty(10, 10).unwrap();
        let r = match_instances(&g, &empty, &MatchConfig::default()).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (0, 0, 3));
    }

    #[test]
    fn half_iou_fails_strict_passes_inclusive() {
        let mut g = LabelMap::empty(5, 5).unwrap();
        let mut p = LabelMap::empty(5, 5).unwrap();
        fill(&mut g, &[(2, 1), (2, 2)], 1);
        fill(&mut p, &[(2, 1), (2, 2), (1, 1), (1, 2)], 1);
        let r = match_instances(&g, &p, &MatchConfig::default()).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (0, 1, 1));

        let inclusive = MatchConfig {
            strict_inequality: false,
            ..MatchConfig::default()
        };
        let r = match_instances(&g, &p, &inclusive).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 0, 0));
    }

    #[test]
    fn inclusive_half_keeps_one_to_one() {
        // Two disjoint halves of one gt cell both reach IoU exactly 0.5.
        let mut g = LabelMap::empty(6, 6).unwrap();
        let mut p = LabelMap::empty(6, 6).unwrap();
        fill(&mut g, &rect(1, 1, 2, 4), 1);
        fill(&mut p, &rect(1, 1, 2, 2), 1);
        fill(&mut p, &rect(1, 3, 2, 2), 2);
        let cfg = MatchConfig {
            strict_inequality: false,
            ..MatchConfig::default()
        };
        let r = match_instances(&g, &p, &cfg).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 1, 0));
        assert_eq!(r.pairs[0].pred_label, 1);
    }

    #[test]
    fn invalid_threshold_rejected() {
        let g = LabelMap::empty(3, 3).unwrap();
        for t in [0.0, 1.0, -0.1, f64::NAN] {
            let cfg = MatchConfig {
                iou_threshold: t,
                ..MatchConfig::default()
            };
            assert!(match_instances(&g, &g, &cfg).is_err());
        }
    }

    #[test]
    fn prf_examples() {
        assert_eq!(
            precision_recall_f1(1, 0, 0),
            MetricsRecord {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
        assert_eq!(
            precision_recall_f1(0, 2, 3),
            MetricsRecord {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0
            }
        );
        assert_eq!(precision_recall_f1(0, 0, 0).f1, 0.0);
        let m = precision_recall_f1(3, 1, 2);
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.6);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_identity_and_border_cell() {
        let mut g = LabelMap::empty(12, 12).unwrap();
        fill(&mut g, &rect(2, 2, 3, 3), 1);
        fill(&mut g, &rect(7, 7, 3, 3), 2);
        assert_eq!(evaluate_image_pair(&g, &g, &MatchConfig::default()).unwrap().f1, 1.0);

        fill(&mut g, &rect(0, 6, 2, 3), 3);
        let e = evaluate_image_pair_detailed(&g, &g, &MatchConfig::default()).unwrap();
        assert_eq!(e.metrics.f1, 1.0);
        assert_eq!(e.matches.tp, 2);
    }

    #[test]
    fn evaluate_hit_miss_spurious() {
        let mut g = LabelMap::empty(20, 20).unwrap();
        fill(&mut g, &rect(2, 2, 5, 5), 1);
        fill(&mut g, &rect(10, 10, 5, 5), 2);
        let mut p = LabelMap::empty(20, 20).unwrap();
        // 20 of 25 gt pixels, no extras: IoU 0.8
        fill(&mut p, &rect(2, 2, 4, 5), 4);
        fill(&mut p, &rect(2, 12, 3, 3), 9);
        let e = evaluate_image_pair_detailed(&g, &p, &MatchConfig::default()).unwrap();
        assert_eq!((e.matches.tp, e.matches.fp, e.matches.fn_), (1, 1, 1));
        assert_eq!(e.matches.pairs[0].iou, 0.8);
        assert_eq!(e.metrics.f1, 0.5);
    }

    #[test]
    fn gt_only_boundary_rule_keeps_border_predictions() {
        let mut g = LabelMap::empty(8, 8).unwrap();
        fill(&mut g, &rect(0, 2, 2, 2), 1);
        let cfg = MatchConfig {
            remove_boundary: BoundaryRemoval::GtOnly,
            ..MatchConfig::default()
        };
        let r = match_instances(&g, &g, &cfg).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (0, 1, 0));
        let cfg = MatchConfig {
            remove_boundary: BoundaryRemoval::None,
            ..MatchConfig::default()
        };
        assert_eq!(match_instances(&g, &g, &cfg).unwrap().tp, 1);
    }
}
