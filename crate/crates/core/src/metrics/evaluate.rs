use rayon::prelude::*;

use super::matching::{confidence_order, greedy_assign, iou_matrix, IouKind};
use crate::error::{Error, Result};
use crate::labels::{Detection, PolygonAnnotation};

/// Number of IoU thresholds in the 0.50:0.05:0.95 ladder.
pub const NUM_IOU_THRESHOLDS: usize = 10;

/// Number of evenly spaced confidence thresholds in `[0, 1]`.
pub const SWEEP_POINTS: usize = 1000;

/// IoU threshold `k` of the ladder (`0.50 + 0.05 k`).
pub fn iou_threshold(k: usize) -> f64 {
    (50 + 5 * k) as f64 / 100.0
}

/// Confidence threshold `i` of the sweep.
pub fn sweep_threshold(i: usize) -> f64 {
    i as f64 / (SWEEP_POINTS - 1) as f64
}

/// Ground truth and predictions for one image.
#[derive(Debug, Clone, Default)]
pub struct ImageSample {
    pub stem: String,
    pub width: usize,
    pub height: usize,
    pub ground_truth: Vec<PolygonAnnotation>,
    pub predictions: Vec<Detection>,
}

/// A prediction reduced to what AP needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredMatch {
    pub confidence: f64,
    pub tp: bool,
}

/// 101-point interpolated AP.
///
/// `matches` are ranked by descending confidence internally; equal
/// confidences keep their input order.
pub fn average_precision(matches: &[ScoredMatch], total_gt: usize) -> f64 {
    if total_gt == 0 || matches.is_empty() {
        return 0.0;
    }
    let confs: Vec<f64> = matches.iter().map(|m| m.confidence).collect();
    let order = confidence_order(&confs);
    let tp_flags: Vec<bool> = order.iter().map(|&i| matches[i].tp).collect();
    ranked_ap(&tp_flags, total_gt)
}

fn ranked_ap(tp_flags: &[bool], total_gt: usize) -> f64 {
    if total_gt == 0 || tp_flags.is_empty() {
        return 0.0;
    }
    let mut tp_counts = Vec::with_capacity(tp_flags.len());
    let mut precision = Vec::with_capacity(tp_flags.len());
    let mut tp = 0usize;
    for (k, &hit) in tp_flags.iter().enumerate() {
        tp += usize::from(hit);
        tp_counts.push(tp);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    // monotone envelope
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut sum = 0.0;
    let mut k = 0;
    for level in 0..=100usize {
        // first point with recall >= level / 100
        while k < tp_counts.len() && tp_counts[k] * 100 < level * total_gt {
            k += 1;
        }
        if k == tp_counts.len() {
            break;
        }
        sum += precision[k];
    }
    sum / 101.0
}

/// One prediction after matching at every IoU threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPrediction {
    pub confidence: f64,
    pub tp: [bool; NUM_IOU_THRESHOLDS],
}

/// Matching results of one class over the whole dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassMatches {
    pub total_gt: usize,
    pub images_with_gt: usize,
    /// Descending confidence; ties by image order, then prediction order.
    pub predictions: Vec<RankedPrediction>,
}

/// Per-class matching results for box and mask IoU.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMatches {
    pub class_names: Vec<String>,
    pub num_images: usize,
    pub boxes: Vec<ClassMatches>,
    pub masks: Vec<ClassMatches>,
}

impl DatasetMatches {
    pub fn task(&self, kind: IouKind) -> &[ClassMatches] {
        match kind {
            IouKind::Box => &self.boxes,
            IouKind::Mask => &self.masks,
        }
    }
}

pub(crate) fn check_classes(images: &[ImageSample], num_classes: usize) -> Result<()> {
    for img in images {
        let bad = img
            .ground_truth
            .iter()
            .map(|g| g.class_id)
            .chain(img.predictions.iter().map(|p| p.class_id))
            .find(|&c| c >= num_classes);
        if let Some(c) = bad {
            return Err(Error::InvalidParameter(format!(
                "{}: class {c} is outside 0..{num_classes}",
                img.stem
            )));
        }
        if let Some(p) = img.predictions.iter().find(|p| !(0.0..=1.0).contains(&p.confidence)) {
            return Err(Error::InvalidParameter(format!(
                "{}: confidence {} is outside [0, 1]",
                img.stem, p.confidence
            )));
        }
    }
    Ok(())
}

// (class, confidence, tp ladder) for every prediction of one image, per task.
type ImageOutcome = [Vec<(usize, RankedPrediction)>; 2];

fn match_image(img: &ImageSample, num_classes: usize) -> ImageOutcome {
    let mut out: ImageOutcome = [Vec::new(), Vec::new()];
    for class in 0..num_classes {
        let preds: Vec<Detection> = img.predictions.iter().filter(|p| p.class_id == class).cloned().collect();
        if preds.is_empty() {
            continue;
        }
        let gts: Vec<PolygonAnnotation> = img.ground_truth.iter().filter(|g| g.class_id == class).cloned().collect();
        let confs: Vec<f64> = preds.iter().map(|p| p.confidence).collect();
        let order = confidence_order(&confs);
        for (slot, kind) in [IouKind::Box, IouKind::Mask].into_iter().enumerate() {
            let ious = iou_matrix(&preds, &gts, kind, img.width, img.height);
            let mut ladder = vec![[false; NUM_IOU_THRESHOLDS]; preds.len()];
            for k in 0..NUM_IOU_THRESHOLDS {
                let assigned = greedy_assign(&order, &ious, gts.len(), iou_threshold(k));
                for (p, a) in assigned.iter().enumerate() {
                    ladder[p][k] = a.is_some();
                }
            }
            out[slot].extend(preds.iter().zip(ladder).map(|(p, tp)| {
                (
                    class,
                    RankedPrediction {
                        confidence: p.confidence,
                        tp,
                    },
                )
            }));
        }
    }
    out
}

/// Matches every image at all ten IoU thresholds, for box and mask IoU.
///
/// Images are processed in parallel; the result depends only on the
/// order of `images`.
pub fn evaluate_matches(class_names: &[String], images: &[ImageSample]) -> Result<DatasetMatches> {
    let num_classes = class_names.len();
    check_classes(images, num_classes)?;
    let outcomes: Vec<ImageOutcome> = images.par_iter().map(|img| match_image(img, num_classes)).collect();

    let mut boxes = vec![ClassMatches::default(); num_classes];
    for img in images {
        let mut seen = vec![false; num_classes];
        for g in &img.ground_truth {
            boxes[g.class_id].total_gt += 1;
            seen[g.class_id] = true;
        }
        for (c, s) in seen.into_iter().enumerate() {
            boxes[c].images_with_gt += usize::from(s);
        }
    }
    let mut masks = boxes.clone();
    for outcome in outcomes {
        let [b, m] = outcome;
        for (class, rec) in b {
            boxes[class].predictions.push(rec);
        }
        for (class, rec) in m {
            masks[class].predictions.push(rec);
        }
    }
    for cm in boxes.iter_mut().chain(masks.iter_mut()) {
        // stable: ties keep image then prediction order
        cm.predictions.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    }
    Ok(DatasetMatches {
        class_names: class_names.to_vec(),
        num_images: images.len(),
        boxes,
        masks,
    })
}

/// Confidence sweep of one class at IoU 0.50.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSweep {
    pub class_id: usize,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

/// Per-class sweeps (classes with ground truth only) and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub classes: Vec<ClassSweep>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

impl Sweep {
    /// Index of the first maximum of the mean F1 curve.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.f1.iter().enumerate() {
            if v > self.f1[best] {
                best = i;
            }
        }
        best
    }
}

pub(crate) fn f1_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Counts (kept predictions, true positives) at `conf >= threshold`, IoU 0.50.
pub(crate) fn counts_at(cm: &ClassMatches, prefix_tp: &[usize], threshold: f64) -> (usize, usize) {
    let kept = cm.predictions.partition_point(|p| p.confidence >= threshold);
    (kept, prefix_tp[kept])
}

pub(crate) fn prefix_tp(cm: &ClassMatches) -> Vec<usize> {
    let mut out = Vec::with_capacity(cm.predictions.len() + 1);
    out.push(0);
    for p in &cm.predictions {
        out.push(out.last().unwrap() + usize::from(p.tp[0]));
    }
    out
}

/// Sweeps the confidence threshold over [`SWEEP_POINTS`] values.
///
/// Precision is 1 where no prediction survives the threshold.
pub fn confidence_sweep(classes: &[ClassMatches]) -> Sweep {
    let mut sweeps = Vec::new();
    for (class_id, cm) in classes.iter().enumerate() {
        if cm.total_gt == 0 {
            continue;
        }
        let prefix = prefix_tp(cm);
        let mut s = ClassSweep {
            class_id,
            precision: Vec::with_capacity(SWEEP_POINTS),
            recall: Vec::with_capacity(SWEEP_POINTS),
            f1: Vec::with_capacity(SWEEP_POINTS),
        };
        for i in 0..SWEEP_POINTS {
            let (kept, tp) = counts_at(cm, &prefix, sweep_threshold(i));
            let p = if kept == 0 { 1.0 } else { tp as f64 / kept as f64 };
            let r = tp as f64 / cm.total_gt as f64;
            s.precision.push(p);
            s.recall.push(r);
            s.f1.push(f1_score(p, r));
        }
        sweeps.push(s);
    }
    let mean = |pick: fn(&ClassSweep) -> &Vec<f64>| -> Vec<f64> {
        if sweeps.is_empty() {
            return vec![0.0; SWEEP_POINTS];
        }
        (0..SWEEP_POINTS)
            .map(|i| sweeps.iter().map(|s| pick(s)[i]).sum::<f64>() / sweeps.len() as f64)
            .collect()
    };
    let precision = mean(|s| &s.precision);
    let recall = mean(|s| &s.recall);
    let f1 = mean(|s| &s.f1);
    Sweep {
        classes: sweeps,
        precision,
        recall,
        f1,
    }
}

/// P, R, mAP50 and mAP50-95 for one task.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct TaskMetrics {
    pub precision: f64,
    pub recall: f64,
    pub map50: f64,
    pub map50_95: f64,
}

/// One row of the report.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReportRow {
    pub class: String,
    /// `None` for the aggregate row.
    pub class_id: Option<usize>,
    pub images: usize,
    pub instances: usize,
    pub boxes: TaskMetrics,
    pub masks: TaskMetrics,
}

/// Table of per-class and aggregate metrics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricsReport {
    /// `"all"` first, then every class with at least one instance.
    pub rows: Vec<ReportRow>,
    pub num_images: usize,
    /// Confidence threshold at which box P/R were read.
    pub box_conf_threshold: f64,
    pub mask_conf_threshold: f64,
}

impl MetricsReport {
    pub fn row(&self, class: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.class == class)
    }
}

fn task_summary(classes: &[ClassMatches]) -> (Vec<(usize, TaskMetrics)>, f64) {
    let sweep = confidence_sweep(classes);
    let best = sweep.best_index();
    let threshold = sweep_threshold(best);
    let mut out = Vec::new();
    for (class_id, cm) in classes.iter().enumerate() {
        if cm.total_gt == 0 {
            continue;
        }
        let prefix = prefix_tp(cm);
        let (kept, tp) = counts_at(cm, &prefix, threshold);
        let precision = if kept == 0 { 0.0 } else { tp as f64 / kept as f64 };
        let recall = tp as f64 / cm.total_gt as f64;
        let aps: Vec<f64> = (0..NUM_IOU_THRESHOLDS)
            .map(|k| {
                let flags: Vec<bool> = cm.predictions.iter().map(|p| p.tp[k]).collect();
                ranked_ap(&flags, cm.total_gt)
            })
            .collect();
        out.push((
            class_id,
            TaskMetrics {
                precision,
                recall,
                map50: aps[0],
                map50_95: aps.iter().sum::<f64>() / NUM_IOU_THRESHOLDS as f64,
            },
        ));
    }
    (out, threshold)
}

fn mean_metrics(rows: &[(usize, TaskMetrics)]) -> TaskMetrics {
    if rows.is_empty() {
        return TaskMetrics::default();
    }
    let n = rows.len() as f64;
    let sum = |f: fn(&TaskMetrics) -> f64| rows.iter().map(|(_, m)| f(m)).sum::<f64>() / n;
    TaskMetrics {
        precision: sum(|m| m.precision),
        recall: sum(|m| m.recall),
        map50: sum(|m| m.map50),
        map50_95: sum(|m| m.map50_95),
    }
}

/// Per-class and aggregate summary.
///
/// P and R are read at the first confidence threshold that maximizes the
/// mean F1 curve (separately for box and mask); a class with no surviving
/// prediction there reports P = 0. Classes without ground truth are left
/// out of the rows and the means. The `images` column counts every image
/// in the dataset.
pub fn map_summary(matches: &DatasetMatches) -> MetricsReport {
    let (box_rows, box_t) = task_summary(&matches.boxes);
    let (mask_rows, mask_t) = task_summary(&matches.masks);
    let mut rows = Vec::new();
    if matches.num_images > 0 {
        rows.push(ReportRow {
            class: "all".to_string(),
            class_id: None,
            images: matches.num_images,
            instances: matches.boxes.iter().map(|c| c.total_gt).sum(),
            boxes: mean_metrics(&box_rows),
            masks: mean_metrics(&mask_rows),
        });
        for ((class_id, b), (_, m)) in box_rows.iter().zip(&mask_rows) {
            rows.push(ReportRow {
                class: matches.class_names[*class_id].clone(),
                class_id: Some(*class_id),
                images: matches.num_images,
                instances: matches.boxes[*class_id].total_gt,
                boxes: *b,
                masks: *m,
            });
        }
    }
    MetricsReport {
        rows,
        num_images: matches.num_images,
        box_conf_threshold: box_t,
        mask_conf_threshold: mask_t,
    }
}
