use std::cmp::Ordering;

use super::iou::{iou_box, SpanMask};
use crate::error::{Error, Result};
use crate::labels::{polygon_spans, Detection, PolygonAnnotation};

/// Which geometry IoU is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouKind {
    Box,
    Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatch {
    pub class_id: usize,
    pub confidence: f64,
    pub matched: bool,
    /// IoU with the matched ground truth, or the best IoU seen when unmatched.
    pub iou: f64,
    pub gt_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthMatch {
    pub class_id: usize,
    pub matched: bool,
}

/// Outcome of greedy matching at a single IoU threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub iou_thresh: f64,
    /// In input order.
    pub predictions: Vec<PredictionMatch>,
    pub ground_truths: Vec<GroundTruthMatch>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.predictions.iter().filter(|p| p.matched).count()
    }

    pub fn false_positives(&self) -> usize {
        self.predictions.len() - self.true_positives()
    }

    pub fn false_negatives(&self) -> usize {
        self.ground_truths.iter().filter(|g| !g.matched).count()
    }
}

/// Prediction indices by descending confidence, ties by input order.
pub(crate) fn confidence_order(confidences: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..confidences.len()).collect();
    order.sort_by(|&a, &b| {
        confidences[b]
            .partial_cmp(&confidences[a])
            .unwrap_or(Ordering::Equal)
    });
    order
}

/// Greedy assignment: predictions in `order` each claim the unclaimed
/// ground truth with the highest IoU `>= thresh` (lowest index on ties).
/// `ious[p][g]` is the IoU of prediction `p` with ground truth `g`.
pub(crate) fn greedy_assign(order: &[usize], ious: &[Vec<f64>], num_gt: usize, thresh: f64) -> Vec<Option<usize>> {
    let mut taken = vec![false; num_gt];
    let mut assigned = vec![None; ious.len()];
    for &p in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, &iou) in ious[p].iter().enumerate() {
            if taken[g] || iou < thresh {
                continue;
            }
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            assigned[p] = Some(g);
        }
    }
    assigned
}

/// Pairwise IoU matrix, predictions by rows.
///
/// Mask IoU rasterizes both polygons on the `width x height` grid; a
/// prediction without a polygon has mask IoU 0 with everything.
pub fn iou_matrix(
    preds: &[Detection],
    gts: &[PolygonAnnotation],
    kind: IouKind,
    width: usize,
    height: usize,
) -> Vec<Vec<f64>> {
    match kind {
        IouKind::Box => {
            let gt_boxes: Vec<_> = gts.iter().map(|g| g.bbox()).collect();
            preds
                .iter()
                .map(|p| gt_boxes.iter().map(|g| iou_box(&p.bbox, g)).collect())
                .collect()
        }
        IouKind::Mask => {
            let gt_masks: Vec<SpanMask> = gts
                .iter()
                .map(|g| SpanMask::new(polygon_spans(&g.to_pixels(width, height), width, height)))
                .collect();
            let gt_boxes: Vec<_> = gts.iter().map(|g| g.bbox()).collect();
            preds
                .iter()
                .map(|p| match &p.mask_polygon {
                    None => vec![0.0; gts.len()],
                    Some(poly) => {
                        let px = crate::labels::denormalize(poly, width, height);
                        let pm = SpanMask::new(polygon_spans(&px, width, height));
                        gt_masks
                            .iter()
                            .zip(&gt_boxes)
                            .map(|(gm, gb)| if boxes_apart(&p.bbox, gb) { 0.0 } else { pm.iou(gm) })
                            .collect()
                    }
                })
                .collect()
        }
    }
}

// Disjoint by more than a pixel-rounding margin: the rasters cannot overlap.
fn boxes_apart(a: &crate::geometry::BoundingBox, b: &crate::geometry::BoundingBox) -> bool {
    a.x_max < b.x_min || b.x_max < a.x_min || a.y_max < b.y_min || b.y_max < a.y_min
}

/// Greedy confidence-ordered matching for one image and one class.
pub fn match_detections(
    preds: &[Detection],
    gts: &[PolygonAnnotation],
    iou_thresh: f64,
    kind: IouKind,
    width: usize,
    height: usize,
) -> Result<MatchResult> {
    let mut classes = preds.iter().map(|p| p.class_id).chain(gts.iter().map(|g| g.class_id));
    if let Some(first) = classes.next() {
        if let Some(other) = classes.find(|&c| c != first) {
            return Err(Error::MixedClasses(first, other));
        }
    }
    let ious = iou_matrix(preds, gts, kind, width, height);
    let confs: Vec<f64> = preds.iter().map(|p| p.confidence).collect();
    let assigned = greedy_assign(&confidence_order(&confs), &ious, gts.len(), iou_thresh);
    let mut gt_records: Vec<GroundTruthMatch> = gts
        .iter()
        .map(|g| GroundTruthMatch {
            class_id: g.class_id,
            matched: false,
        })
        .collect();
    let predictions = preds
        .iter()
        .zip(&assigned)
        .zip(&ious)
        .map(|((p, a), row)| {
            if let Some(g) = a {
                gt_records[*g].matched = true;
            }
            PredictionMatch {
                class_id: p.class_id,
                confidence: p.confidence,
                matched: a.is_some(),
                iou: match a {
                    Some(g) => row[*g],
                    None => row.iter().copied().fold(0.0, f64::max),
                },
                gt_index: *a,
            }
        })
        .collect();
    Ok(MatchResult {
        iou_thresh,
        predictions,
        ground_truths: gt_records,
    })
}
