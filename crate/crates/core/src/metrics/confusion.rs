use super::evaluate::{check_classes, ImageSample};
use super::iou::iou_box;
use super::matching::{confidence_order, greedy_assign};
use crate::error::{Error, Result};

/// Detection confusion matrix with a trailing background class.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    /// `counts[true][predicted]`, `(C + 1) x (C + 1)`.
    pub counts: Vec<Vec<u64>>,
    pub conf_thresh: f64,
    pub iou_thresh: f64,
}

impl ConfusionMatrix {
    /// Index of the background row and column.
    pub fn background(&self) -> usize {
        self.class_names.len()
    }

    pub fn get(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class][predicted]
    }

    /// Sum over the non-background rows.
    pub fn ground_truth_total(&self) -> u64 {
        self.counts[..self.background()].iter().flatten().sum()
    }
}

/// Class-agnostic greedy matching on box IoU per image.
///
/// Predictions below `conf_thresh` are dropped; the rest claim ground truths
/// in descending confidence order, whatever their class.
pub fn confusion_matrix(
    class_names: &[String],
    images: &[ImageSample],
    conf_thresh: f64,
    iou_thresh: f64,
) -> Result<ConfusionMatrix> {
    for (name, v) in [("confidence", conf_thresh), ("IoU", iou_thresh)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("{name} threshold {v} is outside [0, 1]")));
        }
    }
    check_classes(images, class_names.len())?;
    let bg = class_names.len();
    let mut counts = vec![vec![0u64; bg + 1]; bg + 1];
    for img in images {
        let preds: Vec<_> = img.predictions.iter().filter(|p| p.confidence >= conf_thresh).collect();
        let gt_boxes: Vec<_> = img.ground_truth.iter().map(|g| g.bbox()).collect();
        let ious: Vec<Vec<f64>> = preds
            .iter()
            .map(|p| gt_boxes.iter().map(|g| iou_box(&p.bbox, g)).collect())
            .collect();
        let confs: Vec<f64> = preds.iter().map(|p| p.confidence).collect();
        let assigned = greedy_assign(&confidence_order(&confs), &ious, gt_boxes.len(), iou_thresh);
        let mut gt_hit = vec![false; gt_boxes.len()];
        for (p, a) in preds.iter().zip(&assigned) {
            match a {
                Some(g) => {
                    gt_hit[*g] = true;
                    counts[img.ground_truth[*g].class_id][p.class_id] += 1;
                }
                None => counts[bg][p.class_id] += 1,
            }
        }
        for (g, hit) in img.ground_truth.iter().zip(gt_hit) {
            if !hit {
                counts[g.class_id][bg] += 1;
            }
        }
    }
    Ok(ConfusionMatrix {
        class_names: class_names.to_vec(),
        counts,
        conf_thresh,
        iou_thresh,
    })
}
