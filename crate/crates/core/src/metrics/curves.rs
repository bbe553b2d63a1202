use super::evaluate::{confidence_sweep, sweep_threshold, DatasetMatches, Sweep, SWEEP_POINTS};
use super::matching::IouKind;

/// The four curve families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    F1Confidence,
    PrecisionConfidence,
    RecallConfidence,
    PrecisionRecall,
}

impl CurveKind {
    pub const ALL: [CurveKind; 4] = [
        CurveKind::F1Confidence,
        CurveKind::PrecisionConfidence,
        CurveKind::RecallConfidence,
        CurveKind::PrecisionRecall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::F1Confidence => "f1-conf",
            CurveKind::PrecisionConfidence => "precision-conf",
            CurveKind::RecallConfidence => "recall-conf",
            CurveKind::PrecisionRecall => "precision-recall",
        }
    }

    pub fn axis_labels(self) -> (&'static str, &'static str) {
        match self {
            CurveKind::F1Confidence => ("confidence", "F1"),
            CurveKind::PrecisionConfidence => ("confidence", "precision"),
            CurveKind::RecallConfidence => ("confidence", "recall"),
            CurveKind::PrecisionRecall => ("recall", "precision"),
        }
    }
}

/// One line of a curve plot.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub kind: CurveKind,
    pub task: IouKind,
    /// Class name or `"all"`.
    pub label: String,
    /// `x` strictly increasing.
    pub points: Vec<(f64, f64)>,
}

fn versus_confidence(values: &[f64]) -> Vec<(f64, f64)> {
    (0..SWEEP_POINTS).map(|i| (sweep_threshold(i), values[i])).collect()
}

/// Sweep samples as (recall, precision), one point per distinct recall
/// keeping the highest precision, ordered by recall.
pub fn precision_recall_points(precision: &[f64], recall: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = recall.iter().copied().zip(precision.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|later, kept| later.0 == kept.0);
    pts
}

fn series_for(kind: CurveKind, p: &[f64], r: &[f64], f1: &[f64]) -> Vec<(f64, f64)> {
    match kind {
        CurveKind::F1Confidence => versus_confidence(f1),
        CurveKind::PrecisionConfidence => versus_confidence(p),
        CurveKind::RecallConfidence => versus_confidence(r),
        CurveKind::PrecisionRecall => precision_recall_points(p, r),
    }
}

/// Curves for both tasks at IoU 0.50: per class with ground truth, plus
/// `"all"` (the unweighted class mean). Ordered by kind, task, then class
/// index with `"all"` last. Nothing is emitted for a task without ground
/// truth.
pub fn confidence_curves(matches: &DatasetMatches) -> Vec<CurveSeries> {
    let sweeps: Vec<(IouKind, Sweep)> = [IouKind::Box, IouKind::Mask]
        .into_iter()
        .map(|k| (k, confidence_sweep(matches.task(k))))
        .collect();
    let mut out = Vec::new();
    for kind in CurveKind::ALL {
        for (task, sweep) in &sweeps {
            if sweep.classes.is_empty() {
                continue;
            }
            for cs in &sweep.classes {
                out.push(CurveSeries {
                    kind,
                    task: *task,
                    label: matches.class_names[cs.class_id].clone(),
                    points: series_for(kind, &cs.precision, &cs.recall, &cs.f1),
                });
            }
            out.push(CurveSeries {
                kind,
                task: *task,
                label: "all".to_string(),
                points: series_for(kind, &sweep.precision, &sweep.recall, &sweep.f1),
            });
        }
    }
    out
}
