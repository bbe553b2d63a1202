//! Detection and segmentation evaluation.

mod confusion;
mod curves;
mod evaluate;
mod iou;
mod matching;
mod report;

pub use confusion::{confusion_matrix, ConfusionMatrix};
pub use curves::{confidence_curves, precision_recall_points, CurveKind, CurveSeries};
pub use evaluate::{
    average_precision, confidence_sweep, evaluate_matches, iou_threshold, map_summary, sweep_threshold, ClassMatches,
    ClassSweep, DatasetMatches, ImageSample, MetricsReport, RankedPrediction, ReportRow, ScoredMatch, Sweep,
    TaskMetrics, NUM_IOU_THRESHOLDS, SWEEP_POINTS,
};
pub use iou::{iou_box, iou_mask, SpanMask};
pub use matching::{iou_matrix, match_detections, GroundTruthMatch, IouKind, MatchResult, PredictionMatch};
pub use report::{confusion_csv, curve_csv, curve_svg, format_table, report_csv, write_report, REPORT_HEADER};
