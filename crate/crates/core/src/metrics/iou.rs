use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::labels::Span;
use crate::segment::BinaryMask;

/// Intersection over union of two boxes; 0 when the union has no area.
pub fn iou_box(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// `|a & b| / |a | b|`, with `0/0 = 0`.
pub fn iou_mask(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    Ok(ratio(inter, union))
}

fn ratio(inter: usize, union: usize) -> f64 {
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Run-length raster of one polygon, as produced by
/// [`polygon_spans`](crate::labels::polygon_spans).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpanMask {
    spans: Vec<Span>,
    area: usize,
}

impl SpanMask {
    pub fn new(spans: Vec<Span>) -> Self {
        let area = spans.iter().map(|s| s.x_end - s.x_start).sum();
        Self { spans, area }
    }

    pub fn area(&self) -> usize {
        self.area
    }

    pub fn intersection(&self, other: &SpanMask) -> usize {
        let (a, b) = (&self.spans, &other.spans);
        let (mut i, mut j, mut total) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            let (sa, sb) = (a[i], b[j]);
            if (sa.y, sa.x_end) <= (sb.y, sb.x_start) {
                i += 1;
                continue;
            }
            if (sb.y, sb.x_end) <= (sa.y, sa.x_start) {
                j += 1;
                continue;
            }
            // same row, overlapping
            total += sa.x_end.min(sb.x_end) - sa.x_start.max(sb.x_start);
            if sa.x_end <= sb.x_end {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    pub fn iou(&self, other: &SpanMask) -> f64 {
        let inter = self.intersection(other);
        ratio(inter, self.area + other.area - inter)
    }
}
