use super::PolygonAnnotation;
use crate::geometry::Point;
use crate::segment::BinaryMask;

/// Horizontal run of set pixels `[x_start, x_end)` on row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub y: usize,
    pub x_start: usize,
    pub x_end: usize,
}

/// Even-odd scanline fill sampled at pixel centers, for a polygon given in
/// pixel units. Pixel `(i, j)` is inside when `(i + 0.5, j + 0.5)` is.
///
/// Spans come out sorted by row, then by `x_start`, and never overlap.
pub fn polygon_spans(vertices: &[Point], width: usize, height: usize) -> Vec<Span> {
    let n = vertices.len();
    if n < 3 || width == 0 || height == 0 {
        return Vec::new();
    }
    // Edges normalized so the lower-y endpoint comes first; this keeps the
    // crossing arithmetic identical under vertex reversal.
    let edges: Vec<(Point, Point)> = (0..n)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if (a.y, a.x) <= (b.y, b.x) {
                (a, b)
            } else {
                (b, a)
            }
        })
        .filter(|(a, b)| a.y != b.y)
        .collect();
    let (y_lo, y_hi) = vertices
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    let row_start = ((y_lo - 0.5).ceil().max(0.0)) as usize;
    let row_end = ((y_hi - 0.5).ceil().max(0.0) as usize).min(height);

    let mut spans = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for y in row_start..row_end {
        let yc = y as f64 + 0.5;
        xs.clear();
        for (a, b) in &edges {
            // half-open in y: a.y <= yc < b.y
            if a.y <= yc && yc < b.y {
                xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let start = (pair[0] - 0.5).ceil().clamp(0.0, width as f64) as usize;
            let end = (pair[1] - 0.5).ceil().clamp(0.0, width as f64) as usize;
            if start < end {
                match spans.last_mut() {
                    // touching runs from a self-touching outline
                    Some(Span { y: ly, x_end, .. }) if *ly == y && *x_end >= start => {
                        *x_end = (*x_end).max(end);
                    }
                    _ => spans.push(Span { y, x_start: start, x_end: end }),
                }
            }
        }
    }
    spans
}

/// Fills a polygon given in pixel units.
pub fn rasterize_pixels(vertices: &[Point], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::empty(width, height).expect("non-zero dimensions");
    for s in polygon_spans(vertices, width, height) {
        for x in s.x_start..s.x_end {
            mask.set(x, s.y, true);
        }
    }
    mask
}

/// Fills a normalized polygon on a `width x height` raster.
pub fn rasterize_polygon(poly: &PolygonAnnotation, width: usize, height: usize) -> BinaryMask {
    rasterize_pixels(&poly.to_pixels(width, height), width, height)
}
