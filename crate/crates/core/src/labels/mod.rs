//! YOLO segmentation labels: parsing, serialization, rasterization,
//! boundary tracing, and dataset layout.

mod dataset;
mod format;
mod raster;
mod trace;

pub use dataset::{
    list_images, load_dataset, parse_descriptor, read_descriptor, write_descriptor, Dataset, DatasetDescriptor,
    DatasetImage,
};
pub use format::{
    parse_label_file, parse_prediction_file, serialize_label_file, serialize_prediction_file,
};
pub use raster::{polygon_spans, rasterize_pixels, rasterize_polygon, Span};
pub use trace::{mask_to_polygons, trace_components};

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundingBox, Point};

/// One polygon instance: class index plus normalized vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonAnnotation {
    pub class_id: usize,
    pub vertices: Vec<Point>,
}

impl PolygonAnnotation {
    /// Checks the vertex count and the `[0, 1]` coordinate range.
    pub fn new(class_id: usize, vertices: Vec<Point>) -> Result<Self, LabelErrorKind> {
        let a = Self { class_id, vertices };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), LabelErrorKind> {
        if self.vertices.len() < 3 {
            return Err(LabelErrorKind::TooFewVertices(self.vertices.len()));
        }
        for p in &self.vertices {
            for v in [p.x, p.y] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(LabelErrorKind::CoordinateOutOfRange(v));
                }
            }
        }
        Ok(())
    }

    pub fn validate_class(&self, num_classes: usize) -> Result<(), LabelErrorKind> {
        if self.class_id >= num_classes {
            return Err(LabelErrorKind::ClassOutOfRange {
                class_id: self.class_id,
                num_classes,
            });
        }
        Ok(())
    }

    pub fn bbox(&self) -> BoundingBox {
        polygon_bbox(&self.vertices)
    }

    /// Vertices scaled to pixel units of a `width x height` image.
    pub fn to_pixels(&self, width: usize, height: usize) -> Vec<Point> {
        denormalize(&self.vertices, width, height)
    }
}

/// Min/max box over the vertices. Panics on an empty slice.
pub fn polygon_bbox(vertices: &[Point]) -> BoundingBox {
    BoundingBox::enclosing(vertices).expect("polygon has vertices")
}

pub fn denormalize(vertices: &[Point], width: usize, height: usize) -> Vec<Point> {
    vertices
        .iter()
        .map(|p| Point::new(p.x * width as f64, p.y * height as f64))
        .collect()
}

/// One model prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_id: usize,
    pub confidence: f64,
    pub bbox: BoundingBox,
    pub mask_polygon: Option<Vec<Point>>,
}

impl Detection {
    /// Polygon prediction; the box is the polygon's bounding box.
    pub fn from_polygon(class_id: usize, confidence: f64, vertices: Vec<Point>) -> Self {
        Self {
            class_id,
            confidence,
            bbox: polygon_bbox(&vertices),
            mask_polygon: Some(vertices),
        }
    }

    pub fn from_box(class_id: usize, confidence: f64, bbox: BoundingBox) -> Self {
        Self {
            class_id,
            confidence,
            bbox,
            mask_polygon: None,
        }
    }
}

/// What went wrong on one label line.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelErrorKind {
    #[error("odd/insufficient coordinates")]
    OddOrInsufficientCoordinates,
    #[error("fewer than 3 vertices ({0})")]
    TooFewVertices(usize),
    #[error("coordinate {0} outside [0,1]")]
    CoordinateOutOfRange(f64),
    #[error("confidence {0} outside [0,1]")]
    ConfidenceOutOfRange(f64),
    #[error("class id {class_id} out of range for {num_classes} classes")]
    ClassOutOfRange { class_id: usize, num_classes: usize },
    #[error("non-numeric token '{0}'")]
    NonNumeric(String),
    #[error("box corners out of order")]
    InvertedBox,
    #[error("unexpected token '{0}'")]
    UnexpectedToken(String),
}

/// A label-file error with its 1-based line number.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind}, line {line}")]
pub struct LabelError {
    pub line: usize,
    pub kind: LabelErrorKind,
}
