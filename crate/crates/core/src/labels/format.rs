use std::fmt::Write as _;

use super::{Detection, LabelError, LabelErrorKind, PolygonAnnotation};
use crate::geometry::{BoundingBox, Point};

const BOX_SUFFIX: &str = "#box";

fn parse_class(token: &str) -> Result<usize, LabelErrorKind> {
    token
        .parse::<usize>()
        .map_err(|_| LabelErrorKind::NonNumeric(token.to_string()))
}

fn parse_real(token: &str) -> Result<f64, LabelErrorKind> {
    let v = token
        .parse::<f64>()
        .map_err(|_| LabelErrorKind::NonNumeric(token.to_string()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(LabelErrorKind::NonNumeric(token.to_string()))
    }
}

fn parse_vertices(tokens: &[&str]) -> Result<Vec<Point>, LabelErrorKind> {
    let coords = tokens.iter().map(|t| parse_real(t)).collect::<Result<Vec<_>, _>>()?;
    if coords.len() % 2 != 0 || coords.len() < 6 {
        return Err(LabelErrorKind::OddOrInsufficientCoordinates);
    }
    if let Some(&bad) = coords.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(LabelErrorKind::CoordinateOutOfRange(bad));
    }
    Ok(coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, tokens)| !tokens.is_empty())
}

/// Parses a YOLO segmentation label file: one
/// `class_id x1 y1 x2 y2 ...` instance per non-empty line.
pub fn parse_label_file(text: &str, num_classes: usize) -> Result<Vec<PolygonAnnotation>, LabelError> {
    numbered_lines(text)
        .map(|(line, tokens)| {
            parse_label_line(&tokens, num_classes).map_err(|kind| LabelError { line, kind })
        })
        .collect()
}

fn parse_label_line(tokens: &[&str], num_classes: usize) -> Result<PolygonAnnotation, LabelErrorKind> {
    let class_id = parse_class(tokens[0])?;
    let vertices = parse_vertices(&tokens[1..])?;
    let ann = PolygonAnnotation { class_id, vertices };
    ann.validate_class(num_classes)?;
    Ok(ann)
}

/// One line per annotation, coordinates with six decimals.
pub fn serialize_label_file(annotations: &[PolygonAnnotation]) -> String {
    let lines: Vec<String> = annotations
        .iter()
        .map(|a| {
            let mut line = a.class_id.to_string();
            for p in &a.vertices {
                let _ = write!(line, " {:.6} {:.6}", p.x, p.y);
            }
            line
        })
        .collect();
    lines.join("\n")
}

/// Parses a prediction file. Polygon lines are `class conf x1 y1 ...`;
/// box-only lines are `class conf x_min y_min x_max y_max #box`.
pub fn parse_prediction_file(text: &str, num_classes: usize) -> Result<Vec<Detection>, LabelError> {
    numbered_lines(text)
        .map(|(line, tokens)| {
            parse_prediction_line(&tokens, num_classes).map_err(|kind| LabelError { line, kind })
        })
        .collect()
}

fn parse_prediction_line(tokens: &[&str], num_classes: usize) -> Result<Detection, LabelErrorKind> {
    let class_id = parse_class(tokens[0])?;
    if class_id >= num_classes {
        return Err(LabelErrorKind::ClassOutOfRange {
            class_id,
            num_classes,
        });
    }
    let conf_token = tokens.get(1).ok_or(LabelErrorKind::OddOrInsufficientCoordinates)?;
    let confidence = parse_real(conf_token)?;
    if !(0.0..=1.0).contains(&confidence) {
        return Err(LabelErrorKind::ConfidenceOutOfRange(confidence));
    }
    let rest = &tokens[2..];
    if rest.last() == Some(&BOX_SUFFIX) {
        let coords = &rest[..rest.len() - 1];
        if coords.len() != 4 {
            return Err(LabelErrorKind::OddOrInsufficientCoordinates);
        }
        let v = coords.iter().map(|t| parse_real(t)).collect::<Result<Vec<_>, _>>()?;
        if let Some(&bad) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(LabelErrorKind::CoordinateOutOfRange(bad));
        }
        let bbox = BoundingBox::new(v[0], v[1], v[2], v[3]).map_err(|_| LabelErrorKind::InvertedBox)?;
        return Ok(Detection::from_box(class_id, confidence, bbox));
    }
    if let Some(bad) = rest.iter().find(|t| t.starts_with('#')) {
        return Err(LabelErrorKind::UnexpectedToken(bad.to_string()));
    }
    let vertices = parse_vertices(rest)?;
    Ok(Detection::from_polygon(class_id, confidence, vertices))
}

/// Inverse of [`parse_prediction_file`].
pub fn serialize_prediction_file(detections: &[Detection]) -> String {
    let lines: Vec<String> = detections
        .iter()
        .map(|d| {
            let mut line = format!("{} {:.6}", d.class_id, d.confidence);
            match &d.mask_polygon {
                Some(poly) => {
                    for p in poly {
                        let _ = write!(line, " {:.6} {:.6}", p.x, p.y);
                    }
                }
                None => {
                    let b = d.bbox;
                    let _ = write!(
                        line,
                        " {:.6} {:.6} {:.6} {:.6} {BOX_SUFFIX}",
                        b.x_min, b.y_min, b.x_max, b.y_max
                    );
                }
            }
            line
        })
        .collect();
    lines.join("\n")
}
