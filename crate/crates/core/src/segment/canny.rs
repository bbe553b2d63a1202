use std::collections::VecDeque;

use super::{gradient_operator, BinaryMask, GradientField, GradientKind};
use crate::error::{Error, Result};
use crate::imaging::{gaussian_blur, BorderPolicy, GrayImage};

/// Canny edge detector: Gaussian smoothing, Sobel gradients, non-maximum
/// suppression over four direction bins, and 8-connected hysteresis.
///
/// Thresholds apply to the Sobel magnitude of the smoothed image.
pub fn canny(img: &GrayImage, sigma: f64, t_low: f64, t_high: f64) -> Result<BinaryMask> {
    if !(t_low.is_finite() && t_high.is_finite() && t_low >= 0.0 && t_high >= t_low) {
        return Err(Error::InvalidParameter(format!(
            "canny thresholds need 0 <= low <= high (got low {t_low}, high {t_high})"
        )));
    }
    let smoothed = gaussian_blur(img, sigma)?;
    let field = gradient_operator(&smoothed, GradientKind::Sobel, BorderPolicy::Replicate)?;
    let thin = non_maximum_suppression(&field);
    Ok(hysteresis(&field, &thin, t_low, t_high))
}

/// Step to the "forward" neighbour for each quantized direction
/// (0, 45, 90, 135 degrees, image y pointing down).
const DIRECTION_STEPS: [(isize, isize); 4] = [(1, 0), (1, 1), (0, 1), (-1, 1)];

fn direction_bin(gx: f64, gy: f64) -> usize {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        0
    } else if angle < 67.5 {
        1
    } else if angle < 112.5 {
        2
    } else {
        3
    }
}

/// Pixels whose magnitude is a local maximum along the quantized gradient
/// direction. A pixel survives when it is `>=` its forward neighbour and
/// strictly `>` its backward neighbour; out-of-bounds neighbours count as 0.
pub fn non_maximum_suppression(field: &GradientField) -> BinaryMask {
    let (w, h) = field.dimensions();
    let mag = field.magnitude.data();
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    BinaryMask::from_fn(w, h, |x, y| {
        let i = y * w + x;
        let m = mag[i];
        let (dx, dy) = DIRECTION_STEPS[direction_bin(field.gx.data()[i], field.gy.data()[i])];
        let (x, y) = (x as isize, y as isize);
        m >= at(x + dx, y + dy) && m > at(x - dx, y - dy)
    })
    .expect("field dimensions are valid")
}

fn hysteresis(field: &GradientField, thin: &BinaryMask, t_low: f64, t_high: f64) -> BinaryMask {
    let (w, h) = field.dimensions();
    let mag = field.magnitude.data();
    let weak: Vec<bool> = thin
        .data()
        .iter()
        .zip(mag)
        .map(|(&keep, &m)| keep && m >= t_low)
        .collect();
    let mut out = BinaryMask::empty(w, h).expect("field dimensions are valid");
    let mut queue = VecDeque::new();
    for (i, (&ok, &m)) in weak.iter().zip(mag).enumerate() {
        if ok && m >= t_high {
            out.data_mut()[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if weak[j] && !out.data()[j] {
                    out.data_mut()[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    out
}
