use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Erode,
    Dilate,
    /// `dilate(erode(m))`
    Open,
    /// `erode(dilate(m))`
    Close,
}

/// Binary morphology with a full `size x size` square structuring element.
///
/// Pixels outside the mask count as background for both erosion and
/// dilation, so foreground touching the border erodes away.
pub fn morph(mask: &BinaryMask, op: MorphOp, size: usize) -> Result<BinaryMask> {
    if size < 3 || size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "structuring element size must be odd and >= 3, got {size}"
        )));
    }
    let r = size / 2;
    Ok(match op {
        MorphOp::Erode => erode(mask, r),
        MorphOp::Dilate => dilate(mask, r),
        MorphOp::Open => dilate(&erode(mask, r), r),
        MorphOp::Close => erode(&dilate(mask, r), r),
    })
}

fn erode(mask: &BinaryMask, r: usize) -> BinaryMask {
    separable(mask, r, true)
}

fn dilate(mask: &BinaryMask, r: usize) -> BinaryMask {
    separable(mask, r, false)
}

/// The square element factors into a horizontal then a vertical line pass.
fn separable(mask: &BinaryMask, r: usize, all: bool) -> BinaryMask {
    let (w, h) = mask.dimensions();
    let pass = |src: &[bool], stride: usize, len: usize, lines: usize, step: usize| -> Vec<bool> {
        let mut out = vec![false; src.len()];
        for line in 0..lines {
            let base = line * stride;
            for i in 0..len {
                let lo = i as isize - r as isize;
                let hi = i + r;
                out[base + i * step] = if all {
                    lo >= 0 && hi < len && (lo as usize..=hi).all(|k| src[base + k * step])
                } else {
                    (lo.max(0) as usize..=hi.min(len - 1)).any(|k| src[base + k * step])
                };
            }
        }
        out
    };
    let rows = pass(mask.data(), w, w, h, 1);
    let cols = pass(&rows, 1, h, w, w);
    BinaryMask::new(w, h, cols).expect("dimensions unchanged")
}
