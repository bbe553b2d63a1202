use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{convolve2d, BorderPolicy, FloatImage, Kernel, Plane};

pub const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
pub const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
pub const PREWITT_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]];
pub const PREWITT_Y: [[f64; 3]; 3] = [[-1.0, -1.0, -1.0], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]];
pub const ROBERTS_X: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];
pub const ROBERTS_Y: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientKind {
    Sobel,
    Prewitt,
    Roberts,
}

impl GradientKind {
    pub fn kernels(self) -> (Kernel, Kernel) {
        match self {
            GradientKind::Sobel => (Kernel::from_rows(SOBEL_X), Kernel::from_rows(SOBEL_Y)),
            GradientKind::Prewitt => (Kernel::from_rows(PREWITT_X), Kernel::from_rows(PREWITT_Y)),
            GradientKind::Roberts => (Kernel::from_rows(ROBERTS_X), Kernel::from_rows(ROBERTS_Y)),
        }
    }
}

/// Horizontal and vertical responses plus their Euclidean magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: FloatImage,
    pub gy: FloatImage,
    pub magnitude: FloatImage,
}

impl GradientField {
    pub fn from_components(gx: FloatImage, gy: FloatImage) -> Result<Self> {
        if gx.dimensions() != gy.dimensions() {
            return Err(Error::DimensionMismatch("gx and gy differ in size".into()));
        }
        let (w, h) = gx.dimensions();
        let mag = gx
            .data()
            .iter()
            .zip(gy.data())
            .map(|(a, b)| a.hypot(*b))
            .collect();
        Ok(Self {
            gx,
            gy,
            magnitude: FloatImage::new(w, h, mag)?,
        })
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.magnitude.dimensions()
    }
}

/// Applies the chosen operator pair by correlation.
pub fn gradient_operator<P: Plane + ?Sized>(
    img: &P,
    kind: GradientKind,
    border: BorderPolicy,
) -> Result<GradientField> {
    let (kx, ky) = kind.kernels();
    let gx = convolve2d(img, &kx, border)?;
    let gy = convolve2d(img, &ky, border)?;
    GradientField::from_components(gx, gy)
}
