//! Classical segmentation: thresholding, region growing, gradient
//! operators, Canny, greedy snakes and binary morphology.

mod canny;
mod gradient;
mod morph;
mod region;
mod snake;
mod threshold;

pub use canny::{canny, non_maximum_suppression};
pub use gradient::{
    gradient_operator, GradientField, GradientKind, PREWITT_X, PREWITT_Y, ROBERTS_X, ROBERTS_Y,
    SOBEL_X, SOBEL_Y,
};
pub use morph::{morph, MorphOp};
pub use region::{region_grow, Connectivity, GrowMode, Seed};
pub use snake::{snake_energy, snake_evolve, Contour, SnakeOutcome, SnakeParams};
pub use threshold::{otsu_threshold, threshold_fixed, threshold_otsu};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// Per-pixel foreground flags, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if width.checked_mul(height) != Some(data.len()) {
            return Err(Error::BufferSize {
                width,
                height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Like [`get`](Self::get) but out-of-bounds reads as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// `true` if every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dimensions() == other.dimensions()
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// Export as an image with foreground 255 and background 0.
    pub fn to_gray(&self) -> GrayImage {
        let data = self.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, data).expect("mask dimensions are valid")
    }

    /// Inverse of [`to_gray`](Self::to_gray): any non-zero pixel is foreground.
    pub fn from_gray(img: &GrayImage) -> BinaryMask {
        let data = img.data().iter().map(|&v| v != 0).collect();
        BinaryMask::new(img.width(), img.height(), data).expect("image dimensions are valid")
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a || b)
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        BinaryMask::new(self.width, self.height, data)
    }

    pub(crate) fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }
}
