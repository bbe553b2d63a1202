//! Raster types, the convolution engine, enhancement filters and file I/O.

mod enhance;
mod io;
mod kernel;

pub use enhance::{gamma_correct, unsharp_sharpen};
pub use io::{
    decode_image, encode_image, encode_pgm, encode_png, encode_rgb_png, load_image, read_dimensions, save_image,
    ImageFormat,
};
pub use kernel::{convolve2d, gaussian_blur, gaussian_kernel, BorderPolicy, Kernel};

use crate::error::{Error, Result};

/// Single-channel 8-bit image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image with every pixel set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    pub fn map(&self, f: impl Fn(u8) -> u8) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_float(&self) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }
}

/// Real-valued image used for gradients and smoothed intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at index {bad}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Largest value in the image.
    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rounds and clamps every value into an 8-bit image.
    pub fn to_gray_clamped(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| clamp_round(v)).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }
}

/// Read access shared by the integer and real rasters, so the convolution
/// engine accepts either.
pub trait Plane {
    fn plane_dimensions(&self) -> (usize, usize);
    fn sample(&self, index: usize) -> f64;
}

impl Plane for GrayImage {
    fn plane_dimensions(&self) -> (usize, usize) {
        self.dimensions()
    }

    #[inline]
    fn sample(&self, index: usize) -> f64 {
        f64::from(self.data[index])
    }
}

impl Plane for FloatImage {
    fn plane_dimensions(&self) -> (usize, usize) {
        self.dimensions()
    }

    #[inline]
    fn sample(&self, index: usize) -> f64 {
        self.data[index]
    }
}

/// Round half away from zero, then clamp into `[0, 255]`.
#[inline]
pub fn clamp_round(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::BufferSize {
            width,
            height,
            actual: len,
        });
    }
    Ok(())
}
