use serde::{Deserialize, Serialize};

use super::{FloatImage, Plane};
use crate::error::{Error, Result};

/// How samples outside the image are produced during convolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BorderPolicy {
    /// Out-of-bounds coordinates are clamped to the nearest edge pixel.
    #[default]
    Replicate,
    /// Out-of-bounds samples read as zero.
    ZeroPad,
}

/// Row-major correlation kernel.
///
/// Odd extents are anchored at their center tap; even extents (the 2x2
/// Roberts cross) are anchored at the top-left tap.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    coeffs: Vec<f64>,
}

impl Kernel {
    pub fn new(width: usize, height: usize, coeffs: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("kernel must be at least 1x1".into()));
        }
        if width * height != coeffs.len() {
            return Err(Error::InvalidParameter(format!(
                "kernel {width}x{height} needs {} coefficients, got {}",
                width * height,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("kernel coefficient is not finite".into()));
        }
        Ok(Self {
            width,
            height,
            coeffs,
        })
    }

    /// Builds a kernel from rows, the way operator matrices are usually written.
    pub fn from_rows<const W: usize, const H: usize>(rows: [[f64; W]; H]) -> Self {
        let coeffs = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(W, H, coeffs).expect("const-sized kernel is well formed")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.coeffs[y * self.width + x]
    }

    /// Tap aligned with the output pixel, as `(x, y)`.
    pub fn anchor(&self) -> (usize, usize) {
        (anchor_of(self.width), anchor_of(self.height))
    }
}

fn anchor_of(extent: usize) -> usize {
    if extent % 2 == 1 {
        extent / 2
    } else {
        0
    }
}

/// Correlates `img` with `kernel` (no kernel flip).
///
/// `out(x, y) = sum_{i,j} k(i, j) * img(x + i - ax, y + j - ay)` where
/// `(ax, ay)` is the kernel anchor.
pub fn convolve2d<P: Plane + ?Sized>(
    img: &P,
    kernel: &Kernel,
    border: BorderPolicy,
) -> Result<FloatImage> {
    let (w, h) = img.plane_dimensions();
    if kernel.width > w || kernel.height > h {
        return Err(Error::KernelTooLarge {
            kernel_w: kernel.width,
            kernel_h: kernel.height,
            image_w: w,
            image_h: h,
        });
    }
    let (ax, ay) = kernel.anchor();
    let (ax, ay) = (ax as isize, ay as isize);
    let (wi, hi) = (w as isize, h as isize);
    let mut out = Vec::with_capacity(w * h);

    for y in 0..hi {
        for x in 0..wi {
            let interior = x - ax >= 0
                && y - ay >= 0
                && x - ax + kernel.width as isize <= wi
                && y - ay + kernel.height as isize <= hi;
            let mut acc = 0.0;
            for j in 0..kernel.height {
                let sy = y + j as isize - ay;
                for i in 0..kernel.width {
                    let c = kernel.coeffs[j * kernel.width + i];
                    if c == 0.0 {
                        continue;
                    }
                    let sx = x + i as isize - ax;
                    let v = if interior {
                        img.sample(sy as usize * w + sx as usize)
                    } else {
                        match border {
                            BorderPolicy::Replicate => {
                                let cx = sx.clamp(0, wi - 1) as usize;
                                let cy = sy.clamp(0, hi - 1) as usize;
                                img.sample(cy * w + cx)
                            }
                            BorderPolicy::ZeroPad => {
                                if sx < 0 || sy < 0 || sx >= wi || sy >= hi {
                                    0.0
                                } else {
                                    img.sample(sy as usize * w + sx as usize)
                                }
                            }
                        }
                    };
                    acc += c * v;
                }
            }
            out.push(acc);
        }
    }
    Ok(FloatImage::from_parts_unchecked(w, h, out))
}

/// Normalized square Gaussian with radius `ceil(3 * sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gaussian sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let side = (2 * radius + 1) as usize;
    let denom = 2.0 * sigma * sigma;
    let mut coeffs = Vec::with_capacity(side * side);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let r2 = (dx * dx + dy * dy) as f64;
            coeffs.push((-r2 / denom).exp());
        }
    }
    let sum: f64 = coeffs.iter().sum();
    coeffs.iter_mut().for_each(|c| *c /= sum);
    Kernel::new(side, side, coeffs)
}

/// Gaussian smoothing with replicate borders.
///
/// Images smaller than the kernel are smoothed with replicated samples as
/// well, so small inputs never fail.
pub fn gaussian_blur<P: Plane + ?Sized>(img: &P, sigma: f64) -> Result<FloatImage> {
    let kernel = gaussian_kernel(sigma)?;
    let (w, h) = img.plane_dimensions();
    if kernel.width <= w && kernel.height <= h {
        return convolve2d(img, &kernel, BorderPolicy::Replicate);
    }
    // Kernel wider than the image: clamp coordinates directly.
    let r = (kernel.width / 2) as isize;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for j in -r..=r {
                let sy = (y + j).clamp(0, h as isize - 1) as usize;
                for i in -r..=r {
                    let sx = (x + i).clamp(0, w as isize - 1) as usize;
                    acc += kernel.get((i + r) as usize, (j + r) as usize) * img.sample(sy * w + sx);
                }
            }
            out.push(acc);
        }
    }
    Ok(FloatImage::from_parts_unchecked(w, h, out))
}
