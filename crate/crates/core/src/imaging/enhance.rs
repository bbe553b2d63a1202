use super::{clamp_round, gaussian_blur, GrayImage};
use crate::error::{Error, Result};

/// Power-law intensity mapping `255 * (v / 255)^gamma`.
pub fn gamma_correct(img: &GrayImage, gamma: f64) -> Result<GrayImage> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let lut: Vec<u8> = (0..=255u32)
        .map(|v| clamp_round(255.0 * (f64::from(v) / 255.0).powf(gamma)))
        .collect();
    Ok(img.map(|v| lut[v as usize]))
}

/// Unsharp masking: `v + amount * (v - blur(v))`, rounded and clamped.
pub fn unsharp_sharpen(img: &GrayImage, sigma: f64, amount: f64) -> Result<GrayImage> {
    if !(amount.is_finite() && amount >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sharpen amount must be non-negative, got {amount}"
        )));
    }
    let blurred = gaussian_blur(img, sigma)?;
    let data = img
        .data()
        .iter()
        .zip(blurred.data())
        .map(|(&v, &b)| {
            let v = f64::from(v);
            clamp_round(v + amount * (v - b))
        })
        .collect();
    GrayImage::new(img.width(), img.height(), data)
}
