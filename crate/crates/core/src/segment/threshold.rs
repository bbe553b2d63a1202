use super::BinaryMask;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// Foreground where the intensity is strictly greater than `t`.
pub fn threshold_fixed(img: &GrayImage, t: u8) -> BinaryMask {
    let data = img.data().iter().map(|&v| v > t).collect();
    BinaryMask::new(img.width(), img.height(), data).expect("image dimensions are valid")
}

/// Otsu's threshold: the `t` maximizing the between-class variance
/// `w0 * w1 * (mu0 - mu1)^2`, where class 0 holds intensities `<= t`.
/// Ties resolve to the lowest `t`.
pub fn otsu_threshold(img: &GrayImage) -> Result<u8> {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let total = img.data().len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();

    let mut best_t = 0u8;
    let mut best_var = f64::NEG_INFINITY;
    let (mut n0, mut s0) = (0u64, 0.0f64);
    for t in 0..=255usize {
        n0 += hist[t];
        s0 += t as f64 * hist[t] as f64;
        let n1 = total as u64 - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let w0 = n0 as f64 / total;
        let w1 = n1 as f64 / total;
        let mu0 = s0 / n0 as f64;
        let mu1 = (sum_all - s0) / n1 as f64;
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }
    Ok(best_t)
}

/// Otsu threshold together with the resulting mask.
pub fn threshold_otsu(img: &GrayImage) -> Result<(u8, BinaryMask)> {
    let t = otsu_threshold(img)?;
    Ok((t, threshold_fixed(img, t)))
}
