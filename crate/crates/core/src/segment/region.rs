use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// Seed pixel for region growing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub x: usize,
    pub y: usize,
}

impl Seed {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Reference intensity that candidate pixels are compared against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowMode {
    /// Compare against the seed's intensity.
    #[default]
    SeedRef,
    /// Compare against the exact mean of the region grown so far.
    RunningMean,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    /// Neighbour offsets in row-major order.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Grows a region from `seed` by breadth-first expansion.
///
/// Pixels are examined in FIFO order; a neighbour is admitted when its
/// intensity differs from the reference by at most `tau`. In
/// [`GrowMode::RunningMean`] the reference is the exact mean of the region at
/// the moment of the test, and a rejected pixel is tested again whenever
/// another region pixel next to it is expanded. Growth stops when the queue
/// empties.
pub fn region_grow(
    img: &GrayImage,
    seed: Seed,
    tau: u8,
    mode: GrowMode,
    connectivity: Connectivity,
) -> Result<BinaryMask> {
    let (w, h) = img.dimensions();
    if seed.x >= w || seed.y >= h {
        return Err(Error::SeedOutOfBounds {
            x: seed.x,
            y: seed.y,
            width: w,
            height: h,
        });
    }
    let tau = i64::from(tau);
    let seed_value = i64::from(img.get(seed.x, seed.y));
    let mut region = vec![false; w * h];
    region[seed.y * w + seed.x] = true;
    // exact running mean kept as sum / count
    let mut sum = seed_value;
    let mut count = 1i64;
    let mut queue = VecDeque::from([(seed.x, seed.y)]);

    while let Some((x, y)) = queue.pop_front() {
        for &(dx, dy) in connectivity.offsets() {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            let idx = ny * w + nx;
            if region[idx] {
                continue;
            }
            let v = i64::from(img.data()[idx]);
            let admit = match mode {
                GrowMode::SeedRef => (v - seed_value).abs() <= tau,
                // |v - sum/count| <= tau  <=>  |v*count - sum| <= tau*count
                GrowMode::RunningMean => (v * count - sum).abs() <= tau * count,
            };
            if admit {
                region[idx] = true;
                sum += v;
                count += 1;
                queue.push_back((nx, ny));
            }
        }
    }
    BinaryMask::new(w, h, region)
}
