//! Classical X-ray segmentation, YOLO polygon labels and detection /
//! segmentation evaluation.

pub mod error;
pub mod geometry;
pub mod imaging;
pub mod labels;
pub mod metrics;
pub mod pipeline;
pub mod segment;

pub use error::{Error, Result};
