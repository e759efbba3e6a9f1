//! Intensity-rule image grouping used to route images to a group-specific
//! segmentation model.

use serde::{Deserialize, Serialize};

use crate::dense::DenseMap;
use crate::error::{Error, Result};

pub const MIN_MEAN_SATURATION: f64 = 0.1;
pub const MEAN_VALUE_RANGE: (f64, f64) = (0.1, 0.6);
pub const LARGE_CELL_AREA: f64 = 8000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModalityGroup {
    /// Single-channel images.
    SingleChannel = 1,
    /// Colorful, mid-brightness RGB (typically stained tissue).
    Stained = 2,
    /// Remaining RGB images with large cells.
    LargeCells = 3,
    Other = 4,
}

impl ModalityGroup {
    pub fn id(self) -> u8 {
        self as u8
    }
}

/// Mean HSV saturation and value over all pixels of an RGB image in [0, 1].
pub fn mean_saturation_value(image: &DenseMap) -> Result<(f64, f64)> {
    if image.channels() != 3 {
        return Err(Error::ChannelMismatch {
            expected: 3,
            actual: image.channels(),
        });
    }
    let (r, g, b) = (image.plane(0), image.plane(1), image.plane(2));
    let (mut s_sum, mut v_sum) = (0.0f64, 0.0f64);
    for i in 0..r.len() {
        let (r, g, b) = (r[i] as f64, g[i] as f64, b[i] as f64);
        let v = r.max(g).max(b);
        let min = r.min(g).min(b);
        s_sum += if v > 0.0 { (v - min) / v } else { 0.0 };
        v_sum += v;
    }
    let n = r.len() as f64;
    Ok((s_sum / n, v_sum / n))
}

/// Group 1 for single-channel input; for RGB, group 2 when mean S > 0.1 and
/// mean V lies in [0.1, 0.6], else group 3 when the caller's mean cell area
/// estimate exceeds 8000 pixels, else group 4.
pub fn classify_modality_group(image: &DenseMap, cell_area_hint: f64) -> Result<ModalityGroup> {
    match image.channels() {
        1 => Ok(ModalityGroup::SingleChannel),
        3 => {
            let (s, v) = mean_saturation_value(image)?;
            if s > MIN_MEAN_SATURATION && (MEAN_VALUE_RANGE.0..=MEAN_VALUE_RANGE.1).contains(&v) {
                Ok(ModalityGroup::Stained)
            } else if cell_area_hint > LARGE_CELL_AREA {
                Ok(ModalityGroup::LargeCells)
            } else {
                Ok(ModalityGroup::Other)
            }
        }
        c => Err(Error::InvalidParameter(format!(
            "modality grouping expects 1 or 3 channels, got {c}"
        ))),
    }
}
