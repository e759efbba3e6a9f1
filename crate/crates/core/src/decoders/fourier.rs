//! Fourier contour decoding: sample each truncated series, run
//! uncertainty-aware NMS, fill the surviving contours and settle overlaps by
//! region growing.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::decoders::raster::{polygon_pixels, polyline_pixels, Pixel};
use crate::decoders::region_grow::region_grow_assign;
use crate::decoders::star::greedy_suppress;
use crate::error::{Error, Result};
use crate::labelmap::LabelMap;

pub const MIN_SAMPLES_PER_CONTOUR: usize = 8;
pub const DEFAULT_CONTOUR_NMS_IOU: f64 = 0.5;

/// Closed curve `x(t) = a0 + Σ aₖcos kt + bₖsin kt`,
/// `y(t) = c0 + Σ cₖcos kt + dₖsin kt`, with x the column and y the row.
/// `coefficients[k - 1]` holds `[aₖ, bₖ, cₖ, dₖ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierContour {
    pub a0: f64,
    pub c0: f64,
    pub coefficients: Vec<[f64; 4]>,
    pub score: f64,
    #[serde(default)]
    pub uncertainty: f64,
}

impl FourierContour {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    fn validate(&self) -> Result<()> {
        let finite = self.a0.is_finite()
            && self.c0.is_finite()
            && self.coefficients.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("contour coefficients"));
        }
        if self.uncertainty.is_nan() || self.uncertainty < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "uncertainty {} must be non-negative",
                self.uncertainty
            )));
        }
        Ok(())
    }

    /// `(row, col)` points at `t = 2πm/M`, m = 0..M.
    pub fn sample(&self, samples: usize) -> Vec<(f64, f64)> {
        (0..samples)
            .map(|m| {
                let t = TAU * m as f64 / samples as f64;
                let (mut x, mut y) = (self.a0, self.c0);
                for (k, [a, b, c, d]) in self.coefficients.iter().enumerate() {
                    let kt = (k + 1) as f64 * t;
                    let (s, co) = kt.sin_cos();
                    x += a * co + b * s;
                    y += c * co + d * s;
                }
                (y, x)
            })
            .collect()
    }

    /// Filled interior; a contour enclosing no pixel center (e.g. a constant
    /// curve) falls back to the pixels its polyline passes through.
    pub fn pixels(&self, samples: usize) -> Vec<Pixel> {
        let pts = self.sample(samples);
        let filled = polygon_pixels(&pts);
        if filled.is_empty() {
            polyline_pixels(&pts)
        } else {
            filled
        }
    }
}

pub fn decode_fourier_contours(
    contours: &[FourierContour],
    samples_per_contour: usize,
    height: usize,
    width: usize,
    nms_iou: f64,
) -> Result<LabelMap> {
    if samples_per_contour < MIN_SAMPLES_PER_CONTOUR {
        return Err(Error::InvalidParameter(format!(
            "samples_per_contour must be at least {MIN_SAMPLES_PER_CONTOUR}"
        )));
    }
    for c in contours {
        c.validate()?;
    }
    let pixel_sets: Vec<Vec<Pixel>> = contours.iter().map(|c| c.pixels(samples_per_contour)).collect();

    // score descending, then uncertainty ascending, then input order
    let mut order: Vec<usize> = (0..contours.len()).collect();
    order.sort_by(|&a, &b| {
        contours[b]
            .score
            .total_cmp(&contours[a].score)
            .then(contours[a].uncertainty.total_cmp(&contours[b].uncertainty))
    });
    let kept = greedy_suppress(&order, |i| pixel_sets[i].clone(), nms_iou);

    let n = height * width;
    let mut owner = vec![0u32; n];
    let mut claims = vec![0u16; n];
    for (rank, &i) in kept.iter().enumerate() {
        let label = rank as u32 + 1;
        for &(r, c) in &pixel_sets[i] {
            if r < 0 || c < 0 || r as usize >= height || c as usize >= width {
                continue;
            }
            let idx = r as usize * width + c as usize;
            if owner[idx] == 0 {
                owner[idx] = label;
            }
            claims[idx] = claims[idx].saturating_add(1);
        }
    }
    let foreground: Vec<bool> = claims.iter().map(|&k| k > 0).collect();
    let exclusive: Vec<u32> = owner
        .iter()
        .zip(&claims)
        .map(|(&o, &k)| if k == 1 { o } else { 0 })
        .collect();
    let grown = region_grow_assign(&LabelMap::new(height, width, exclusive)?, &foreground)?;

    // overlap pixels no exclusive region reaches stay with the first claimant
    let labels = grown
        .map
        .labels()
        .iter()
        .zip(&owner)
        .map(|(&g, &o)| if g == 0 { o } else { g })
        .collect();
    Ok(crate::labelmap::relabel_sequential(&LabelMap::new(height, width, labels)?))
}
