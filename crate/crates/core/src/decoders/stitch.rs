//! Sliding-window stitching of dense tile predictions with an importance map
//! that down-weights tile borders.

use serde::{Deserialize, Serialize};

use crate::dense::DenseMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Importance {
    #[default]
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSpec {
    pub tile_size: usize,
    pub overlap: usize,
    pub importance: Importance,
}

impl TileSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 || self.overlap >= self.tile_size {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= overlap < tile_size, got overlap {} tile {}",
                self.overlap, self.tile_size
            )));
        }
        Ok(())
    }

    /// Gaussian sigma in pixels.
    pub fn sigma(&self) -> f64 {
        self.tile_size as f64 / 8.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    /// `(row, col)` of the tile's top-left pixel on the canvas.
    pub origin: (usize, usize),
    pub map: DenseMap,
}

/// Weight of pixel `(r, c)` in a `tile_h x tile_w` tile; the gaussian peaks
/// at the tile center.
pub fn importance_weight(spec: &TileSpec, tile_h: usize, tile_w: usize, r: usize, c: usize) -> f64 {
    match spec.importance {
        Importance::Uniform => 1.0,
        Importance::Gaussian => {
            let s = spec.sigma();
            let dy = r as f64 - (tile_h as f64 - 1.0) / 2.0;
            let dx = c as f64 - (tile_w as f64 - 1.0) / 2.0;
            (-(dy * dy + dx * dx) / (2.0 * s * s)).exp()
        }
    }
}

fn axis_origins(extent: usize, tile: usize, stride: usize) -> Vec<usize> {
    if extent <= tile {
        return vec![0];
    }
    let mut v: Vec<usize> = (0..=extent - tile).step_by(stride).collect();
    if *v.last().expect("non-empty") != extent - tile {
        v.push(extent - tile);
    }
    v
}

/// Tile origins covering the canvas with stride `tile_size - overlap`; the
/// last row/column of tiles is shifted to end flush with the canvas.
pub fn tile_origins(height: usize, width: usize, spec: &TileSpec) -> Result<Vec<(usize, usize)>> {
    spec.validate()?;
    let stride = spec.tile_size - spec.overlap;
    let rows = axis_origins(height, spec.tile_size, stride);
    let cols = axis_origins(width, spec.tile_size, stride);
    Ok(rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect())
}

/// Per pixel, `Σ weight·tile / Σ weight` over the tiles covering it.
/// Accumulation is in f64 in tile order.
pub fn stitch_sliding_window(tiles: &[Tile], spec: &TileSpec, height: usize, width: usize) -> Result<DenseMap> {
    spec.validate()?;
    let channels = match tiles.first() {
        Some(t) => t.map.channels(),
        None => return Err(Error::UncoveredPixel { row: 0, col: 0 }),
    };
    let n = height * width;
    let mut acc = vec![0.0f64; n * channels];
    let mut weight = vec![0.0f64; n];
    for t in tiles {
        let (th, tw) = t.map.dims();
        let (r0, c0) = t.origin;
        if t.map.channels() != channels {
            return Err(Error::ChannelMismatch {
                expected: channels,
                actual: t.map.channels(),
            });
        }
        if r0 + th > height || c0 + tw > width {
            return Err(Error::TileOutOfBounds {
                row: r0,
                col: c0,
                height: th,
                width: tw,
            });
        }
        for r in 0..th {
            for c in 0..tw {
                let wgt = importance_weight(spec, th, tw, r, c);
                let i = (r0 + r) * width + c0 + c;
                weight[i] += wgt;
                for ch in 0..channels {
                    acc[ch * n + i] += wgt * t.map.get(ch, r, c) as f64;
                }
            }
        }
    }
    if let Some(i) = weight.iter().position(|&w| w == 0.0) {
        return Err(Error::UncoveredPixel {
            row: i / width,
            col: i % width,
        });
    }
    let data = acc
        .iter()
        .enumerate()
        .map(|(k, &v)| (v / weight[k % n]) as f32)
        .collect();
    DenseMap::new(height, width, channels, data)
}
