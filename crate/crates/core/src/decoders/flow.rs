//! Gradient-flow representation of instances and its decoder.
//!
//! The encoder diffuses heat from each cell's median pixel inside the cell
//! mask and takes the normalized gradient of `log(1 + heat)`, so flows point
//! toward the cell center. The decoder advects foreground pixels along the
//! flows and groups pixels whose end points land in touching sink bins.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMap;
use crate::error::{Error, Result};
use crate::labelmap::{filter_small_cells, relabel_connected, relabel_sequential, LabelMap, MIN_CELL_PIXELS};

/// Per-pixel vertical/horizontal flow plus cell probability, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub height: usize,
    pub width: usize,
    pub flow_y: Vec<f32>,
    pub flow_x: Vec<f32>,
    pub cell_prob: Vec<f32>,
}

impl FlowField {
    pub fn validate(&self) -> Result<()> {
        let n = self.height * self.width;
        if n == 0 {
            return Err(Error::InvalidDimensions {
                height: self.height,
                width: self.width,
            });
        }
        for ch in [&self.flow_y, &self.flow_x, &self.cell_prob] {
            if ch.len() != n {
                return Err(Error::BufferSize {
                    expected: n,
                    actual: ch.len(),
                });
            }
        }
        if self.flow_y.iter().chain(&self.flow_x).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flow field"));
        }
        Ok(())
    }

    /// Channels in order `flow_y, flow_x, cell_prob`.
    pub fn to_dense(&self) -> Result<DenseMap> {
        DenseMap::from_planes(
            self.height,
            self.width,
            &[&self.flow_y, &self.flow_x, &self.cell_prob],
        )
    }

    pub fn from_dense(map: &DenseMap) -> Result<Self> {
        if map.channels() != 3 {
            return Err(Error::ChannelMismatch {
                expected: 3,
                actual: map.channels(),
            });
        }
        Ok(Self {
            height: map.height(),
            width: map.width(),
            flow_y: map.plane(0).to_vec(),
            flow_x: map.plane(1).to_vec(),
            cell_prob: map.plane(2).to_vec(),
        })
    }
}

fn median(v: &mut [usize]) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

pub fn encode_flow_field(map: &LabelMap) -> FlowField {
    let (h, w) = map.dims();
    let mut flow_y = vec![0.0f32; h * w];
    let mut flow_x = vec![0.0f32; h * w];
    let cell_prob: Vec<f32> = map.labels().iter().map(|&l| if l != 0 { 1.0 } else { 0.0 }).collect();

    let mut cells: HashMap<u32, Vec<(usize, usize)>> = HashMap::new();
    for r in 0..h {
        for c in 0..w {
            let l = map.get(r, c);
            if l != 0 {
                cells.entry(l).or_default().push((r, c));
            }
        }
    }

    for pixels in cells.values() {
        let (r0, r1) = pixels.iter().fold((usize::MAX, 0), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (c0, c1) = pixels.iter().fold((usize::MAX, 0), |(a, b), p| (a.min(p.1), b.max(p.1)));
        // local grid with a one-pixel zero border
        let lh = r1 - r0 + 3;
        let lw = c1 - c0 + 3;
        let local: Vec<usize> = pixels.iter().map(|&(r, c)| (r - r0 + 1) * lw + (c - c0 + 1)).collect();

        let ymed = median(&mut pixels.iter().map(|p| p.0).collect::<Vec<_>>());
        let xmed = median(&mut pixels.iter().map(|p| p.1).collect::<Vec<_>>());
        let source = pixels
            .iter()
            .zip(&local)
            .min_by(|(a, _), (b, _)| {
                let da = (a.0 as f64 - ymed).powi(2) + (a.1 as f64 - xmed).powi(2);
                let db = (b.0 as f64 - ymed).powi(2) + (b.1 as f64 - xmed).powi(2);
                da.total_cmp(&db)
            })
            .map(|(_, &i)| i)
            .expect("cell has pixels");

        let iterations = 2 * ((r1 - r0 + 1) + (c1 - c0 + 1));
        let mut heat = vec![0.0f64; lh * lw];
        let mut next = vec![0.0f64; local.len()];
        for _ in 0..iterations {
            heat[source] += 1.0;
            for (k, &i) in local.iter().enumerate() {
                next[k] = (heat[i - lw - 1] + heat[i - lw] + heat[i - lw + 1]
                    + heat[i - 1] + heat[i] + heat[i + 1]
                    + heat[i + lw - 1] + heat[i + lw] + heat[i + lw + 1])
                    / 9.0;
            }
            for (k, &i) in local.iter().enumerate() {
                heat[i] = next[k];
            }
        }
        heat.iter_mut().for_each(|t| *t = t.ln_1p());

        for (&(r, c), &i) in pixels.iter().zip(&local) {
            let dy = heat[i + lw] - heat[i - lw];
            let dx = heat[i + 1] - heat[i - 1];
            let norm = (dy * dy + dx * dx).sqrt();
            if norm > 0.0 {
                flow_y[r * w + c] = (dy / norm) as f32;
                flow_x[r * w + c] = (dx / norm) as f32;
            }
        }
    }

    FlowField {
        height: h,
        width: w,
        flow_y,
        flow_x,
        cell_prob,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDecodeParams {
    pub prob_threshold: f32,
    pub n_iter: usize,
    pub step: f32,
    /// Decoded cells smaller than this are dropped (0 keeps everything).
    pub min_size: usize,
}

impl Default for FlowDecodeParams {
    fn default() -> Self {
        Self {
            prob_threshold: 0.5,
            n_iter: 200,
            step: 1.0,
            min_size: MIN_CELL_PIXELS,
        }
    }
}

/// Bilinear sample of a row-major plane at a clamped fractional position.
fn bilinear(plane: &[f32], w: usize, h: usize, y: f32, x: f32) -> f32 {
    let y0 = (y.floor() as usize).min(h - 1);
    let x0 = (x.floor() as usize).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let fy = y - y0 as f32;
    let fx = x - x0 as f32;
    let top = plane[y0 * w + x0] * (1.0 - fx) + plane[y0 * w + x1] * fx;
    let bottom = plane[y1 * w + x0] * (1.0 - fx) + plane[y1 * w + x1] * fx;
    top * (1.0 - fy) + bottom * fy
}

pub fn decode_flow_field(field: &FlowField, params: &FlowDecodeParams) -> Result<LabelMap> {
    field.validate()?;
    let (h, w) = (field.height, field.width);
    let fg: Vec<usize> = (0..h * w)
        .filter(|&i| field.cell_prob[i] > params.prob_threshold)
        .collect();
    if fg.is_empty() {
        return LabelMap::empty(h, w);
    }

    let still = fg.iter().all(|&i| field.flow_y[i] == 0.0 && field.flow_x[i] == 0.0);
    let labels = if still {
        // nothing moves: fall back to connected components of the foreground
        let mut mask = vec![0u32; h * w];
        fg.iter().for_each(|&i| mask[i] = 1);
        relabel_connected(&LabelMap::new(h, w, mask)?)
    } else {
        let (ymax, xmax) = ((h - 1) as f32, (w - 1) as f32);
        let mut pos: Vec<(f32, f32)> = fg.iter().map(|&i| ((i / w) as f32, (i % w) as f32)).collect();
        for _ in 0..params.n_iter {
            for p in pos.iter_mut() {
                let dy = bilinear(&field.flow_y, w, h, p.0, p.1);
                let dx = bilinear(&field.flow_x, w, h, p.0, p.1);
                p.0 = (p.0 + params.step * dy).clamp(0.0, ymax);
                p.1 = (p.1 + params.step * dx).clamp(0.0, xmax);
            }
        }
        let bins: Vec<usize> = pos
            .iter()
            .map(|&(y, x)| y.round() as usize * w + x.round() as usize)
            .collect();
        let sinks = cluster_sinks(&bins, h, w);
        let mut out = vec![0u32; h * w];
        for (&i, b) in fg.iter().zip(&bins) {
            out[i] = sinks[b];
        }
        LabelMap::new(h, w, out)?
    };
    let filtered = if params.min_size > 1 {
        filter_small_cells(&labels, params.min_size)
    } else {
        labels
    };
    Ok(relabel_sequential(&filtered))
}

/// Groups occupied end-point bins into 8-connected clusters, numbered from 1
/// in ascending bin order.
fn cluster_sinks(bins: &[usize], h: usize, w: usize) -> HashMap<usize, u32> {
    let mut occupied: Vec<usize> = bins.to_vec();
    occupied.sort_unstable();
    occupied.dedup();
    let mut cluster: HashMap<usize, u32> = occupied.iter().map(|&b| (b, 0)).collect();
    let mut next = 0u32;
    let mut stack = Vec::new();
    for &start in &occupied {
        if cluster[&start] != 0 {
            continue;
        }
        next += 1;
        cluster.insert(start, next);
        stack.push(start);
        while let Some(b) = stack.pop() {
            let (r, c) = ((b / w) as isize, (b % w) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                        continue;
                    }
                    let nb = nr as usize * w + nc as usize;
                    if let Some(l) = cluster.get_mut(&nb) {
                        if *l == 0 {
                            *l = next;
                            stack.push(nb);
                        }
                    }
                }
            }
        }
    }
    cluster
}
