//! Marker-controlled watershed by priority flooding, plus the Euclidean
//! distance transform used to build elevation maps.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelmap::{relabel_connected, LabelMap};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    elevation: f32,
    seq: u64,
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.elevation
            .total_cmp(&other.elevation)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Floods `foreground` from the marker basins in ascending elevation; ties
/// are served first-in first-out. Background stays 0.
pub fn marker_watershed(elevation: &[f32], markers: &LabelMap, foreground: &[bool]) -> Result<LabelMap> {
    let (h, w) = markers.dims();
    for len in [elevation.len(), foreground.len()] {
        if len != h * w {
            return Err(Error::BufferSize {
                expected: h * w,
                actual: len,
            });
        }
    }
    if elevation
        .iter()
        .zip(foreground)
        .any(|(e, &f)| f && !e.is_finite())
    {
        return Err(Error::NonFinite("elevation"));
    }

    let mut labels = markers.labels().to_vec();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        if !foreground[i] {
            return Err(Error::MarkerOutsideForeground {
                label: l,
                row: i / w,
                col: i % w,
            });
        }
        heap.push(Reverse((Key { elevation: elevation[i], seq }, i)));
        seq += 1;
    }

    while let Some(Reverse((_, i))) = heap.pop() {
        let (r, c) = (i / w, i % w);
        let label = labels[i];
        let neighbors = [
            (r > 0).then(|| i - w),
            (r + 1 < h).then(|| i + w),
            (c > 0).then(|| i - 1),
            (c + 1 < w).then(|| i + 1),
        ];
        for n in neighbors.into_iter().flatten() {
            if foreground[n] && labels[n] == 0 {
                labels[n] = label;
                heap.push(Reverse((Key { elevation: elevation[n], seq }, n)));
                seq += 1;
            }
        }
    }
    LabelMap::new(h, w, labels)
}

/// Squared distances along one line (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..f.len() {
        let s = loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                k -= 1;
            } else {
                break s;
            }
        };
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance from each `mask` pixel to the nearest non-mask
/// pixel (0 outside the mask). Pixels beyond the canvas do not count as
/// background; a mask with no background anywhere yields `f32::INFINITY`.
pub fn distance_transform(mask: &[bool], height: usize, width: usize) -> Result<Vec<f32>> {
    if mask.len() != height * width {
        return Err(Error::BufferSize {
            expected: height * width,
            actual: mask.len(),
        });
    }
    // finite stand-in for "no background seen yet"
    const FAR: f64 = 1e30;
    let mut grid: Vec<f64> = mask.iter().map(|&m| if m { FAR } else { 0.0 }).collect();
    let longest = height.max(width);
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0f64; longest + 1];
    let mut line = vec![0.0f64; longest];
    let mut out = vec![0.0f64; longest];

    for c in 0..width {
        for r in 0..height {
            line[r] = grid[r * width + c];
        }
        edt_1d(&line[..height], &mut out[..height], &mut v, &mut z);
        for r in 0..height {
            grid[r * width + c] = out[r];
        }
    }
    for r in 0..height {
        let row = &mut grid[r * width..(r + 1) * width];
        line[..width].copy_from_slice(row);
        edt_1d(&line[..width], &mut out[..width], &mut v, &mut z);
        row.copy_from_slice(&out[..width]);
    }
    Ok(grid
        .into_iter()
        .map(|d| if d >= FAR / 2.0 { f32::INFINITY } else { d.sqrt() as f32 })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WatershedParams {
    /// Foreground is `probability > foreground_threshold`.
    pub foreground_threshold: f32,
    /// Markers are the 4-connected components of `distance > marker_threshold`
    /// inside the foreground.
    pub marker_threshold: f32,
}

impl Default for WatershedParams {
    fn default() -> Self {
        Self {
            foreground_threshold: 0.5,
            marker_threshold: 0.5,
        }
    }
}

/// Watershed on a foreground-probability map and a per-cell distance map
/// (high at cell centers): markers come from thresholding the distance map
/// and the elevation is its negation.
pub fn watershed_from_maps(
    probability: &[f32],
    distance: &[f32],
    height: usize,
    width: usize,
    params: &WatershedParams,
) -> Result<LabelMap> {
    if probability.len() != height * width || distance.len() != height * width {
        return Err(Error::BufferSize {
            expected: height * width,
            actual: probability.len().min(distance.len()),
        });
    }
    let foreground: Vec<bool> = probability
        .iter()
        .map(|&p| p > params.foreground_threshold)
        .collect();
    let seeds: Vec<u32> = distance
        .iter()
        .zip(&foreground)
        .map(|(&d, &f)| u32::from(f && d > params.marker_threshold))
        .collect();
    let markers = relabel_connected(&LabelMap::new(height, width, seeds)?);
    let elevation: Vec<f32> = distance.iter().map(|d| -d).collect();
    marker_watershed(&elevation, &markers, &foreground)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_marker_fills_component() {
        let fg = vec![true, true, true, false, true, true, true, true, true];
        let mut markers = LabelMap::empty(3, 3).unwrap();
        markers.set(1, 1, 4);
        let out = marker_watershed(&[0.0; 9], &markers, &fg).unwrap();
        for (l, f) in out.labels().iter().zip(&fg) {
            assert_eq!(*l, if *f { 4 } else { 0 });
        }
    }

    #[test]
    fn empty_foreground_is_empty() {
        let out = marker_watershed(&[0.0; 4], &LabelMap::empty(2, 2).unwrap(), &[false; 4]).unwrap();
        assert_eq!(out.instance_count(), 0);
    }

    #[test]
    fn marker_outside_foreground_is_error() {
        let mut markers = LabelMap::empty(2, 2).unwrap();
        markers.set(0, 0, 1);
        assert!(matches!(
            marker_watershed(&[0.0; 4], &markers, &[false, true, true, true]),
            Err(Error::MarkerOutsideForeground { .. })
        ));
    }

    #[test]
    fn lower_basin_floods_first() {
        // 1x5 line: markers at both ends, ridge at col 3
        let mut markers = LabelMap::empty(1, 5).unwrap();
        markers.set(0, 0, 1);
        markers.set(0, 4, 2);
        let out = marker_watershed(&[0.0, 1.0, 2.0, 5.0, 0.0], &markers, &[true; 5]).unwrap();
        assert_eq!(out.labels(), &[1, 1, 1, 2, 2]);
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let (h, w) = (9, 11);
        let mask: Vec<bool> = (0..h * w)
            .map(|i| {
                let (r, c) = (i / w, i % w);
                (r * 7 + c * 3) % 5 != 0 || (2..7).contains(&r) && (3..9).contains(&c)
            })
            .collect();
        let d = distance_transform(&mask, h, w).unwrap();
        for i in 0..h * w {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            let brute = (0..h * w)
                .filter(|&j| !mask[j])
                .map(|j| (((j / w) as f64 - r).powi(2) + ((j % w) as f64 - c).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            let brute = if mask[i] { brute } else { 0.0 };
            assert!((d[i] as f64 - brute).abs() < 1e-5, "pixel {i}: {} vs {brute}", d[i]);
        }
    }

    #[test]
    fn full_mask_distance_is_infinite() {
        assert!(distance_transform(&[true; 6], 2, 3).unwrap().iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn from_maps_splits_two_blobs() {
        // two plateaus of high distance joined by a low bridge
        let (h, w) = (3, 9);
        let prob = vec![1.0f32; h * w];
        let row = [0.9, 1.0, 0.9, 0.3, 0.1, 0.3, 0.9, 1.0, 0.9];
        let dist: Vec<f32> = (0..h).flat_map(|_| row).collect();
        let out = watershed_from_maps(&prob, &dist, h, w, &WatershedParams::default()).unwrap();
        assert_eq!(out.instance_count(), 2);
        assert_eq!(out.get(1, 0), out.get(1, 3));
        assert_ne!(out.get(1, 0), out.get(1, 8));
    }
}
