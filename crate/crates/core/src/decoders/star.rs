//! Star-convex polygons: rasterization and score-ordered NMS.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::decoders::raster::{pixel_iou, polygon_pixels, Pixel};
use crate::error::{Error, Result};
use crate::labelmap::LabelMap;

/// A cell shape given by radial distances from `center` along `radii.len()`
/// equally spaced rays, ray k at angle `2πk/K` (row offset `r·sin`, column
/// offset `r·cos`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarPolygon {
    /// `(row, col)`
    pub center: (f64, f64),
    pub radii: Vec<f64>,
    pub score: f64,
}

impl StarPolygon {
    pub fn validate(&self) -> Result<()> {
        if self.radii.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "star polygon needs at least 3 rays, got {}",
                self.radii.len()
            )));
        }
        if self.radii.iter().any(|r| !r.is_finite() || *r < 0.0)
            || !self.center.0.is_finite()
            || !self.center.1.is_finite()
        {
            return Err(Error::NonFinite("star polygon geometry"));
        }
        Ok(())
    }

    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let k = self.radii.len() as f64;
        self.radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let theta = TAU * i as f64 / k;
                (self.center.0 + r * theta.sin(), self.center.1 + r * theta.cos())
            })
            .collect()
    }

    /// Interior pixels; a polygon with all radii zero is its rounded center.
    pub fn pixels(&self) -> Vec<Pixel> {
        if self.radii.iter().all(|&r| r == 0.0) {
            return vec![(self.center.0.round() as i64, self.center.1.round() as i64)];
        }
        polygon_pixels(&self.vertices())
    }
}

/// Indices sorted by descending score, stable on input order.
fn score_order(polys: &[StarPolygon]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..polys.len()).collect();
    order.sort_by(|&a, &b| polys[b].score.total_cmp(&polys[a].score));
    order
}

/// Paints polygons highest score first; a pixel keeps the first label it
/// receives. Polygons left with no visible pixel get no label, so labels
/// stay consecutive.
pub fn rasterize_star_polygons(polys: &[StarPolygon], height: usize, width: usize) -> Result<LabelMap> {
    for p in polys {
        p.validate()?;
    }
    let mut map = LabelMap::empty(height, width)?;
    let mut next = 1u32;
    for i in score_order(polys) {
        let mut painted = false;
        for (r, c) in polys[i].pixels() {
            if r < 0 || c < 0 || r as usize >= height || c as usize >= width {
                continue;
            }
            let (r, c) = (r as usize, c as usize);
            if map.get(r, c) == 0 {
                map.set(r, c, next);
                painted = true;
            }
        }
        if painted {
            next += 1;
        }
    }
    Ok(map)
}

/// Greedy NMS by descending score (ties keep input order). A candidate is
/// dropped when its rasterized IoU with any kept polygon exceeds
/// `iou_threshold`. Survivors are returned in selection order.
pub fn polygon_nms(polys: &[StarPolygon], iou_threshold: f64) -> Result<Vec<StarPolygon>> {
    for p in polys {
        p.validate()?;
        if !(0.0..=1.0).contains(&p.score) {
            return Err(Error::InvalidParameter(format!("score {} outside [0, 1]", p.score)));
        }
    }
    let order = score_order(polys);
    let selected = greedy_suppress(&order, |i| polys[i].pixels(), iou_threshold);
    Ok(selected.into_iter().map(|i| polys[i].clone()).collect())
}

/// Shared greedy suppression over candidates already in priority order.
pub(crate) fn greedy_suppress(
    order: &[usize],
    pixels_of: impl Fn(usize) -> Vec<Pixel>,
    iou_threshold: f64,
) -> Vec<usize> {
    let mut kept: Vec<(usize, Vec<Pixel>, (Pixel, Pixel))> = Vec::new();
    for &i in order {
        let px = pixels_of(i);
        let bbox = bounding_box(&px);
        let suppressed = kept.iter().any(|(_, kpx, kb)| {
            boxes_overlap(&bbox, kb) && pixel_iou(&px, kpx) > iou_threshold
        });
        if !suppressed {
            kept.push((i, px, bbox));
        }
    }
    kept.into_iter().map(|(i, _, _)| i).collect()
}

fn bounding_box(px: &[Pixel]) -> (Pixel, Pixel) {
    px.iter().fold(
        ((i64::MAX, i64::MAX), (i64::MIN, i64::MIN)),
        |((r0, c0), (r1, c1)), &(r, c)| ((r0.min(r), c0.min(c)), (r1.max(r), c1.max(c))),
    )
}

fn boxes_overlap(a: &(Pixel, Pixel), b: &(Pixel, Pixel)) -> bool {
    a.0 .0 <= b.1 .0 && b.0 .0 <= a.1 .0 && a.0 .1 <= b.1 .1 && b.0 .1 <= a.1 .1
}
