//! Pixel-set rasterization shared by the polygon and contour decoders.
//!
//! Coordinates are `(row, col)` in pixel units; pixel `(r, c)` is inside a
//! polygon when its center point `(r, c)` is, under the even-odd rule with
//! half-open vertical edge crossings. Pixel sets are unclipped and sorted by
//! `(row, col)`.

pub type Pixel = (i64, i64);

/// Pixels whose centers lie inside the closed polygon, by scanline.
pub fn polygon_pixels(vertices: &[(f64, f64)]) -> Vec<Pixel> {
    let n = vertices.len();
    if n < 3 || vertices.iter().any(|(y, x)| !y.is_finite() || !x.is_finite()) {
        return Vec::new();
    }
    let (min_y, max_y) = vertices
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(y, _)| (lo.min(y), hi.max(y)));
    let mut out = Vec::new();
    let mut crossings = Vec::with_capacity(n);
    for row in min_y.ceil() as i64..=max_y.floor() as i64 {
        let y = row as f64;
        crossings.clear();
        let mut j = n - 1;
        for i in 0..n {
            let (yi, xi) = vertices[i];
            let (yj, xj) = vertices[j];
            if (yi > y) != (yj > y) {
                crossings.push((xj - xi) * (y - yi) / (yj - yi) + xi);
            }
            j = i;
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            let first = pair[0].ceil() as i64;
            let last = pair[1].ceil() as i64 - 1;
            out.extend((first..=last).map(|c| (row, c)));
        }
    }
    out
}

/// Pixels visited by the closed polyline through `points` (DDA per segment).
pub fn polyline_pixels(points: &[(f64, f64)]) -> Vec<Pixel> {
    let mut out = Vec::new();
    let n = points.len();
    for i in 0..n {
        let (y0, x0) = points[i];
        let (y1, x1) = points[(i + 1) % n];
        let steps = (y1 - y0).abs().max((x1 - x0).abs()).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            out.push(((y0 + t * (y1 - y0)).round() as i64, (x0 + t * (x1 - x0)).round() as i64));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// IoU of two sorted, deduplicated pixel sets (0 when both are empty).
pub fn pixel_iou(a: &[Pixel], b: &[Pixel]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_square() {
        // corners on pixel centers: left/top edges included, right/bottom excluded
        let sq = [(1.0, 1.0), (1.0, 4.0), (4.0, 4.0), (4.0, 1.0)];
        let px = polygon_pixels(&sq);
        let expected: Vec<Pixel> = (1..4).flat_map(|r| (1..4).map(move |c| (r, c))).collect();
        assert_eq!(px, expected);
    }

    #[test]
    fn degenerate_inputs_are_empty() {
        assert!(polygon_pixels(&[(0.0, 0.0), (1.0, 1.0)]).is_empty());
        assert!(polygon_pixels(&[(2.0, 2.0); 5]).is_empty());
        assert!(polygon_pixels(&[(0.0, 0.0), (f64::NAN, 1.0), (1.0, 0.0)]).is_empty());
    }

    #[test]
    fn polyline_of_point_is_single_pixel() {
        assert_eq!(polyline_pixels(&[(2.4, 3.6); 8]), vec![(2, 4)]);
    }

    #[test]
    fn iou_of_sets() {
        let a = vec![(0, 0), (0, 1), (0, 2)];
        let b = vec![(0, 1), (0, 2), (0, 3)];
        assert_eq!(pixel_iou(&a, &b), 0.5);
        assert_eq!(pixel_iou(&a, &a), 1.0);
        assert_eq!(pixel_iou(&[], &[]), 0.0);
    }
}
