//! Seeded region growing over a foreground mask.

use crate::error::{Error, Result};
use crate::labelmap::LabelMap;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrowOutcome {
    pub map: LabelMap,
    /// Foreground pixels with no path to any labeled region.
    pub unreached: usize,
}

/// Grows all labeled regions into unlabeled foreground simultaneously, one
/// 4-neighbor ring per round. A pixel reached by several regions in the same
/// round takes the smallest of their labels.
pub fn region_grow_assign(map: &LabelMap, foreground: &[bool]) -> Result<RegionGrowOutcome> {
    let (h, w) = map.dims();
    if foreground.len() != h * w {
        return Err(Error::BufferSize {
            expected: h * w,
            actual: foreground.len(),
        });
    }
    let mut labels = map.labels().to_vec();
    for (i, &l) in labels.iter().enumerate() {
        if l != 0 && !foreground[i] {
            return Err(Error::LabelOutsideForeground {
                label: l,
                row: i / w,
                col: i % w,
            });
        }
    }

    let neighbors = |i: usize| {
        let (r, c) = (i / w, i % w);
        [
            (r > 0).then(|| i - w),
            (r + 1 < h).then(|| i + w),
            (c > 0).then(|| i - 1),
            (c + 1 < w).then(|| i + 1),
        ]
        .into_iter()
        .flatten()
    };

    let mut frontier: Vec<usize> = (0..labels.len())
        .filter(|&i| foreground[i] && labels[i] == 0 && neighbors(i).any(|n| labels[n] != 0))
        .collect();
    while !frontier.is_empty() {
        let assigned: Vec<(usize, u32)> = frontier
            .iter()
            .map(|&i| {
                let best = neighbors(i)
                    .map(|n| labels[n])
                    .filter(|&l| l != 0)
                    .min()
                    .expect("frontier pixel has a labeled neighbor");
                (i, best)
            })
            .collect();
        for &(i, l) in &assigned {
            labels[i] = l;
        }
        let mut next: Vec<usize> = assigned
            .iter()
            .flat_map(|&(i, _)| neighbors(i))
            .filter(|&n| foreground[n] && labels[n] == 0)
            .collect();
        next.sort_unstable();
        next.dedup();
        frontier = next;
    }

    let unreached = labels
        .iter()
        .zip(foreground)
        .filter(|(&l, &f)| f && l == 0)
        .count();
    Ok(RegionGrowOutcome {
        map: LabelMap::new(h, w, labels)?,
        unreached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_labeled_is_identity() {
        let m = LabelMap::from_rows(&[vec![1, 1, 2], vec![1, 2, 2]]).unwrap();
        let out = region_grow_assign(&m, &[true; 6]).unwrap();
        assert_eq!(out.map, m);
        assert_eq!(out.unreached, 0);
    }

    #[test]
    fn single_pixel_joins_neighbor() {
        let m = LabelMap::from_rows(&[vec![3, 0, 0]]).unwrap();
        let out = region_grow_assign(&m, &[true, true, false]).unwrap();
        assert_eq!(out.map.labels(), &[3, 3, 0]);
    }

    #[test]
    fn equidistant_midline_takes_smaller_label() {
        // simulate by hand: ring 1 gives cols 2 and 4, ring 2 reaches col 3 from both
        let row = vec![1, 1, 0, 0, 0, 2, 2];
        let m = LabelMap::from_rows(&[row.clone(), row.clone(), row]).unwrap();
        let out = region_grow_assign(&m, &[true; 21]).unwrap();
        for r in 0..3 {
            assert_eq!(out.map.get(r, 2), 1);
            assert_eq!(out.map.get(r, 3), 1);
            assert_eq!(out.map.get(r, 4), 2);
        }
    }

    #[test]
    fn isolated_component_is_reported() {
        let m = LabelMap::from_rows(&[vec![1, 0, 0, 0]]).unwrap();
        let out = region_grow_assign(&m, &[true, false, true, true]).unwrap();
        assert_eq!(out.unreached, 2);
        assert_eq!(out.map.labels(), &[1, 0, 0, 0]);
    }

    #[test]
    fn label_outside_foreground_is_error() {
        let m = LabelMap::from_rows(&[vec![1, 0]]).unwrap();
        assert!(matches!(
            region_grow_assign(&m, &[false, true]),
            Err(Error::LabelOutsideForeground { .. })
        ));
    }
}
