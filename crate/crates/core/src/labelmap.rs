//! Instance label maps: ingestion, normalization and the dataset QC rules.
//!
//! A [`LabelMap`] is a row-major grid of instance ids where 0 is background.
//! Maps are read verbatim; splitting into connected components is an explicit
//! [`relabel_connected`] call so that evaluation is reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Instances with fewer pixels than this are dropped during QC.
pub const MIN_CELL_PIXELS: usize = 15;
/// Images with fewer cells than this fail QC.
pub const MIN_CELLS_PER_IMAGE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions { height, width });
        }
        if labels.len() != height * width {
            return Err(Error::BufferSize {
                expected: height * width,
                actual: labels.len(),
            });
        }
        Ok(Self {
            height,
            width,
            labels,
        })
    }

    /// All-background map.
    pub fn empty(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0; height * width])
    }

    /// Builds a map from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidParameter("ragged rows".into()));
        }
        Self::new(height, width, rows.concat())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixel_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, label: u32) {
        self.labels[row * self.width + col] = label;
    }

    /// Sorted distinct nonzero ids.
    pub fn instance_ids(&self) -> Vec<u32> {
        self.pixel_counts().into_keys().collect()
    }

    pub fn instance_count(&self) -> usize {
        self.pixel_counts().len()
    }

    /// Pixel count per nonzero instance id.
    pub fn pixel_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for &l in self.labels.iter().filter(|&&l| l != 0) {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    /// Copy of this map with every pixel in `ids` set to background.
    pub fn without(&self, ids: &BTreeSet<u32>) -> LabelMap {
        let labels = self
            .labels
            .iter()
            .map(|&l| if ids.contains(&l) { 0 } else { l })
            .collect();
        LabelMap {
            height: self.height,
            width: self.width,
            labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub path: String,
    pub channels: u8,
    pub pixel_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcReport {
    pub cell_count: usize,
    pub removed_small_cells: usize,
    pub passed: bool,
    pub reasons: Vec<String>,
}

pub fn load_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    load_label_map_with_meta(path).map(|(m, _)| m)
}

/// Reads a single-channel 8/16-bit PNG or TIFF; pixel values are instance ids.
pub fn load_label_map_with_meta(path: impl AsRef<Path>) -> Result<(LabelMap, ImageMeta)> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let color = img.color();
    let channels = color.channel_count();
    if channels != 1 {
        return Err(Error::MultiChannel { channels });
    }
    let bits = color.bits_per_pixel();
    if bits > 16 {
        return Err(Error::BitDepth { bits });
    }
    let (width, height) = (img.width() as usize, img.height() as usize);
    let labels: Vec<u32> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(u32::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(u32::from).collect(),
        other => {
            return Err(Error::Decode {
                path: path.to_path_buf(),
                message: format!("unsupported pixel layout {:?}", other.color()),
            })
        }
    };
    let map = LabelMap::new(height, width, labels)?;
    let meta = ImageMeta {
        path: path.display().to_string(),
        channels,
        pixel_count: height * width,
    };
    Ok((map, meta))
}

/// Writes the map as a 16-bit grayscale PNG.
pub fn save_label_map(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut raw = Vec::with_capacity(map.pixel_count());
    for &l in map.labels() {
        raw.push(u16::try_from(l).map_err(|_| Error::LabelOverflow(l))?);
    }
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(map.width() as u32, map.height() as u32, raw)
            .expect("buffer size matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Splits every label into its 4-connected components and renumbers them
/// 1..K in raster order of first appearance.
pub fn relabel_connected(map: &LabelMap) -> LabelMap {
    let (h, w) = map.dims();
    let src = map.labels();
    let mut provisional = vec![0u32; src.len()];
    let mut sets = DisjointSet::new();

    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let l = src[i];
            if l == 0 {
                continue;
            }
            let up = (r > 0 && src[i - w] == l).then(|| provisional[i - w]);
            let left = (c > 0 && src[i - 1] == l).then(|| provisional[i - 1]);
            provisional[i] = match (up, left) {
                (None, None) => sets.make(),
                (Some(a), None) | (None, Some(a)) => a,
                (Some(a), Some(b)) => {
                    sets.union(a, b);
                    a.min(b)
                }
            };
        }
    }

    let mut renumber = vec![0u32; sets.parent.len()];
    let mut next = 0u32;
    let labels = provisional
        .iter()
        .map(|&p| {
            if p == 0 {
                return 0;
            }
            let root = sets.find(p) as usize;
            if renumber[root] == 0 {
                next += 1;
                renumber[root] = next;
            }
            renumber[root]
        })
        .collect();
    LabelMap {
        height: h,
        width: w,
        labels,
    }
}

/// Renumbers ids to 1..K by ascending original id without splitting.
pub fn relabel_sequential(map: &LabelMap) -> LabelMap {
    let lookup: BTreeMap<u32, u32> = map
        .instance_ids()
        .into_iter()
        .zip(1..)
        .collect();
    let labels = map
        .labels()
        .iter()
        .map(|l| if *l == 0 { 0 } else { lookup[l] })
        .collect();
    LabelMap {
        height: map.height,
        width: map.width,
        labels,
    }
}

/// Ids with at least one pixel on the outermost frame.
pub fn boundary_ids(map: &LabelMap) -> BTreeSet<u32> {
    let (h, w) = map.dims();
    let mut ids = BTreeSet::new();
    for c in 0..w {
        ids.insert(map.get(0, c));
        ids.insert(map.get(h - 1, c));
    }
    for r in 0..h {
        ids.insert(map.get(r, 0));
        ids.insert(map.get(r, w - 1));
    }
    ids.remove(&0);
    ids
}

pub fn remove_boundary_cells(map: &LabelMap) -> LabelMap {
    map.without(&boundary_ids(map))
}

pub fn filter_small_cells(map: &LabelMap, min_pixels: usize) -> LabelMap {
    let small: BTreeSet<u32> = map
        .pixel_counts()
        .into_iter()
        .filter(|&(_, n)| n < min_pixels)
        .map(|(l, _)| l)
        .collect();
    if small.is_empty() {
        return map.clone();
    }
    map.without(&small)
}

/// Dataset QC: drop cells under [`MIN_CELL_PIXELS`], then require at least
/// [`MIN_CELLS_PER_IMAGE`] remaining cells.
pub fn qc_image(map: &LabelMap) -> QcReport {
    let before = map.instance_count();
    let filtered = filter_small_cells(map, MIN_CELL_PIXELS);
    let cell_count = filtered.instance_count();
    let mut reasons = Vec::new();
    if cell_count < MIN_CELLS_PER_IMAGE {
        reasons.push(format!("fewer than {MIN_CELLS_PER_IMAGE} cells"));
    }
    QcReport {
        cell_count,
        removed_small_cells: before - cell_count,
        passed: reasons.is_empty(),
        reasons,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(map: &mut LabelMap, r0: usize, c0: usize, size: usize, label: u32) {
        for r in r0..r0 + size {
            for c in c0..c0 + size {
                map.set(r, c, label);
            }
        }
    }

    /// Places `n` separated blobs of `px` pixels each on a wide canvas.
    fn blobs(n: usize, px: &[usize]) -> LabelMap {
        let mut m = LabelMap::empty(8, 8 * n + 2).unwrap();
        for (i, &p) in px.iter().enumerate().take(n) {
            for k in 0..p {
                m.set(1 + k / 6, 1 + i * 8 + k % 6, i as u32 + 1);
            }
        }
        m
    }

    #[test]
    fn rejects_zero_dims_and_bad_buffers() {
        assert!(LabelMap::new(0, 3, vec![]).is_err());
        assert!(LabelMap::new(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn relabel_splits_disjoint_blobs() {
        let m = LabelMap::from_rows(&[vec![7, 0, 7], vec![7, 0, 7]]).unwrap();
        let r = relabel_connected(&m);
        assert_eq!(r.labels(), &[1, 0, 2, 1, 0, 2]);
    }

    #[test]
    fn relabel_makes_ids_consecutive() {
        let m = LabelMap::from_rows(&[vec![0, 7, 0, 9], vec![0, 7, 0, 9]]).unwrap();
        let r = relabel_connected(&m);
        assert_eq!(r.instance_ids(), vec![1, 2]);
        assert_eq!(r.get(0, 0), 0);
    }

    #[test]
    fn relabel_merges_u_shape() {
        // Two arms only meet on the last row; union-find must merge them.
        let m = LabelMap::from_rows(&[vec![3, 0, 3], vec![3, 0, 3], vec![3, 3, 3]]).unwrap();
        assert_eq!(relabel_connected(&m).instance_count(), 1);
    }

    #[test]
    fn diagonal_touch_is_two_components() {
        let m = LabelMap::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(relabel_connected(&m).instance_count(), 2);
    }

    #[test]
    fn boundary_removal_cases() {
        let mut m = LabelMap::empty(8, 8).unwrap();
        square(&mut m, 3, 3, 2, 1);
        assert_eq!(remove_boundary_cells(&m), m);

        let mut m = LabelMap::empty(8, 8).unwrap();
        square(&mut m, 3, 0, 2, 1);
        assert_eq!(remove_boundary_cells(&m).instance_count(), 0);

        let mut m = LabelMap::empty(8, 8).unwrap();
        square(&mut m, 2, 2, 3, 1);
        for r in 2..=4 {
            m.set(r, 7, 2);
        }
        assert_eq!(remove_boundary_cells(&m).instance_ids(), vec![1]);
    }

    #[test]
    fn small_cell_threshold_is_inclusive_at_15() {
        let m = blobs(2, &[15, 14]);
        let f = filter_small_cells(&m, MIN_CELL_PIXELS);
        assert_eq!(f.instance_ids(), vec![1]);
        assert_eq!(filter_small_cells(&m, 1), m);
    }

    #[test]
    fn qc_rules() {
        let r = qc_image(&blobs(5, &[20; 5]));
        assert!(r.passed);
        assert!(r.reasons.is_empty());

        let r = qc_image(&blobs(4, &[20; 4]));
        assert!(!r.passed);
        assert_eq!(r.reasons, vec!["fewer than 5 cells".to_string()]);

        let r = qc_image(&blobs(6, &[20, 20, 10, 20, 10, 20]));
        assert_eq!(r.cell_count, 4);
        assert_eq!(r.removed_small_cells, 2);
        assert!(!r.passed);
    }

    #[test]
    fn png_round_trip_and_channel_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let m = LabelMap::from_rows(&[vec![0, 1, 2], vec![300, 0, 2]]).unwrap();
        save_label_map(&m, &path).unwrap();
        let (back, meta) = load_label_map_with_meta(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(meta.pixel_count, 6);

        let zeros = dir.path().join("z.png");
        image::GrayImage::new(5, 5).save(&zeros).unwrap();
        assert_eq!(load_label_map(&zeros).unwrap().instance_count(), 0);

        let rgb = dir.path().join("rgb.png");
        image::RgbImage::new(4, 4).save(&rgb).unwrap();
        let err = load_label_map(&rgb).unwrap_err();
        assert!(err.to_string().contains("multi-channel label image"));

        assert!(matches!(
            save_label_map(&LabelMap::new(1, 1, vec![70_000]).unwrap(), &path),
            Err(Error::LabelOverflow(70_000))
        ));
    }

    #[test]
    fn tiff_input_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tif");
        let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(2, 2, vec![0, 1, 2, 2]).unwrap();
        buf.save(&path).unwrap();
        assert_eq!(load_label_map(&path).unwrap().instance_ids(), vec![1, 2]);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_label_map("/nonexistent/x.png"),
            Err(Error::Io { .. })
        ));
    }
}
