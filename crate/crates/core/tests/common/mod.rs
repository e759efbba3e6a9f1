#![allow(dead_code)]

use std::collections::BTreeMap;

use cellbench::decoders::StarPolygon;
use cellbench::ranking::RankingTable;
use cellbench::LabelMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to `max_cells` random axis-aligned rectangles painted in order, so later
/// cells may cover earlier ones.
pub fn random_map(rng: &mut impl Rng, h: usize, w: usize, max_cells: u32) -> LabelMap {
    let mut map = LabelMap::empty(h, w).unwrap();
    let cells = rng.random_range(0..=max_cells);
    for label in 1..=cells {
        let r0 = rng.random_range(0..h);
        let c0 = rng.random_range(0..w);
        let r1 = (r0 + rng.random_range(1..=h / 2 + 1)).min(h);
        let c1 = (c0 + rng.random_range(1..=w / 2 + 1)).min(w);
        for r in r0..r1 {
            for c in c0..c1 {
                map.set(r, c, label);
            }
        }
    }
    map
}

/// `pred` derived from `gt` by shifting each cell a little and dropping or
/// adding a few, so that matches above 0.5 IoU are common.
pub fn perturbed(rng: &mut impl Rng, gt: &LabelMap) -> LabelMap {
    let (h, w) = gt.dims();
    let mut out = LabelMap::empty(h, w).unwrap();
    let dr: i64 = rng.random_range(-1..=1);
    let dc: i64 = rng.random_range(-1..=1);
    for r in 0..h {
        for c in 0..w {
            let l = gt.get(r, c);
            if l == 0 || l % 5 == rng.random_range(0..5u32) && rng.random_bool(0.05) {
                continue;
            }
            let (rr, cc) = (r as i64 + dr, c as i64 + dc);
            if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                out.set(rr as usize, cc as usize, l + 10);
            }
        }
    }
    if rng.random_bool(0.5) {
        let r = rng.random_range(0..h);
        let c = rng.random_range(0..w);
        out.set(r, c, 99);
    }
    out
}

/// Exhaustive maximum one-to-one matching among pairs whose IoU passes
/// `passes`; IoUs computed by direct pixel counting. Returns `(tp, fp, fn)`.
pub fn brute_force_match(gt: &LabelMap, pred: &LabelMap, passes: impl Fn(f64) -> bool) -> (usize, usize, usize) {
    let area = |m: &LabelMap| -> BTreeMap<u32, usize> { m.pixel_counts() };
    let (ga, pa) = (area(gt), area(pred));
    let gt_ids: Vec<u32> = ga.keys().copied().collect();
    let pred_ids: Vec<u32> = pa.keys().copied().collect();
    let mut ok = vec![vec![false; pred_ids.len()]; gt_ids.len()];
    for (i, &g) in gt_ids.iter().enumerate() {
        for (j, &p) in pred_ids.iter().enumerate() {
            let inter = gt
                .labels()
                .iter()
                .zip(pred.labels())
                .filter(|(&a, &b)| a == g && b == p)
                .count();
            if inter > 0 {
                let iou = inter as f64 / (ga[&g] + pa[&p] - inter) as f64;
                ok[i][j] = passes(iou);
            }
        }
    }
    fn best(i: usize, ok: &[Vec<bool>], used: &mut Vec<bool>) -> usize {
        if i == ok.len() {
            return 0;
        }
        let mut m = best(i + 1, ok, used);
        for j in 0..used.len() {
            if ok[i][j] && !used[j] {
                used[j] = true;
                m = m.max(1 + best(i + 1, ok, used));
                used[j] = false;
            }
        }
        m
    }
    let tp = best(0, &ok, &mut vec![false; pred_ids.len()]);
    (tp, pred_ids.len() - tp, gt_ids.len() - tp)
}

/// Classic crossing-number point-in-polygon on `(row, col)` vertices.
pub fn pnpoly(vertices: &[(f64, f64)], y: f64, x: f64) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let (yi, xi) = vertices[i];
        let (yj, xj) = vertices[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn brute_force_polygon_pixels(vertices: &[(f64, f64)]) -> Vec<(i64, i64)> {
    let min_y = vertices.iter().map(|v| v.0).fold(f64::INFINITY, f64::min).floor() as i64 - 1;
    let max_y = vertices.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;
    let min_x = vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min).floor() as i64 - 1;
    let max_x = vertices.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;
    let mut out = Vec::new();
    for r in min_y..=max_y {
        for c in min_x..=max_x {
            if pnpoly(vertices, r as f64, c as f64) {
                out.push((r, c));
            }
        }
    }
    out
}

pub fn random_star(rng: &mut impl Rng) -> StarPolygon {
    let k = rng.random_range(3..=32);
    StarPolygon {
        center: (rng.random_range(-5.0..45.0), rng.random_range(-5.0..45.0)),
        radii: (0..k).map(|_| rng.random_range(0.0..12.0)).collect(),
        score: rng.random_range(0.0..=1.0),
    }
}

/// One-sided p `P(W+ >= observed)` by enumerating every sign pattern over
/// the nonzero differences, with average ranks for tied magnitudes.
pub fn brute_force_wilcoxon_p(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|&x| x != 0.0).collect();
    let n = d.len();
    let mut ranks = vec![0.0; n];
    for i in 0..n {
        let less = d.iter().filter(|x| x.abs() < d[i].abs()).count();
        let equal = d.iter().filter(|x| x.abs() == d[i].abs()).count();
        ranks[i] = less as f64 + (equal as f64 + 1.0) / 2.0;
    }
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let mut at_least = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w >= observed - 1e-9 {
            at_least += 1;
        }
    }
    at_least as f64 / (1u64 << n) as f64
}

/// `k` teams over `n` cases. Team 0 ("dominant") has the best F1 and the
/// lowest runtime on every case; the others draw noisy values.
pub fn dominant_fixture(seed: u64, k: usize, n: usize) -> RankingTable {
    let mut rng = rng(seed);
    let teams: Vec<String> = (0..k).map(|t| format!("team{t:02}")).collect();
    let cases: Vec<String> = (0..n).map(|c| format!("case{c:03}")).collect();
    let mut f1 = vec![vec![0.0; n]; k];
    let mut runtime = vec![vec![0.0; n]; k];
    for c in 0..n {
        for t in 1..k {
            f1[t][c] = rng.random_range(0.2..0.9);
            runtime[t][c] = rng.random_range(0.5..20.0);
        }
        f1[0][c] = 0.95 + rng.random_range(0.0..0.05);
        runtime[0][c] = rng.random_range(0.0..0.4);
    }
    RankingTable::from_matrices(teams, cases, f1, runtime).unwrap()
}

/// Disk of radius `r` around `(cy, cx)`, pixel centers within `r`.
pub fn disk_pixels(cy: f64, cx: f64, r: f64, h: usize, w: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (dy, dx) = (y as f64 - cy, x as f64 - cx);
            if dy * dy + dx * dx <= r * r {
                out.push(y * w + x);
            }
        }
    }
    out
}

/// IoU of the pixel set of label `label` in `map` with `cell` (flat indices).
pub fn label_iou(map: &LabelMap, label: u32, cell: &[usize]) -> f64 {
    let area = map.labels().iter().filter(|&&l| l == label).count();
    let inter = cell.iter().filter(|&&i| map.labels()[i] == label).count();
    inter as f64 / (area + cell.len() - inter) as f64
}

/// Label covering most of `cell`, if any.
pub fn dominant_label(map: &LabelMap, cell: &[usize]) -> Option<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &i in cell {
        let l = map.labels()[i];
        if l != 0 {
            *counts.entry(l).or_default() += 1;
        }
    }
    counts.into_iter().max_by_key(|&(l, n)| (n, std::cmp::Reverse(l))).map(|(l, _)| l)
}

/// Non-touching disks with radii in [5, 15] on a `size x size` canvas;
/// returns the label map and each cell's pixels.
pub fn convex_cell_map(rng: &mut impl Rng, size: usize, attempts: usize) -> (LabelMap, Vec<Vec<usize>>) {
    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    for _ in 0..attempts {
        let r = rng.random_range(5.0..=15.0);
        let cy = rng.random_range(r + 1.0..size as f64 - r - 2.0);
        let cx = rng.random_range(r + 1.0..size as f64 - r - 2.0);
        // a gap of at least two pixels between cells
        if placed
            .iter()
            .all(|&(y, x, q)| ((y - cy).powi(2) + (x - cx).powi(2)).sqrt() > r + q + 3.0)
        {
            placed.push((cy, cx, r));
        }
    }
    let mut map = LabelMap::empty(size, size).unwrap();
    let cells: Vec<Vec<usize>> = placed.iter().map(|&(y, x, r)| disk_pixels(y, x, r, size, size)).collect();
    for (k, cell) in cells.iter().enumerate() {
        for &i in cell {
            map.set(i / size, i % size, k as u32 + 1);
        }
    }
    (map, cells)
}
