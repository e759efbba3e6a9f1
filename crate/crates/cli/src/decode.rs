use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cellbench::decoders::{
    decode_flow_field, decode_fourier_contours, polygon_nms, rasterize_star_polygons, watershed_from_maps,
    FlowDecodeParams, FlowField, FourierContour, StarPolygon, WatershedParams,
};
use cellbench::dense::DenseMap;
use cellbench::labelmap::{filter_small_cells, relabel_sequential, save_label_map, MIN_CELL_PIXELS};
use cellbench::LabelMap;
use rayon::prelude::*;
use serde::Deserialize;

use crate::io::stem;
use crate::{Algorithm, DecodeArgs};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StarpolyInput {
    height: usize,
    width: usize,
    polygons: Vec<StarPolygon>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContourInput {
    height: usize,
    width: usize,
    contours: Vec<FourierContour>,
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn load_dense(path: &Path, algorithm: Algorithm, channels: usize) -> Result<DenseMap> {
    if is_json(path) {
        bail!("{algorithm:?} decoding expects a dense map, got JSON");
    }
    let map = DenseMap::load(path)?;
    if map.channels() != channels {
        bail!(
            "{algorithm:?} decoding expects {channels} channels, {} has {}",
            path.display(),
            map.channels()
        );
    }
    Ok(map)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, algorithm: Algorithm) -> Result<T> {
    if !is_json(path) {
        bail!("{algorithm:?} decoding expects a JSON file");
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!("not a {algorithm:?} input: {e}"))
}

fn decode_one(path: &Path, args: &DecodeArgs) -> Result<LabelMap> {
    let map = match args.algorithm {
        Algorithm::Flow => {
            let field = FlowField::from_dense(&load_dense(path, args.algorithm, 3)?)?;
            let params = FlowDecodeParams {
                prob_threshold: args.prob_threshold,
                n_iter: args.flow_iterations,
                min_size: if args.keep_small { 0 } else { MIN_CELL_PIXELS },
                ..FlowDecodeParams::default()
            };
            decode_flow_field(&field, &params)?
        }
        Algorithm::Watershed => {
            let dense = load_dense(path, args.algorithm, 2)?;
            let params = WatershedParams {
                foreground_threshold: args.prob_threshold,
                marker_threshold: args.marker_threshold,
            };
            watershed_from_maps(dense.plane(0), dense.plane(1), dense.height(), dense.width(), &params)?
        }
        Algorithm::Starpoly => {
            let input: StarpolyInput = read_json(path, args.algorithm)?;
            let kept = polygon_nms(&input.polygons, args.nms_iou)?;
            rasterize_star_polygons(&kept, input.height, input.width)?
        }
        Algorithm::Contour => {
            let input: ContourInput = read_json(path, args.algorithm)?;
            decode_fourier_contours(&input.contours, args.samples, input.height, input.width, args.nms_iou)?
        }
    };
    let map = if args.keep_small {
        map
    } else {
        filter_small_cells(&map, MIN_CELL_PIXELS)
    };
    Ok(relabel_sequential(&map))
}

fn write_png(map: &LabelMap, out: &Path) -> Result<()> {
    let dir = out.parent().unwrap_or(Path::new("."));
    let tmp = tempfile::Builder::new().suffix(".png").tempfile_in(dir)?;
    save_label_map(map, tmp.path())?;
    tmp.persist(out).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

/// Decodes every input independently; failures are reported and counted.
pub fn run(args: &DecodeArgs) -> Result<usize> {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let results: Vec<Result<usize>> = args
        .inputs
        .par_iter()
        .map(|path| {
            let map = decode_one(path, args)?;
            write_png(&map, &args.out.join(format!("{}.png", stem(path))))?;
            Ok(map.instance_count())
        })
        .collect();
    let mut failures = 0;
    for (path, r) in args.inputs.iter().zip(results) {
        match r {
            Ok(n) => log::info!("{}: {n} instances", path.display()),
            Err(e) => {
                failures += 1;
                eprintln!("{}: {e:#}", path.display());
            }
        }
    }
    Ok(failures)
}
