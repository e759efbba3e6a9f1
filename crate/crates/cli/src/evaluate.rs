use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cellbench::labelmap::{load_label_map, qc_image, QcReport};
use cellbench::metrics::{evaluate_image_pair_detailed, BoundaryRemoval, MatchConfig};
use cellbench::LabelMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{is_label_image, list_files, stem, write_csv, write_json, SCHEMA_VERSION};
use crate::EvaluateArgs;

pub const TIMINGS_FILE: &str = "timings.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// No prediction for this image; scored as an empty map.
    Missing,
    /// Prediction could not be read; scored as an empty map.
    Unreadable,
    /// Prediction has the wrong size; scored as an empty map.
    DimensionMismatch,
    /// Ground truth could not be read; the image is not scored.
    GtUnreadable,
}

impl Status {
    pub fn is_error(self) -> bool {
        matches!(self, Status::Unreadable | Status::DimensionMismatch | Status::GtUnreadable)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub team: String,
    pub image_id: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub runtime_seconds: Option<f64>,
    pub pixel_count: usize,
    pub status: Status,
}

#[derive(Serialize)]
struct FileError {
    team: String,
    image_id: String,
    status: Status,
    message: String,
}

#[derive(Serialize)]
struct TeamSummary {
    team: String,
    pred_dir: PathBuf,
    metrics_csv: String,
    timings: bool,
    images: usize,
    scored: usize,
    missing: usize,
    failed: usize,
    mean_f1: f64,
    median_f1: f64,
    mean_precision: f64,
    mean_recall: f64,
}

#[derive(Serialize)]
struct EvalConfig {
    iou_threshold: f64,
    strict_inequality: bool,
    boundary: BoundaryRemoval,
}

#[derive(Serialize)]
struct QcEntry {
    image_id: String,
    #[serde(flatten)]
    report: QcReport,
}

#[derive(Serialize)]
struct Summary {
    schema_version: u32,
    config: EvalConfig,
    gt_dir: PathBuf,
    gt_images: usize,
    teams: Vec<TeamSummary>,
    /// Ground-truth images failing the dataset QC rules (still scored).
    gt_qc_failures: Vec<QcEntry>,
    /// Prediction files with no ground-truth counterpart, per team.
    unmatched_predictions: BTreeMap<String, Vec<String>>,
    errors: Vec<FileError>,
}

#[derive(Deserialize)]
struct TimingRow {
    image_id: String,
    runtime_seconds: f64,
}

fn load_timings(pred_dir: &Path) -> Result<Option<BTreeMap<String, f64>>> {
    let path = pred_dir.join(TIMINGS_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    let mut rdr = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: TimingRow = row.with_context(|| format!("parsing {}", path.display()))?;
        out.insert(row.image_id, row.runtime_seconds);
    }
    Ok(Some(out))
}

pub fn metrics_file_name(team: &str) -> String {
    format!("metrics_{team}.csv")
}

pub fn config_comment(cfg: &MatchConfig, team: &str) -> String {
    format!(
        "cellbench metrics schema={SCHEMA_VERSION} team={team} iou_threshold={} strict={} boundary={}",
        cfg.iou_threshold,
        cfg.strict_inequality,
        serde_json::to_value(cfg.remove_boundary)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
    )
}

fn score_row(
    team: &str,
    image_id: &str,
    gt: &std::result::Result<LabelMap, String>,
    pred: Option<&Path>,
    runtime: Option<f64>,
    cfg: &MatchConfig,
) -> (MetricsRow, Option<String>) {
    let blank = |status: Status, pixel_count: usize| MetricsRow {
        team: team.to_string(),
        image_id: image_id.to_string(),
        tp: 0,
        fp: 0,
        fn_: 0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        runtime_seconds: runtime,
        pixel_count,
        status,
    };
    let gt = match gt {
        Ok(g) => g,
        Err(msg) => return (blank(Status::GtUnreadable, 0), Some(msg.clone())),
    };
    let (status, pred_map, message) = match pred {
        None => (Status::Missing, None, None),
        Some(p) => match load_label_map(p) {
            Err(e) => (Status::Unreadable, None, Some(e.to_string())),
            Ok(m) if m.dims() != gt.dims() => (
                Status::DimensionMismatch,
                None,
                Some(format!("prediction is {:?}, ground truth is {:?}", m.dims(), gt.dims())),
            ),
            Ok(m) => (Status::Ok, Some(m), None),
        },
    };
    let pred_map = match pred_map {
        Some(m) => m,
        None => LabelMap::empty(gt.height(), gt.width()).expect("gt dims are valid"),
    };
    let eval = match evaluate_image_pair_detailed(gt, &pred_map, cfg) {
        Ok(e) => e,
        Err(e) => return (blank(Status::GtUnreadable, gt.pixel_count()), Some(e.to_string())),
    };
    let mut row = blank(status, gt.pixel_count());
    row.tp = eval.matches.tp;
    row.fp = eval.matches.fp;
    row.fn_ = eval.matches.fn_;
    row.precision = eval.metrics.precision;
    row.recall = eval.metrics.recall;
    row.f1 = eval.metrics.f1;
    (row, message)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Returns the number of per-file failures.
pub fn run(args: &EvaluateArgs) -> Result<usize> {
    let cfg = MatchConfig {
        iou_threshold: args.iou_threshold,
        strict_inequality: !args.inclusive,
        remove_boundary: args.boundary.into(),
    };
    cfg.validate()?;
    if !args.team.is_empty() && args.team.len() != args.pred.len() {
        bail!("got {} --team names for {} --pred directories", args.team.len(), args.pred.len());
    }
    let teams: Vec<String> = if args.team.is_empty() {
        args.pred.iter().map(|p| stem(p)).collect()
    } else {
        args.team.clone()
    };
    let unique: BTreeSet<&String> = teams.iter().collect();
    if unique.len() != teams.len() {
        bail!("team names must be unique: {teams:?}");
    }

    let gt_files = list_files(&args.gt, is_label_image)?;
    if gt_files.is_empty() {
        bail!("no label images in {}", args.gt.display());
    }
    let gt_ids: Vec<String> = gt_files.iter().map(|p| stem(p)).collect();
    log::info!("{} ground-truth images", gt_files.len());
    let gt_maps: Vec<std::result::Result<LabelMap, String>> = gt_files
        .par_iter()
        .map(|p| load_label_map(p).map_err(|e| e.to_string()))
        .collect();

    let gt_qc_failures = gt_ids
        .iter()
        .zip(&gt_maps)
        .filter_map(|(id, m)| m.as_ref().ok().map(|m| (id, qc_image(m))))
        .filter(|(_, r)| !r.passed)
        .map(|(id, report)| QcEntry {
            image_id: id.clone(),
            report,
        })
        .collect();

    let gt_set: BTreeSet<&String> = gt_ids.iter().collect();
    let mut summaries = Vec::new();
    let mut errors = Vec::new();
    let mut unmatched = BTreeMap::new();
    for (team, pred_dir) in teams.iter().zip(&args.pred) {
        let pred_files = list_files(pred_dir, is_label_image)?;
        let by_stem: BTreeMap<String, PathBuf> = pred_files.iter().map(|p| (stem(p), p.clone())).collect();
        let extra: Vec<String> = by_stem.keys().filter(|s| !gt_set.contains(s)).cloned().collect();
        if !extra.is_empty() {
            log::warn!("{team}: {} prediction(s) without ground truth", extra.len());
            unmatched.insert(team.clone(), extra);
        }
        let timings = load_timings(pred_dir)?;

        let scored: Vec<(MetricsRow, Option<String>)> = gt_ids
            .par_iter()
            .zip(&gt_maps)
            .map(|(id, gt)| {
                let runtime = timings.as_ref().and_then(|t| t.get(id).copied());
                score_row(team, id, gt, by_stem.get(id).map(PathBuf::as_path), runtime, &cfg)
            })
            .collect();

        let mut rows = Vec::with_capacity(scored.len());
        for (row, message) in scored {
            if row.status == Status::Missing {
                log::warn!("{team}: no prediction for {}", row.image_id);
            }
            if row.status.is_error() {
                errors.push(FileError {
                    team: team.clone(),
                    image_id: row.image_id.clone(),
                    status: row.status,
                    message: message.unwrap_or_default(),
                });
            }
            rows.push(row);
        }

        let file = metrics_file_name(team);
        write_csv(&args.out.join(&file), Some(&config_comment(&cfg, team)), &rows)?;
        let scorable: Vec<&MetricsRow> = rows.iter().filter(|r| r.status != Status::GtUnreadable).collect();
        summaries.push(TeamSummary {
            team: team.clone(),
            pred_dir: pred_dir.clone(),
            metrics_csv: file,
            timings: timings.is_some(),
            images: rows.len(),
            scored: rows.iter().filter(|r| r.status == Status::Ok).count(),
            missing: rows.iter().filter(|r| r.status == Status::Missing).count(),
            failed: rows.iter().filter(|r| r.status.is_error()).count(),
            mean_f1: mean(scorable.iter().map(|r| r.f1)),
            median_f1: median(scorable.iter().map(|r| r.f1).collect()),
            mean_precision: mean(scorable.iter().map(|r| r.precision)),
            mean_recall: mean(scorable.iter().map(|r| r.recall)),
        });
    }

    for e in &errors {
        eprintln!("{}/{}: {:?}: {}", e.team, e.image_id, e.status, e.message);
    }
    let failures = errors.len();
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        config: EvalConfig {
            iou_threshold: cfg.iou_threshold,
            strict_inequality: cfg.strict_inequality,
            boundary: cfg.remove_boundary,
        },
        gt_dir: args.gt.clone(),
        gt_images: gt_ids.len(),
        teams: summaries,
        gt_qc_failures,
        unmatched_predictions: unmatched,
        errors,
    };
    write_json(&args.out.join("summary.json"), &summary)?;
    Ok(failures)
}
