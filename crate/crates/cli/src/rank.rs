use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cellbench::ranking::{leaderboard, per_case_ranks, LeaderBoard, RankingTable, RunRecord, RuntimeMode, Scheme};
use cellbench::stats::{bootstrap_ranking_stability, significance_matrix, BootstrapConfig, StabilityReport};
use serde::Serialize;

use crate::evaluate::{MetricsRow, Status};
use crate::io::{list_files, write_json, write_table, SCHEMA_VERSION};
use crate::{RankArgs, StabilityArgs, TableArgs};

fn is_metrics_csv(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with("metrics_") && n.ends_with(".csv"))
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            files.extend(list_files(p, is_metrics_csv)?);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

/// Rows for images without a prediction and for unreadable ground truth are
/// left out, so those cases count as missing for the team. An absent runtime
/// is read as 0 s.
pub fn read_records(inputs: &[PathBuf]) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for path in expand_inputs(inputs)? {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        for row in rdr.deserialize() {
            let row: MetricsRow = row.with_context(|| format!("parsing {}", path.display()))?;
            if matches!(row.status, Status::Missing | Status::GtUnreadable) {
                continue;
            }
            records.push(RunRecord {
                team_id: row.team,
                case_id: row.image_id,
                f1: row.f1,
                runtime_seconds: row.runtime_seconds.unwrap_or(0.0),
                pixel_count: row.pixel_count,
            });
        }
    }
    Ok(records)
}

pub fn load_table(args: &TableArgs) -> Result<RankingTable> {
    let records = read_records(&args.metrics)?;
    let table = RankingTable::from_records(&records, RuntimeMode::from(args.runtime_mode))?;
    if table.team_count() < 2 {
        bail!("ranking needs at least 2 teams, found {}", table.team_count());
    }
    if table.shared_cases().is_empty() {
        bail!("the teams share no case id");
    }
    log::info!("{} teams over {} cases", table.team_count(), table.case_count());
    Ok(table)
}

#[derive(Serialize)]
struct RankConfig {
    scheme: Scheme,
    runtime_mode: RuntimeMode,
    alpha: f64,
    teams: usize,
    cases: usize,
}

#[derive(Serialize)]
struct SchemeOutcome {
    scheme: Scheme,
    leaderboard: Option<LeaderBoard>,
    error: Option<String>,
}

#[derive(Serialize)]
struct RankOutput {
    schema_version: u32,
    config: RankConfig,
    leaderboard: LeaderBoard,
    #[serde(skip_serializing_if = "Option::is_none")]
    all_schemes: Option<Vec<SchemeOutcome>>,
}

fn rank_cell(r: f64) -> String {
    r.to_string()
}

pub fn run_rank(args: &RankArgs) -> Result<usize> {
    let t = &args.table;
    let table = load_table(t)?;
    let board = leaderboard(&table, args.scheme, t.alpha)?;

    let ranks = per_case_ranks(&table)?;
    let mut rows = Vec::new();
    for (ti, team) in table.teams.iter().enumerate() {
        for (ci, case) in table.cases.iter().enumerate() {
            rows.push(vec![
                team.clone(),
                case.clone(),
                rank_cell(ranks.f1[ti][ci]),
                rank_cell(ranks.runtime[ti][ci]),
                table.missing[ti][ci].to_string(),
            ]);
        }
    }
    let header = ["team", "image_id", "f1_rank", "runtime_rank", "missing"].map(String::from);
    write_table(&t.out.join("rank_matrix.csv"), &header, &rows)?;

    let all_schemes = if args.all_schemes {
        let outcomes: Vec<SchemeOutcome> = Scheme::ALL
            .into_iter()
            .map(|s| match leaderboard(&table, s, t.alpha) {
                Ok(lb) => SchemeOutcome {
                    scheme: s,
                    leaderboard: Some(lb),
                    error: None,
                },
                Err(e) => {
                    log::warn!("{s}: {e}");
                    SchemeOutcome {
                        scheme: s,
                        leaderboard: None,
                        error: Some(e.to_string()),
                    }
                }
            })
            .collect();
        let mut header = vec!["team".to_string()];
        header.extend(outcomes.iter().map(|o| o.scheme.to_string()));
        let rows: Vec<Vec<String>> = table
            .teams
            .iter()
            .map(|team| {
                let mut row = vec![team.clone()];
                row.extend(outcomes.iter().map(|o| {
                    o.leaderboard
                        .as_ref()
                        .and_then(|lb| lb.rank_of(team))
                        .map(|r| r.to_string())
                        .unwrap_or_default()
                }));
                row
            })
            .collect();
        write_table(&t.out.join("scheme_comparison.csv"), &header, &rows)?;
        Some(outcomes)
    } else {
        None
    };

    let output = RankOutput {
        schema_version: SCHEMA_VERSION,
        config: RankConfig {
            scheme: args.scheme,
            runtime_mode: table.runtime_mode,
            alpha: t.alpha,
            teams: table.team_count(),
            cases: table.case_count(),
        },
        leaderboard: board,
        all_schemes,
    };
    write_json(&t.out.join("leaderboard.json"), &output)?;
    Ok(0)
}

#[derive(Serialize)]
struct StabilityConfig {
    scheme: Scheme,
    runtime_mode: RuntimeMode,
    alpha: f64,
    replicates: usize,
    seed: u64,
}

#[derive(Serialize)]
struct StabilityOutput {
    schema_version: u32,
    config: StabilityConfig,
    mean_kendall_tau: Option<f64>,
    report: StabilityReport,
}

pub fn run_stability(args: &StabilityArgs) -> Result<usize> {
    let t = &args.table;
    let table = load_table(t)?;
    let cfg = BootstrapConfig {
        replicates: args.replicates,
        seed: args.seed,
    };
    let report = bootstrap_ranking_stability(&table, &cfg, args.scheme, t.alpha)?;
    let sig = significance_matrix(&table, t.alpha)?;

    let mut header = vec!["team".to_string()];
    header.extend(sig.teams.iter().cloned());
    let rows: Vec<Vec<String>> = sig
        .teams
        .iter()
        .zip(&sig.p_values)
        .map(|(team, ps)| {
            let mut row = vec![team.clone()];
            row.extend(ps.iter().map(|p| p.map(|p| p.to_string()).unwrap_or_default()));
            row
        })
        .collect();
    write_table(&t.out.join("significance.csv"), &header, &rows)?;

    let output = StabilityOutput {
        schema_version: SCHEMA_VERSION,
        config: StabilityConfig {
            scheme: args.scheme,
            runtime_mode: table.runtime_mode,
            alpha: t.alpha,
            replicates: args.replicates,
            seed: args.seed,
        },
        mean_kendall_tau: report.mean_kendall_tau(),
        report,
    };
    write_json(&t.out.join("stability.json"), &output)?;
    Ok(0)
}
