//! Leaderboards from per-case F1 and runtime.
//!
//! Runtimes enter every scheme as *effective* runtimes: the raw wall-clock
//! time adjusted by the per-image tolerance (see [`effective_runtime`]).
//! Per-case ties get fractional (average) ranks; final placements use
//! competition ranking ("1, 2, 2, 4"). A team without a result for a case is
//! placed last on that case, tied with any other team that is also missing it.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::wilcoxon_one_sided_p;

/// Images up to this many pixels get the base tolerance.
pub const TOLERANCE_PIXEL_UNIT: usize = 1_000_000;
pub const BASE_TOLERANCE_SECONDS: f64 = 10.0;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Startup allowance for one image: 10 s up to one megapixel, then 10 s per
/// megapixel.
pub fn tolerance_seconds(pixel_count: usize) -> f64 {
    if pixel_count <= TOLERANCE_PIXEL_UNIT {
        BASE_TOLERANCE_SECONDS
    } else {
        pixel_count as f64 / TOLERANCE_PIXEL_UNIT as f64 * BASE_TOLERANCE_SECONDS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RuntimeMode {
    /// `max(T - tolerance, 0)`
    #[default]
    SubtractFloor,
    /// `T` within tolerance, `+inf` beyond it.
    HardCap,
}

impl fmt::Display for RuntimeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuntimeMode::SubtractFloor => "subtract_floor",
            RuntimeMode::HardCap => "hard_cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub team_id: String,
    pub case_id: String,
    pub f1: f64,
    pub runtime_seconds: f64,
    pub pixel_count: usize,
}

impl RunRecord {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.f1) {
            return Err(Error::InvalidParameter(format!(
                "f1 {} for {}/{} outside [0, 1]",
                self.f1, self.team_id, self.case_id
            )));
        }
        if self.runtime_seconds.is_nan() || self.runtime_seconds < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "runtime {} for {}/{} is negative or NaN",
                self.runtime_seconds, self.team_id, self.case_id
            )));
        }
        if self.pixel_count == 0 {
            return Err(Error::InvalidParameter(format!(
                "pixel_count is zero for {}/{}",
                self.team_id, self.case_id
            )));
        }
        Ok(())
    }
}

pub fn effective_runtime(record: &RunRecord, mode: RuntimeMode) -> f64 {
    let tol = tolerance_seconds(record.pixel_count);
    match mode {
        RuntimeMode::SubtractFloor => (record.runtime_seconds - tol).max(0.0),
        RuntimeMode::HardCap => {
            if record.runtime_seconds <= tol {
                record.runtime_seconds
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Team × case matrices. `runtime` holds effective runtimes; entries flagged
/// in `missing` carry placeholder values that are never read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub teams: Vec<String>,
    pub cases: Vec<String>,
    pub f1: Vec<Vec<f64>>,
    pub runtime: Vec<Vec<f64>>,
    pub missing: Vec<Vec<bool>>,
    pub runtime_mode: RuntimeMode,
}

impl RankingTable {
    /// Teams and cases keep their order of first appearance. Any case some
    /// team lacks is flagged missing for that team.
    pub fn from_records(records: &[RunRecord], mode: RuntimeMode) -> Result<Self> {
        let mut teams: Vec<String> = Vec::new();
        let mut cases: Vec<String> = Vec::new();
        let mut team_idx: HashMap<&str, usize> = HashMap::new();
        let mut case_idx: HashMap<&str, usize> = HashMap::new();
        for r in records {
            r.validate()?;
            if !team_idx.contains_key(r.team_id.as_str()) {
                team_idx.insert(&r.team_id, teams.len());
                teams.push(r.team_id.clone());
            }
            if !case_idx.contains_key(r.case_id.as_str()) {
                case_idx.insert(&r.case_id, cases.len());
                cases.push(r.case_id.clone());
            }
        }
        let (k, n) = (teams.len(), cases.len());
        let mut f1 = vec![vec![0.0; n]; k];
        let mut runtime = vec![vec![0.0; n]; k];
        let mut missing = vec![vec![true; n]; k];
        for r in records {
            let (t, c) = (team_idx[r.team_id.as_str()], case_idx[r.case_id.as_str()]);
            if !missing[t][c] {
                return Err(Error::InvalidParameter(format!(
                    "duplicate record for team {} case {}",
                    r.team_id, r.case_id
                )));
            }
            missing[t][c] = false;
            f1[t][c] = r.f1;
            runtime[t][c] = effective_runtime(r, mode);
        }
        Ok(Self {
            teams,
            cases,
            f1,
            runtime,
            missing,
            runtime_mode: mode,
        })
    }

    /// Builds a table from complete matrices of F1 and effective runtime.
    pub fn from_matrices(
        teams: Vec<String>,
        cases: Vec<String>,
        f1: Vec<Vec<f64>>,
        runtime: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let missing = vec![vec![false; cases.len()]; teams.len()];
        let table = Self {
            teams,
            cases,
            f1,
            runtime,
            missing,
            runtime_mode: RuntimeMode::SubtractFloor,
        };
        table.check_shape()?;
        Ok(table)
    }

    pub fn check_shape(&self) -> Result<()> {
        let (k, n) = (self.teams.len(), self.cases.len());
        let ok = |m: &[Vec<f64>]| m.len() == k && m.iter().all(|r| r.len() == n);
        if !ok(&self.f1)
            || !ok(&self.runtime)
            || self.missing.len() != k
            || self.missing.iter().any(|r| r.len() != n)
        {
            return Err(Error::InvalidParameter(format!(
                "matrices must all be {k} teams x {n} cases"
            )));
        }
        Ok(())
    }

    pub fn team_count(&self) -> usize {
        self.teams.len()
    }

    pub fn case_count(&self) -> usize {
        self.cases.len()
    }

    /// Case indices every team has a result for.
    pub fn shared_cases(&self) -> Vec<usize> {
        (0..self.case_count())
            .filter(|&c| self.missing.iter().all(|row| !row[c]))
            .collect()
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().flatten().any(|&m| m)
    }

    /// Table restricted to (and possibly repeating) the given case columns.
    pub fn select_cases(&self, indices: &[usize]) -> RankingTable {
        let pick = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.iter().map(|row| indices.iter().map(|&c| row[c]).collect()).collect()
        };
        RankingTable {
            teams: self.teams.clone(),
            cases: indices.iter().map(|&c| self.cases[c].clone()).collect(),
            f1: pick(&self.f1),
            runtime: pick(&self.runtime),
            missing: self
                .missing
                .iter()
                .map(|row| indices.iter().map(|&c| row[c]).collect())
                .collect(),
            runtime_mode: self.runtime_mode,
        }
    }

    fn require_rankable(&self) -> Result<()> {
        self.check_shape()?;
        if self.team_count() < 2 {
            return Err(Error::TooFewTeams(self.team_count()));
        }
        if self.case_count() == 0 {
            return Err(Error::NoCases);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    RankThenMean,
    RankThenMedian,
    MeanThenRank,
    MedianThenRank,
    TestBased,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::RankThenMean,
        Scheme::RankThenMedian,
        Scheme::MeanThenRank,
        Scheme::MedianThenRank,
        Scheme::TestBased,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::RankThenMean => "rank_then_mean",
            Scheme::RankThenMedian => "rank_then_median",
            Scheme::MeanThenRank => "mean_then_rank",
            Scheme::MedianThenRank => "median_then_rank",
            Scheme::TestBased => "test_based",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown ranking scheme {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Mean,
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub team: String,
    pub score: f64,
    pub rank: usize,
}

/// Entries follow the table's team order, not rank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderBoard {
    pub scheme: Scheme,
    pub runtime_mode: RuntimeMode,
    pub alpha: Option<f64>,
    pub entries: Vec<LeaderboardEntry>,
}

impl LeaderBoard {
    pub fn ranks(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.rank).collect()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.score).collect()
    }

    pub fn rank_of(&self, team: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.team == team).map(|e| e.rank)
    }

    pub fn score_of(&self, team: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.team == team).map(|e| e.score)
    }
}

/// Average ranks (1 = best). `None` entries are worst and tie with each other.
pub fn fractional_ranks(values: &[Option<f64>], higher_is_better: bool) -> Vec<f64> {
    let cmp = |a: &Option<f64>, b: &Option<f64>| -> Ordering {
        match (a, b) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(x), Some(y)) => {
                if higher_is_better {
                    y.total_cmp(x)
                } else {
                    x.total_cmp(y)
                }
            }
        }
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| cmp(&values[i], &values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && cmp(&values[order[start]], &values[order[end]]) == Ordering::Equal {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Competition ranking ("1224") of scores.
pub fn competition_ranks(scores: &[f64], lower_is_better: bool) -> Vec<usize> {
    scores
        .iter()
        .map(|s| {
            1 + scores
                .iter()
                .filter(|o| if lower_is_better { *o < s } else { *o > s })
                .count()
        })
        .collect()
}

/// Per-case fractional ranks, teams × cases for each metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRanks {
    pub f1: Vec<Vec<f64>>,
    pub runtime: Vec<Vec<f64>>,
}

impl CaseRanks {
    /// The team's 2N ranks: all F1 ranks followed by all runtime ranks.
    pub fn team_ranks(&self, team: usize) -> Vec<f64> {
        self.f1[team].iter().chain(&self.runtime[team]).copied().collect()
    }
}

pub fn per_case_ranks(table: &RankingTable) -> Result<CaseRanks> {
    table.require_rankable()?;
    let (k, n) = (table.team_count(), table.case_count());
    let mut f1 = vec![vec![0.0; n]; k];
    let mut runtime = vec![vec![0.0; n]; k];
    for c in 0..n {
        let column = |m: &Vec<Vec<f64>>| -> Vec<Option<f64>> {
            (0..k)
                .map(|t| (!table.missing[t][c]).then(|| m[t][c]))
                .collect()
        };
        let rf = fractional_ranks(&column(&table.f1), true);
        let rt = fractional_ranks(&column(&table.runtime), false);
        for t in 0..k {
            f1[t][c] = rf[t];
            runtime[t][c] = rt[t];
        }
    }
    Ok(CaseRanks { f1, runtime })
}

/// Mean of the values summed in ascending order, so that the result does not
/// depend on the input order.
pub(crate) fn order_free_mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn aggregate(values: &[f64], agg: Aggregate) -> f64 {
    match agg {
        Aggregate::Mean => order_free_mean(values),
        Aggregate::Median => median(values),
    }
}

fn board(table: &RankingTable, scheme: Scheme, alpha: Option<f64>, scores: Vec<f64>, lower_is_better: bool) -> LeaderBoard {
    let ranks = competition_ranks(&scores, lower_is_better);
    LeaderBoard {
        scheme,
        runtime_mode: table.runtime_mode,
        alpha,
        entries: table
            .teams
            .iter()
            .zip(scores)
            .zip(ranks)
            .map(|((team, score), rank)| LeaderboardEntry {
                team: team.clone(),
                score,
                rank,
            })
            .collect(),
    }
}

/// Ranks per case and metric, aggregates each team's 2N ranks, divides by
/// the team count. Lower score is better; scores lie in (0, 1].
pub fn rank_then_aggregate(table: &RankingTable, agg: Aggregate) -> Result<LeaderBoard> {
    let ranks = per_case_ranks(table)?;
    let k = table.team_count() as f64;
    let scores = (0..table.team_count())
        .map(|t| aggregate(&ranks.team_ranks(t), agg) / k)
        .collect();
    let scheme = match agg {
        Aggregate::Mean => Scheme::RankThenMean,
        Aggregate::Median => Scheme::RankThenMedian,
    };
    Ok(board(table, scheme, None, scores, true))
}

/// Aggregates F1 and effective runtime over cases, ranks teams on each
/// aggregate, and places teams by the mean of those two ranks (lower is
/// better). Missing cases count as F1 0 and infinite runtime.
pub fn aggregate_then_rank(table: &RankingTable, agg: Aggregate) -> Result<LeaderBoard> {
    table.require_rankable()?;
    let k = table.team_count();
    let mut f1_agg = Vec::with_capacity(k);
    let mut rt_agg = Vec::with_capacity(k);
    for t in 0..k {
        let present = |c: &usize| !table.missing[t][*c];
        let f1: Vec<f64> = (0..table.case_count())
            .map(|c| if present(&c) { table.f1[t][c] } else { 0.0 })
            .collect();
        let rt: Vec<f64> = (0..table.case_count())
            .map(|c| if present(&c) { table.runtime[t][c] } else { f64::INFINITY })
            .collect();
        f1_agg.push(Some(aggregate(&f1, agg)));
        rt_agg.push(Some(aggregate(&rt, agg)));
    }
    let rf = fractional_ranks(&f1_agg, true);
    let rt = fractional_ranks(&rt_agg, false);
    let scores = rf.iter().zip(&rt).map(|(a, b)| (a + b) / 2.0).collect();
    let scheme = match agg {
        Aggregate::Mean => Scheme::MeanThenRank,
        Aggregate::Median => Scheme::MedianThenRank,
    };
    Ok(board(table, scheme, None, scores, true))
}

/// Smallest number of nonzero paired differences for which an exact
/// one-sided signed-rank test can fall below `alpha` (its minimum p is 2^-n).
pub fn min_cases_for_alpha(alpha: f64) -> usize {
    let mut n = 1;
    while 0.5f64.powi(n as i32) >= alpha {
        n += 1;
    }
    n
}

/// Paired F1 differences `a - b` over cases both teams have results for.
pub(crate) fn paired_f1_diffs(table: &RankingTable, a: usize, b: usize) -> Vec<f64> {
    (0..table.case_count())
        .filter(|&c| !table.missing[a][c] && !table.missing[b][c])
        .map(|c| table.f1[a][c] - table.f1[b][c])
        .collect()
}

/// Scores each team by the number of opponents it beats with a one-sided
/// signed-rank test on paired per-case F1 (p < alpha). Equal counts share a
/// rank.
pub fn test_based_rank(table: &RankingTable, alpha: f64) -> Result<LeaderBoard> {
    table.require_rankable()?;
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    let k = table.team_count();
    let required = min_cases_for_alpha(alpha);
    let mut wins = vec![0usize; k];
    for (a, won) in wins.iter_mut().enumerate() {
        for b in 0..k {
            if a == b {
                continue;
            }
            let diffs = paired_f1_diffs(table, a, b);
            if diffs.len() < required {
                return Err(Error::InsufficientSharedCases {
                    a: table.teams[a].clone(),
                    b: table.teams[b].clone(),
                    shared: diffs.len(),
                    required,
                });
            }
            match wilcoxon_one_sided_p(&diffs) {
                Ok(p) if p < alpha => *won += 1,
                Ok(_) | Err(Error::AllDifferencesZero) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let scores = wins.into_iter().map(|w| w as f64).collect();
    Ok(board(table, Scheme::TestBased, Some(alpha), scores, false))
}

pub fn leaderboard(table: &RankingTable, scheme: Scheme, alpha: f64) -> Result<LeaderBoard> {
    match scheme {
        Scheme::RankThenMean => rank_then_aggregate(table, Aggregate::Mean),
        Scheme::RankThenMedian => rank_then_aggregate(table, Aggregate::Median),
        Scheme::MeanThenRank => aggregate_then_rank(table, Aggregate::Mean),
        Scheme::MedianThenRank => aggregate_then_rank(table, Aggregate::Median),
        Scheme::TestBased => test_based_rank(table, alpha),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn table(f1: Vec<Vec<f64>>, runtime: Vec<Vec<f64>>) -> RankingTable {
        let (k, n) = (f1.len(), f1[0].len());
        RankingTable::from_matrices(names("t", k), names("c", n), f1, runtime).unwrap()
    }

    #[test]
    fn tolerance_values() {
        assert_eq!(tolerance_seconds(1_000_000), 10.0);
        assert_eq!(tolerance_seconds(999 * 999), 10.0);
        assert_eq!(tolerance_seconds(2000 * 1500), 30.0);
        assert_eq!(tolerance_seconds(1), 10.0);
    }

    #[test]
    fn effective_runtime_modes() {
        let rec = |t: f64, px: usize| RunRecord {
            team_id: "a".into(),
            case_id: "c".into(),
            f1: 0.5,
            runtime_seconds: t,
            pixel_count: px,
        };
        assert_eq!(effective_runtime(&rec(8.0, 1_000_000), RuntimeMode::SubtractFloor), 0.0);
        assert_eq!(effective_runtime(&rec(35.0, 3_000_000), RuntimeMode::SubtractFloor), 5.0);
        assert_eq!(effective_runtime(&rec(10.0, 1_000_000), RuntimeMode::SubtractFloor), 0.0);
        assert_eq!(effective_runtime(&rec(10.0, 1_000_000), RuntimeMode::HardCap), 10.0);
        assert_eq!(effective_runtime(&rec(10.5, 1_000_000), RuntimeMode::HardCap), f64::INFINITY);
    }

    #[test]
    fn fractional_rank_examples() {
        let t = table(vec![vec![0.9], vec![0.5]], vec![vec![3.0], vec![3.0]]);
        let r = per_case_ranks(&t).unwrap();
        assert_eq!(r.f1, vec![vec![1.0], vec![2.0]]);
        assert_eq!(r.runtime, vec![vec![1.5], vec![1.5]]);

        let t = table(vec![vec![0.7]; 4], vec![vec![1.0]; 4]);
        let r = per_case_ranks(&t).unwrap();
        assert!(r.f1.iter().chain(&r.runtime).all(|row| row[0] == 2.5));
    }

    #[test]
    fn missing_case_gets_worst_rank() {
        let mut t = table(
            vec![vec![0.1, 0.5], vec![0.5, 0.5], vec![0.9, 0.5]],
            vec![vec![0.0, 0.0]; 3],
        );
        t.missing[2][0] = true;
        let r = per_case_ranks(&t).unwrap();
        assert_eq!(r.f1[2][0], 3.0);
        assert_eq!(r.runtime[2][0], 3.0);
        assert_eq!(r.f1[1][0], 1.0);
    }

    #[test]
    fn too_few_teams_is_error() {
        let t = table(vec![vec![0.5]], vec![vec![1.0]]);
        assert!(matches!(per_case_ranks(&t), Err(Error::TooFewTeams(1))));
    }

    #[test]
    fn two_team_worked_example() {
        let t = table(
            vec![vec![0.9, 0.8], vec![0.5, 0.85]],
            vec![vec![1.0, 1.0], vec![2.0, 2.0]],
        );
        let lb = rank_then_aggregate(&t, Aggregate::Mean).unwrap();
        assert_eq!(lb.scores(), vec![0.625, 0.875]);
        assert_eq!(lb.ranks(), vec![1, 2]);
    }

    #[test]
    fn worked_example_from_raw_records() {
        // 11 s and 12 s on 1 MP images leave 1 s and 2 s after tolerance.
        let mut recs = Vec::new();
        for (team, f1s, t) in [("A", [0.9, 0.8], 11.0), ("B", [0.5, 0.85], 12.0)] {
            for (c, f1) in f1s.iter().enumerate() {
                recs.push(RunRecord {
                    team_id: team.into(),
                    case_id: format!("case{c}"),
                    f1: *f1,
                    runtime_seconds: t,
                    pixel_count: 1_000_000,
                });
            }
        }
        let t = RankingTable::from_records(&recs, RuntimeMode::SubtractFloor).unwrap();
        let lb = rank_then_aggregate(&t, Aggregate::Mean).unwrap();
        assert_eq!(lb.score_of("A"), Some(0.625));
        assert_eq!(lb.score_of("B"), Some(0.875));
    }

    #[test]
    fn dominant_and_tied_teams() {
        let t = table(
            vec![vec![0.9, 0.95], vec![0.5, 0.6], vec![0.4, 0.3]],
            vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 4.0]],
        );
        let lb = rank_then_aggregate(&t, Aggregate::Mean).unwrap();
        assert_eq!(lb.entries[0].score, 1.0 / 3.0);
        assert_eq!(lb.entries[0].rank, 1);

        let t = table(vec![vec![0.5, 0.5]; 3], vec![vec![1.0, 1.0]; 3]);
        for agg in [Aggregate::Mean, Aggregate::Median] {
            let lb = rank_then_aggregate(&t, agg).unwrap();
            assert_eq!(lb.ranks(), vec![1, 1, 1]);
            let lb = aggregate_then_rank(&t, agg).unwrap();
            assert_eq!(lb.ranks(), vec![1, 1, 1]);
        }
    }

    #[test]
    fn aggregate_then_rank_examples() {
        let t = table(vec![vec![1.0, 0.0], vec![0.6, 0.6]], vec![vec![0.0; 2]; 2]);
        let lb = aggregate_then_rank(&t, Aggregate::Mean).unwrap();
        assert_eq!(lb.ranks(), vec![2, 1]);

        let t = table(vec![vec![0.9, 0.9, 0.0], vec![0.8, 0.8, 0.8]], vec![vec![0.0; 3]; 2]);
        assert_eq!(aggregate_then_rank(&t, Aggregate::Mean).unwrap().ranks(), vec![2, 1]);
        assert_eq!(aggregate_then_rank(&t, Aggregate::Median).unwrap().ranks(), vec![1, 2]);
    }

    #[test]
    fn test_based_examples() {
        // A beats B and C on every case; B and C alternate.
        let a = vec![0.9; 10];
        let b: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.5 } else { 0.4 }).collect();
        let c: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.4 } else { 0.5 }).collect();
        let t = table(vec![a, b, c], vec![vec![0.0; 10]; 3]);
        let lb = test_based_rank(&t, DEFAULT_ALPHA).unwrap();
        assert_eq!(lb.ranks(), vec![1, 2, 2]);
        assert_eq!(lb.scores(), vec![2.0, 0.0, 0.0]);

        let t = table(vec![vec![0.5; 10]; 3], vec![vec![0.0; 10]; 3]);
        assert_eq!(test_based_rank(&t, DEFAULT_ALPHA).unwrap().ranks(), vec![1, 1, 1]);

        let t = table(vec![vec![0.9; 10], vec![0.1; 10]], vec![vec![0.0; 10]; 2]);
        let lb = test_based_rank(&t, DEFAULT_ALPHA).unwrap();
        assert_eq!(lb.ranks(), vec![1, 2]);
    }

    #[test]
    fn test_based_needs_enough_cases() {
        assert_eq!(min_cases_for_alpha(0.05), 5);
        assert_eq!(min_cases_for_alpha(0.01), 7);
        let t = table(vec![vec![0.9; 4], vec![0.1; 4]], vec![vec![0.0; 4]; 2]);
        assert!(matches!(
            test_based_rank(&t, DEFAULT_ALPHA),
            Err(Error::InsufficientSharedCases { shared: 4, required: 5, .. })
        ));
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("rank-then-mean".parse::<Scheme>().unwrap(), Scheme::RankThenMean);
        assert_eq!("test_based".parse::<Scheme>().unwrap(), Scheme::TestBased);
        assert!("best".parse::<Scheme>().is_err());
    }

    #[test]
    fn duplicate_records_rejected() {
        let r = RunRecord {
            team_id: "a".into(),
            case_id: "c".into(),
            f1: 0.5,
            runtime_seconds: 1.0,
            pixel_count: 10,
        };
        assert!(RankingTable::from_records(&[r.clone(), r], RuntimeMode::SubtractFloor).is_err());
    }
}
