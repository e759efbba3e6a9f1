//! Rank agreement, paired significance tests and bootstrap rank stability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::ranking::{leaderboard, paired_f1_diffs, RankingTable, Scheme};

pub const DEFAULT_REPLICATES: usize = 1000;
/// Largest sample size evaluated with the exact null distribution.
pub const EXACT_WILCOXON_MAX_N: usize = 25;

/// Kendall's tau-b between two rankings of the same items.
///
/// Returns `Ok(None)` when either side is fully tied (zero denominator).
pub fn kendall_tau(rank_a: &[f64], rank_b: &[f64]) -> Result<Option<f64>> {
    if rank_a.len() != rank_b.len() {
        return Err(Error::InvalidParameter(format!(
            "rankings cover {} and {} items",
            rank_a.len(),
            rank_b.len()
        )));
    }
    let k = rank_a.len();
    if k < 2 {
        return Err(Error::InvalidParameter("kendall tau needs at least 2 items".into()));
    }
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_a, mut ties_b) = (0i64, 0i64);
    for i in 0..k {
        for j in i + 1..k {
            let da = rank_a[i].total_cmp(&rank_a[j]) as i64;
            let db = rank_b[i].total_cmp(&rank_b[j]) as i64;
            if da == 0 {
                ties_a += 1;
            }
            if db == 0 {
                ties_b += 1;
            }
            match da * db {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let pairs = (k * (k - 1) / 2) as i64;
    let denom = ((pairs - ties_a) as f64 * (pairs - ties_b) as f64).sqrt();
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some((concordant - discordant) as f64 / denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRankTest {
    /// Nonzero differences used.
    pub n: usize,
    /// Sum of ranks of the positive differences.
    pub w_plus: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Average ranks of `|d|`, returned doubled so that tied ranks stay integral.
fn doubled_abs_ranks(diffs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && diffs[order[end]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        // positions start+1..=end, doubled mean = first + last
        let doubled = (start + 1 + end) as u64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        start = end;
    }
    ranks
}

/// One-sided Wilcoxon signed-rank test of "differences tend to be positive".
///
/// Zero differences are dropped; tied magnitudes get average ranks. Up to
/// [`EXACT_WILCOXON_MAX_N`] nonzero differences, `P(W+ >= observed)` comes
/// from the exact permutation distribution of the (tied) ranks; beyond
/// that a tie-corrected normal approximation with continuity correction is
/// used.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<SignedRankTest> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("paired differences"));
    }
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Err(Error::AllDifferencesZero);
    }
    let ranks = doubled_abs_ranks(&nonzero);
    let observed: u64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_plus = observed as f64 / 2.0;

    if n <= EXACT_WILCOXON_MAX_N {
        let total: u64 = ranks.iter().sum();
        // counts[s] = number of sign patterns with doubled W+ equal to s
        let mut counts = vec![0u64; total as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let tail: u64 = counts[observed as usize..].iter().sum();
        let p_value = tail as f64 / (1u64 << n) as f64;
        return Ok(SignedRankTest {
            n,
            w_plus,
            p_value,
            exact: true,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_plus - mean - 0.5) / var.sqrt();
    let p_value = (0.5 * erfc(z / std::f64::consts::SQRT_2)).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(SignedRankTest {
        n,
        w_plus,
        p_value,
        exact: false,
    })
}

pub fn wilcoxon_one_sided_p(diffs: &[f64]) -> Result<f64> {
    wilcoxon_signed_rank(diffs).map(|t| t.p_value)
}

/// `p_values[i][j]` tests "team i's F1 exceeds team j's"; `None` on the
/// diagonal and where no nonzero paired difference exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub teams: Vec<String>,
    pub alpha: f64,
    pub p_values: Vec<Vec<Option<f64>>>,
}

impl SignificanceMatrix {
    pub fn significant(&self, i: usize, j: usize) -> bool {
        self.p_values[i][j].is_some_and(|p| p < self.alpha)
    }
}

pub fn significance_matrix(table: &RankingTable, alpha: f64) -> Result<SignificanceMatrix> {
    table.check_shape()?;
    let k = table.team_count();
    if k < 2 {
        return Err(Error::TooFewTeams(k));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut p_values = vec![vec![None; k]; k];
    for (i, row) in p_values.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i == j {
                continue;
            }
            *cell = match wilcoxon_one_sided_p(&paired_f1_diffs(table, i, j)) {
                Ok(p) => Some(p),
                Err(Error::AllDifferencesZero) => None,
                Err(e) => return Err(e),
            };
        }
    }
    Ok(SignificanceMatrix {
        teams: table.teams.clone(),
        alpha,
        p_values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: DEFAULT_REPLICATES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamStability {
    pub team: String,
    pub full_rank: usize,
    /// `rank_frequency[r - 1]` is the share of replicates placing the team at rank `r`.
    pub rank_frequency: Vec<f64>,
    pub median_rank: f64,
    pub ci95: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub scheme: Scheme,
    pub replicates: usize,
    pub seed: u64,
    pub teams: Vec<TeamStability>,
    /// Tau-b of each replicate ranking against the full-data ranking;
    /// `None` when a ranking is fully tied.
    pub kendall_taus: Vec<Option<f64>>,
}

impl StabilityReport {
    pub fn mean_kendall_tau(&self) -> Option<f64> {
        let defined: Vec<f64> = self.kendall_taus.iter().flatten().copied().collect();
        if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Case indices for one replicate; each replicate owns stream `replicate`
/// of the seeded generator, so results do not depend on scheduling.
pub fn bootstrap_sample(seed: u64, replicate: usize, n_cases: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    (0..n_cases).map(|_| rng.random_range(0..n_cases)).collect()
}

/// Resamples cases with replacement (the same cases for every team),
/// recomputes the leaderboard per replicate and summarizes rank spread.
pub fn bootstrap_ranking_stability(
    table: &RankingTable,
    cfg: &BootstrapConfig,
    scheme: Scheme,
    alpha: f64,
) -> Result<StabilityReport> {
    if cfg.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be at least 1".into()));
    }
    let full = leaderboard(table, scheme, alpha)?;
    let full_ranks: Vec<f64> = full.ranks().into_iter().map(|r| r as f64).collect();
    let n = table.case_count();

    let replicate_ranks: Vec<Vec<usize>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let sample = table.select_cases(&bootstrap_sample(cfg.seed, r, n));
            leaderboard(&sample, scheme, alpha).map(|lb| lb.ranks())
        })
        .collect::<Result<_>>()?;

    let k = table.team_count();
    let mut kendall_taus = Vec::with_capacity(cfg.replicates);
    for ranks in &replicate_ranks {
        let as_f64: Vec<f64> = ranks.iter().map(|&r| r as f64).collect();
        kendall_taus.push(kendall_tau(&full_ranks, &as_f64)?);
    }

    let teams = (0..k)
        .map(|t| {
            let mut counts = vec![0usize; k];
            let mut ranks: Vec<f64> = Vec::with_capacity(cfg.replicates);
            for rep in &replicate_ranks {
                counts[rep[t] - 1] += 1;
                ranks.push(rep[t] as f64);
            }
            ranks.sort_by(f64::total_cmp);
            TeamStability {
                team: table.teams[t].clone(),
                full_rank: full.entries[t].rank,
                rank_frequency: counts
                    .iter()
                    .map(|&c| c as f64 / cfg.replicates as f64)
                    .collect(),
                median_rank: quantile(&ranks, 0.5),
                ci95: (quantile(&ranks, 0.025), quantile(&ranks, 0.975)),
            }
        })
        .collect();

    Ok(StabilityReport {
        scheme,
        replicates: cfg.replicates,
        seed: cfg.seed,
        teams,
        kendall_taus,
    })
}
