//! Conformal risk control.
//!
//! Given a held-out calibration set of n users, build the empirical risk
//! curve over a threshold grid,
//!
//!   R^(lambda) = (1/n) sum_u risk(set_lambda(u)),
//!
//! where each user's set is constructed exactly as it will be at deployment
//! (same strategy, same k, same safe pool). The calibrated threshold for a
//! target level alpha in (0, 1) is the smallest grid value satisfying the
//! inflated inequality
//!
//!   (n/(n+1)) R^(lambda) + 1/(n+1) <= alpha,
//!
//! which bounds the expected deployed risk by alpha for data exchangeable
//! with the calibration set, provided the curve is non-increasing. Set
//! construction does not always make the raw curve monotone (small pools
//! can shrink the denominator faster than the flagged count), so the curve
//! is always monotonized (replaced by its suffix maximum) before the
//! threshold is selected.
//!
//! Replacement items enter calibration sets at their historical flag status.
//! The pool only admits never-flagged items, so they count as safe here;
//! whether they stay safe when re-shown is exactly what the pool's watch
//! filter beta is for.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ItemId, UserId};
use crate::error::{Error, Result};
use crate::selection::{SafePool, Strategy};

/// One calibration candidate: score plus the flag recorded for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCandidate {
    pub item_id: ItemId,
    pub score: f64,
    pub flagged: bool,
}

/// One calibration user with their scored, flag-labelled candidates.
#[derive(Debug, Clone)]
pub struct CalibrationUser {
    pub user_id: UserId,
    pub candidates: Vec<ScoredCandidate>,
}

/// Empirical risk sampled on an ascending threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub grid: Vec<f64>,
    pub risk_at: Vec<f64>,
    /// Number of calibration users.
    pub n: usize,
    pub monotonized: bool,
}

impl RiskCurve {
    /// (n/(n+1)) r + 1/(n+1), the quantity the threshold rule compares to
    /// alpha.
    pub fn inflated(&self, risk: f64) -> f64 {
        let n = self.n as f64;
        n / (n + 1.0) * risk + 1.0 / (n + 1.0)
    }

    /// Export as CSV (lambda, risk, inflated_risk).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["lambda", "risk", "inflated_risk"])?;
        for (lambda, risk) in self.grid.iter().zip(&self.risk_at) {
            w.write_record([
                lambda.to_string(),
                risk.to_string(),
                self.inflated(*risk).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Outcome of threshold selection for one alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub alpha: f64,
    /// Smallest feasible grid threshold; +inf when infeasible.
    pub lambda_hat: f64,
    pub n: usize,
    pub feasible: bool,
    /// Inflated empirical risk at `lambda_hat` (diagnostic: the minimum
    /// over the grid when infeasible).
    pub inflated_risk_at_lambda: f64,
}

impl ThresholdResult {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Default grid: the distinct calibration scores in ascending order plus a
/// sentinel above the maximum, so the empty set is reachable. The empirical
/// curve is piecewise constant with breakpoints exactly at observed scores,
/// so no finer grid adds information.
pub fn default_grid(users: &[CalibrationUser]) -> Vec<f64> {
    let mut grid: Vec<f64> = users
        .iter()
        .flat_map(|u| u.candidates.iter().map(|c| c.score))
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    grid.dedup();
    if let Some(&max) = grid.last() {
        grid.push(max + 1.0);
    }
    grid
}

/// Per-user context for fast curve evaluation: candidates sorted the way
/// `selection::recommend` sorts them, with prefix flagged counts, plus the
/// usable pool size.
struct UserContext {
    /// Scores in the exact selection order (descending, ties by item id).
    scores_desc: Vec<f64>,
    /// flagged_prefix[j] = flagged items among the first j of `scores_desc`.
    flagged_prefix: Vec<usize>,
    pool_len: usize,
}

impl UserContext {
    fn build(user: &CalibrationUser, pool_len: usize) -> Self {
        let mut ordered: Vec<&ScoredCandidate> = user.candidates.iter().collect();
        ordered.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.item_id.cmp(&b.item_id))
        });
        let mut flagged_prefix = Vec::with_capacity(ordered.len() + 1);
        flagged_prefix.push(0usize);
        let mut running = 0usize;
        let mut scores_desc = Vec::with_capacity(ordered.len());
        for c in &ordered {
            running += c.flagged as usize;
            flagged_prefix.push(running);
            scores_desc.push(c.score);
        }
        UserContext {
            scores_desc,
            flagged_prefix,
            pool_len,
        }
    }

    /// Risk of the set this user would be served at `lambda`. Equivalent to
    /// building the set with `selection::recommend` and scoring flagged
    /// fresh items; replacements count as unflagged.
    fn risk_at(&self, lambda: f64, k: usize, strategy: Strategy) -> f64 {
        let passing = self.scores_desc.partition_point(|&s| s >= lambda);
        let fresh = passing.min(k);
        let flagged = self.flagged_prefix[fresh];
        let size = match strategy {
            Strategy::Remove => fresh,
            Strategy::Replace => fresh + self.pool_len.min(k - fresh),
        };
        if size == 0 {
            0.0
        } else {
            flagged as f64 / size as f64
        }
    }
}

/// Build the empirical risk curve over `grid`.
///
/// For every lambda, each user's recommendation set is constructed with the
/// deployment strategy and its risk averaged over users. For the replace
/// strategy, `safe_pools` supplies per-user pools (missing users mean an
/// empty pool, the cold-start case); pools must be disjoint from the user's
/// candidates.
pub fn empirical_risk_curve(
    users: &[CalibrationUser],
    k: usize,
    strategy: Strategy,
    safe_pools: &HashMap<UserId, SafePool>,
    grid: &[f64],
) -> Result<RiskCurve> {
    if users.is_empty() {
        return Err(Error::InvalidInput("calibration set is empty".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("threshold grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "threshold grid must be strictly ascending".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    for user in users {
        if user.candidates.is_empty() {
            return Err(Error::InvalidInput(format!(
                "calibration user {} has no candidates",
                user.user_id
            )));
        }
        if user.candidates.iter().any(|c| !c.score.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite score for calibration user {}",
                user.user_id
            )));
        }
        if strategy == Strategy::Replace {
            if let Some(pool) = safe_pools.get(&user.user_id) {
                let candidate_items: HashSet<ItemId> =
                    user.candidates.iter().map(|c| c.item_id).collect();
                if pool
                    .items
                    .iter()
                    .any(|p| candidate_items.contains(&p.item_id))
                {
                    return Err(Error::InvalidInput(format!(
                        "safe pool of user {} overlaps their candidates",
                        user.user_id
                    )));
                }
            }
        }
    }

    let contexts: Vec<UserContext> = users
        .iter()
        .map(|u| {
            let pool_len = match strategy {
                Strategy::Remove => 0,
                Strategy::Replace => safe_pools.get(&u.user_id).map_or(0, SafePool::len),
            };
            UserContext::build(u, pool_len)
        })
        .collect();

    let n = users.len();
    let risk_at: Vec<f64> = grid
        .par_iter()
        .map(|&lambda| {
            let total: f64 = contexts
                .iter()
                .map(|c| c.risk_at(lambda, k, strategy))
                .sum();
            total / n as f64
        })
        .collect();

    Ok(RiskCurve {
        grid: grid.to_vec(),
        risk_at,
        n,
        monotonized: false,
    })
}

/// Replace the curve by its suffix maximum so it is non-increasing in
/// lambda. Idempotent and pointwise dominating.
pub fn monotonize(curve: &RiskCurve) -> RiskCurve {
    let mut risk_at = curve.risk_at.clone();
    let mut running = 0.0f64;
    for r in risk_at.iter_mut().rev() {
        running = running.max(*r);
        *r = running;
    }
    RiskCurve {
        grid: curve.grid.clone(),
        risk_at,
        n: curve.n,
        monotonized: true,
    }
}

/// Pick the smallest grid threshold whose inflated empirical risk is within
/// alpha. The curve must have been monotonized.
///
/// Errors when alpha is below 1/(n+1): no threshold can satisfy the
/// inequality then, whatever the risks, and the fix is a larger calibration
/// set rather than a different lambda.
pub fn select_threshold(curve: &RiskCurve, alpha: f64) -> Result<ThresholdResult> {
    if !curve.monotonized {
        return Err(Error::CurveNotMonotonized);
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let floor = 1.0 / (curve.n as f64 + 1.0);
    if floor > alpha {
        return Err(Error::AlphaTooSmall {
            alpha,
            n: curve.n,
            floor,
        });
    }

    let mut best_inflated = f64::INFINITY;
    for (lambda, risk) in curve.grid.iter().zip(&curve.risk_at) {
        let inflated = curve.inflated(*risk);
        best_inflated = best_inflated.min(inflated);
        if inflated <= alpha {
            return Ok(ThresholdResult {
                alpha,
                lambda_hat: *lambda,
                n: curve.n,
                feasible: true,
                inflated_risk_at_lambda: inflated,
            });
        }
    }
    Ok(ThresholdResult {
        alpha,
        lambda_hat: f64::INFINITY,
        n: curve.n,
        feasible: false,
        inflated_risk_at_lambda: best_inflated,
    })
}

/// Persistent map (alpha, strategy, beta, dataset-hash) -> calibrated
/// threshold, so sweeps re-running a cell skip recalibration.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct ThresholdCache {
    entries: BTreeMap<String, ThresholdResult>,
    #[serde(skip)]
    hits: usize,
}

impl ThresholdCache {
    pub fn key(alpha: f64, strategy: Strategy, beta: &str, dataset_hash: &str) -> String {
        format!("alpha={alpha}|strategy={strategy}|beta={beta}|data={dataset_hash}")
    }

    pub fn load(path: &Path) -> Self {
        std::fs::read_to_string(path)
            .ok()
            .and_then(|text| serde_json::from_str(&text).ok())
            .unwrap_or_default()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn get(&mut self, key: &str) -> Option<ThresholdResult> {
        let found = self.entries.get(key).cloned();
        if found.is_some() {
            self.hits += 1;
        }
        found
    }

    pub fn insert(&mut self, key: String, result: ThresholdResult) {
        self.entries.insert(key, result);
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Stable hex digest of dataset-identifying bytes, for cache keys.
pub fn dataset_hash(parts: &[&[u8]]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p);
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
