//! Risk and utility metrics.
//!
//! The risk of a recommendation set is the fraction of its items the user
//! flagged; the empty set has risk 0 by convention, which keeps the removal
//! strategy's risk curve well defined once the threshold passes every score.
//! Utility is measured with nDCG@k and Recall@k over held-out positives,
//! plus set-size and replacement-fraction diagnostics.

use std::collections::{HashMap, HashSet};

use crate::data::{ItemId, UserId};
use crate::error::{Error, Result};
use crate::selection::RecommendationSet;

/// Fraction of items in the set that the user flagged. Empty sets score 0.
pub fn risk_fraction(set: &RecommendationSet, flags: &HashMap<ItemId, bool>) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let mut flagged = 0usize;
    for item in &set.items {
        match flags.get(&item.item_id) {
            Some(true) => flagged += 1,
            Some(false) => {}
            None => {
                return Err(Error::MissingFlag {
                    user: set.user_id.0,
                    item: item.item_id.0,
                })
            }
        }
    }
    Ok(flagged as f64 / set.len() as f64)
}

fn dcg(items: &[ItemId], relevance: &HashMap<ItemId, f64>, k: usize) -> Result<f64> {
    let mut total = 0.0;
    for (pos, item) in items.iter().take(k).enumerate() {
        let gain = relevance.get(item).copied().unwrap_or(0.0);
        if gain < 0.0 {
            return Err(Error::NegativeRelevance {
                item: item.0,
                value: gain,
            });
        }
        // Position is 1-based: discount 1/log2(position + 1).
        total += gain / ((pos as f64 + 2.0).log2());
    }
    Ok(total)
}

/// nDCG@k over the given ranking, with the ideal computed by reordering the
/// same items by relevance. Returns 0 when every item has zero relevance.
pub fn ndcg_at_k(ranked: &[ItemId], relevance: &HashMap<ItemId, f64>, k: usize) -> Result<f64> {
    let actual = dcg(ranked, relevance, k)?;
    let mut ideal_order: Vec<ItemId> = ranked.to_vec();
    ideal_order.sort_by(|a, b| {
        let ra = relevance.get(a).copied().unwrap_or(0.0);
        let rb = relevance.get(b).copied().unwrap_or(0.0);
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    let ideal = dcg(&ideal_order, relevance, k)?;
    if ideal == 0.0 {
        return Ok(0.0);
    }
    Ok(actual / ideal)
}

/// Recall@k; `None` when the relevant set is empty (the caller skips the
/// user and counts it).
pub fn recall_at_k(ranked: &[ItemId], relevant: &HashSet<ItemId>, k: usize) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|item| relevant.contains(item))
        .count();
    Some(hits as f64 / relevant.len() as f64)
}

/// Ground truth for one user: flag status per item (must cover every item
/// that can appear in their set) and the held-out positives.
#[derive(Debug, Clone, Default)]
pub struct UserTruth {
    pub flags: HashMap<ItemId, bool>,
    pub relevant: HashSet<ItemId>,
}

/// Aggregated per-user metrics, unweighted mean over users.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub risk: f64,
    pub ndcg_at_k: f64,
    pub recall_at_k: f64,
    pub mean_set_size: f64,
    pub repeated_fraction: f64,
    pub k: usize,
    pub n_users: usize,
    /// Users skipped by recall because they had no relevant items.
    pub recall_skipped: usize,
}

impl EvalReport {
    pub fn empty(k: usize) -> Self {
        EvalReport {
            risk: 0.0,
            ndcg_at_k: 0.0,
            recall_at_k: 0.0,
            mean_set_size: 0.0,
            repeated_fraction: 0.0,
            k,
            n_users: 0,
            recall_skipped: 0,
        }
    }

    /// Column names for the one-row CSV serialization.
    pub fn csv_header() -> [&'static str; 11] {
        [
            "alpha",
            "beta",
            "strategy",
            "k",
            "risk",
            "ndcg",
            "recall",
            "mean_set_size",
            "repeated_fraction",
            "n_users",
            "seed",
        ]
    }

    pub fn csv_row(&self, alpha: &str, beta: &str, strategy: &str, seed: &str) -> [String; 11] {
        [
            alpha.to_string(),
            beta.to_string(),
            strategy.to_string(),
            self.k.to_string(),
            self.risk.to_string(),
            self.ndcg_at_k.to_string(),
            self.recall_at_k.to_string(),
            self.mean_set_size.to_string(),
            self.repeated_fraction.to_string(),
            self.n_users.to_string(),
            seed.to_string(),
        ]
    }
}

/// Evaluate one set per user and average. Binary nDCG gains come from the
/// user's relevant set.
pub fn evaluate(
    sets: &[RecommendationSet],
    truth: &HashMap<UserId, UserTruth>,
    k: usize,
) -> Result<EvalReport> {
    if sets.is_empty() {
        return Ok(EvalReport::empty(k));
    }
    let mut risk_sum = 0.0;
    let mut ndcg_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut recall_n = 0usize;
    let mut size_sum = 0.0;
    let mut repeated_sum = 0.0;

    for set in sets {
        let user_truth = truth.get(&set.user_id).ok_or_else(|| {
            Error::InvalidInput(format!("no ground truth for user {}", set.user_id))
        })?;
        risk_sum += risk_fraction(set, &user_truth.flags)?;

        let ranked = set.item_ids();
        let relevance: HashMap<ItemId, f64> = user_truth
            .relevant
            .iter()
            .map(|&item| (item, 1.0))
            .collect();
        ndcg_sum += ndcg_at_k(&ranked, &relevance, k)?;
        if let Some(r) = recall_at_k(&ranked, &user_truth.relevant, k) {
            recall_sum += r;
            recall_n += 1;
        }
        size_sum += set.len() as f64;
        repeated_sum += if set.is_empty() {
            0.0
        } else {
            set.replacement_count() as f64 / set.len() as f64
        };
    }

    let n = sets.len() as f64;
    Ok(EvalReport {
        risk: risk_sum / n,
        ndcg_at_k: ndcg_sum / n,
        recall_at_k: if recall_n > 0 {
            recall_sum / recall_n as f64
        } else {
            0.0
        },
        mean_set_size: size_sum / n,
        repeated_fraction: repeated_sum / n,
        k,
        n_users: sets.len(),
        recall_skipped: sets.len() - recall_n,
    })
}
