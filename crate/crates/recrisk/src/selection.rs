//! Recommendation-set construction.
//!
//! Three pieces compose the final set for a user:
//!   1. threshold filtering keeps candidates with score >= lambda (the sets
//!      are nested: raising lambda never adds items);
//!   2. a per-user safe pool of previously seen, never-flagged items whose
//!      historical watch fraction strictly exceeds a filter beta;
//!   3. the union is truncated at k, fresh candidates first (ranker order),
//!      then safe replacements ordered by historical watch fraction.
//!
//! Passing an empty pool turns replacement off, which is exactly the plain
//! removal strategy.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::data::{InteractionRecord, ItemId, UserId};

/// Whether recommendation sets are built by filtering alone or by filtering
/// plus backfilling from the safe pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Remove,
    Replace,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::Remove => write!(f, "remove"),
            Strategy::Replace => write!(f, "replace"),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "remove" => Ok(Strategy::Remove),
            "replace" => Ok(Strategy::Replace),
            other => Err(format!(
                "unknown strategy `{other}` (expected remove|replace)"
            )),
        }
    }
}

/// A candidate item with its ranker score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredItem {
    pub item_id: ItemId,
    pub score: f64,
}

/// One safe-pool entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafePoolItem {
    pub item_id: ItemId,
    /// Highest watch fraction observed across the user's views of the item.
    pub watch_fraction: f64,
    /// Timestamp of the most recent view.
    pub last_view: i64,
}

/// Previously seen, never-flagged items with watch fraction strictly above
/// `beta`, ordered by watch fraction (ties: most recent first).
#[derive(Debug, Clone, PartialEq)]
pub struct SafePool {
    pub user_id: UserId,
    pub items: Vec<SafePoolItem>,
    /// The filter actually applied; `f64::NEG_INFINITY` means no filter.
    pub beta: f64,
}

impl SafePool {
    pub fn empty(user_id: UserId, beta: f64) -> Self {
        SafePool {
            user_id,
            items: Vec::new(),
            beta,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Where a recommended item came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Fresh,
    Replacement,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Fresh => write!(f, "fresh"),
            Provenance::Replacement => write!(f, "replacement"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecItem {
    pub item_id: ItemId,
    pub provenance: Provenance,
    /// Ranker score for fresh items, historical watch fraction for
    /// replacements.
    pub ordering_value: f64,
}

/// Final ordered recommendation list, at most `k_requested` items.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationSet {
    pub user_id: UserId,
    pub items: Vec<RecItem>,
    pub k_requested: usize,
    pub lambda_used: f64,
}

impl RecommendationSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item_ids(&self) -> Vec<ItemId> {
        self.items.iter().map(|i| i.item_id).collect()
    }

    pub fn replacement_count(&self) -> usize {
        self.items
            .iter()
            .filter(|i| i.provenance == Provenance::Replacement)
            .count()
    }
}

/// Keep candidates with score >= lambda. Input order is preserved; the
/// result is a set in the sense that membership only depends on the score.
pub fn filter_candidates(scored: &[ScoredItem], lambda: f64) -> Vec<ScoredItem> {
    scored
        .iter()
        .copied()
        .filter(|s| s.score >= lambda)
        .collect()
}

/// Build the safe pool from one user's interaction history.
///
/// An item qualifies when no view of it was ever flagged and its highest
/// watch fraction strictly exceeds `beta`. An empty history yields an empty
/// pool (the cold-start case).
pub fn build_safe_pool(history: &[InteractionRecord], beta: f64) -> SafePool {
    let user_id = match history.first() {
        Some(r) => r.user_id,
        None => return SafePool::empty(UserId(0), beta),
    };
    debug_assert!(
        history.iter().all(|r| r.user_id == user_id),
        "safe pool history must belong to a single user"
    );

    let mut per_item: std::collections::HashMap<ItemId, (f64, i64, bool)> =
        std::collections::HashMap::new();
    for r in history {
        let entry = per_item
            .entry(r.item_id)
            .or_insert((f64::NEG_INFINITY, i64::MIN, false));
        entry.0 = entry.0.max(r.watch_fraction());
        entry.1 = entry.1.max(r.timestamp);
        entry.2 |= r.flagged;
    }

    let mut items: Vec<SafePoolItem> = per_item
        .into_iter()
        .filter(|(_, (watch, _, flagged))| !flagged && *watch > beta)
        .map(|(item_id, (watch_fraction, last_view, _))| SafePoolItem {
            item_id,
            watch_fraction,
            last_view,
        })
        .collect();
    items.sort_by(|a, b| {
        b.watch_fraction
            .partial_cmp(&a.watch_fraction)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.last_view.cmp(&a.last_view))
            .then(a.item_id.cmp(&b.item_id))
    });
    SafePool {
        user_id,
        items,
        beta,
    }
}

/// Build the final recommendation set for one user.
///
/// Fresh candidates passing the threshold fill slots first in score order
/// (ties by ascending item id); safe-pool items fill the remaining slots in
/// pool order. The result is shorter than `k` only when the filtered
/// candidates and the pool together cannot fill it.
pub fn recommend(
    user_id: UserId,
    candidates: &[ScoredItem],
    safe_pool: &SafePool,
    lambda: f64,
    k: usize,
) -> RecommendationSet {
    let mut fresh = filter_candidates(candidates, lambda);
    fresh.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.item_id.cmp(&b.item_id))
    });
    fresh.truncate(k);

    let mut items: Vec<RecItem> = fresh
        .iter()
        .map(|s| RecItem {
            item_id: s.item_id,
            provenance: Provenance::Fresh,
            ordering_value: s.score,
        })
        .collect();
    let chosen: HashSet<ItemId> = fresh.iter().map(|s| s.item_id).collect();
    for pool_item in &safe_pool.items {
        if items.len() >= k {
            break;
        }
        if chosen.contains(&pool_item.item_id) {
            continue;
        }
        items.push(RecItem {
            item_id: pool_item.item_id,
            provenance: Provenance::Replacement,
            ordering_value: pool_item.watch_fraction,
        });
    }

    RecommendationSet {
        user_id,
        items,
        k_requested: k,
        lambda_used: lambda,
    }
}

/// Serialize recommendation sets as CSV rows
/// (user_id, rank, item_id, provenance, ordering_value, lambda).
pub fn write_recommendations_csv(
    sets: &[RecommendationSet],
    path: &std::path::Path,
) -> crate::error::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "user_id",
        "rank",
        "item_id",
        "provenance",
        "ordering_value",
        "lambda",
    ])?;
    for set in sets {
        for (rank, item) in set.items.iter().enumerate() {
            w.write_record([
                set.user_id.to_string(),
                (rank + 1).to_string(),
                item.item_id.to_string(),
                item.provenance.to_string(),
                item.ordering_value.to_string(),
                set.lambda_used.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scored(pairs: &[(u64, f64)]) -> Vec<ScoredItem> {
        pairs
            .iter()
            .map(|&(id, score)| ScoredItem {
                item_id: ItemId(id),
                score,
            })
            .collect()
    }

    /// Scores 5, 1, 1, 1 with item 4 carrying the 5.
    fn four_item_candidates() -> Vec<ScoredItem> {
        scored(&[(1, 1.0), (2, 1.0), (3, 1.0), (4, 5.0)])
    }

    fn history_rec(
        user: u64,
        item: u64,
        ts: i64,
        watch_pct: f64,
        flagged: bool,
    ) -> InteractionRecord {
        InteractionRecord {
            user_id: UserId(user),
            item_id: ItemId(item),
            timestamp: ts,
            watch_time: watch_pct / 10.0, // duration 10 => watch fraction = watch_pct
            duration: 10.0,
            flagged,
            view_index: 1,
        }
    }

    #[test]
    fn filter_with_sentinel_keeps_everything() {
        let candidates = four_item_candidates();
        let kept = filter_candidates(&candidates, f64::NEG_INFINITY);
        assert_eq!(kept.len(), 4);
    }

    #[test]
    fn filter_above_every_score_is_empty() {
        let kept = filter_candidates(&four_item_candidates(), 6.0);
        assert!(kept.is_empty());
    }

    #[test]
    fn filter_at_two_keeps_only_the_top_item() {
        let kept = filter_candidates(&four_item_candidates(), 2.0);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].item_id, ItemId(4));
    }

    #[test]
    fn empty_history_gives_empty_pool() {
        let pool = build_safe_pool(&[], 50.0);
        assert!(pool.is_empty());
    }

    #[test]
    fn pool_filters_by_flag_and_watch_fraction() {
        let history = vec![
            history_rec(1, 1, 0, 80.0, false),
            history_rec(1, 2, 1, 30.0, false),
            history_rec(1, 3, 2, 90.0, true),
        ];
        let pool = build_safe_pool(&history, 50.0);
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.items[0].item_id, ItemId(1));
        assert_eq!(pool.items[0].watch_fraction, 80.0);
    }

    #[test]
    fn pool_is_empty_when_everything_is_flagged() {
        let history = vec![
            history_rec(1, 1, 0, 80.0, true),
            history_rec(1, 2, 1, 95.0, true),
        ];
        assert!(build_safe_pool(&history, 0.0).is_empty());
    }

    #[test]
    fn pool_beta_filter_is_strict() {
        let history = vec![history_rec(1, 1, 0, 50.0, false)];
        assert!(build_safe_pool(&history, 50.0).is_empty());
        assert_eq!(build_safe_pool(&history, 49.999).len(), 1);
    }

    #[test]
    fn pool_flag_on_any_view_disqualifies() {
        // First view fine, second view flagged: the item must not qualify.
        let mut history = vec![
            history_rec(1, 1, 0, 80.0, false),
            history_rec(1, 1, 5, 70.0, true),
        ];
        history[1].view_index = 2;
        assert!(build_safe_pool(&history, 0.0).is_empty());
    }

    #[test]
    fn pool_orders_by_watch_then_recency() {
        let history = vec![
            history_rec(1, 1, 0, 60.0, false),
            history_rec(1, 2, 5, 90.0, false),
            history_rec(1, 3, 9, 60.0, false),
        ];
        let pool = build_safe_pool(&history, 0.0);
        let ids: Vec<ItemId> = pool.items.iter().map(|i| i.item_id).collect();
        // 90% first; the two 60% items by recency (item 3 seen later).
        assert_eq!(ids, vec![ItemId(2), ItemId(3), ItemId(1)]);
    }

    #[test]
    fn low_lambda_returns_all_candidates_fresh_in_rank_order() {
        let set = recommend(
            UserId(1),
            &four_item_candidates(),
            &SafePool::empty(UserId(1), 0.0),
            f64::NEG_INFINITY,
            10,
        );
        assert_eq!(set.len(), 4);
        assert!(set.items.iter().all(|i| i.provenance == Provenance::Fresh));
        assert_eq!(
            set.item_ids(),
            vec![ItemId(4), ItemId(1), ItemId(2), ItemId(3)]
        );
    }

    #[test]
    fn deep_threshold_with_one_safe_item_returns_single_replacement() {
        // The threshold exceeds every candidate score, so only the pool item
        // remains even with k = 2.
        let pool = SafePool {
            user_id: UserId(1),
            items: vec![SafePoolItem {
                item_id: ItemId(5),
                watch_fraction: 80.0,
                last_view: 0,
            }],
            beta: 50.0,
        };
        let set = recommend(UserId(1), &four_item_candidates(), &pool, 6.0, 2);
        assert_eq!(set.len(), 1);
        assert_eq!(set.items[0].item_id, ItemId(5));
        assert_eq!(set.items[0].provenance, Provenance::Replacement);
        assert_eq!(set.items[0].ordering_value, 80.0);
    }

    #[test]
    fn replacements_fill_remaining_slots() {
        // 10 candidates, threshold removes the 3 lowest, pool holds 5 items.
        let candidates: Vec<ScoredItem> = (0..10)
            .map(|i| ScoredItem {
                item_id: ItemId(i),
                score: i as f64,
            })
            .collect();
        let pool = SafePool {
            user_id: UserId(1),
            items: (100..105)
                .map(|i| SafePoolItem {
                    item_id: ItemId(i),
                    watch_fraction: 100.0 - i as f64,
                    last_view: 0,
                })
                .collect(),
            beta: 0.0,
        };
        let set = recommend(UserId(1), &candidates, &pool, 3.0, 10);
        assert_eq!(set.len(), 10);
        let fresh: Vec<&RecItem> = set
            .items
            .iter()
            .filter(|i| i.provenance == Provenance::Fresh)
            .collect();
        assert_eq!(fresh.len(), 7);
        assert_eq!(set.replacement_count(), 3);
        // Fresh first, then replacements.
        assert!(set.items[..7]
            .iter()
            .all(|i| i.provenance == Provenance::Fresh));
        assert!(set.items[7..]
            .iter()
            .all(|i| i.provenance == Provenance::Replacement));
    }

    #[test]
    fn overlapping_pool_item_is_not_duplicated() {
        let candidates = scored(&[(1, 5.0), (2, 4.0)]);
        let pool = SafePool {
            user_id: UserId(1),
            items: vec![
                SafePoolItem {
                    item_id: ItemId(1),
                    watch_fraction: 90.0,
                    last_view: 0,
                },
                SafePoolItem {
                    item_id: ItemId(3),
                    watch_fraction: 80.0,
                    last_view: 0,
                },
            ],
            beta: 0.0,
        };
        let set = recommend(UserId(1), &candidates, &pool, 0.0, 3);
        let ids = set.item_ids();
        assert_eq!(ids, vec![ItemId(1), ItemId(2), ItemId(3)]);
        assert_eq!(set.replacement_count(), 1);
    }

    #[test]
    fn set_never_exceeds_k() {
        let candidates: Vec<ScoredItem> = (0..30)
            .map(|i| ScoredItem {
                item_id: ItemId(i),
                score: i as f64,
            })
            .collect();
        let pool = SafePool {
            user_id: UserId(1),
            items: (100..140)
                .map(|i| SafePoolItem {
                    item_id: ItemId(i),
                    watch_fraction: 50.0,
                    last_view: i as i64,
                })
                .collect(),
            beta: 0.0,
        };
        for lambda in [-1.0, 5.0, 29.5, 100.0] {
            let set = recommend(UserId(1), &candidates, &pool, lambda, 12);
            assert!(set.len() <= 12);
        }
    }

    proptest! {
        /// Raising the threshold never adds candidates (nesting).
        #[test]
        fn filtered_sets_are_nested(
            scores in proptest::collection::vec(-10.0f64..10.0, 0..20),
            lo in -10.0f64..10.0,
            hi in -10.0f64..10.0,
        ) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let items: Vec<ScoredItem> = scores
                .iter()
                .enumerate()
                .map(|(i, &s)| ScoredItem { item_id: ItemId(i as u64), score: s })
                .collect();
            let wide: HashSet<ItemId> = filter_candidates(&items, lo).iter().map(|s| s.item_id).collect();
            let narrow: HashSet<ItemId> = filter_candidates(&items, hi).iter().map(|s| s.item_id).collect();
            prop_assert!(narrow.is_subset(&wide));
        }

        /// At equal lambda, the replace strategy never yields a smaller set
        /// than remove, per user.
        #[test]
        fn replace_is_at_least_as_large_as_remove(
            scores in proptest::collection::vec(-5.0f64..5.0, 1..15),
            pool_size in 0usize..10,
            lambda in -5.0f64..6.0,
            k in 1usize..12,
        ) {
            let candidates: Vec<ScoredItem> = scores
                .iter()
                .enumerate()
                .map(|(i, &s)| ScoredItem { item_id: ItemId(i as u64), score: s })
                .collect();
            let pool = SafePool {
                user_id: UserId(1),
                items: (0..pool_size)
                    .map(|i| SafePoolItem {
                        item_id: ItemId(1000 + i as u64),
                        watch_fraction: 10.0 + i as f64,
                        last_view: 0,
                    })
                    .collect(),
                beta: 0.0,
            };
            let remove = recommend(UserId(1), &candidates, &SafePool::empty(UserId(1), 0.0), lambda, k);
            let replace = recommend(UserId(1), &candidates, &pool, lambda, k);
            prop_assert!(replace.len() >= remove.len());
        }
    }
}
