//! The failure mode of pure filtering, and how replacement avoids it, on a
//! four-item instance small enough to reason through by hand.
//!
//! ```bash
//! cargo run --release --example recommend_with_replacement
//! ```

use std::collections::HashMap;

use recrisk::data::{ItemId, UserId};
use recrisk::metrics::risk_fraction;
use recrisk::selection::{recommend, SafePool, SafePoolItem, ScoredItem};

fn main() -> recrisk::Result<()> {
    // Four candidates; the ranker loves item D (id 4) but the user flags it.
    let candidates = vec![
        ScoredItem {
            item_id: ItemId(1),
            score: 1.0,
        },
        ScoredItem {
            item_id: ItemId(2),
            score: 1.0,
        },
        ScoredItem {
            item_id: ItemId(3),
            score: 1.0,
        },
        ScoredItem {
            item_id: ItemId(4),
            score: 5.0,
        },
    ];
    let flags: HashMap<ItemId, bool> = [
        (ItemId(1), false),
        (ItemId(2), false),
        (ItemId(3), false),
        (ItemId(4), true),
        (ItemId(5), false),
    ]
    .into_iter()
    .collect();
    let user = UserId(1);
    let k = 4;
    let alpha = 0.1;

    println!("target risk level: {alpha}\n");
    println!("filtering only (empty pool):");
    let no_pool = SafePool::empty(user, 0.0);
    for lambda in [0.0, 2.0, 6.0] {
        let set = recommend(user, &candidates, &no_pool, lambda, k);
        println!(
            "  lambda {lambda:>4}: {:<22} risk {:.2}",
            format!(
                "{:?}",
                set.item_ids().iter().map(|i| i.0).collect::<Vec<_>>()
            ),
            risk_fraction(&set, &flags)?
        );
    }
    println!("  every non-empty set stays above {alpha}: the only fix is the empty set.\n");

    // One previously seen, never-flagged, well-watched item changes that.
    let pool = SafePool {
        user_id: user,
        items: vec![SafePoolItem {
            item_id: ItemId(5),
            watch_fraction: 80.0,
            last_view: 0,
        }],
        beta: 50.0,
    };
    println!("with one safe replacement (item 5, watched 80%):");
    let set = recommend(user, &candidates, &pool, 6.0, k);
    for item in &set.items {
        println!(
            "  item {} ({}, ordering value {})",
            item.item_id, item.provenance, item.ordering_value
        );
    }
    println!(
        "  risk {:.2} with a non-empty set",
        risk_fraction(&set, &flags)?
    );
    Ok(())
}
