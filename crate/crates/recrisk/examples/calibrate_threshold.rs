//! Build an empirical risk curve from calibration users, monotonize it and
//! read off thresholds for several risk levels.
//!
//! ```bash
//! cargo run --release --example calibrate_threshold
//! ```

use std::collections::HashMap;

use recrisk::calibration::{
    default_grid, empirical_risk_curve, monotonize, select_threshold, CalibrationUser,
    ScoredCandidate,
};
use recrisk::error::Error;
use recrisk::selection::{build_safe_pool, Strategy};
use recrisk::simulate::{build_scenarios, generate, SimConfig};

fn main() -> recrisk::Result<()> {
    // 400 calibration users drawn from the synthetic behavioral model.
    let sim = SimConfig {
        n_users: 400,
        n_items: 10_000,
        interactions_per_user: 40,
        seed: 9,
        ..SimConfig::default()
    };
    let output = generate(&sim)?;
    let scenarios = build_scenarios(&output, 0.5);

    let users: Vec<CalibrationUser> = scenarios
        .iter()
        .map(|s| CalibrationUser {
            user_id: s.user_id,
            candidates: s
                .candidates
                .iter()
                .map(|c| ScoredCandidate {
                    item_id: c.item_id,
                    score: c.score,
                    flagged: c.flagged,
                })
                .collect(),
        })
        .collect();
    let pools: HashMap<_, _> = scenarios
        .iter()
        .map(|s| (s.user_id, build_safe_pool(&s.history, 50.0)))
        .collect();

    let k = 10;
    let grid = default_grid(&users);
    println!(
        "calibration users: {}, grid points: {}",
        users.len(),
        grid.len()
    );

    for strategy in [Strategy::Remove, Strategy::Replace] {
        let curve = monotonize(&empirical_risk_curve(&users, k, strategy, &pools, &grid)?);
        println!("\n{strategy}:");
        println!("  {:>6} {:>12} {:>10}", "alpha", "lambda_hat", "inflated");
        for alpha in [0.02, 0.05, 0.1, 0.2, 0.5] {
            match select_threshold(&curve, alpha) {
                Ok(result) if result.feasible => println!(
                    "  {alpha:>6} {:>12.4} {:>10.4}",
                    result.lambda_hat, result.inflated_risk_at_lambda
                ),
                Ok(_) => println!("  {alpha:>6} {:>12}", "infeasible"),
                Err(Error::AlphaTooSmall { floor, .. }) => {
                    println!("  {alpha:>6}   below floor 1/(n+1) = {floor:.4}")
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}
