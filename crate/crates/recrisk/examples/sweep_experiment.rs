//! A small end-to-end sweep: calibrate, recommend and evaluate over a grid
//! of (alpha, beta, strategy, seed), then summarize what landed where.
//!
//! ```bash
//! cargo run --release --example sweep_experiment
//! ```

use recrisk::experiment::{run_sweep, BetaSpec, DatasetSource, ExperimentConfig, ScorerSpec};
use recrisk::selection::Strategy;
use recrisk::simulate::SimConfig;

fn main() -> recrisk::Result<()> {
    let out_dir = std::env::temp_dir().join("recrisk_sweep_example");
    let config = ExperimentConfig {
        dataset: DatasetSource::Sim {
            config: SimConfig {
                n_users: 600,
                n_items: 15_000,
                interactions_per_user: 40,
                flag_prob_low: 0.02,
                flag_prob_high: 0.2,
                second_view_flag_prob: 0.0,
                ..SimConfig::default()
            },
        },
        scorer: ScorerSpec::SimScores,
        k: 10,
        alphas: vec![0.05, 0.1, 0.2, 0.5],
        betas: vec![BetaSpec::Percent(50.0)],
        strategies: vec![Strategy::Remove, Strategy::Replace],
        seeds: vec![0, 1, 2],
        history_fraction: 0.5,
        calibration_user_fraction: 0.5,
        group_threshold_percent: 10.0,
        out_dir: out_dir.clone(),
    };

    let outcome = run_sweep(&config)?;
    println!(
        "wrote results, summary, groups, plots and meta to {}\n",
        out_dir.display()
    );

    println!(
        "{:>6} {:>8} {:>5} {:>8} {:>8} {:>8} {:>8}",
        "alpha", "strategy", "seed", "risk", "ndcg", "size", "repl%"
    );
    for row in &outcome.rows {
        let report = row.report.as_ref().unwrap();
        println!(
            "{:>6} {:>8} {:>5} {:>8.4} {:>8.4} {:>8.2} {:>8.3}",
            row.alpha,
            row.strategy.to_string(),
            row.seed,
            report.risk,
            report.ndcg_at_k,
            report.mean_set_size,
            report.repeated_fraction,
        );
    }
    println!("\nrisk is bounded in expectation: per-seed values fluctuate, their mean");
    println!("stays at or below alpha. replace keeps the sets fuller than remove.");
    Ok(())
}
