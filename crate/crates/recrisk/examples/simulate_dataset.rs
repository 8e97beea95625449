//! Generate a synthetic interaction log and inspect its shape.
//!
//! ```bash
//! cargo run --release --example simulate_dataset
//! ```

use recrisk::simulate::{generate, ReporterGroup, SimConfig};

fn main() -> recrisk::Result<()> {
    let config = SimConfig {
        n_users: 1000,
        n_items: 20_000,
        interactions_per_user: 40,
        flag_prob_low: 0.02,
        flag_prob_high: 0.2,
        frac_high_reporters: 0.3,
        zero_watch_prob: 0.21,
        repeat_prob: 0.15,
        seed: 42,
        ..SimConfig::default()
    };
    let output = generate(&config)?;

    let n = output.records.len();
    let zero = output
        .records
        .iter()
        .filter(|r| r.watch_time == 0.0)
        .count();
    let overlong = output
        .records
        .iter()
        .filter(|r| r.watch_fraction() > 100.0)
        .count();
    let flagged = output.records.iter().filter(|r| r.flagged).count();
    let repeats = output.records.iter().filter(|r| r.view_index >= 2).count();
    let high = output
        .truth
        .user_group
        .values()
        .filter(|&&g| g == ReporterGroup::High)
        .count();

    println!("interactions:      {n}");
    println!(
        "zero-watch share:  {:.3} (configured {:.2})",
        zero as f64 / n as f64,
        config.zero_watch_prob
    );
    println!(
        "overlong share:    {:.3} (configured {:.2})",
        overlong as f64 / n as f64,
        config.overlong_prob
    );
    println!("flagged share:     {:.4}", flagged as f64 / n as f64);
    println!("repeated views:    {repeats}");
    println!("high reporters:    {high} of {}", config.n_users);
    println!("score table size:  {}", output.scores.len());

    // Every generated pair carries its ground-truth flag probability, which
    // is what lets the risk-control guarantee be checked exactly.
    let some_pair = output.truth.pairs.iter().next().unwrap();
    println!(
        "example pair {:?}: first-view flag prob {:.4}, re-show flag prob {:.4}",
        some_pair.0, some_pair.1.first_flag_prob, some_pair.1.second_flag_prob
    );
    Ok(())
}
