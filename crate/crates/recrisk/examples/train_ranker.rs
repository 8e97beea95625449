//! Train the latent-factor baseline on simulated watch fractions and poke
//! at the resulting scores.
//!
//! ```bash
//! cargo run --release --example train_ranker
//! ```

use recrisk::ranker::{train_latent_factor, LatentFactorConfig, ScoreModel};
use recrisk::simulate::{generate, SimConfig};

fn main() -> recrisk::Result<()> {
    let sim = SimConfig {
        n_users: 200,
        n_items: 500,
        interactions_per_user: 40,
        repeat_prob: 0.0,
        seed: 1,
        ..SimConfig::default()
    };
    let output = generate(&sim)?;

    let config = LatentFactorConfig {
        dim: 16,
        epochs: 30,
        learning_rate: 0.05,
        regularization: 0.001,
        seed: 0,
    };
    let model = train_latent_factor(&output.records, &config)?;
    println!(
        "trained d={} on {} interactions, final mse {:.5}",
        config.dim,
        output.records.len(),
        model.final_loss()
    );

    // Check the analytic gradients against finite differences.
    let rec = &output.records[0];
    let rel = model.gradient_check(rec.user_id, rec.item_id, 0.5, config.regularization, 1e-5)?;
    println!("max relative gradient error at a random point: {rel:.2e}");

    // Rank one user's items under the trained model.
    let user = rec.user_id;
    let items: Vec<_> = output
        .records
        .iter()
        .filter(|r| r.user_id == user)
        .map(|r| r.item_id)
        .collect();
    let scorer = ScoreModel::LatentFactor(model);
    let ranking = scorer.rank(user, &items)?;
    println!("top 5 items for user {user}:");
    for item in ranking.iter().take(5) {
        println!("  item {item} score {:.4}", scorer.score(user, *item)?);
    }
    Ok(())
}
