//! Relevance scoring.
//!
//! The selection stage only needs a score s(user, item) and the ordering it
//! induces, so the scorer is pluggable. Two built-ins are provided: a plain
//! score table (for precomputed scores from any external model) and a small
//! biased matrix-factorization baseline trained with SGD on capped watch
//! fractions.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data::{InteractionRecord, ItemId, UserId};
use crate::error::{Error, Result};

/// Pluggable score source.
#[derive(Debug, Clone)]
pub enum ScoreModel {
    Table(ScoreTable),
    LatentFactor(LatentFactorModel),
}

impl ScoreModel {
    pub fn score(&self, user: UserId, item: ItemId) -> Result<f64> {
        match self {
            ScoreModel::Table(t) => t.score(user, item),
            ScoreModel::LatentFactor(m) => m.score(user, item),
        }
    }

    /// Order candidates by descending score, ties broken by ascending item id.
    pub fn rank(&self, user: UserId, candidates: &[ItemId]) -> Result<Vec<ItemId>> {
        let mut scored: Vec<(ItemId, f64)> = Vec::with_capacity(candidates.len());
        for &item in candidates {
            scored.push((item, self.score(user, item)?));
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        Ok(scored.into_iter().map(|(item, _)| item).collect())
    }
}

/// Explicit (user, item) -> score map with an optional default for unseen
/// pairs. No default means unseen pairs are an error; silent defaults tend
/// to mask data bugs.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    scores: HashMap<(UserId, ItemId), f64>,
    default: Option<f64>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_default(default: f64) -> Self {
        ScoreTable {
            scores: HashMap::new(),
            default: Some(default),
        }
    }

    pub fn insert(&mut self, user: UserId, item: ItemId, score: f64) {
        self.scores.insert((user, item), score);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn score(&self, user: UserId, item: ItemId) -> Result<f64> {
        match self.scores.get(&(user, item)).copied().or(self.default) {
            Some(s) => Ok(s),
            None => Err(Error::MissingScore {
                user: user.0,
                item: item.0,
            }),
        }
    }

    /// Load from a `user_id,item_id,score` CSV.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (uc, ic, sc) = (col("user_id")?, col("item_id")?, col("score")?);
        let mut table = ScoreTable::new();
        for (idx, row) in reader.records().enumerate() {
            let row = row?;
            let parse_err = |what: &str| Error::BadRow {
                row: idx + 1,
                message: format!("cannot parse {what}"),
            };
            let user = UserId(row[uc].trim().parse().map_err(|_| parse_err("user id"))?);
            let item = ItemId(row[ic].trim().parse().map_err(|_| parse_err("item id"))?);
            let score: f64 = row[sc].trim().parse().map_err(|_| parse_err("score"))?;
            if !score.is_finite() {
                return Err(parse_err("finite score"));
            }
            table.insert(user, item, score);
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["user_id", "item_id", "score"])?;
        let mut entries: Vec<(&(UserId, ItemId), &f64)> = self.scores.iter().collect();
        entries.sort_by_key(|(k, _)| **k);
        for ((user, item), score) in entries {
            w.write_record([user.to_string(), item.to_string(), score.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Hyperparameters for [`train_latent_factor`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatentFactorConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub seed: u64,
}

impl Default for LatentFactorConfig {
    fn default() -> Self {
        LatentFactorConfig {
            dim: 16,
            epochs: 30,
            learning_rate: 0.05,
            regularization: 0.001,
            seed: 0,
        }
    }
}

/// Biased matrix factorization: score(u, i) = p_u . q_i + b_u + b_i.
#[derive(Debug, Clone)]
pub struct LatentFactorModel {
    dim: usize,
    user_index: HashMap<UserId, usize>,
    item_index: HashMap<ItemId, usize>,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    config: LatentFactorConfig,
    final_loss: f64,
}

/// Gradient of the per-example objective with respect to the parameters that
/// the example touches.
#[derive(Debug, Clone)]
pub struct ExampleGradient {
    pub user_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
    pub user_bias: f64,
    pub item_bias: f64,
}

impl LatentFactorModel {
    fn new_random(
        users: Vec<UserId>,
        items: Vec<ItemId>,
        config: LatentFactorConfig,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let d = config.dim;
        let scale = 0.1 / (d as f64).sqrt();
        let user_index: HashMap<UserId, usize> =
            users.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let item_index: HashMap<ItemId, usize> =
            items.iter().enumerate().map(|(i, &it)| (it, i)).collect();
        let user_factors = (0..users.len() * d)
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        let item_factors = (0..items.len() * d)
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        LatentFactorModel {
            dim: d,
            user_bias: vec![0.0; users.len()],
            item_bias: vec![0.0; items.len()],
            user_index,
            item_index,
            user_factors,
            item_factors,
            config,
            final_loss: f64::NAN,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mean squared training error after the last epoch.
    pub fn final_loss(&self) -> f64 {
        self.final_loss
    }

    fn indices(&self, user: UserId, item: ItemId) -> Result<(usize, usize)> {
        match (self.user_index.get(&user), self.item_index.get(&item)) {
            (Some(&u), Some(&i)) => Ok((u, i)),
            _ => Err(Error::MissingScore {
                user: user.0,
                item: item.0,
            }),
        }
    }

    /// The model is total: users or items unseen during training contribute
    /// zero factors and zero bias, so cold pairs back off to the known
    /// side's bias (and to 0.0 when both sides are cold).
    pub fn score(&self, user: UserId, item: ItemId) -> Result<f64> {
        match (self.user_index.get(&user), self.item_index.get(&item)) {
            (Some(&u), Some(&i)) => Ok(self.predict_idx(u, i)),
            (Some(&u), None) => Ok(self.user_bias[u]),
            (None, Some(&i)) => Ok(self.item_bias[i]),
            (None, None) => Ok(0.0),
        }
    }

    fn predict_idx(&self, u: usize, i: usize) -> f64 {
        let d = self.dim;
        let pu = &self.user_factors[u * d..(u + 1) * d];
        let qi = &self.item_factors[i * d..(i + 1) * d];
        let dot: f64 = pu.iter().zip(qi).map(|(a, b)| a * b).sum();
        dot + self.user_bias[u] + self.item_bias[i]
    }

    /// Per-example objective:
    ///   (pred - target)^2 + reg * (|p_u|^2 + |q_i|^2 + b_u^2 + b_i^2)
    pub fn example_loss(&self, user: UserId, item: ItemId, target: f64, reg: f64) -> Result<f64> {
        let (u, i) = self.indices(user, item)?;
        let d = self.dim;
        let pu = &self.user_factors[u * d..(u + 1) * d];
        let qi = &self.item_factors[i * d..(i + 1) * d];
        let err = self.predict_idx(u, i) - target;
        let penalty: f64 = pu.iter().map(|v| v * v).sum::<f64>()
            + qi.iter().map(|v| v * v).sum::<f64>()
            + self.user_bias[u] * self.user_bias[u]
            + self.item_bias[i] * self.item_bias[i];
        Ok(err * err + reg * penalty)
    }

    /// Analytic gradient of [`Self::example_loss`].
    pub fn example_gradient(
        &self,
        user: UserId,
        item: ItemId,
        target: f64,
        reg: f64,
    ) -> Result<ExampleGradient> {
        let (u, i) = self.indices(user, item)?;
        let d = self.dim;
        let pu = &self.user_factors[u * d..(u + 1) * d];
        let qi = &self.item_factors[i * d..(i + 1) * d];
        let err = self.predict_idx(u, i) - target;
        Ok(ExampleGradient {
            user_factors: (0..d)
                .map(|f| 2.0 * err * qi[f] + 2.0 * reg * pu[f])
                .collect(),
            item_factors: (0..d)
                .map(|f| 2.0 * err * pu[f] + 2.0 * reg * qi[f])
                .collect(),
            user_bias: 2.0 * err + 2.0 * reg * self.user_bias[u],
            item_bias: 2.0 * err + 2.0 * reg * self.item_bias[i],
        })
    }

    /// Compare the analytic gradient against central finite differences of
    /// the per-example loss. Returns the maximum relative error over all
    /// touched coordinates.
    pub fn gradient_check(
        &self,
        user: UserId,
        item: ItemId,
        target: f64,
        reg: f64,
        eps: f64,
    ) -> Result<f64> {
        let (u, i) = self.indices(user, item)?;
        let d = self.dim;
        let analytic = self.example_gradient(user, item, target, reg)?;
        let mut max_rel = 0.0f64;
        let mut check = |analytic_g: f64, fd: f64| {
            let rel = (analytic_g - fd).abs() / analytic_g.abs().max(fd.abs()).max(1e-8);
            max_rel = max_rel.max(rel);
        };
        let mut probe = self.clone();
        let fd_at = |probe: &mut LatentFactorModel,
                     write: &dyn Fn(&mut LatentFactorModel, f64),
                     base: f64|
         -> Result<f64> {
            write(probe, base + eps);
            let hi = probe.example_loss(user, item, target, reg)?;
            write(probe, base - eps);
            let lo = probe.example_loss(user, item, target, reg)?;
            write(probe, base);
            Ok((hi - lo) / (2.0 * eps))
        };
        for f in 0..d {
            let base = self.user_factors[u * d + f];
            let fd = fd_at(&mut probe, &move |m, v| m.user_factors[u * d + f] = v, base)?;
            check(analytic.user_factors[f], fd);
        }
        for f in 0..d {
            let base = self.item_factors[i * d + f];
            let fd = fd_at(&mut probe, &move |m, v| m.item_factors[i * d + f] = v, base)?;
            check(analytic.item_factors[f], fd);
        }
        let base = self.user_bias[u];
        let fd = fd_at(&mut probe, &move |m, v| m.user_bias[u] = v, base)?;
        check(analytic.user_bias, fd);
        let base = self.item_bias[i];
        let fd = fd_at(&mut probe, &move |m, v| m.item_bias[i] = v, base)?;
        check(analytic.item_bias, fd);
        Ok(max_rel)
    }

    /// Serialize as `<prefix>.meta.json` plus `<prefix>.embeddings.csv`
    /// (kind, id, bias, f0..f{d-1}).
    pub fn save(&self, prefix: &Path) -> Result<()> {
        let header = serde_json::json!({
            "dim": self.dim,
            "seed": self.config.seed,
            "epochs": self.config.epochs,
            "learning_rate": self.config.learning_rate,
            "regularization": self.config.regularization,
            "final_loss": self.final_loss,
            "n_users": self.user_index.len(),
            "n_items": self.item_index.len(),
        });
        std::fs::write(
            with_suffix(prefix, ".meta.json"),
            serde_json::to_string_pretty(&header)?,
        )?;

        let mut w = csv::Writer::from_path(with_suffix(prefix, ".embeddings.csv"))?;
        let mut head = vec!["kind".to_string(), "id".to_string(), "bias".to_string()];
        head.extend((0..self.dim).map(|f| format!("f{f}")));
        w.write_record(&head)?;
        let mut users: Vec<(&UserId, &usize)> = self.user_index.iter().collect();
        users.sort_by_key(|(u, _)| **u);
        for (user, &idx) in users {
            let mut row = vec![
                "user".to_string(),
                user.to_string(),
                self.user_bias[idx].to_string(),
            ];
            row.extend(
                self.user_factors[idx * self.dim..(idx + 1) * self.dim]
                    .iter()
                    .map(|v| v.to_string()),
            );
            w.write_record(&row)?;
        }
        let mut items: Vec<(&ItemId, &usize)> = self.item_index.iter().collect();
        items.sort_by_key(|(i, _)| **i);
        for (item, &idx) in items {
            let mut row = vec![
                "item".to_string(),
                item.to_string(),
                self.item_bias[idx].to_string(),
            ];
            row.extend(
                self.item_factors[idx * self.dim..(idx + 1) * self.dim]
                    .iter()
                    .map(|v| v.to_string()),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(prefix: &Path) -> Result<Self> {
        let header: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(with_suffix(prefix, ".meta.json"))?)?;
        let dim = header["dim"]
            .as_u64()
            .ok_or_else(|| Error::InvalidInput("model header is missing a numeric `dim`".into()))?
            as usize;
        let config = LatentFactorConfig {
            dim,
            epochs: header["epochs"].as_u64().unwrap_or(0) as usize,
            learning_rate: header["learning_rate"].as_f64().unwrap_or(0.0),
            regularization: header["regularization"].as_f64().unwrap_or(0.0),
            seed: header["seed"].as_u64().unwrap_or(0),
        };
        let final_loss = header["final_loss"].as_f64().unwrap_or(f64::NAN);

        let mut model = LatentFactorModel {
            dim,
            user_index: HashMap::new(),
            item_index: HashMap::new(),
            user_factors: Vec::new(),
            item_factors: Vec::new(),
            user_bias: Vec::new(),
            item_bias: Vec::new(),
            config,
            final_loss,
        };
        let mut reader = csv::Reader::from_path(with_suffix(prefix, ".embeddings.csv"))?;
        for (idx, row) in reader.records().enumerate() {
            let row = row?;
            let bad = |what: &str| Error::BadRow {
                row: idx + 1,
                message: format!("cannot parse {what}"),
            };
            let id: u64 = row[1].parse().map_err(|_| bad("id"))?;
            let bias: f64 = row[2].parse().map_err(|_| bad("bias"))?;
            let mut factors = Vec::with_capacity(dim);
            for f in 0..dim {
                factors.push(row[3 + f].parse::<f64>().map_err(|_| bad("factor"))?);
            }
            match &row[0] {
                "user" => {
                    model.user_index.insert(UserId(id), model.user_bias.len());
                    model.user_bias.push(bias);
                    model.user_factors.extend(factors);
                }
                "item" => {
                    model.item_index.insert(ItemId(id), model.item_bias.len());
                    model.item_bias.push(bias);
                    model.item_factors.extend(factors);
                }
                other => return Err(bad(&format!("kind `{other}`"))),
            }
        }
        Ok(model)
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    prefix.with_file_name(name)
}

/// Training target: watch fraction capped at 100%, rescaled to [0, 1].
fn target_of(rec: &InteractionRecord) -> f64 {
    rec.watch_fraction().min(100.0) / 100.0
}

/// Fit a latent-factor model to capped watch fractions with SGD.
/// Deterministic for a fixed seed.
pub fn train_latent_factor(
    train: &[InteractionRecord],
    config: &LatentFactorConfig,
) -> Result<LatentFactorModel> {
    if train.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if config.dim == 0 {
        return Err(Error::InvalidInput("latent dimension must be >= 1".into()));
    }

    // First-appearance order keeps indexing deterministic.
    let mut users = Vec::new();
    let mut items = Vec::new();
    {
        let mut seen_u = std::collections::HashSet::new();
        let mut seen_i = std::collections::HashSet::new();
        for r in train {
            if seen_u.insert(r.user_id) {
                users.push(r.user_id);
            }
            if seen_i.insert(r.item_id) {
                items.push(r.item_id);
            }
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut model = LatentFactorModel::new_random(users, items, config.clone(), &mut rng);
    let d = config.dim;
    let examples: Vec<(usize, usize, f64)> = train
        .iter()
        .map(|r| {
            (
                model.user_index[&r.user_id],
                model.item_index[&r.item_id],
                target_of(r),
            )
        })
        .collect();

    let lr = config.learning_rate;
    let reg = config.regularization;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut loss = f64::NAN;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &ex in &order {
            let (u, i, y) = examples[ex];
            let err = model.predict_idx(u, i) - y;
            let (us, is) = (u * d, i * d);
            for f in 0..d {
                let pu = model.user_factors[us + f];
                let qi = model.item_factors[is + f];
                model.user_factors[us + f] = pu - lr * (2.0 * err * qi + 2.0 * reg * pu);
                model.item_factors[is + f] = qi - lr * (2.0 * err * pu + 2.0 * reg * qi);
            }
            model.user_bias[u] -= lr * (2.0 * err + 2.0 * reg * model.user_bias[u]);
            model.item_bias[i] -= lr * (2.0 * err + 2.0 * reg * model.item_bias[i]);
        }
        loss = examples
            .iter()
            .map(|&(u, i, y)| {
                let e = model.predict_idx(u, i) - y;
                e * e
            })
            .sum::<f64>()
            / examples.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
    }
    model.final_loss = loss;
    Ok(model)
}
