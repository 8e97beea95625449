//! Experiment CLI: every subcommand is a thin wrapper over the library.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use recrisk::calibration::{
    default_grid, empirical_risk_curve, monotonize, select_threshold, CalibrationUser,
    ThresholdCache,
};
use recrisk::data::{self, ColumnSchema, TimeUnit};
use recrisk::error::{Error, Result};
use recrisk::experiment::{
    self, group_report, population_from_split, BetaSpec, ExperimentConfig, PopUser,
};
use recrisk::metrics::{evaluate, EvalReport};
use recrisk::plot::{render_csv, PlotSpec};
use recrisk::ranker::{
    train_latent_factor, LatentFactorConfig, LatentFactorModel, ScoreModel, ScoreTable,
};
use recrisk::selection::{
    build_safe_pool, recommend, write_recommendations_csv, SafePool, Strategy,
};
use recrisk::simulate::{generate, SimConfig};
use recrisk::UserId;

#[derive(Parser)]
#[command(
    name = "recrisk",
    about = "Risk-controlled recommendation experiments: simulate, ingest, calibrate, recommend, evaluate, sweep",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic interaction log (plus scores) from a JSON config.
    Simulate {
        /// SimConfig JSON file; omit for defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ingest a CSV log, apply k-core filtering and write train/calibration/test splits.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// ColumnSchema JSON file; omit for the canonical column names.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Watch-time and duration columns are in milliseconds.
        #[arg(long)]
        watch_time_ms: bool,
        #[arg(long)]
        k_core: Option<usize>,
        /// Comma-separated train,calibration,test fractions.
        #[arg(long, default_value = "0.70,0.15,0.15")]
        fractions: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the latent-factor baseline on the train split.
    Train {
        #[arg(long)]
        splits: PathBuf,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0.001)]
        regularization: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix; writes <prefix>.meta.json and <prefix>.embeddings.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the empirical risk curve and select thresholds for each alpha.
    Calibrate {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Comma-separated risk levels.
        #[arg(long, default_value = "0.1")]
        alpha: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit per-user recommendation sets for the test split at a threshold.
    Recommend {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Restrict output to one user.
        #[arg(long)]
        user: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate test-split recommendation sets at a threshold.
    Evaluate {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Label stored in the report's alpha column.
        #[arg(long)]
        alpha: Option<f64>,
        /// Also write a per-reporter-group breakdown.
        #[arg(long)]
        groups: bool,
        #[arg(long, default_value_t = 0.1)]
        group_threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full (alpha, beta, strategy, seed) sweep from a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override alphas (comma-separated).
        #[arg(long)]
        alpha: Option<String>,
        /// Override betas (comma-separated; "none" allowed).
        #[arg(long)]
        beta: Option<String>,
        /// Override strategies (comma-separated).
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        /// Override seeds (comma-separated).
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Descriptive analyses: reporting bins, repeat transitions, pool validity.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        watch_time_ms: bool,
        /// Betas for the safe-pool validity curve (comma-separated).
        #[arg(long, default_value = "0,10,20,30,40,50,60,70,80,90,100")]
        betas: String,
        /// Also emit table1.csv/table2.csv shaped like the published tables.
        #[arg(long)]
        paper_tables: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a line chart from a results CSV.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        group: Option<String>,
        /// Draw the y=x reference diagonal.
        #[arg(long)]
        diagonal: bool,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Shared inputs of the calibrate/recommend/evaluate stages.
#[derive(Args)]
struct PipelineArgs {
    /// splits.csv written by `ingest` (or by `simulate` + `ingest`).
    #[arg(long)]
    splits: PathBuf,
    /// Score table CSV (user_id,item_id,score).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Trained model prefix (alternative to --scores).
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "remove")]
    strategy: Strategy,
    /// Safe-pool watch filter in percent, or "none".
    #[arg(long, default_value = "none")]
    beta: BetaSpec,
    #[arg(long, default_value_t = 20)]
    k: usize,
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::InvalidInput(format!("cannot parse {what} from `{s}`")))
        })
        .collect()
}

fn load_schema(path: &Option<PathBuf>, watch_time_ms: bool) -> Result<ColumnSchema> {
    let mut schema = match path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => ColumnSchema::default(),
    };
    if watch_time_ms {
        schema.time_unit = TimeUnit::Milliseconds;
    }
    Ok(schema)
}

impl PipelineArgs {
    fn load(&self) -> Result<(Vec<PopUser>, Vec<PopUser>)> {
        let dataset = data::read_splits(&self.splits)?;
        let all_records: Vec<_> = dataset
            .train
            .iter()
            .chain(dataset.calibration.iter())
            .chain(dataset.test.iter())
            .chain(dataset.repeated_pool.iter())
            .copied()
            .collect();
        let scorer = match (&self.scores, &self.model) {
            (Some(path), None) => ScoreModel::Table(ScoreTable::from_csv(path)?),
            (None, Some(prefix)) => ScoreModel::LatentFactor(LatentFactorModel::load(prefix)?),
            _ => {
                return Err(Error::InvalidInput(
                    "pass exactly one of --scores or --model".into(),
                ))
            }
        };
        let population = population_from_split(&dataset, &all_records, &scorer)?;
        Ok((population.calibration, population.test))
    }
}

fn build_test_sets(
    test: &[PopUser],
    strategy: Strategy,
    beta: BetaSpec,
    lambda: f64,
    k: usize,
) -> Vec<recrisk::RecommendationSet> {
    test.iter()
        .map(|user| {
            let scored: Vec<recrisk::selection::ScoredItem> = user
                .candidates
                .iter()
                .map(|c| recrisk::selection::ScoredItem {
                    item_id: c.item_id,
                    score: c.score,
                })
                .collect();
            let pool = match strategy {
                Strategy::Remove => SafePool::empty(user.user_id, beta.cutoff()),
                Strategy::Replace => build_safe_pool(&user.history, beta.cutoff()),
            };
            recommend(user.user_id, &scored, &pool, lambda, k)
        })
        .collect()
}

fn test_truth(test: &[PopUser]) -> HashMap<UserId, recrisk::metrics::UserTruth> {
    test.iter()
        .map(|u| {
            (
                u.user_id,
                recrisk::metrics::UserTruth {
                    flags: u.eval_flags.clone(),
                    relevant: u.relevant.clone(),
                },
            )
        })
        .collect()
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, seed, out } => {
            let mut sim = match config {
                Some(path) => SimConfig::from_json_file(&path)?,
                None => SimConfig::default(),
            };
            if let Some(seed) = seed {
                sim.seed = seed;
            }
            std::fs::create_dir_all(&out)?;
            let output = generate(&sim)?;

            let mut w = csv::Writer::from_path(out.join("records.csv"))?;
            w.write_record([
                "user_id",
                "item_id",
                "timestamp_ms",
                "watch_time_s",
                "duration_s",
                "flagged",
            ])?;
            for r in &output.records {
                w.write_record([
                    r.user_id.to_string(),
                    r.item_id.to_string(),
                    r.timestamp.to_string(),
                    r.watch_time.to_string(),
                    r.duration.to_string(),
                    if r.flagged { "1".into() } else { "0".into() },
                ])?;
            }
            w.flush()?;
            output.scores.write_csv(&out.join("scores.csv"))?;
            std::fs::write(
                out.join("sim_config.json"),
                serde_json::to_string_pretty(&sim)?,
            )?;
            println!(
                "wrote {} interactions for {} users to {}",
                output.records.len(),
                sim.n_users,
                out.display()
            );
        }

        Command::Ingest {
            input,
            schema,
            watch_time_ms,
            k_core,
            fractions,
            seed,
            out,
        } => {
            let schema = load_schema(&schema, watch_time_ms)?;
            let fracs: Vec<f64> = parse_list(&fractions, "fraction")?;
            if fracs.len() != 3 {
                return Err(Error::InvalidInput(
                    "--fractions needs exactly three comma-separated values".into(),
                ));
            }
            let fractions = (fracs[0], fracs[1], fracs[2]);
            let ingest = data::load_interactions(&input, &schema)?;
            let mut records = ingest.records;
            if let Some(k) = k_core {
                records = data::k_core_filter(records, k);
            }
            let dataset = data::split(&records, fractions, seed)?;
            std::fs::create_dir_all(&out)?;
            let csv_path = out.join("splits.csv");
            data::write_splits(&dataset, fractions, ingest.dropped_zero_duration, &csv_path)?;
            println!(
                "train {} / calibration {} / test {} / repeated {} (dropped {} zero-duration rows)",
                dataset.train.len(),
                dataset.calibration.len(),
                dataset.test.len(),
                dataset.repeated_pool.len(),
                ingest.dropped_zero_duration
            );
        }

        Command::Train {
            splits,
            dim,
            epochs,
            learning_rate,
            regularization,
            seed,
            out,
        } => {
            let dataset = data::read_splits(&splits)?;
            let config = LatentFactorConfig {
                dim,
                epochs,
                learning_rate,
                regularization,
                seed,
            };
            let model = train_latent_factor(&dataset.train, &config)?;
            model.save(&out)?;
            println!(
                "trained on {} interactions, final loss {:.6}",
                dataset.train.len(),
                model.final_loss()
            );
        }

        Command::Calibrate {
            pipeline,
            alpha,
            out,
        } => {
            let alphas: Vec<f64> = parse_list(&alpha, "alpha")?;
            let (calibration, _) = pipeline.load()?;
            let users: Vec<CalibrationUser> = calibration
                .iter()
                .map(|u| CalibrationUser {
                    user_id: u.user_id,
                    candidates: u.candidates.clone(),
                })
                .collect();
            let pools: HashMap<UserId, SafePool> = match pipeline.strategy {
                Strategy::Remove => HashMap::new(),
                Strategy::Replace => calibration
                    .iter()
                    .map(|u| {
                        (
                            u.user_id,
                            build_safe_pool(&u.history, pipeline.beta.cutoff()),
                        )
                    })
                    .collect(),
            };
            let grid = default_grid(&users);
            let curve = monotonize(&empirical_risk_curve(
                &users,
                pipeline.k,
                pipeline.strategy,
                &pools,
                &grid,
            )?);
            std::fs::create_dir_all(&out)?;
            curve.write_csv(&out.join("risk_curve.csv"))?;

            let cache_path = out.join("lambda_cache.json");
            let mut cache = ThresholdCache::load(&cache_path);
            let split_bytes = std::fs::read(&pipeline.splits)?;
            let hash = recrisk::calibration::dataset_hash(&[&split_bytes]);
            for alpha in alphas {
                let key = ThresholdCache::key(
                    alpha,
                    pipeline.strategy,
                    &pipeline.beta.to_string(),
                    &hash,
                );
                let result = match cache.get(&key) {
                    Some(hit) => hit,
                    None => {
                        let result = select_threshold(&curve, alpha)?;
                        cache.insert(key, result.clone());
                        result
                    }
                };
                result.write_json(&out.join(format!("threshold_alpha_{alpha}.json")))?;
                println!(
                    "alpha {alpha}: lambda_hat = {}, feasible = {}",
                    result.lambda_hat, result.feasible
                );
            }
            cache.save(&cache_path)?;
        }

        Command::Recommend {
            pipeline,
            lambda,
            user,
            out,
        } => {
            let (_, test) = pipeline.load()?;
            let mut sets =
                build_test_sets(&test, pipeline.strategy, pipeline.beta, lambda, pipeline.k);
            if let Some(id) = user {
                sets.retain(|s| s.user_id == UserId(id));
            }
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)?;
            }
            write_recommendations_csv(&sets, &out)?;
            println!(
                "wrote {} recommendation sets to {}",
                sets.len(),
                out.display()
            );
        }

        Command::Evaluate {
            pipeline,
            lambda,
            alpha,
            groups,
            group_threshold,
            out,
        } => {
            let (_, test) = pipeline.load()?;
            let sets = build_test_sets(&test, pipeline.strategy, pipeline.beta, lambda, pipeline.k);
            let truth = test_truth(&test);
            let report = evaluate(&sets, &truth, pipeline.k)?;
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)?;
            }
            let alpha_label = alpha.map(|a| a.to_string()).unwrap_or_default();
            let mut w = csv::Writer::from_path(&out)?;
            w.write_record(EvalReport::csv_header())?;
            w.write_record(report.csv_row(
                &alpha_label,
                &pipeline.beta.to_string(),
                &pipeline.strategy.to_string(),
                "",
            ))?;
            w.flush()?;
            println!(
                "risk {:.4}, ndcg {:.4}, recall {:.4}, mean size {:.2} over {} users",
                report.risk,
                report.ndcg_at_k,
                report.recall_at_k,
                report.mean_set_size,
                report.n_users
            );

            if groups {
                let h_x: HashMap<UserId, f64> =
                    test.iter().map(|u| (u.user_id, u.h_x_percent)).collect();
                let (low, high) = group_report(&sets, &truth, &h_x, group_threshold, pipeline.k)?;
                let group_path = out.with_file_name(format!(
                    "{}_groups.csv",
                    out.file_stem().unwrap_or_default().to_string_lossy()
                ));
                let mut w = csv::Writer::from_path(&group_path)?;
                let mut header = vec!["group".to_string()];
                header.extend(EvalReport::csv_header().iter().map(|s| s.to_string()));
                w.write_record(&header)?;
                for (name, rep) in [("low", &low), ("high", &high)] {
                    let mut row = vec![name.to_string()];
                    row.extend(rep.csv_row(
                        &alpha_label,
                        &pipeline.beta.to_string(),
                        &pipeline.strategy.to_string(),
                        "",
                    ));
                    w.write_record(&row)?;
                }
                w.flush()?;
            }
        }

        Command::Sweep {
            config,
            alpha,
            beta,
            strategy,
            k,
            seed,
            out,
        } => {
            let mut experiment_config = ExperimentConfig::from_json_file(&config)?;
            if let Some(raw) = alpha {
                experiment_config.alphas = parse_list(&raw, "alpha")?;
            }
            if let Some(raw) = beta {
                experiment_config.betas = parse_list(&raw, "beta")?;
            }
            if let Some(raw) = strategy {
                experiment_config.strategies = parse_list(&raw, "strategy")?;
            }
            if let Some(k) = k {
                experiment_config.k = k;
            }
            if let Some(raw) = seed {
                experiment_config.seeds = parse_list(&raw, "seed")?;
            }
            if let Some(out) = out {
                experiment_config.out_dir = out;
            }
            let outcome = experiment::run_sweep(&experiment_config)?;
            let feasible = outcome.rows.iter().filter(|r| r.feasible).count();
            println!(
                "{} rows ({} feasible), {} cache hits -> {}",
                outcome.rows.len(),
                feasible,
                outcome.cache_hits,
                outcome.out_dir.display()
            );
        }

        Command::Analyze {
            input,
            schema,
            watch_time_ms,
            betas,
            paper_tables,
            out,
        } => {
            let schema = load_schema(&schema, watch_time_ms)?;
            let betas: Vec<f64> = parse_list(&betas, "beta")?;
            let ingest = data::load_interactions(&input, &schema)?;
            recrisk::analyze::write_analysis(&ingest.records, &betas, &out, paper_tables)?;
            println!(
                "wrote analysis of {} records to {}",
                ingest.records.len(),
                out.display()
            );
        }

        Command::Plot {
            results,
            x,
            y,
            group,
            diagonal,
            title,
            out,
        } => {
            let spec = PlotSpec {
                title: title.unwrap_or_else(|| format!("{y} vs {x}")),
                x,
                y,
                group,
                diagonal,
            };
            render_csv(&results, &spec, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
