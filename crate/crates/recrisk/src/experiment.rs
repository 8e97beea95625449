//! End-to-end experiment harness.
//!
//! A sweep runs the full pipeline (build or load a dataset, score
//! candidates, calibrate a threshold per risk level, recommend, evaluate)
//! over the cartesian product of (alpha, beta, strategy, seed), then writes
//! `results.csv`, per-cell aggregates (`summary.csv`), a per-reporter-group
//! breakdown (`groups.csv`), default SVG charts and a `meta.json` echoing
//! the configuration. Calibrated thresholds are cached on disk keyed by
//! (alpha, strategy, beta, dataset-hash), so repeated runs skip
//! recalibration.
//!
//! Two dataset modes exist. Simulated mode regenerates the population from
//! a [`SimConfig`] per seed, splits users into disjoint calibration and
//! test halves, and evaluates replacements against the generator's
//! second-view ground truth. CSV mode ingests a log, splits interactions
//! 70/15/15, and treats an item as unwanted at evaluation when the user
//! flagged it on any logged view, including views after calibration; that
//! is how re-shown replacements can be revealed as unwanted.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::{
    dataset_hash, default_grid, empirical_risk_curve, monotonize, select_threshold,
    CalibrationUser, ScoredCandidate, ThresholdCache, ThresholdResult,
};
use crate::data::{
    k_core_filter, load_interactions, split, ColumnSchema, DatasetSplit, InteractionRecord, ItemId,
    UserId,
};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport, UserTruth};
use crate::plot::{render_csv, PlotSpec};
use crate::ranker::{train_latent_factor, LatentFactorConfig, ScoreModel, ScoreTable};
use crate::selection::{
    build_safe_pool, recommend, RecommendationSet, SafePool, ScoredItem, Strategy,
};
use crate::simulate::{build_scenarios, generate, SimConfig};

/// Safe-pool watch filter: a percent cutoff or no filtering at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BetaRepr", into = "BetaRepr")]
pub enum BetaSpec {
    None,
    Percent(f64),
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(untagged)]
enum BetaRepr {
    Num(f64),
    Str(String),
}

impl TryFrom<BetaRepr> for BetaSpec {
    type Error = String;
    fn try_from(repr: BetaRepr) -> std::result::Result<Self, String> {
        match repr {
            BetaRepr::Num(v) => Ok(BetaSpec::Percent(v)),
            BetaRepr::Str(s) if s.eq_ignore_ascii_case("none") => Ok(BetaSpec::None),
            BetaRepr::Str(s) => s
                .parse::<f64>()
                .map(BetaSpec::Percent)
                .map_err(|_| format!("beta must be a number or \"none\", got `{s}`")),
        }
    }
}

impl From<BetaSpec> for BetaRepr {
    fn from(beta: BetaSpec) -> Self {
        match beta {
            BetaSpec::None => BetaRepr::Str("none".into()),
            BetaSpec::Percent(v) => BetaRepr::Num(v),
        }
    }
}

impl BetaSpec {
    /// Threshold handed to the pool builder; "none" admits every
    /// never-flagged item.
    pub fn cutoff(&self) -> f64 {
        match self {
            BetaSpec::None => f64::NEG_INFINITY,
            BetaSpec::Percent(v) => *v,
        }
    }
}

impl std::fmt::Display for BetaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BetaSpec::None => write!(f, "none"),
            BetaSpec::Percent(v) => write!(f, "{v}"),
        }
    }
}

impl std::str::FromStr for BetaSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        BetaSpec::try_from(BetaRepr::Str(s.to_string()))
    }
}

/// Where the interaction data comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DatasetSource {
    Sim {
        config: SimConfig,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: Option<ColumnSchema>,
        #[serde(default)]
        k_core: Option<usize>,
        #[serde(default = "default_fractions")]
        fractions: (f64, f64, f64),
    },
}

fn default_fractions() -> (f64, f64, f64) {
    (0.70, 0.15, 0.15)
}

/// Where candidate scores come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScorerSpec {
    /// The simulator's own score table (simulated datasets only).
    SimScores,
    /// Precomputed scores from a `user_id,item_id,score` CSV.
    Table { path: PathBuf },
    /// Train the latent-factor baseline on the train split.
    LatentFactor {
        #[serde(default)]
        config: LatentFactorConfig,
    },
}

/// Full sweep configuration; reads from JSON with CLI overrides on top.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_scorer")]
    pub scorer: ScorerSpec,
    #[serde(default = "default_k")]
    pub k: usize,
    pub alphas: Vec<f64>,
    #[serde(default = "default_betas")]
    pub betas: Vec<BetaSpec>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Simulated mode: share of each user's first views forming the history.
    #[serde(default = "default_history_fraction")]
    pub history_fraction: f64,
    /// Simulated mode: share of users assigned to calibration.
    #[serde(default = "default_history_fraction")]
    pub calibration_user_fraction: f64,
    /// Reporting-rate split (percent) between low and high reporters.
    #[serde(default = "default_group_threshold")]
    pub group_threshold_percent: f64,
    pub out_dir: PathBuf,
}

fn default_scorer() -> ScorerSpec {
    ScorerSpec::SimScores
}
fn default_k() -> usize {
    20
}
fn default_betas() -> Vec<BetaSpec> {
    vec![BetaSpec::None]
}
fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::Remove, Strategy::Replace]
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_history_fraction() -> f64 {
    0.5
}
fn default_group_threshold() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty()
            || self.betas.is_empty()
            || self.strategies.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::InvalidInput(
                "alphas, betas, strategies and seeds must all be non-empty".into(),
            ));
        }
        if self
            .alphas
            .iter()
            .any(|a| !(0.0..1.0).contains(a) || *a == 0.0)
        {
            return Err(Error::InvalidInput("alpha values must be in (0, 1)".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.history_fraction)
            || !(0.0..1.0).contains(&self.calibration_user_fraction)
            || self.calibration_user_fraction == 0.0
        {
            return Err(Error::InvalidInput(
                "history_fraction must be in [0, 1] and calibration_user_fraction in (0, 1)".into(),
            ));
        }
        if let DatasetSource::Sim { config } = &self.dataset {
            config.validate()?;
        }
        if matches!(self.dataset, DatasetSource::Sim { .. })
            && !matches!(self.scorer, ScorerSpec::SimScores)
        {
            return Err(Error::InvalidInput(
                "simulated datasets use the generator's scores (scorer type sim_scores)".into(),
            ));
        }
        if matches!(self.dataset, DatasetSource::Csv { .. })
            && matches!(self.scorer, ScorerSpec::SimScores)
        {
            return Err(Error::InvalidInput(
                "csv datasets need a score table or a latent-factor scorer".into(),
            ));
        }
        Ok(())
    }
}

/// One user as the sweep sees them.
#[derive(Debug, Clone)]
pub struct PopUser {
    pub user_id: UserId,
    pub candidates: Vec<ScoredCandidate>,
    /// Interactions visible to the safe-pool builder.
    pub history: Vec<InteractionRecord>,
    /// Flag revealed at evaluation time, per item (candidates and history).
    pub eval_flags: HashMap<ItemId, bool>,
    /// Held-out positives (candidates with positive watch time).
    pub relevant: HashSet<ItemId>,
    pub h_x_percent: f64,
}

/// Calibration- and test-side users for one seed.
#[derive(Debug, Clone)]
pub struct Population {
    pub calibration: Vec<PopUser>,
    pub test: Vec<PopUser>,
    /// Stable digest identifying (dataset spec, seed) for the cache.
    pub hash: String,
}

fn sim_population(
    sim: &SimConfig,
    seed: u64,
    history_fraction: f64,
    calibration_user_fraction: f64,
) -> Result<Population> {
    let mut config = sim.clone();
    config.seed = seed;
    let output = generate(&config)?;
    let scenarios = build_scenarios(&output, history_fraction);

    // Disjoint calibration/test halves over users, deterministic in seed.
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..scenarios.len()).collect();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 0x5EED_CAFE);
    order.shuffle(&mut rng);
    let n_cal = ((scenarios.len() as f64) * calibration_user_fraction).round() as usize;
    let calibration_idx: HashSet<usize> = order[..n_cal.min(order.len())].iter().copied().collect();

    let mut calibration = Vec::new();
    let mut test = Vec::new();
    for (idx, scenario) in scenarios.into_iter().enumerate() {
        let mut eval_flags: HashMap<ItemId, bool> = scenario
            .candidates
            .iter()
            .map(|c| (c.item_id, c.flagged))
            .collect();
        for (item, reflag) in &scenario.reflag {
            eval_flags.insert(*item, reflag.realized);
        }
        let relevant: HashSet<ItemId> = scenario
            .candidates
            .iter()
            .filter(|c| c.watch_fraction > 0.0)
            .map(|c| c.item_id)
            .collect();
        let user = PopUser {
            user_id: scenario.user_id,
            candidates: scenario
                .candidates
                .iter()
                .map(|c| ScoredCandidate {
                    item_id: c.item_id,
                    score: c.score,
                    flagged: c.flagged,
                })
                .collect(),
            history: scenario.history,
            eval_flags,
            relevant,
            h_x_percent: scenario.h_x_percent,
        };
        if calibration_idx.contains(&idx) {
            calibration.push(user);
        } else {
            test.push(user);
        }
    }

    let hash = dataset_hash(&[serde_json::to_string(&config)?.as_bytes(), b"sim"]);
    Ok(Population {
        calibration,
        test,
        hash,
    })
}

fn scorer_from_spec(spec: &ScorerSpec, train: &[InteractionRecord]) -> Result<ScoreModel> {
    match spec {
        ScorerSpec::SimScores => Err(Error::InvalidInput(
            "sim_scores scorer is only valid with simulated datasets".into(),
        )),
        ScorerSpec::Table { path } => Ok(ScoreModel::Table(ScoreTable::from_csv(path)?)),
        ScorerSpec::LatentFactor { config } => Ok(ScoreModel::LatentFactor(train_latent_factor(
            train, config,
        )?)),
    }
}

/// Build calibration- and test-side users from an interaction-level split.
///
/// Calibration users' pools come from train + repeated views only (their
/// calibration candidates are being judged, so they cannot also sit in the
/// pool); test users' pools additionally see the calibration interactions.
/// Evaluation flags are any-view flags over the user's full log.
pub fn population_from_split(
    dataset: &DatasetSplit,
    all_records: &[InteractionRecord],
    scorer: &ScoreModel,
) -> Result<Population> {
    let mut by_user: HashMap<UserId, Vec<&InteractionRecord>> = HashMap::new();
    for r in all_records {
        by_user.entry(r.user_id).or_default().push(r);
    }
    let mut eval_flags_by_user: HashMap<UserId, HashMap<ItemId, bool>> = HashMap::new();
    let mut h_x: HashMap<UserId, f64> = HashMap::new();
    for (user, views) in &by_user {
        let mut flags: HashMap<ItemId, bool> = HashMap::new();
        for r in views {
            *flags.entry(r.item_id).or_insert(false) |= r.flagged;
        }
        eval_flags_by_user.insert(*user, flags);
        let flagged_views = views.iter().filter(|r| r.flagged).count();
        h_x.insert(
            *user,
            100.0 * flagged_views as f64 / views.len().max(1) as f64,
        );
    }

    let group_records = |records: &[InteractionRecord]| {
        let mut map: HashMap<UserId, Vec<InteractionRecord>> = HashMap::new();
        for r in records {
            map.entry(r.user_id).or_default().push(*r);
        }
        map
    };
    let train_by_user = group_records(&dataset.train);
    let cal_by_user = group_records(&dataset.calibration);
    let test_by_user = group_records(&dataset.test);
    let repeated_by_user = group_records(&dataset.repeated_pool);

    let build_users = |candidate_map: &HashMap<UserId, Vec<InteractionRecord>>,
                       include_calibration_history: bool|
     -> Result<Vec<PopUser>> {
        let mut users: Vec<UserId> = candidate_map.keys().copied().collect();
        users.sort();
        let empty: Vec<InteractionRecord> = Vec::new();
        users
            .into_iter()
            .map(|user| {
                // Items under judgement cannot double as pool entries; the
                // repeated pool only excludes test items globally, so drop
                // this user's candidate items from their history too.
                let candidate_items: HashSet<ItemId> =
                    candidate_map[&user].iter().map(|r| r.item_id).collect();
                let mut history: Vec<InteractionRecord> =
                    train_by_user.get(&user).unwrap_or(&empty).clone();
                if include_calibration_history {
                    history.extend(cal_by_user.get(&user).cloned().unwrap_or_default());
                }
                history.extend(repeated_by_user.get(&user).cloned().unwrap_or_default());
                history.retain(|r| !candidate_items.contains(&r.item_id));
                history.sort_by_key(|r| (r.timestamp, r.item_id));

                let mut candidates = Vec::new();
                for rec in &candidate_map[&user] {
                    candidates.push(ScoredCandidate {
                        item_id: rec.item_id,
                        score: scorer.score(user, rec.item_id)?,
                        flagged: rec.flagged,
                    });
                }
                let relevant: HashSet<ItemId> = candidate_map[&user]
                    .iter()
                    .filter(|r| r.watch_time > 0.0)
                    .map(|r| r.item_id)
                    .collect();
                Ok(PopUser {
                    user_id: user,
                    candidates,
                    history,
                    eval_flags: eval_flags_by_user.get(&user).cloned().unwrap_or_default(),
                    relevant,
                    h_x_percent: h_x.get(&user).copied().unwrap_or(0.0),
                })
            })
            .collect()
    };

    Ok(Population {
        calibration: build_users(&cal_by_user, false)?,
        test: build_users(&test_by_user, true)?,
        hash: String::new(),
    })
}

fn csv_population(
    path: &Path,
    schema: &Option<ColumnSchema>,
    k_core: Option<usize>,
    fractions: (f64, f64, f64),
    seed: u64,
    scorer_spec: &ScorerSpec,
) -> Result<Population> {
    let schema = schema.clone().unwrap_or_default();
    let ingest = load_interactions(path, &schema)?;
    let mut records = ingest.records;
    if let Some(k) = k_core {
        records = k_core_filter(records, k);
    }
    if records.is_empty() {
        return Err(Error::InvalidInput(
            "no records survive ingestion and k-core filtering".into(),
        ));
    }
    let dataset = split(&records, fractions, seed)?;
    let scorer = scorer_from_spec(scorer_spec, &dataset.train)?;
    let mut population = population_from_split(&dataset, &records, &scorer)?;
    let bytes = std::fs::read(path)?;
    population.hash = dataset_hash(&[
        &bytes,
        format!("{fractions:?}|kcore={k_core:?}|seed={seed}").as_bytes(),
    ]);
    Ok(population)
}

/// Build the per-seed population for a dataset source.
pub fn build_population(config: &ExperimentConfig, seed: u64) -> Result<Population> {
    match &config.dataset {
        DatasetSource::Sim { config: sim } => sim_population(
            sim,
            seed,
            config.history_fraction,
            config.calibration_user_fraction,
        ),
        DatasetSource::Csv {
            path,
            schema,
            k_core,
            fractions,
        } => csv_population(path, schema, *k_core, *fractions, seed, &config.scorer),
    }
}

fn pools_for(users: &[PopUser], beta: f64) -> HashMap<UserId, SafePool> {
    users
        .iter()
        .map(|u| (u.user_id, build_safe_pool(&u.history, beta)))
        .collect()
}

fn scored_items(user: &PopUser) -> Vec<ScoredItem> {
    user.candidates
        .iter()
        .map(|c| ScoredItem {
            item_id: c.item_id,
            score: c.score,
        })
        .collect()
}

fn build_sets(
    users: &[PopUser],
    pools: &HashMap<UserId, SafePool>,
    strategy: Strategy,
    lambda: f64,
    k: usize,
) -> Vec<RecommendationSet> {
    users
        .iter()
        .map(|u| {
            let empty = SafePool::empty(u.user_id, f64::NEG_INFINITY);
            let pool = match strategy {
                Strategy::Remove => &empty,
                Strategy::Replace => pools.get(&u.user_id).unwrap_or(&empty),
            };
            recommend(u.user_id, &scored_items(u), pool, lambda, k)
        })
        .collect()
}

fn truth_map(users: &[PopUser]) -> HashMap<UserId, UserTruth> {
    users
        .iter()
        .map(|u| {
            (
                u.user_id,
                UserTruth {
                    flags: u.eval_flags.clone(),
                    relevant: u.relevant.clone(),
                },
            )
        })
        .collect()
}

/// Split per-user sets by reporting rate and evaluate each side.
pub fn group_report(
    sets: &[RecommendationSet],
    truth: &HashMap<UserId, UserTruth>,
    h_x_percent: &HashMap<UserId, f64>,
    threshold_percent: f64,
    k: usize,
) -> Result<(EvalReport, EvalReport)> {
    let mut low = Vec::new();
    let mut high = Vec::new();
    for set in sets {
        let rate = h_x_percent.get(&set.user_id).copied().unwrap_or(0.0);
        if rate < threshold_percent {
            low.push(set.clone());
        } else {
            high.push(set.clone());
        }
    }
    Ok((evaluate(&low, truth, k)?, evaluate(&high, truth, k)?))
}

/// One results row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: BetaSpec,
    pub strategy: Strategy,
    pub seed: u64,
    pub feasible: bool,
    pub lambda_hat: Option<f64>,
    pub report: Option<EvalReport>,
    pub baseline_risk: f64,
    pub target_reduction: Option<f64>,
    pub achieved_reduction: Option<f64>,
}

/// One `groups.csv` row.
#[derive(Debug, Clone)]
pub struct GroupRow {
    pub alpha: f64,
    pub beta: BetaSpec,
    pub strategy: Strategy,
    pub seed: u64,
    pub group: &'static str,
    pub report: EvalReport,
    pub baseline_risk: f64,
    pub achieved_reduction: Option<f64>,
}

/// Everything a sweep produced.
#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub group_rows: Vec<GroupRow>,
    pub cache_hits: usize,
    pub out_dir: PathBuf,
}

fn reduction(risk: f64, baseline: f64) -> Option<f64> {
    (baseline > 0.0).then(|| 1.0 - risk / baseline)
}

/// Run the full sweep and write every output file.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;
    let cache_path = config.out_dir.join("lambda_cache.json");
    let mut cache = ThresholdCache::load(&cache_path);

    let mut rows: Vec<SweepRow> = Vec::new();
    let mut group_rows: Vec<GroupRow> = Vec::new();

    for &seed in &config.seeds {
        let population = build_population(config, seed)?;
        if population.calibration.is_empty() || population.test.is_empty() {
            return Err(Error::InvalidInput(
                "population has no calibration or no test users".into(),
            ));
        }
        let calibration_users: Vec<CalibrationUser> = population
            .calibration
            .iter()
            .map(|u| CalibrationUser {
                user_id: u.user_id,
                candidates: u.candidates.clone(),
            })
            .collect();
        let truth = truth_map(&population.test);
        let h_x: HashMap<UserId, f64> = population
            .test
            .iter()
            .map(|u| (u.user_id, u.h_x_percent))
            .collect();

        // No-filter baseline: plain top-k, shared by every cell of the seed.
        let no_pools = HashMap::new();
        let baseline_sets = build_sets(
            &population.test,
            &no_pools,
            Strategy::Remove,
            f64::NEG_INFINITY,
            config.k,
        );
        let baseline = evaluate(&baseline_sets, &truth, config.k)?;
        let (baseline_low, baseline_high) = group_report(
            &baseline_sets,
            &truth,
            &h_x,
            config.group_threshold_percent,
            config.k,
        )?;

        for &strategy in &config.strategies {
            for &beta in &config.betas {
                let calibration_pools = match strategy {
                    Strategy::Remove => HashMap::new(),
                    Strategy::Replace => pools_for(&population.calibration, beta.cutoff()),
                };
                let test_pools = match strategy {
                    Strategy::Remove => HashMap::new(),
                    Strategy::Replace => pools_for(&population.test, beta.cutoff()),
                };

                // The curve is the expensive part; build it lazily so fully
                // cached cells skip it.
                let mut curve = None;
                for &alpha in &config.alphas {
                    let key =
                        ThresholdCache::key(alpha, strategy, &beta.to_string(), &population.hash);
                    let threshold: Option<ThresholdResult> = match cache.get(&key) {
                        Some(hit) => Some(hit),
                        None => {
                            if curve.is_none() {
                                let grid = default_grid(&calibration_users);
                                curve = Some(monotonize(&empirical_risk_curve(
                                    &calibration_users,
                                    config.k,
                                    strategy,
                                    &calibration_pools,
                                    &grid,
                                )?));
                            }
                            match select_threshold(curve.as_ref().unwrap(), alpha) {
                                Ok(result) => {
                                    cache.insert(key, result.clone());
                                    Some(result)
                                }
                                Err(Error::AlphaTooSmall { .. }) => None,
                                Err(other) => return Err(other),
                            }
                        }
                    };

                    let Some(threshold) = threshold.filter(|t| t.feasible) else {
                        rows.push(SweepRow {
                            alpha,
                            beta,
                            strategy,
                            seed,
                            feasible: false,
                            lambda_hat: None,
                            report: None,
                            baseline_risk: baseline.risk,
                            target_reduction: reduction(alpha, baseline.risk).map(|r| r.max(0.0)),
                            achieved_reduction: None,
                        });
                        continue;
                    };

                    let sets = build_sets(
                        &population.test,
                        &test_pools,
                        strategy,
                        threshold.lambda_hat,
                        config.k,
                    );
                    let report = evaluate(&sets, &truth, config.k)?;
                    let (low, high) = group_report(
                        &sets,
                        &truth,
                        &h_x,
                        config.group_threshold_percent,
                        config.k,
                    )?;
                    group_rows.push(GroupRow {
                        alpha,
                        beta,
                        strategy,
                        seed,
                        group: "low",
                        baseline_risk: baseline_low.risk,
                        achieved_reduction: reduction(low.risk, baseline_low.risk),
                        report: low,
                    });
                    group_rows.push(GroupRow {
                        alpha,
                        beta,
                        strategy,
                        seed,
                        group: "high",
                        baseline_risk: baseline_high.risk,
                        achieved_reduction: reduction(high.risk, baseline_high.risk),
                        report: high,
                    });
                    rows.push(SweepRow {
                        alpha,
                        beta,
                        strategy,
                        seed,
                        feasible: true,
                        lambda_hat: Some(threshold.lambda_hat),
                        achieved_reduction: reduction(report.risk, baseline.risk),
                        target_reduction: reduction(alpha, baseline.risk).map(|r| r.max(0.0)),
                        baseline_risk: baseline.risk,
                        report: Some(report),
                    });
                }
            }
        }
    }

    rows.sort_by(|a, b| {
        a.alpha
            .partial_cmp(&b.alpha)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.beta.to_string().cmp(&b.beta.to_string()))
            .then(a.strategy.to_string().cmp(&b.strategy.to_string()))
            .then(a.seed.cmp(&b.seed))
    });
    group_rows.sort_by(|a, b| {
        a.alpha
            .partial_cmp(&b.alpha)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.beta.to_string().cmp(&b.beta.to_string()))
            .then(a.strategy.to_string().cmp(&b.strategy.to_string()))
            .then(a.seed.cmp(&b.seed))
            .then(a.group.cmp(b.group))
    });

    write_results_csv(&rows, config, &config.out_dir.join("results.csv"))?;
    write_summary_csv(&rows, &config.out_dir.join("summary.csv"))?;
    write_groups_csv(&group_rows, config, &config.out_dir.join("groups.csv"))?;
    write_meta(config, &config.out_dir.join("meta.json"))?;
    cache.save(&cache_path)?;
    write_default_plots(config)?;

    Ok(SweepOutcome {
        rows,
        group_rows,
        cache_hits: cache.hits(),
        out_dir: config.out_dir.clone(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_results_csv(rows: &[SweepRow], config: &ExperimentConfig, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "alpha",
        "beta",
        "strategy",
        "cell",
        "k",
        "seed",
        "feasible",
        "lambda_hat",
        "risk",
        "ndcg",
        "recall",
        "mean_set_size",
        "repeated_fraction",
        "n_users",
        "baseline_risk",
        "target_reduction",
        "achieved_reduction",
    ])?;
    for row in rows {
        let (risk, ndcg, recall, size, repeated, n_users) = match &row.report {
            Some(r) => (
                r.risk.to_string(),
                r.ndcg_at_k.to_string(),
                r.recall_at_k.to_string(),
                r.mean_set_size.to_string(),
                r.repeated_fraction.to_string(),
                r.n_users.to_string(),
            ),
            None => Default::default(),
        };
        w.write_record([
            row.alpha.to_string(),
            row.beta.to_string(),
            row.strategy.to_string(),
            format!("{}|beta={}", row.strategy, row.beta),
            config.k.to_string(),
            row.seed.to_string(),
            row.feasible.to_string(),
            opt(row.lambda_hat),
            risk,
            ndcg,
            recall,
            size,
            repeated,
            n_users,
            row.baseline_risk.to_string(),
            opt(row.target_reduction),
            opt(row.achieved_reduction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    // Sample (n-1) convention; a single seed reports zero spread.
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

fn write_summary_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    use std::collections::BTreeMap;
    // (alpha-bits, beta, strategy) -> rows
    let mut cells: BTreeMap<(u64, String, String), Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        cells
            .entry((
                row.alpha.to_bits(),
                row.beta.to_string(),
                row.strategy.to_string(),
            ))
            .or_default()
            .push(row);
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "alpha",
        "beta",
        "strategy",
        "n_seeds",
        "n_feasible",
        "risk_mean",
        "risk_std",
        "ndcg_mean",
        "ndcg_std",
        "recall_mean",
        "recall_std",
        "mean_set_size_mean",
        "mean_set_size_std",
        "repeated_fraction_mean",
        "repeated_fraction_std",
        "achieved_reduction_mean",
        "achieved_reduction_std",
    ])?;
    for ((alpha_bits, beta, strategy), cell_rows) in cells {
        let feasible: Vec<&&SweepRow> = cell_rows.iter().filter(|r| r.feasible).collect();
        let collect =
            |f: &dyn Fn(&SweepRow) -> f64| -> Vec<f64> { feasible.iter().map(|r| f(r)).collect() };
        let risks = collect(&|r| r.report.as_ref().unwrap().risk);
        let ndcgs = collect(&|r| r.report.as_ref().unwrap().ndcg_at_k);
        let recalls = collect(&|r| r.report.as_ref().unwrap().recall_at_k);
        let sizes = collect(&|r| r.report.as_ref().unwrap().mean_set_size);
        let repeats = collect(&|r| r.report.as_ref().unwrap().repeated_fraction);
        let reductions: Vec<f64> = feasible
            .iter()
            .filter_map(|r| r.achieved_reduction)
            .collect();
        let stats = [
            mean_std(&risks),
            mean_std(&ndcgs),
            mean_std(&recalls),
            mean_std(&sizes),
            mean_std(&repeats),
            mean_std(&reductions),
        ];
        let mut record = vec![
            f64::from_bits(alpha_bits).to_string(),
            beta,
            strategy,
            cell_rows.len().to_string(),
            feasible.len().to_string(),
        ];
        for (mean, std) in stats {
            record.push(if mean.is_nan() {
                String::new()
            } else {
                mean.to_string()
            });
            record.push(if std.is_nan() {
                String::new()
            } else {
                std.to_string()
            });
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn write_groups_csv(rows: &[GroupRow], config: &ExperimentConfig, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "alpha",
        "beta",
        "strategy",
        "seed",
        "group",
        "k",
        "n_users",
        "risk",
        "ndcg",
        "recall",
        "mean_set_size",
        "repeated_fraction",
        "baseline_risk",
        "achieved_reduction",
    ])?;
    for row in rows {
        w.write_record([
            row.alpha.to_string(),
            row.beta.to_string(),
            row.strategy.to_string(),
            row.seed.to_string(),
            row.group.to_string(),
            config.k.to_string(),
            row.report.n_users.to_string(),
            row.report.risk.to_string(),
            row.report.ndcg_at_k.to_string(),
            row.report.recall_at_k.to_string(),
            row.report.mean_set_size.to_string(),
            row.report.repeated_fraction.to_string(),
            row.baseline_risk.to_string(),
            opt(row.achieved_reduction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_meta(config: &ExperimentConfig, path: &Path) -> Result<()> {
    let config_json = serde_json::to_value(config)?;
    let hash = dataset_hash(&[serde_json::to_string(config)?.as_bytes()]);
    let meta = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "config": config_json,
        "decisions": {
            "empty_set_risk": "risk of an empty recommendation set is defined as 0",
            "interleaving": "fresh items (ranker order) fill slots before safe replacements (watch-fraction order)",
            "calibration_replacements": "replacement items enter calibration sets at their historical never-flagged status",
            "evaluation_flags": "an item counts as unwanted at evaluation when flagged on any logged view (csv mode) or by the generator's re-show draw (sim mode)",
            "relevance_labels": "held-out positives are candidate interactions with positive watch time",
            "target_reduction": "target_reduction = max(0, 1 - alpha / baseline_risk); achieved_reduction = 1 - risk / baseline_risk",
            "aggregation": "per-user metrics averaged with equal weight; spreads use the sample (n-1) convention",
        },
    });
    std::fs::write(path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn write_default_plots(config: &ExperimentConfig) -> Result<()> {
    let results = config.out_dir.join("results.csv");
    let plots = config.out_dir.join("plots");
    let specs = [
        (
            "reduction.svg",
            "target_reduction",
            "achieved_reduction",
            true,
            "Achieved vs target risk reduction",
        ),
        (
            "risk_vs_alpha.svg",
            "alpha",
            "risk",
            true,
            "Test risk vs alpha",
        ),
        ("ndcg_vs_alpha.svg", "alpha", "ndcg", false, "nDCG vs alpha"),
        (
            "set_size_vs_alpha.svg",
            "alpha",
            "mean_set_size",
            false,
            "Set size vs alpha",
        ),
        (
            "repeated_vs_alpha.svg",
            "alpha",
            "repeated_fraction",
            false,
            "Replacement fraction vs alpha",
        ),
    ];
    for (file, x, y, diagonal, title) in specs {
        let spec = PlotSpec {
            x: x.into(),
            y: y.into(),
            group: Some("cell".into()),
            diagonal,
            title: title.into(),
        };
        match render_csv(&results, &spec, &plots.join(file)) {
            Ok(()) => {}
            // A sweep where every cell is infeasible has nothing to plot.
            Err(Error::InvalidInput(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
