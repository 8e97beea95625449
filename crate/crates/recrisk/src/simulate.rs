//! Synthetic interaction generator with known ground truth.
//!
//! The generative model follows the behavior observed on short-video
//! platforms: watch fractions are zero-inflated (many items are skipped
//! outright) with a log-normal body, a point mass at exactly 100% (items
//! watched in full) and a small tail above 100% (users lingering past the
//! end). Flags are sparse and split users into a low- and a high-reporting
//! group. Items seen a second time are re-flagged only when the first view
//! was short: below the cutoff `second_view_watch_cutoff` the re-flag
//! probability is `second_view_flag_prob`, above it exactly zero. Safe
//! pools filtered at beta >= cutoff therefore carry zero re-flag risk by
//! construction, which is what makes the replacement guarantee testable
//! against an exact oracle.
//!
//! Per-pair flag probabilities differ by group on purpose: low reporters
//! flag in proportion to how far off the item is (nothing is irreducible),
//! while high reporters keep a habitual floor of reporting even on their
//! best-matched items. Scores encode the pair's badness signal (not the
//! group), so a global threshold trims every user's risky items at the same
//! score level. This reproduces the observed pattern that a shared calibrated
//! threshold serves low reporters more conservatively than high reporters.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, LogNormal, Normal, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{InteractionRecord, ItemId, UserId};
use crate::error::{Error, Result};
use crate::ranker::ScoreTable;
use crate::selection::{build_safe_pool, recommend, Provenance, ScoredItem, Strategy};

/// Distribution family for the positive watch-fraction body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WatchBody {
    LogNormal,
    /// Weibull(shape = 1/sigma, scale = exp(mu)); same two parameters
    /// reinterpreted.
    Weibull,
}

/// What the ranker score encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Score decreases with the pair's flag propensity; thresholding on it
    /// is meaningful for risk control.
    NonFlagPropensity,
    /// Score tracks realized engagement (capped watch fraction), which is
    /// deliberately uninformative about flags.
    Engagement,
}

/// Reporter group of a simulated user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReporterGroup {
    Low,
    High,
}

/// Generative parameters of the synthetic behavioral model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub interactions_per_user: usize,
    /// First-view flag rate of the low-reporting group.
    pub flag_prob_low: f64,
    /// First-view flag rate of the high-reporting group.
    pub flag_prob_high: f64,
    pub frac_high_reporters: f64,
    /// Mass of interactions with zero watch time.
    pub zero_watch_prob: f64,
    /// Log-space location of the watch-fraction body (percent units).
    pub watch_lognormal_mu: f64,
    pub watch_lognormal_sigma: f64,
    /// Mass of interactions watching past the item's end (fraction > 100).
    pub overlong_prob: f64,
    /// Probability of flagging a re-shown item whose first view was below
    /// the cutoff; zero above it.
    pub second_view_flag_prob: f64,
    /// Watch-fraction cutoff (percent) of the second-view flag rule.
    pub second_view_watch_cutoff: f64,
    /// Probability that an unflagged first view is followed by a logged
    /// second view.
    pub repeat_prob: f64,
    pub score_noise_sigma: f64,
    pub watch_body: WatchBody,
    pub score_mode: ScoreMode,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_users: 500,
            n_items: 5000,
            interactions_per_user: 40,
            flag_prob_low: 0.02,
            flag_prob_high: 0.2,
            frac_high_reporters: 0.3,
            zero_watch_prob: 0.21,
            watch_lognormal_mu: 3.4,
            watch_lognormal_sigma: 0.9,
            overlong_prob: 0.05,
            second_view_flag_prob: 0.0,
            second_view_watch_cutoff: 30.0,
            repeat_prob: 0.15,
            score_noise_sigma: 0.05,
            watch_body: WatchBody::LogNormal,
            score_mode: ScoreMode::NonFlagPropensity,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("flag_prob_low", self.flag_prob_low),
            ("flag_prob_high", self.flag_prob_high),
            ("frac_high_reporters", self.frac_high_reporters),
            ("zero_watch_prob", self.zero_watch_prob),
            ("overlong_prob", self.overlong_prob),
            ("second_view_flag_prob", self.second_view_flag_prob),
            ("repeat_prob", self.repeat_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be in [0, 1], got {p}"
                )));
            }
        }
        if self.zero_watch_prob + self.overlong_prob > 1.0 {
            return Err(Error::InvalidInput(
                "zero_watch_prob + overlong_prob must not exceed 1".into(),
            ));
        }
        if self.watch_lognormal_sigma <= 0.0 {
            return Err(Error::InvalidInput(
                "watch_lognormal_sigma must be > 0".into(),
            ));
        }
        if self.score_noise_sigma < 0.0 {
            return Err(Error::InvalidInput("score_noise_sigma must be >= 0".into()));
        }
        if self.n_users == 0 || self.n_items == 0 || self.interactions_per_user == 0 {
            return Err(Error::InvalidInput(
                "n_users, n_items and interactions_per_user must be >= 1".into(),
            ));
        }
        if self.interactions_per_user > self.n_items {
            return Err(Error::InvalidInput(
                "interactions_per_user cannot exceed n_items (items are sampled without replacement)"
                    .into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let config: SimConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        config.validate()?;
        Ok(config)
    }
}

/// Ground truth for one generated (user, item) pair.
#[derive(Debug, Clone, Copy)]
pub struct PairTruth {
    pub first_flag_prob: f64,
    pub first_flagged: bool,
    pub first_watch_fraction: f64,
    /// Probability of a flag if the item is shown again after an unflagged
    /// first view.
    pub second_flag_prob: f64,
    pub second_flagged: bool,
}

/// Everything the generator knows that an experimenter would not.
#[derive(Debug, Clone, Default)]
pub struct SimTruth {
    pub pairs: HashMap<(UserId, ItemId), PairTruth>,
    pub user_group: HashMap<UserId, ReporterGroup>,
}

/// Generator output: the interaction log (same schema as ingested data),
/// the ground truth and a full score table over the generated pairs.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub records: Vec<InteractionRecord>,
    pub truth: SimTruth,
    pub scores: ScoreTable,
}

const BASE_TS: i64 = 1_600_000_000_000;
const STEP_MS: i64 = 60_000;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Item durations are an item property: consistent across views and users.
fn item_duration_s(item: ItemId) -> f64 {
    let unit = splitmix64(item.0.wrapping_add(0x5eed)) as f64 / u64::MAX as f64;
    7.0 + 5.0 * unit
}

fn draw_watch_fraction(rng: &mut ChaCha12Rng, config: &SimConfig) -> f64 {
    let u: f64 = rng.gen();
    let body_sample = |rng: &mut ChaCha12Rng| -> f64 {
        match config.watch_body {
            WatchBody::LogNormal => {
                LogNormal::new(config.watch_lognormal_mu, config.watch_lognormal_sigma)
                    .expect("validated sigma")
                    .sample(rng)
            }
            WatchBody::Weibull => Weibull::new(
                config.watch_lognormal_mu.exp(),
                1.0 / config.watch_lognormal_sigma,
            )
            .expect("validated sigma")
            .sample(rng),
        }
    };
    if u < config.zero_watch_prob {
        0.0
    } else if u < config.zero_watch_prob + config.overlong_prob {
        100.0 + body_sample(rng)
    } else {
        body_sample(rng).min(100.0)
    }
}

struct UserDraw {
    records: Vec<InteractionRecord>,
    pairs: Vec<((UserId, ItemId), PairTruth)>,
    scores: Vec<((UserId, ItemId), f64)>,
    group: ReporterGroup,
}

fn generate_user(user_idx: usize, config: &SimConfig) -> UserDraw {
    let user_id = UserId(user_idx as u64);
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(user_idx as u64 + 1);

    let group = if rng.gen_bool(config.frac_high_reporters) {
        ReporterGroup::High
    } else {
        ReporterGroup::Low
    };
    let rate = match group {
        ReporterGroup::Low => config.flag_prob_low,
        ReporterGroup::High => config.flag_prob_high,
    };

    let m = config.interactions_per_user;
    let items = rand::seq::index::sample(&mut rng, config.n_items, m);

    let noise = if config.score_noise_sigma > 0.0 {
        Some(Normal::new(0.0, config.score_noise_sigma).expect("validated sigma"))
    } else {
        None
    };

    let mut records = Vec::with_capacity(m * 2);
    let mut pairs = Vec::with_capacity(m);
    let mut scores = Vec::with_capacity(m);
    let mut second_views = Vec::new();

    for (j, raw_item) in items.into_iter().enumerate() {
        let item_id = ItemId(raw_item as u64);
        // Pair badness drives both the flag probability and (in the default
        // score mode) the score.
        let badness: f64 = rng.gen();
        let first_flag_prob = match group {
            // Content-driven: proportional to badness, mean = rate.
            ReporterGroup::Low => (rate * 2.0 * badness).min(1.0),
            // Habitual floor: between 0.5*rate and 1.5*rate, mean = rate.
            ReporterGroup::High => (rate * (0.5 + badness)).min(1.0),
        };
        let watch = draw_watch_fraction(&mut rng, config);
        let first_flagged = rng.gen_bool(first_flag_prob);
        let second_flag_prob = if watch < config.second_view_watch_cutoff {
            config.second_view_flag_prob
        } else {
            0.0
        };
        let second_flagged = rng.gen_bool(second_flag_prob);
        let has_second_view = !first_flagged && rng.gen_bool(config.repeat_prob);
        let noise_sample = noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));

        let duration = item_duration_s(item_id);
        records.push(InteractionRecord {
            user_id,
            item_id,
            timestamp: BASE_TS + j as i64 * STEP_MS,
            watch_time: watch / 100.0 * duration,
            duration,
            flagged: first_flagged,
            view_index: 1,
        });
        if has_second_view {
            second_views.push((item_id, second_flagged));
        }
        pairs.push((
            (user_id, item_id),
            PairTruth {
                first_flag_prob,
                first_flagged,
                first_watch_fraction: watch,
                second_flag_prob,
                second_flagged,
            },
        ));
        let score = match config.score_mode {
            ScoreMode::NonFlagPropensity => 1.0 - badness + noise_sample,
            ScoreMode::Engagement => watch.min(100.0) / 100.0 + noise_sample,
        };
        scores.push(((user_id, item_id), score));
    }

    for (j, (item_id, second_flagged)) in second_views.into_iter().enumerate() {
        let watch = draw_watch_fraction(&mut rng, config);
        let duration = item_duration_s(item_id);
        records.push(InteractionRecord {
            user_id,
            item_id,
            timestamp: BASE_TS + (m + j) as i64 * STEP_MS,
            watch_time: watch / 100.0 * duration,
            duration,
            flagged: second_flagged,
            view_index: 2,
        });
    }

    UserDraw {
        records,
        pairs,
        scores,
        group,
    }
}

/// Generate a synthetic population. Deterministic for a fixed config; users
/// draw from independent seeded streams, so the output does not depend on
/// thread count.
pub fn generate(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let draws: Vec<UserDraw> = (0..config.n_users)
        .into_par_iter()
        .map(|u| generate_user(u, config))
        .collect();

    let mut records = Vec::new();
    let mut truth = SimTruth::default();
    let mut scores = ScoreTable::new();
    for (user_idx, draw) in draws.into_iter().enumerate() {
        truth.user_group.insert(UserId(user_idx as u64), draw.group);
        for (key, pair) in draw.pairs {
            truth.pairs.insert(key, pair);
        }
        for ((user, item), score) in draw.scores {
            scores.insert(user, item, score);
        }
        records.extend(draw.records);
    }
    Ok(SimOutput {
        records,
        truth,
        scores,
    })
}

/// A fresh candidate in an experiment scenario, with its ground truth.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioCandidate {
    pub item_id: ItemId,
    pub score: f64,
    pub flag_prob: f64,
    pub flagged: bool,
    pub watch_fraction: f64,
}

/// Re-show outcome of a history item if it gets recommended again.
#[derive(Debug, Clone, Copy)]
pub struct Reflag {
    pub prob: f64,
    pub realized: bool,
}

/// One user's experiment view of the simulation: earlier interactions form
/// the history (safe-pool source), later ones are the fresh candidates the
/// ranker scores.
#[derive(Debug, Clone)]
pub struct UserScenario {
    pub user_id: UserId,
    pub group: ReporterGroup,
    pub candidates: Vec<ScenarioCandidate>,
    pub history: Vec<InteractionRecord>,
    /// Re-show outcomes for history items (keyed by item).
    pub reflag: HashMap<ItemId, Reflag>,
    /// Flagged views / total views over the user's full log, in percent.
    pub h_x_percent: f64,
}

/// Split each user's first views into history (earliest `history_fraction`)
/// and fresh candidates (the rest). Second views stay with the history.
pub fn build_scenarios(output: &SimOutput, history_fraction: f64) -> Vec<UserScenario> {
    let mut per_user: HashMap<UserId, Vec<&InteractionRecord>> = HashMap::new();
    for r in &output.records {
        per_user.entry(r.user_id).or_default().push(r);
    }
    let mut user_ids: Vec<UserId> = per_user.keys().copied().collect();
    user_ids.sort();

    let mut scenarios = Vec::with_capacity(user_ids.len());
    for user_id in user_ids {
        let mut views = per_user.remove(&user_id).unwrap();
        views.sort_by_key(|r| (r.timestamp, r.item_id));
        let firsts: Vec<&InteractionRecord> = views
            .iter()
            .copied()
            .filter(|r| r.view_index == 1)
            .collect();
        let n_history = ((firsts.len() as f64) * history_fraction).round() as usize;
        let history_items: std::collections::HashSet<ItemId> =
            firsts.iter().take(n_history).map(|r| r.item_id).collect();

        let flagged_views = views.iter().filter(|r| r.flagged).count();
        let h_x_percent = 100.0 * flagged_views as f64 / views.len().max(1) as f64;

        let mut history = Vec::new();
        let mut candidates = Vec::new();
        let mut reflag = HashMap::new();
        for r in &views {
            if history_items.contains(&r.item_id) {
                history.push(**r);
            }
        }
        for r in &firsts {
            let truth = output.truth.pairs[&(user_id, r.item_id)];
            if history_items.contains(&r.item_id) {
                reflag.insert(
                    r.item_id,
                    Reflag {
                        prob: truth.second_flag_prob,
                        realized: truth.second_flagged,
                    },
                );
            } else {
                let score = output
                    .scores
                    .score(user_id, r.item_id)
                    .expect("generator emits a score for every pair");
                candidates.push(ScenarioCandidate {
                    item_id: r.item_id,
                    score,
                    flag_prob: truth.first_flag_prob,
                    flagged: truth.first_flagged,
                    watch_fraction: truth.first_watch_fraction,
                });
            }
        }
        let group = output.truth.user_group[&user_id];
        scenarios.push(UserScenario {
            user_id,
            group,
            candidates,
            history,
            reflag,
            h_x_percent,
        });
    }
    scenarios
}

/// Expected risk of a fixed policy, and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRisk {
    pub expected: f64,
    /// True when the value comes from Monte Carlo rather than enumeration.
    pub approximate: bool,
    pub std_error: Option<f64>,
}

/// Exact expected risk of running the policy (lambda, strategy, beta, k) on
/// the given scenarios, under the generative flag model.
///
/// Sets are deterministic given the realized scores and histories, so the
/// expectation enumerates each set and averages per-item flag probabilities
/// (fresh items: first-view probability; replacements: re-show probability).
/// Above `enumeration_cap` total set items it falls back to Monte Carlo over
/// flag draws and reports a standard error.
pub fn oracle_expected_risk(
    scenarios: &[UserScenario],
    lambda: f64,
    strategy: Strategy,
    beta: f64,
    k: usize,
    enumeration_cap: usize,
) -> OracleRisk {
    struct PolicySet {
        /// Flag probability per chosen item.
        probs: Vec<f64>,
    }

    let sets: Vec<PolicySet> = scenarios
        .iter()
        .map(|scenario| {
            let scored: Vec<ScoredItem> = scenario
                .candidates
                .iter()
                .map(|c| ScoredItem {
                    item_id: c.item_id,
                    score: c.score,
                })
                .collect();
            let empty = crate::selection::SafePool::empty(scenario.user_id, beta);
            let pool = match strategy {
                Strategy::Remove => empty,
                Strategy::Replace => build_safe_pool(&scenario.history, beta),
            };
            let set = recommend(scenario.user_id, &scored, &pool, lambda, k);
            let cand_prob: HashMap<ItemId, f64> = scenario
                .candidates
                .iter()
                .map(|c| (c.item_id, c.flag_prob))
                .collect();
            let probs = set
                .items
                .iter()
                .map(|item| match item.provenance {
                    Provenance::Fresh => cand_prob[&item.item_id],
                    Provenance::Replacement => {
                        scenario.reflag.get(&item.item_id).map_or(0.0, |r| r.prob)
                    }
                })
                .collect();
            PolicySet { probs }
        })
        .collect();

    let total_items: usize = sets.iter().map(|s| s.probs.len()).sum();
    if total_items <= enumeration_cap {
        let expected = sets
            .iter()
            .map(|s| {
                if s.probs.is_empty() {
                    0.0
                } else {
                    s.probs.iter().sum::<f64>() / s.probs.len() as f64
                }
            })
            .sum::<f64>()
            / sets.len().max(1) as f64;
        return OracleRisk {
            expected,
            approximate: false,
            std_error: None,
        };
    }

    // Monte Carlo over flag draws.
    const SAMPLES: usize = 200;
    let mut rng = ChaCha12Rng::seed_from_u64(0xC0FF_EE00);
    let mut draws = Vec::with_capacity(SAMPLES);
    for _ in 0..SAMPLES {
        let mut total = 0.0;
        for s in &sets {
            if s.probs.is_empty() {
                continue;
            }
            let flagged = s.probs.iter().filter(|&&p| rng.gen_bool(p)).count();
            total += flagged as f64 / s.probs.len() as f64;
        }
        draws.push(total / sets.len().max(1) as f64);
    }
    let mean = draws.iter().sum::<f64>() / SAMPLES as f64;
    let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (SAMPLES - 1) as f64;
    OracleRisk {
        expected: mean,
        approximate: true,
        std_error: Some((var / SAMPLES as f64).sqrt()),
    }
}
