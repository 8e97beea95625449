//! Descriptive analyses of reporting and re-consumption behavior.
//!
//! Reproduces, on any ingested dataset, the summary tables that motivate
//! the replacement strategy: per-user reporting-rate bins, the four-way
//! repeat/report transition table, the empirical safety of high-watch
//! repeated items as the filter beta varies, and binned watch-fraction
//! histograms. Outputs are CSV so they stay diff-able.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::data::{InteractionRecord, ItemId, UserId};
use crate::error::{Error, Result};

/// One reporting-rate bin: users whose flagged-view percentage H falls in
/// [lo, hi); the last bin includes its upper edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportingBin {
    pub lo: f64,
    pub hi: f64,
    pub users: usize,
    pub percent: f64,
    pub ecdf: f64,
}

/// Reporting-rate distribution over users.
#[derive(Debug, Clone)]
pub struct ReportingStats {
    pub bins: Vec<ReportingBin>,
    /// Per-user reporting rate in percent (flagged views / views * 100).
    pub per_user: Vec<(UserId, f64)>,
}

/// Bin edges used for the reporting-rate table, in percent.
pub const REPORTING_BIN_EDGES: [(f64, f64); 4] = [(0.0, 0.1), (0.1, 0.3), (0.3, 1.0), (1.0, 100.0)];

/// Per-user reporting rates in percent, sorted by user id.
pub fn per_user_reporting_rate(records: &[InteractionRecord]) -> Vec<(UserId, f64)> {
    let mut views: HashMap<UserId, (usize, usize)> = HashMap::new();
    for r in records {
        let entry = views.entry(r.user_id).or_insert((0, 0));
        entry.0 += 1;
        entry.1 += r.flagged as usize;
    }
    let mut out: Vec<(UserId, f64)> = views
        .into_iter()
        .map(|(user, (seen, flagged))| (user, 100.0 * flagged as f64 / seen as f64))
        .collect();
    out.sort_by_key(|(user, _)| *user);
    out
}

/// Assign every user to one reporting-rate bin and accumulate the eCDF.
pub fn reporting_bins(records: &[InteractionRecord]) -> Result<ReportingStats> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to analyze".into()));
    }
    let per_user = per_user_reporting_rate(records);
    let n = per_user.len() as f64;
    let mut counts = [0usize; 4];
    for &(_, h) in &per_user {
        let idx = REPORTING_BIN_EDGES
            .iter()
            .position(|&(lo, hi)| h >= lo && (h < hi || (hi == 100.0 && h <= hi)))
            .unwrap_or(3);
        counts[idx] += 1;
    }
    let mut bins = Vec::with_capacity(4);
    let mut cumulative = 0usize;
    for (idx, &(lo, hi)) in REPORTING_BIN_EDGES.iter().enumerate() {
        cumulative += counts[idx];
        bins.push(ReportingBin {
            lo,
            hi,
            users: counts[idx],
            percent: 100.0 * counts[idx] as f64 / n,
            ecdf: cumulative as f64 / n,
        });
    }
    Ok(ReportingStats { bins, per_user })
}

/// Mean, sample standard deviation and 75th percentile of watch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WatchStats {
    pub mean: f64,
    pub sd: f64,
    pub p75: f64,
}

impl WatchStats {
    fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return WatchStats::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        WatchStats {
            mean,
            sd,
            p75: quantile_sorted(&sorted, 0.75),
        }
    }
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = q * (n as f64 - 1.0);
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

/// One first-view/second-view transition class.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub first_flagged: bool,
    pub second_flagged: bool,
    /// Percent of repeated (user, item) pairs showing this transition.
    pub item_percent: f64,
    /// Percent of users (among those with any repeated pair) exhibiting the
    /// transition at least once.
    pub user_percent: f64,
    pub watch_first: WatchStats,
    pub watch_second: WatchStats,
    pub pairs: usize,
}

/// The four-way transition table over repeated views.
#[derive(Debug, Clone)]
pub struct RepeatTransitionTable {
    /// Row order: kept->kept, kept->reported, reported->reported, reported->kept.
    pub rows: [TransitionRow; 4],
    pub n_pairs: usize,
    pub n_users_with_repeats: usize,
}

const TRANSITIONS: [(bool, bool); 4] = [(false, false), (false, true), (true, true), (true, false)];

/// Classify every (user, item) pair seen at least twice by its flags at the
/// first and second view.
pub fn repeat_transition_table(records: &[InteractionRecord]) -> RepeatTransitionTable {
    let mut firsts: HashMap<(UserId, ItemId), &InteractionRecord> = HashMap::new();
    let mut seconds: HashMap<(UserId, ItemId), &InteractionRecord> = HashMap::new();
    for r in records {
        match r.view_index {
            1 => {
                firsts.insert((r.user_id, r.item_id), r);
            }
            2 => {
                seconds.insert((r.user_id, r.item_id), r);
            }
            _ => {}
        }
    }

    let mut pair_counts = [0usize; 4];
    let mut users_with: [HashSet<UserId>; 4] = Default::default();
    let mut users_with_repeats: HashSet<UserId> = HashSet::new();
    let mut watch1: [Vec<f64>; 4] = Default::default();
    let mut watch2: [Vec<f64>; 4] = Default::default();

    for (key, second) in &seconds {
        let Some(first) = firsts.get(key) else {
            continue;
        };
        users_with_repeats.insert(key.0);
        let class = TRANSITIONS
            .iter()
            .position(|&(f1, f2)| f1 == first.flagged && f2 == second.flagged)
            .expect("all four combinations are enumerated");
        pair_counts[class] += 1;
        users_with[class].insert(key.0);
        watch1[class].push(first.watch_time);
        watch2[class].push(second.watch_time);
    }

    let n_pairs: usize = pair_counts.iter().sum();
    let n_users = users_with_repeats.len();
    let rows: Vec<TransitionRow> = TRANSITIONS
        .iter()
        .enumerate()
        .map(|(idx, &(first_flagged, second_flagged))| TransitionRow {
            first_flagged,
            second_flagged,
            item_percent: if n_pairs == 0 {
                0.0
            } else {
                100.0 * pair_counts[idx] as f64 / n_pairs as f64
            },
            user_percent: if n_users == 0 {
                0.0
            } else {
                100.0 * users_with[idx].len() as f64 / n_users as f64
            },
            watch_first: WatchStats::from_values(&watch1[idx]),
            watch_second: WatchStats::from_values(&watch2[idx]),
            pairs: pair_counts[idx],
        })
        .collect();

    RepeatTransitionTable {
        rows: rows.try_into().expect("four transitions"),
        n_pairs,
        n_users_with_repeats: n_users,
    }
}

/// One point of the safe-pool validity curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityPoint {
    pub beta: f64,
    /// Empirical P(flag at second view | unflagged first view with watch
    /// fraction > beta); `None` when no pair qualifies.
    pub probability: Option<f64>,
    pub remaining: usize,
}

/// For each beta: among second views of items left unflagged at the first
/// view with first watch fraction strictly above beta, the fraction flagged
/// anew and the number of qualifying pairs.
pub fn safe_pool_validity_curve(
    records: &[InteractionRecord],
    betas: &[f64],
) -> Vec<ValidityPoint> {
    let mut firsts: HashMap<(UserId, ItemId), &InteractionRecord> = HashMap::new();
    let mut seconds: HashMap<(UserId, ItemId), &InteractionRecord> = HashMap::new();
    for r in records {
        match r.view_index {
            1 => {
                firsts.insert((r.user_id, r.item_id), r);
            }
            2 => {
                seconds.insert((r.user_id, r.item_id), r);
            }
            _ => {}
        }
    }
    // (first watch fraction, second-view flag) for unflagged first views.
    let qualifying: Vec<(f64, bool)> = seconds
        .iter()
        .filter_map(|(key, second)| {
            firsts.get(key).and_then(|first| {
                (!first.flagged).then(|| (first.watch_fraction(), second.flagged))
            })
        })
        .collect();

    betas
        .iter()
        .map(|&beta| {
            let kept: Vec<&(f64, bool)> = qualifying.iter().filter(|(w, _)| *w > beta).collect();
            let remaining = kept.len();
            let probability = if remaining == 0 {
                None
            } else {
                Some(kept.iter().filter(|(_, f)| *f).count() as f64 / remaining as f64)
            };
            ValidityPoint {
                beta,
                probability,
                remaining,
            }
        })
        .collect()
}

/// Fixed-width watch-fraction histogram, split by flag status.
#[derive(Debug, Clone, PartialEq)]
pub struct WatchHistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub flagged: usize,
    pub unflagged: usize,
}

/// Bin watch fractions into `bin_width`-percent buckets up to the observed
/// maximum.
pub fn watch_fraction_histogram(
    records: &[InteractionRecord],
    bin_width: f64,
) -> Vec<WatchHistogramBin> {
    if records.is_empty() || bin_width <= 0.0 {
        return Vec::new();
    }
    let max = records
        .iter()
        .map(|r| r.watch_fraction())
        .fold(0.0f64, f64::max);
    let n_bins = ((max / bin_width).floor() as usize + 1).max(1);
    let mut bins: Vec<WatchHistogramBin> = (0..n_bins)
        .map(|i| WatchHistogramBin {
            lo: i as f64 * bin_width,
            hi: (i + 1) as f64 * bin_width,
            flagged: 0,
            unflagged: 0,
        })
        .collect();
    for r in records {
        let idx = ((r.watch_fraction() / bin_width).floor() as usize).min(n_bins - 1);
        if r.flagged {
            bins[idx].flagged += 1;
        } else {
            bins[idx].unflagged += 1;
        }
    }
    bins
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

/// Write every analysis as CSV files under `out_dir`. With `paper_tables`,
/// additionally emit `table1.csv` / `table2.csv` shaped like the published
/// reporting and transition tables for side-by-side comparison.
pub fn write_analysis(
    records: &[InteractionRecord],
    betas: &[f64],
    out_dir: &Path,
    paper_tables: bool,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;

    let stats = reporting_bins(records)?;
    let mut w = csv::Writer::from_path(out_dir.join("reporting_bins.csv"))?;
    w.write_record(["h_lo", "h_hi", "users", "percent", "ecdf"])?;
    for b in &stats.bins {
        w.write_record([
            b.lo.to_string(),
            b.hi.to_string(),
            b.users.to_string(),
            fmt(b.percent),
            fmt(b.ecdf),
        ])?;
    }
    w.flush()?;

    let table = repeat_transition_table(records);
    let mut w = csv::Writer::from_path(out_dir.join("repeat_transitions.csv"))?;
    w.write_record([
        "first",
        "second",
        "item_percent",
        "user_percent",
        "watch1_mean",
        "watch1_sd",
        "watch1_p75",
        "watch2_mean",
        "watch2_sd",
        "watch2_p75",
        "pairs",
    ])?;
    let label = |flagged: bool| if flagged { "reported" } else { "kept" };
    for row in &table.rows {
        w.write_record([
            label(row.first_flagged).to_string(),
            label(row.second_flagged).to_string(),
            fmt(row.item_percent),
            fmt(row.user_percent),
            fmt(row.watch_first.mean),
            fmt(row.watch_first.sd),
            fmt(row.watch_first.p75),
            fmt(row.watch_second.mean),
            fmt(row.watch_second.sd),
            fmt(row.watch_second.p75),
            row.pairs.to_string(),
        ])?;
    }
    w.flush()?;

    let curve = safe_pool_validity_curve(records, betas);
    let mut w = csv::Writer::from_path(out_dir.join("safe_pool_validity.csv"))?;
    w.write_record(["beta", "probability", "remaining"])?;
    for p in &curve {
        w.write_record([
            p.beta.to_string(),
            p.probability.map_or(String::new(), fmt),
            p.remaining.to_string(),
        ])?;
    }
    w.flush()?;

    let hist = watch_fraction_histogram(records, 5.0);
    let mut w = csv::Writer::from_path(out_dir.join("watch_histogram.csv"))?;
    w.write_record(["lo", "hi", "flagged", "unflagged"])?;
    for b in &hist {
        w.write_record([
            b.lo.to_string(),
            b.hi.to_string(),
            b.flagged.to_string(),
            b.unflagged.to_string(),
        ])?;
    }
    w.flush()?;

    if paper_tables {
        let mut w = csv::Writer::from_path(out_dir.join("table1.csv"))?;
        w.write_record(["h_x_range", "n_users", "percent_users", "ecdf"])?;
        for b in &stats.bins {
            w.write_record([
                format!("{} <= H < {}", b.lo, b.hi),
                b.users.to_string(),
                format!("{:.1}", b.percent),
                format!("{:.3}", b.ecdf),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(out_dir.join("table2.csv"))?;
        w.write_record([
            "behaviour",
            "item_percent",
            "user_percent",
            "watch_1st",
            "watch_2nd",
        ])?;
        for row in &table.rows {
            w.write_record([
                format!(
                    "{} -> {}",
                    label(row.first_flagged),
                    label(row.second_flagged)
                ),
                format!("{:.2}", row.item_percent),
                format!("{:.2}", row.user_percent),
                format!(
                    "{:.2} +- {:.2} ({:.2})",
                    row.watch_first.mean, row.watch_first.sd, row.watch_first.p75
                ),
                format!(
                    "{:.2} +- {:.2} ({:.2})",
                    row.watch_second.mean, row.watch_second.sd, row.watch_second.p75
                ),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{build_scenarios, generate, SimConfig};

    fn rec(user: u64, item: u64, view: u32, watch_pct: f64, flagged: bool) -> InteractionRecord {
        InteractionRecord {
            user_id: UserId(user),
            item_id: ItemId(item),
            timestamp: view as i64 * 100,
            watch_time: watch_pct / 10.0,
            duration: 10.0,
            flagged,
            view_index: view,
        }
    }

    #[test]
    fn no_flags_puts_everyone_in_the_first_bin() {
        let records = vec![rec(1, 1, 1, 50.0, false), rec(2, 2, 1, 60.0, false)];
        let stats = reporting_bins(&records).unwrap();
        assert_eq!(stats.bins[0].users, 2);
        assert_eq!(stats.bins[0].percent, 100.0);
        let ecdfs: Vec<f64> = stats.bins.iter().map(|b| b.ecdf).collect();
        assert_eq!(ecdfs, vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn hand_built_users_land_in_all_four_bins() {
        let mut records = Vec::new();
        // User 1: 0 of 2000 flagged -> H = 0.
        for i in 0..2000 {
            records.push(rec(1, i, 1, 50.0, false));
        }
        // User 2: 1 of 500 -> H = 0.2.
        records.push(rec(2, 0, 1, 50.0, true));
        for i in 1..500 {
            records.push(rec(2, i, 1, 50.0, false));
        }
        // User 3: 1 of 200 -> H = 0.5.
        records.push(rec(3, 0, 1, 50.0, true));
        for i in 1..200 {
            records.push(rec(3, i, 1, 50.0, false));
        }
        // User 4: 1 of 10 -> H = 10. User 5: all flagged -> H = 100.
        records.push(rec(4, 0, 1, 50.0, true));
        for i in 1..10 {
            records.push(rec(4, i, 1, 50.0, false));
        }
        records.push(rec(5, 0, 1, 50.0, true));
        let stats = reporting_bins(&records).unwrap();
        let users: Vec<usize> = stats.bins.iter().map(|b| b.users).collect();
        assert_eq!(users, vec![1, 1, 1, 2]);
        assert_eq!(stats.bins[3].ecdf, 1.0);
        let percent_sum: f64 = stats.bins.iter().map(|b| b.percent).sum();
        assert!((percent_sum - 100.0).abs() < 1e-9);
    }

    #[test]
    fn bin_shares_match_binomial_oracle_on_simulated_users() {
        // Same flag rate for everyone, m independent views per user: the
        // flag count is Binomial(m, p), so with m = 40 a user lands in the
        // first bin iff they flag nothing, and never in the middle bins
        // (one flag is already 2.5%).
        let config = SimConfig {
            n_users: 2000,
            n_items: 10_000,
            interactions_per_user: 40,
            flag_prob_low: 0.01,
            flag_prob_high: 0.01,
            repeat_prob: 0.0,
            seed: 77,
            ..SimConfig::default()
        };
        let out = generate(&config).unwrap();
        let stats = reporting_bins(&out.records).unwrap();
        let p_zero = 0.99f64.powi(40);
        assert!(
            (stats.bins[0].percent / 100.0 - p_zero).abs() < 0.05,
            "first bin share {} vs analytic {}",
            stats.bins[0].percent / 100.0,
            p_zero
        );
        assert_eq!(stats.bins[1].users, 0);
        assert_eq!(stats.bins[2].users, 0);
        assert!((stats.bins[3].percent / 100.0 - (1.0 - p_zero)).abs() < 0.05);
    }

    #[test]
    fn empty_repeat_table_is_all_zeros() {
        let records = vec![rec(1, 1, 1, 50.0, false)];
        let table = repeat_transition_table(&records);
        assert_eq!(table.n_pairs, 0);
        assert!(table
            .rows
            .iter()
            .all(|r| r.pairs == 0 && r.item_percent == 0.0));
    }

    #[test]
    fn four_pair_fixture_covers_every_transition() {
        let records = vec![
            // kept -> kept
            rec(1, 1, 1, 50.0, false),
            rec(1, 1, 2, 60.0, false),
            // kept -> reported
            rec(1, 2, 1, 10.0, false),
            rec(1, 2, 2, 80.0, true),
            // reported -> reported
            rec(2, 3, 1, 70.0, true),
            rec(2, 3, 2, 75.0, true),
            // reported -> kept
            rec(2, 4, 1, 20.0, true),
            rec(2, 4, 2, 30.0, false),
        ];
        let table = repeat_transition_table(&records);
        assert_eq!(table.n_pairs, 4);
        assert_eq!(table.n_users_with_repeats, 2);
        for row in &table.rows {
            assert_eq!(row.pairs, 1);
            assert_eq!(row.item_percent, 25.0);
            assert_eq!(row.user_percent, 50.0);
        }
        // kept -> reported watch seconds: first 1.0s, second 8.0s.
        assert_eq!(table.rows[1].watch_first.mean, 1.0);
        assert_eq!(table.rows[1].watch_second.mean, 8.0);
        let percent_sum: f64 = table.rows.iter().map(|r| r.item_percent).sum();
        assert!((percent_sum - 100.0).abs() < 1e-9);
    }

    #[test]
    fn validity_is_exactly_zero_at_or_above_the_cutoff() {
        let config = SimConfig {
            n_users: 300,
            n_items: 3000,
            interactions_per_user: 30,
            second_view_flag_prob: 0.4,
            second_view_watch_cutoff: 30.0,
            repeat_prob: 0.5,
            seed: 5,
            ..SimConfig::default()
        };
        let out = generate(&config).unwrap();
        let points = safe_pool_validity_curve(&out.records, &[30.0, 50.0]);
        for p in &points {
            assert!(
                p.remaining > 0,
                "expected qualifying pairs at beta {}",
                p.beta
            );
            assert_eq!(p.probability, Some(0.0), "beta {}", p.beta);
        }
    }

    /// Abramowitz-Stegun 7.1.26 erf approximation; |error| < 1.5e-7.
    fn normal_cdf(x: f64) -> f64 {
        let z = x / std::f64::consts::SQRT_2;
        let t = 1.0 / (1.0 + 0.3275911 * z.abs());
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        let erf = 1.0 - poly * (-z * z).exp();
        let signed = if z < 0.0 { -erf } else { erf };
        0.5 * (1.0 + signed)
    }

    #[test]
    fn validity_at_zero_beta_matches_analytic_product() {
        // With no first-view flags, validity at beta = 0 is
        //   svfp * P(W < cutoff | W > 0)
        // under the zero-inflated log-normal watch model.
        let config = SimConfig {
            n_users: 600,
            n_items: 20_000,
            interactions_per_user: 40,
            flag_prob_low: 0.0,
            flag_prob_high: 0.0,
            zero_watch_prob: 0.25,
            overlong_prob: 0.05,
            watch_lognormal_mu: 30.0f64.ln(),
            watch_lognormal_sigma: 0.9,
            second_view_flag_prob: 0.4,
            second_view_watch_cutoff: 30.0,
            repeat_prob: 0.5,
            seed: 21,
            ..SimConfig::default()
        };
        let out = generate(&config).unwrap();
        let point = &safe_pool_validity_curve(&out.records, &[0.0])[0];
        let p_body = 1.0 - config.zero_watch_prob - config.overlong_prob;
        let p_below_cut = normal_cdf(
            (config.second_view_watch_cutoff.ln() - config.watch_lognormal_mu)
                / config.watch_lognormal_sigma,
        );
        let expected =
            config.second_view_flag_prob * (p_body * p_below_cut) / (1.0 - config.zero_watch_prob);
        let got = point.probability.unwrap();
        assert!(
            (got - expected).abs() < 0.02,
            "empirical {got} vs analytic {expected} over {} pairs",
            point.remaining
        );
    }

    #[test]
    fn beta_above_all_watch_fractions_is_undefined() {
        let records = vec![rec(1, 1, 1, 50.0, false), rec(1, 1, 2, 60.0, false)];
        let points = safe_pool_validity_curve(&records, &[99.0]);
        assert_eq!(points[0].remaining, 0);
        assert_eq!(points[0].probability, None);
    }

    #[test]
    fn remaining_counts_never_increase_with_beta() {
        let config = SimConfig {
            n_users: 100,
            n_items: 2000,
            interactions_per_user: 30,
            repeat_prob: 0.4,
            seed: 3,
            ..SimConfig::default()
        };
        let out = generate(&config).unwrap();
        let betas: Vec<f64> = (0..20).map(|i| i as f64 * 10.0).collect();
        let points = safe_pool_validity_curve(&out.records, &betas);
        for pair in points.windows(2) {
            assert!(pair[1].remaining <= pair[0].remaining);
        }
    }

    #[test]
    fn scenario_rates_feed_group_split() {
        // Not strictly an analyze concern, but ties the H_X computation in
        // scenarios to this module's definition.
        let config = SimConfig {
            n_users: 60,
            n_items: 2000,
            interactions_per_user: 30,
            seed: 8,
            ..SimConfig::default()
        };
        let out = generate(&config).unwrap();
        let rates: HashMap<UserId, f64> =
            per_user_reporting_rate(&out.records).into_iter().collect();
        for s in build_scenarios(&out, 0.5) {
            assert!((rates[&s.user_id] - s.h_x_percent).abs() < 1e-9);
        }
    }

    #[test]
    fn analysis_files_are_written() {
        let config = SimConfig {
            n_users: 40,
            n_items: 500,
            interactions_per_user: 20,
            repeat_prob: 0.3,
            seed: 6,
            ..SimConfig::default()
        };
        let out = generate(&config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_analysis(&out.records, &[0.0, 30.0, 50.0], dir.path(), true).unwrap();
        for file in [
            "reporting_bins.csv",
            "repeat_transitions.csv",
            "safe_pool_validity.csv",
            "watch_histogram.csv",
            "table1.csv",
            "table2.csv",
        ] {
            assert!(dir.path().join(file).exists(), "{file} missing");
        }
    }

    #[test]
    fn watch_stats_quantile_interpolates() {
        let stats = WatchStats::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(stats.mean, 2.5);
        assert!((stats.p75 - 3.25).abs() < 1e-12);
        let single = WatchStats::from_values(&[5.0]);
        assert_eq!(single.sd, 0.0);
        assert_eq!(single.p75, 5.0);
    }
}
