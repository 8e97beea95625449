//! Interaction-log ingestion and partitioning.
//!
//! The input is a CSV log of user-item view events (one row per view) with
//! watch time, item duration and a binary "flagged as unwanted" signal.
//! Ingestion derives per-(user, item) view indices from timestamps, drops
//! zero-duration rows, and the rest of the module prepares the standard
//! experimental partitions: k-core filtering, a 70/15/15 split of the
//! single-view subset, and the pool of repeated interactions used to study
//! re-consumption behavior.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque user identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u64);

/// Opaque item identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u64);

impl std::fmt::Display for UserId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for ItemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One user-item view event.
///
/// `view_index` is 1 for the first time the user saw the item, 2 for the
/// second, and so on; it is always derived from timestamps at ingest rather
/// than trusted from the file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub user_id: UserId,
    pub item_id: ItemId,
    /// Milliseconds since epoch.
    pub timestamp: i64,
    /// Seconds spent on the item; may exceed `duration` (users linger).
    pub watch_time: f64,
    /// Item duration in seconds, strictly positive.
    pub duration: f64,
    /// True when the user pressed report / "do not recommend".
    pub flagged: bool,
    pub view_index: u32,
}

impl InteractionRecord {
    /// Fraction of the item consumed, as a percent. May exceed 100.
    pub fn watch_fraction(&self) -> f64 {
        self.watch_time / self.duration * 100.0
    }
}

/// Fraction of the item consumed, as a percent.
pub fn watch_fraction(rec: &InteractionRecord) -> f64 {
    rec.watch_fraction()
}

/// Unit of the watch-time and duration columns in the source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeUnit {
    Seconds,
    Milliseconds,
}

/// Maps logical fields to column names in the source CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub user: String,
    pub item: String,
    pub timestamp: String,
    pub watch_time: String,
    pub duration: String,
    pub flagged: String,
    /// Scale applied to `watch_time` and `duration` values.
    pub time_unit: TimeUnit,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            user: "user_id".into(),
            item: "item_id".into(),
            timestamp: "timestamp_ms".into(),
            watch_time: "watch_time_s".into(),
            duration: "duration_s".into(),
            flagged: "flagged".into(),
            time_unit: TimeUnit::Seconds,
        }
    }
}

/// Ingested records plus drop counters for the JSON sidecar.
#[derive(Debug, Clone)]
pub struct IngestResult {
    /// Sorted by (user_id, timestamp), ties in file order.
    pub records: Vec<InteractionRecord>,
    pub dropped_zero_duration: usize,
}

fn parse_flag(raw: &str, row: usize) -> Result<bool> {
    match raw.trim() {
        "0" | "false" | "False" => Ok(false),
        "1" | "true" | "True" => Ok(true),
        other => Err(Error::BadRow {
            row,
            message: format!("cannot parse flag value `{other}` (expected 0/1/true/false)"),
        }),
    }
}

fn parse_num<T: std::str::FromStr>(raw: &str, row: usize, what: &str) -> Result<T> {
    raw.trim().parse::<T>().map_err(|_| Error::BadRow {
        row,
        message: format!("cannot parse {what} from `{raw}`"),
    })
}

/// Load an interaction log.
///
/// Rows with duration <= 0 are dropped and counted. View indices are
/// recomputed per (user, item) pair from timestamp order, with ties broken
/// by file order.
pub fn load_interactions(path: &Path, schema: &ColumnSchema) -> Result<IngestResult> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();

    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let user_col = col(&schema.user)?;
    let item_col = col(&schema.item)?;
    let ts_col = col(&schema.timestamp)?;
    let watch_col = col(&schema.watch_time)?;
    let dur_col = col(&schema.duration)?;
    let flag_col = col(&schema.flagged)?;

    let scale = match schema.time_unit {
        TimeUnit::Seconds => 1.0,
        TimeUnit::Milliseconds => 1e-3,
    };

    let mut records = Vec::new();
    let mut dropped = 0usize;
    for (idx, row) in reader.records().enumerate() {
        let row_no = idx + 1; // 1-based data row
        let row = row?;
        let field = |c: usize| -> Result<&str> {
            row.get(c).ok_or_else(|| Error::BadRow {
                row: row_no,
                message: "row has fewer fields than the header".into(),
            })
        };
        let user_id = UserId(parse_num(field(user_col)?, row_no, "user id")?);
        let item_id = ItemId(parse_num(field(item_col)?, row_no, "item id")?);
        let timestamp: i64 = parse_num(field(ts_col)?, row_no, "timestamp")?;
        let watch_time: f64 = parse_num::<f64>(field(watch_col)?, row_no, "watch time")? * scale;
        let duration: f64 = parse_num::<f64>(field(dur_col)?, row_no, "duration")? * scale;
        let flagged = parse_flag(field(flag_col)?, row_no)?;

        if !watch_time.is_finite() || watch_time < 0.0 {
            return Err(Error::BadRow {
                row: row_no,
                message: format!("watch time must be finite and >= 0, got {watch_time}"),
            });
        }
        if !duration.is_finite() {
            return Err(Error::BadRow {
                row: row_no,
                message: format!("duration must be finite, got {duration}"),
            });
        }
        if duration <= 0.0 {
            dropped += 1;
            continue;
        }
        records.push(InteractionRecord {
            user_id,
            item_id,
            timestamp,
            watch_time,
            duration,
            flagged,
            view_index: 0, // assigned below
        });
    }

    sort_and_index(&mut records);
    Ok(IngestResult {
        records,
        dropped_zero_duration: dropped,
    })
}

/// Sort by (user, timestamp) keeping file order on ties, then assign
/// view indices per (user, item).
pub fn sort_and_index(records: &mut [InteractionRecord]) {
    records.sort_by_key(|r| (r.user_id, r.timestamp));
    let mut seen: HashMap<(UserId, ItemId), u32> = HashMap::new();
    for rec in records.iter_mut() {
        let count = seen.entry((rec.user_id, rec.item_id)).or_insert(0);
        *count += 1;
        rec.view_index = *count;
    }
}

/// Iteratively remove users and items with fewer than `k` interactions until
/// no more removals happen. May return an empty vector.
pub fn k_core_filter(records: Vec<InteractionRecord>, k: usize) -> Vec<InteractionRecord> {
    let mut current = records;
    loop {
        let mut user_count: HashMap<UserId, usize> = HashMap::new();
        let mut item_count: HashMap<ItemId, usize> = HashMap::new();
        for r in &current {
            *user_count.entry(r.user_id).or_insert(0) += 1;
            *item_count.entry(r.item_id).or_insert(0) += 1;
        }
        let before = current.len();
        current.retain(|r| user_count[&r.user_id] >= k && item_count[&r.item_id] >= k);
        if current.len() == before {
            return current;
        }
    }
}

/// The standard experimental partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<InteractionRecord>,
    pub calibration: Vec<InteractionRecord>,
    pub test: Vec<InteractionRecord>,
    /// Repeated interactions (view_index >= 2), restricted to items that do
    /// not appear in `test`.
    pub repeated_pool: Vec<InteractionRecord>,
    pub seed: u64,
}

impl DatasetSplit {
    /// All records of one user across train, calibration and the repeated
    /// pool: the history visible when building that user's safe pool.
    pub fn history_of(&self, user: UserId) -> Vec<InteractionRecord> {
        let mut out: Vec<InteractionRecord> = self
            .train
            .iter()
            .chain(self.calibration.iter())
            .chain(self.repeated_pool.iter())
            .filter(|r| r.user_id == user)
            .copied()
            .collect();
        out.sort_by_key(|r| (r.timestamp, r.item_id));
        out
    }
}

fn sort_split(part: &mut [InteractionRecord]) {
    part.sort_by(|a, b| {
        (a.user_id, a.timestamp, a.item_id).cmp(&(b.user_id, b.timestamp, b.item_id))
    });
}

/// Split the single-view subset into train/calibration/test by the given
/// fractions and collect repeated views into the repeated pool, excluding
/// items that land in test. Deterministic for a fixed seed.
pub fn split(
    records: &[InteractionRecord],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetSplit> {
    if records.is_empty() {
        return Err(Error::InvalidInput(
            "cannot split an empty record set".into(),
        ));
    }
    let (f_train, f_cal, f_test) = fractions;
    let sum = f_train + f_cal + f_test;
    if (sum - 1.0).abs() > 1e-9 || f_train < 0.0 || f_cal < 0.0 || f_test < 0.0 {
        return Err(Error::InvalidInput(format!(
            "split fractions must be non-negative and sum to 1, got {fractions:?}"
        )));
    }

    let singles: Vec<InteractionRecord> = records
        .iter()
        .filter(|r| r.view_index == 1)
        .copied()
        .collect();
    let repeats: Vec<InteractionRecord> = records
        .iter()
        .filter(|r| r.view_index >= 2)
        .copied()
        .collect();

    let n = singles.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_train = ((f_train * n as f64).round() as usize).min(n);
    let n_cal = ((f_cal * n as f64).round() as usize).min(n - n_train);

    let mut train = Vec::with_capacity(n_train);
    let mut calibration = Vec::with_capacity(n_cal);
    let mut test = Vec::with_capacity(n - n_train - n_cal);
    for (pos, &i) in order.iter().enumerate() {
        if pos < n_train {
            train.push(singles[i]);
        } else if pos < n_train + n_cal {
            calibration.push(singles[i]);
        } else {
            test.push(singles[i]);
        }
    }
    sort_split(&mut train);
    sort_split(&mut calibration);
    sort_split(&mut test);

    let test_items: HashSet<ItemId> = test.iter().map(|r| r.item_id).collect();
    let mut repeated_pool: Vec<InteractionRecord> = repeats
        .into_iter()
        .filter(|r| !test_items.contains(&r.item_id))
        .collect();
    sort_split(&mut repeated_pool);

    Ok(DatasetSplit {
        train,
        calibration,
        test,
        repeated_pool,
        seed,
    })
}

/// Sidecar metadata written next to a serialized split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSidecar {
    pub seed: u64,
    pub fractions: (f64, f64, f64),
    pub dropped_zero_duration: usize,
    pub n_train: usize,
    pub n_calibration: usize,
    pub n_test: usize,
    pub n_repeated: usize,
}

const SPLIT_HEADER: [&str; 8] = [
    "user_id",
    "item_id",
    "timestamp_ms",
    "watch_time_s",
    "duration_s",
    "flagged",
    "view_index",
    "split",
];

fn write_split_rows<W: std::io::Write>(
    w: &mut csv::Writer<W>,
    part: &[InteractionRecord],
    label: &str,
) -> Result<()> {
    for r in part {
        w.write_record([
            r.user_id.to_string(),
            r.item_id.to_string(),
            r.timestamp.to_string(),
            r.watch_time.to_string(),
            r.duration.to_string(),
            if r.flagged { "1".into() } else { "0".into() },
            r.view_index.to_string(),
            label.to_string(),
        ])?;
    }
    Ok(())
}

/// Serialize a split as one CSV with a `split` column plus a JSON sidecar
/// (`<stem>.meta.json`) holding seed, fractions and drop counts.
pub fn write_splits(
    split: &DatasetSplit,
    fractions: (f64, f64, f64),
    dropped_zero_duration: usize,
    csv_path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    w.write_record(SPLIT_HEADER)?;
    write_split_rows(&mut w, &split.train, "train")?;
    write_split_rows(&mut w, &split.calibration, "calibration")?;
    write_split_rows(&mut w, &split.test, "test")?;
    write_split_rows(&mut w, &split.repeated_pool, "repeated")?;
    w.flush()?;

    let sidecar = SplitSidecar {
        seed: split.seed,
        fractions,
        dropped_zero_duration,
        n_train: split.train.len(),
        n_calibration: split.calibration.len(),
        n_test: split.test.len(),
        n_repeated: split.repeated_pool.len(),
    };
    let mut f = File::create(sidecar_path(csv_path))?;
    f.write_all(serde_json::to_string_pretty(&sidecar)?.as_bytes())?;
    Ok(())
}

pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    let stem = csv_path.file_stem().unwrap_or_default().to_string_lossy();
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

/// Read back a split written by [`write_splits`].
pub fn read_splits(csv_path: &Path) -> Result<DatasetSplit> {
    let mut reader = csv::Reader::from_path(csv_path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let cols: Vec<usize> = SPLIT_HEADER
        .iter()
        .map(|&h| col(h))
        .collect::<Result<_>>()?;

    let mut split = DatasetSplit {
        train: Vec::new(),
        calibration: Vec::new(),
        test: Vec::new(),
        repeated_pool: Vec::new(),
        seed: 0,
    };
    for (idx, row) in reader.records().enumerate() {
        let row_no = idx + 1;
        let row = row?;
        let rec = InteractionRecord {
            user_id: UserId(parse_num(&row[cols[0]], row_no, "user id")?),
            item_id: ItemId(parse_num(&row[cols[1]], row_no, "item id")?),
            timestamp: parse_num(&row[cols[2]], row_no, "timestamp")?,
            watch_time: parse_num(&row[cols[3]], row_no, "watch time")?,
            duration: parse_num(&row[cols[4]], row_no, "duration")?,
            flagged: parse_flag(&row[cols[5]], row_no)?,
            view_index: parse_num(&row[cols[6]], row_no, "view index")?,
        };
        match &row[cols[7]] {
            "train" => split.train.push(rec),
            "calibration" => split.calibration.push(rec),
            "test" => split.test.push(rec),
            "repeated" => split.repeated_pool.push(rec),
            other => {
                return Err(Error::BadRow {
                    row: row_no,
                    message: format!("unknown split label `{other}`"),
                })
            }
        }
    }
    if let Ok(text) = std::fs::read_to_string(sidecar_path(csv_path)) {
        if let Ok(sidecar) = serde_json::from_str::<SplitSidecar>(&text) {
            split.seed = sidecar.seed;
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(
        user: u64,
        item: u64,
        ts: i64,
        watch: f64,
        dur: f64,
        flagged: bool,
    ) -> InteractionRecord {
        InteractionRecord {
            user_id: UserId(user),
            item_id: ItemId(item),
            timestamp: ts,
            watch_time: watch,
            duration: dur,
            flagged,
            view_index: 0,
        }
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const HEADER: &str = "user_id,item_id,timestamp_ms,watch_time_s,duration_s,flagged\n";

    #[test]
    fn ingest_distinct_items_all_first_views() {
        let f = write_csv(&format!(
            "{HEADER}1,10,1000,5,10,0\n1,11,2000,3,10,0\n2,10,1500,8,10,1\n"
        ));
        let out = load_interactions(f.path(), &ColumnSchema::default()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(out.records.iter().all(|r| r.view_index == 1));
        assert_eq!(out.dropped_zero_duration, 0);
    }

    #[test]
    fn ingest_second_view_gets_index_two() {
        let f = write_csv(&format!("{HEADER}1,10,2000,5,10,0\n1,10,1000,3,10,0\n"));
        let out = load_interactions(f.path(), &ColumnSchema::default()).unwrap();
        assert_eq!(out.records[0].timestamp, 1000);
        assert_eq!(out.records[0].view_index, 1);
        assert_eq!(out.records[1].timestamp, 2000);
        assert_eq!(out.records[1].view_index, 2);
    }

    #[test]
    fn ingest_drops_and_counts_zero_duration() {
        let f = write_csv(&format!("{HEADER}1,10,1000,5,10,0\n1,11,2000,3,0,0\n"));
        let out = load_interactions(f.path(), &ColumnSchema::default()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.dropped_zero_duration, 1);
    }

    #[test]
    fn ingest_missing_column_names_it() {
        let f = write_csv("user_id,item_id,timestamp_ms,watch_time_s,duration_s\n1,1,1,1,1\n");
        let err = load_interactions(f.path(), &ColumnSchema::default()).unwrap_err();
        match err {
            Error::MissingColumn(c) => assert_eq!(c, "flagged"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn ingest_bad_row_reports_row_number() {
        let f = write_csv(&format!("{HEADER}1,10,1000,5,10,0\n1,oops,2000,3,10,0\n"));
        let err = load_interactions(f.path(), &ColumnSchema::default()).unwrap_err();
        match err {
            Error::BadRow { row, .. } => assert_eq!(row, 2),
            other => panic!("expected BadRow, got {other:?}"),
        }
    }

    #[test]
    fn ingest_millisecond_columns_are_scaled() {
        let schema = ColumnSchema {
            watch_time: "watch_time_ms".into(),
            duration: "duration_ms".into(),
            time_unit: TimeUnit::Milliseconds,
            ..ColumnSchema::default()
        };
        let f = write_csv(
            "user_id,item_id,timestamp_ms,watch_time_ms,duration_ms,flagged\n1,10,1000,5000,10000,0\n",
        );
        let out = load_interactions(f.path(), &schema).unwrap();
        assert_eq!(out.records[0].watch_time, 5.0);
        assert_eq!(out.records[0].duration, 10.0);
    }

    #[test]
    fn watch_fraction_examples() {
        assert_eq!(rec(1, 1, 0, 5.0, 10.0, false).watch_fraction(), 50.0);
        assert_eq!(rec(1, 1, 0, 0.0, 10.0, false).watch_fraction(), 0.0);
        assert_eq!(rec(1, 1, 0, 15.0, 10.0, false).watch_fraction(), 150.0);
    }

    #[test]
    fn watch_fraction_full_iff_watch_equals_duration() {
        let r = rec(1, 1, 0, 7.25, 7.25, false);
        assert_eq!(r.watch_fraction(), 100.0);
        let r = rec(1, 1, 0, 7.2499, 7.25, false);
        assert!(r.watch_fraction() < 100.0);
    }

    #[test]
    fn k_core_keeps_saturated_input_unchanged() {
        // 2 users x 2 items, every user and item has 2 interactions.
        let mut records = vec![
            rec(1, 10, 0, 1.0, 1.0, false),
            rec(1, 11, 1, 1.0, 1.0, false),
            rec(2, 10, 0, 1.0, 1.0, false),
            rec(2, 11, 1, 1.0, 1.0, false),
        ];
        sort_and_index(&mut records);
        let out = k_core_filter(records.clone(), 2);
        assert_eq!(out, records);
    }

    #[test]
    fn k_core_removes_light_user_then_rechecks_items() {
        // User 3 has a single interaction with item 12; once user 3 goes,
        // item 12 has zero interactions and disappears as well.
        let mut records = vec![
            rec(1, 10, 0, 1.0, 1.0, false),
            rec(1, 11, 1, 1.0, 1.0, false),
            rec(2, 10, 0, 1.0, 1.0, false),
            rec(2, 11, 1, 1.0, 1.0, false),
            rec(3, 12, 0, 1.0, 1.0, false),
        ];
        sort_and_index(&mut records);
        let out = k_core_filter(records, 2);
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|r| r.user_id != UserId(3)));
        assert!(out.iter().all(|r| r.item_id != ItemId(12)));
    }

    /// Naive fixpoint oracle: recompute counts and filter one pass at a time.
    fn k_core_oracle(mut records: Vec<InteractionRecord>, k: usize) -> Vec<InteractionRecord> {
        loop {
            let mut changed = false;
            let mut uc: HashMap<UserId, usize> = HashMap::new();
            let mut ic: HashMap<ItemId, usize> = HashMap::new();
            for r in &records {
                *uc.entry(r.user_id).or_insert(0) += 1;
                *ic.entry(r.item_id).or_insert(0) += 1;
            }
            let kept: Vec<InteractionRecord> = records
                .iter()
                .copied()
                .filter(|r| uc[&r.user_id] >= k && ic[&r.item_id] >= k)
                .collect();
            if kept.len() != records.len() {
                changed = true;
            }
            records = kept;
            if !changed {
                return records;
            }
        }
    }

    #[test]
    fn k_core_matches_naive_oracle_on_random_bipartite_graph() {
        use rand::Rng;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut records = Vec::new();
        for _ in 0..400 {
            let u = rng.gen_range(0..30);
            let i = rng.gen_range(0..30);
            let ts = rng.gen_range(0..100_000);
            records.push(rec(u, i, ts, 1.0, 2.0, false));
        }
        sort_and_index(&mut records);
        let fast = k_core_filter(records.clone(), 3);
        let slow = k_core_oracle(records, 3);
        assert_eq!(fast, slow);
        // Fixpoint property: everyone surviving has >= k interactions.
        let mut uc: HashMap<UserId, usize> = HashMap::new();
        let mut ic: HashMap<ItemId, usize> = HashMap::new();
        for r in &fast {
            *uc.entry(r.user_id).or_insert(0) += 1;
            *ic.entry(r.item_id).or_insert(0) += 1;
        }
        assert!(uc.values().all(|&c| c >= 3));
        assert!(ic.values().all(|&c| c >= 3));
    }

    fn hundred_singles() -> Vec<InteractionRecord> {
        let mut records = Vec::new();
        for i in 0..100u64 {
            records.push(rec(i, 1000 + i, i as i64, 1.0, 2.0, false));
        }
        sort_and_index(&mut records);
        records
    }

    #[test]
    fn split_hundred_records_yields_70_15_15() {
        let s = split(&hundred_singles(), (0.70, 0.15, 0.15), 42).unwrap();
        assert_eq!(s.train.len(), 70);
        assert_eq!(s.calibration.len(), 15);
        assert_eq!(s.test.len(), 15);
        assert!(s.repeated_pool.is_empty());
    }

    #[test]
    fn split_is_a_partition_of_single_views() {
        let records = hundred_singles();
        let s = split(&records, (0.70, 0.15, 0.15), 3).unwrap();
        let mut all: Vec<InteractionRecord> = s
            .train
            .iter()
            .chain(s.calibration.iter())
            .chain(s.test.iter())
            .copied()
            .collect();
        all.sort_by_key(|r| (r.user_id, r.timestamp, r.item_id));
        let mut input = records;
        input.sort_by_key(|r| (r.user_id, r.timestamp, r.item_id));
        assert_eq!(all, input);
    }

    #[test]
    fn split_excludes_test_items_from_repeated_pool() {
        // Force a tiny single-view set so every test item is predictable.
        let mut records = vec![
            rec(1, 10, 0, 1.0, 2.0, false),
            rec(2, 20, 0, 1.0, 2.0, false),
            rec(3, 30, 0, 1.0, 2.0, false),
            // user 4 sees items 10..30 twice
            rec(4, 10, 0, 1.0, 2.0, false),
            rec(4, 10, 10, 1.0, 2.0, false),
            rec(4, 20, 0, 1.0, 2.0, false),
            rec(4, 20, 10, 1.0, 2.0, false),
            rec(4, 30, 0, 1.0, 2.0, false),
            rec(4, 30, 10, 1.0, 2.0, false),
        ];
        sort_and_index(&mut records);
        let s = split(&records, (0.5, 0.25, 0.25), 11).unwrap();
        let test_items: HashSet<ItemId> = s.test.iter().map(|r| r.item_id).collect();
        assert!(!test_items.is_empty());
        assert!(s
            .repeated_pool
            .iter()
            .all(|r| !test_items.contains(&r.item_id)));
        assert!(s.repeated_pool.iter().all(|r| r.view_index >= 2));
    }

    #[test]
    fn split_is_deterministic_for_equal_seeds() {
        let records = hundred_singles();
        let a = split(&records, (0.70, 0.15, 0.15), 9).unwrap();
        let b = split(&records, (0.70, 0.15, 0.15), 9).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.calibration, b.calibration);
        assert_eq!(a.test, b.test);
        let c = split(&records, (0.70, 0.15, 0.15), 10).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn splits_round_trip_through_csv() {
        let mut records = hundred_singles();
        records.push(rec(0, 1000, 5, 1.0, 2.0, true));
        sort_and_index(&mut records);
        let s = split(&records, (0.70, 0.15, 0.15), 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("splits.csv");
        write_splits(&s, (0.70, 0.15, 0.15), 2, &path).unwrap();
        let back = read_splits(&path).unwrap();
        assert_eq!(back.train, s.train);
        assert_eq!(back.calibration, s.calibration);
        assert_eq!(back.test, s.test);
        assert_eq!(back.repeated_pool, s.repeated_pool);
        assert_eq!(back.seed, 4);
    }
}
