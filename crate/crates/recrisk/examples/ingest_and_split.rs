//! Ingest a CSV log, derive view indices, k-core filter and split.
//!
//! ```bash
//! cargo run --release --example ingest_and_split
//! ```

use std::io::Write;

use recrisk::data::{k_core_filter, load_interactions, split, ColumnSchema};

fn main() -> recrisk::Result<()> {
    // A tiny hand-written log: user 1 watches item 10 twice, one row has
    // zero duration and gets dropped at ingest.
    let mut file = tempfile::NamedTempFile::new()?;
    writeln!(
        file,
        "user_id,item_id,timestamp_ms,watch_time_s,duration_s,flagged"
    )?;
    for row in [
        "1,10,1000,5.0,10.0,0",
        "1,11,2000,0.0,10.0,0",
        "1,10,3000,8.0,10.0,0",
        "1,12,4000,12.0,10.0,1",
        "2,10,1000,3.0,10.0,0",
        "2,11,2500,9.0,10.0,0",
        "2,13,3000,4.0,0.0,0", // zero duration: dropped
        "3,12,1000,7.0,10.0,0",
        "3,11,2000,2.0,10.0,0",
    ] {
        writeln!(file, "{row}")?;
    }

    let ingest = load_interactions(file.path(), &ColumnSchema::default())?;
    println!(
        "ingested {} records, dropped {} zero-duration rows",
        ingest.records.len(),
        ingest.dropped_zero_duration
    );
    for r in &ingest.records {
        println!(
            "  user {} item {} view {} watched {:>5.1}%{}",
            r.user_id,
            r.item_id,
            r.view_index,
            r.watch_fraction(),
            if r.flagged { "  [flagged]" } else { "" }
        );
    }

    let cored = k_core_filter(ingest.records.clone(), 2);
    println!(
        "2-core keeps {} of {} records",
        cored.len(),
        ingest.records.len()
    );

    let dataset = split(&cored, (0.5, 0.25, 0.25), 7)?;
    println!(
        "split: train {} / calibration {} / test {} / repeated {}",
        dataset.train.len(),
        dataset.calibration.len(),
        dataset.test.len(),
        dataset.repeated_pool.len()
    );
    Ok(())
}
