//! CSV report rows: one row per measured benchmark configuration.
//!
//! The column set is stable so downstream tooling can diff and plot runs:
//! times are integer nanoseconds (means over the measured iterations),
//! speedups are fixed four-decimal ratios, and a speedup cell is empty
//! when it does not apply to the row (reduce-flow rows have no
//! combine-vs-reduce ratio). Rows append to an existing file; the header
//! is written only when the file starts empty.

use anyhow::Context;
use mapfold_core::bench::PhaseTimes;
use std::fs::OpenOptions;
use std::path::Path;

pub const CSV_HEADER: [&str; 15] = [
    "benchmark",
    "flow",
    "workers",
    "size",
    "seed",
    "t_split_ns",
    "t_map_ns",
    "t_group_ns",
    "t_reduce_ns",
    "t_total_ns",
    "pairs_emitted",
    "cells_allocated",
    "distinct_keys",
    "speedup_vs_seq",
    "speedup_combine_vs_reduce",
];

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub benchmark: String,
    pub flow: String,
    pub workers: usize,
    pub size: String,
    pub seed: u64,
    pub times: PhaseTimes,
    pub pairs_emitted: u64,
    pub cells_allocated: u64,
    pub distinct_keys: u64,
    pub speedup_vs_seq: Option<f64>,
    pub speedup_combine_vs_reduce: Option<f64>,
}

fn ratio_cell(r: Option<f64>) -> String {
    match r {
        Some(v) => format!("{v:.4}"),
        None => String::new(),
    }
}

impl ReportRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.benchmark.clone(),
            self.flow.clone(),
            self.workers.to_string(),
            self.size.clone(),
            self.seed.to_string(),
            self.times.split_ns.to_string(),
            self.times.map_ns.to_string(),
            self.times.group_ns.to_string(),
            self.times.reduce_ns.to_string(),
            self.times.total_ns.to_string(),
            self.pairs_emitted.to_string(),
            self.cells_allocated.to_string(),
            self.distinct_keys.to_string(),
            ratio_cell(self.speedup_vs_seq),
            ratio_cell(self.speedup_combine_vs_reduce),
        ]
    }
}

/// Append rows to `path`, writing the header first if the file is new or
/// empty.
pub fn append_rows(path: &Path, rows: &[ReportRow]) -> anyhow::Result<()> {
    let existing = std::fs::metadata(path).map(|m| m.len()).unwrap_or(0);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    if existing == 0 {
        w.write_record(CSV_HEADER)?;
    }
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ReportRow {
        ReportRow {
            benchmark: "wc".into(),
            flow: "combine".into(),
            workers: 4,
            size: "small".into(),
            seed: 7,
            times: PhaseTimes {
                split_ns: 1,
                map_ns: 2,
                group_ns: 3,
                reduce_ns: 4,
                total_ns: 10,
            },
            pairs_emitted: 100,
            cells_allocated: 5,
            distinct_keys: 5,
            speedup_vs_seq: Some(2.5),
            speedup_combine_vs_reduce: None,
        }
    }

    #[test]
    fn header_written_once_and_rows_append() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        append_rows(&path, &[sample_row()]).unwrap();
        append_rows(&path, &[sample_row()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines[1], lines[2]);
        assert!(lines[1].starts_with("wc,combine,4,small,7,1,2,3,4,10,100,5,5,2.5000,"));
        assert!(lines[1].ends_with(',')); // empty trailing ratio cell
    }
}
