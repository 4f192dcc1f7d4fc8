//! Monitoring-log CSV format.
//!
//! Header row required, comma separated, one row per observation: ten
//! feature columns, the normalized `target` and an integer `task_id`.
//! Column order is free; the column set is fixed.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{build_stream, Sample, TaskStream, N_FEATURES};
use crate::error::{Error, Result};

pub const FEATURE_COLUMNS: [&str; N_FEATURES] = [
    "perc_ost_full",
    "ave_oss_cpu",
    "ave_mds_cpu",
    "num_conc_jobs",
    "fs_read_vol",
    "fs_write_vol",
    "num_mkdir_op",
    "num_rename_op",
    "num_rmdir_op",
    "num_unlink_op",
];

pub const COLUMNS: [&str; N_FEATURES + 2] = [
    "perc_ost_full",
    "ave_oss_cpu",
    "ave_mds_cpu",
    "num_conc_jobs",
    "fs_read_vol",
    "fs_write_vol",
    "num_mkdir_op",
    "num_rename_op",
    "num_rmdir_op",
    "num_unlink_op",
    "target",
    "task_id",
];

/// Parse raw samples, in file order, from CSV text.
///
/// Features are returned exactly as written; labels are derived from the
/// target. Errors name the 1-based line (header = line 1) and column.
pub fn read_samples<R: Read>(reader: R) -> Result<Vec<Sample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::data_at(format!("unreadable header: {e}"), 1, None))?
        .clone();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        if !COLUMNS.contains(&name) {
            return Err(Error::data_at("unknown column", 1, Some(name)));
        }
        if index.insert(name, i).is_some() {
            return Err(Error::data_at("duplicate column", 1, Some(name)));
        }
    }
    if let Some(missing) = COLUMNS.iter().find(|c| !index.contains_key(*c)) {
        return Err(Error::data_at("missing column", 1, Some(missing)));
    }
    let positions: Vec<usize> = COLUMNS.iter().map(|c| index[c]).collect();

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| {
            let line = e.position().map_or(line, |p| p.line() as usize);
            Error::data_at(format!("malformed record: {e}"), line, None)
        })?;
        let cell = |col: usize| -> Result<&str> {
            record
                .get(positions[col])
                .ok_or_else(|| Error::data_at("missing cell", line, Some(COLUMNS[col])))
        };
        let number = |col: usize| -> Result<f64> {
            let text = cell(col)?;
            let v: f64 = text
                .parse()
                .map_err(|_| Error::data_at(format!("not a number: {text:?}"), line, Some(COLUMNS[col])))?;
            if !v.is_finite() {
                return Err(Error::data_at("non-finite value", line, Some(COLUMNS[col])));
            }
            Ok(v)
        };

        let features = (0..N_FEATURES).map(number).collect::<Result<Vec<_>>>()?;
        let target = number(N_FEATURES)?;
        let task_text = cell(N_FEATURES + 1)?;
        let task_id: u32 = task_text.parse().map_err(|_| {
            Error::data_at(
                format!("task id must be a non-negative integer, got {task_text:?}"),
                line,
                Some("task_id"),
            )
        })?;
        let sample = Sample::new(features, target, task_id).map_err(|e| match e {
            Error::Data { message, .. } => Error::data_at(message, line, Some("target")),
            other => other,
        })?;
        samples.push(sample);
    }
    Ok(samples)
}

/// Write samples in the schema order. Floats use shortest round-trip text.
pub fn write_samples<'a, W, I>(writer: W, samples: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Sample>,
{
    let mut wtr = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Internal(format!("csv write: {e}"));
    wtr.write_record(COLUMNS).map_err(io_err)?;
    for s in samples {
        if s.features.len() != N_FEATURES {
            return Err(Error::data(format!(
                "CSV schema has {N_FEATURES} features, sample has {}",
                s.features.len()
            )));
        }
        let mut row: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
        row.push(s.target_raw.to_string());
        row.push(s.task_id.to_string());
        wtr.write_record(&row).map_err(io_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::Internal(format!("csv flush: {e}")))?;
    Ok(())
}

/// Read a monitoring CSV and assemble the task stream: group by task id,
/// split each task with the seed, normalize on the first task's train split.
pub fn load_csv(path: impl AsRef<Path>, split_fraction: f64, seed: u64) -> Result<TaskStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let samples = read_samples(std::io::BufReader::new(file))?;
    if samples.is_empty() {
        return Err(Error::data(format!("{} has no data rows", path.display())));
    }
    build_stream(samples, split_fraction, seed)
}

/// Write every sample of a stream, task by task, train before test.
pub fn save_csv(path: impl AsRef<Path>, stream: &TaskStream) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let samples = stream.tasks.iter().flat_map(|t| t.train.iter().chain(&t.test));
    write_samples(std::io::BufWriter::new(file), samples)
}
