use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};

use super::{LabeledSeries, SeriesFrame};
use crate::error::{FitsError, Result};

/// Reads a comma-separated file with a header row.
///
/// With `has_timestamp_column`, the first column is kept verbatim as the
/// timestamp and excluded from the values. Parse errors report the 1-based
/// line number in the file and the 1-based column.
pub fn load_csv(path: &Path, has_timestamp_column: bool) -> Result<SeriesFrame> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let skip = usize::from(has_timestamp_column);
    if header.len() <= skip || header.iter().all(str::is_empty) {
        return Err(FitsError::Parse {
            row: 1,
            column: 1,
            message: "missing header or no value columns".into(),
        });
    }
    let channel_names: Vec<String> = header.iter().skip(skip).map(str::to_owned).collect();
    let width = header.len();

    let mut values = Vec::new();
    let mut timestamps = has_timestamp_column.then(Vec::new);
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| FitsError::Parse {
            row: line,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != width {
            return Err(FitsError::Parse {
                row: line,
                column: record.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        if let Some(ts) = timestamps.as_mut() {
            ts.push(record[0].to_owned());
        }
        for (j, cell) in record.iter().enumerate().skip(skip) {
            let v: f64 = cell.parse().map_err(|_| FitsError::Parse {
                row: line,
                column: j + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(FitsError::Parse {
                    row: line,
                    column: j + 1,
                    message: format!("non-finite value `{cell}`"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(FitsError::Parse {
            row: 2,
            column: 1,
            message: "file has no data rows".into(),
        });
    }
    let values = Array2::from_shape_vec((rows, channel_names.len()), values)
        .expect("row widths checked");
    Ok(SeriesFrame {
        values,
        channel_names,
        timestamps,
    })
}

fn csv_err(path: &Path, e: csv::Error) -> FitsError {
    FitsError::csv(path, e)
}

/// One `0`/`1` per line; an optional non-numeric first line is treated as a header.
pub fn load_labels(path: &Path) -> Result<Vec<bool>> {
    let text = fs::read_to_string(path).map_err(|e| FitsError::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.trim();
        if cell.is_empty() {
            continue;
        }
        match cell {
            "0" | "0.0" => labels.push(false),
            "1" | "1.0" => labels.push(true),
            _ if i == 0 && cell.parse::<f64>().is_err() => {}
            _ => {
                return Err(FitsError::Parse {
                    row: i + 1,
                    column: 1,
                    message: format!("label `{cell}` is not 0 or 1"),
                })
            }
        }
    }
    Ok(labels)
}

/// Moves the column named `column` (case-insensitive) out of the values and
/// into the labels; any nonzero value marks an anomaly.
pub fn split_label_column(frame: &SeriesFrame, column: &str) -> Result<LabeledSeries> {
    let idx = frame
        .channel_names
        .iter()
        .position(|n| n.eq_ignore_ascii_case(column))
        .ok_or_else(|| FitsError::InvalidArgument(format!("no `{column}` column")))?;
    if frame.channels() < 2 {
        return Err(FitsError::InvalidArgument("no value columns besides the label".into()));
    }
    let labels = frame.values.column(idx).iter().map(|&v| v != 0.0).collect();
    let keep: Vec<usize> = (0..frame.channels()).filter(|&c| c != idx).collect();
    Ok(LabeledSeries {
        values: frame.values.select(Axis(1), &keep),
        labels,
    })
}

pub fn write_values_csv(path: &Path, names: &[String], values: ArrayView2<'_, f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(names).map_err(|e| csv_err(path, e))?;
    for row in values.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| FitsError::io(path, e))
}

pub fn write_labels(path: &Path, labels: &[bool]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(|e| FitsError::io(path, e))?);
    for &l in labels {
        writeln!(f, "{}", u8::from(l)).map_err(|e| FitsError::io(path, e))?;
    }
    f.flush().map_err(|e| FitsError::io(path, e))
}
