use std::io::Write;
use std::path::Path;

use super::{SampledTrace, TraceError};

/// Parses a CSV trace: time in the first column, values in the rest.
///
/// A single leading header row is skipped if any of its cells is
/// non-numeric. Row numbers in errors are 1-based and count the header.
pub fn parse_csv(bytes: &[u8]) -> Result<SampledTrace, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    let mut first_data_row = None;

    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| TraceError::Csv(format!("row {row}: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Result<f64, &str>> = record
            .iter()
            .map(|cell| cell.parse::<f64>().map_err(|_| cell))
            .collect();
        if idx == 0 && parsed.iter().any(Result::is_err) {
            continue;
        }
        let w = *width.get_or_insert(parsed.len());
        if parsed.len() != w {
            return Err(TraceError::Ragged {
                row,
                expected: w,
                found: parsed.len(),
            });
        }
        if w < 2 {
            return Err(TraceError::NoValues);
        }
        for (column, cell) in parsed.iter().enumerate() {
            match cell {
                Ok(v) if v.is_finite() => {}
                Ok(_) => return Err(TraceError::NonFinite { row }),
                Err(cell) => {
                    return Err(TraceError::NonNumeric {
                        row,
                        column: column + 1,
                        cell: cell.to_string(),
                    })
                }
            }
        }
        let t = *parsed[0].as_ref().expect("checked above");
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(TraceError::NonIncreasing { row });
            }
        }
        first_data_row.get_or_insert(row);
        times.push(t);
        values.extend(parsed[1..].iter().map(|c| *c.as_ref().expect("checked above")));
    }

    let dim = width.map(|w| w - 1).unwrap_or(0);
    if times.len() < 2 {
        return Err(TraceError::TooShort(times.len()));
    }
    SampledTrace::new(times, values, dim)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<SampledTrace, crate::Error> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| crate::Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_csv(&bytes)?)
}

/// Writes a trace as CSV with a `t,x0,x1,...` header.
///
/// Numbers use the shortest representation that round-trips exactly.
pub fn write_csv<W: Write>(trace: &SampledTrace, out: W) -> Result<(), TraceError> {
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| TraceError::Csv(e.to_string());
    let mut header = vec!["t".to_string()];
    header.extend((0..trace.dim()).map(|d| format!("x{d}")));
    writer.write_record(&header).map_err(csv_err)?;
    for (t, row) in trace.rows() {
        let mut record = vec![t.to_string()];
        record.extend(row.iter().map(f64::to_string));
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| TraceError::Csv(e.to_string()))
}

pub fn write_csv_file(trace: &SampledTrace, path: impl AsRef<Path>) -> Result<(), crate::Error> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| crate::Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv(trace, std::io::BufWriter::new(file))?;
    Ok(())
}
