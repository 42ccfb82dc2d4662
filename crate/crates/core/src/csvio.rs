//! Reader and writer for the time-series CSV layout used by every command:
//! a header line, a first column `t` in seconds on a uniform grid, then one
//! column per named signal.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// Maximum relative deviation of any time step from the mean step.
pub const GRID_UNIFORMITY_RTOL: f64 = 1e-9;

/// Named columns sampled on one uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub t0: f64,
    pub dt: f64,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Result<TimeSeries> {
        let (_, values) = self
            .columns
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        TimeSeries::new(self.t0, self.dt, values.clone())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|(n, _)| n == name)
    }

    /// Builds a table from series that share one grid.
    pub fn from_series(columns: Vec<(&str, &TimeSeries)>) -> Result<Table> {
        let first = columns.first().ok_or(Error::EmptySeries)?.1;
        for (_, s) in &columns[1..] {
            first.check_grid(s)?;
        }
        Ok(Table {
            t0: first.t0(),
            dt: first.dt(),
            columns: columns
                .into_iter()
                .map(|(n, s)| (n.to_string(), s.values().to_vec()))
                .collect(),
        })
    }
}

/// Parses a time-series CSV. Row numbers in errors are 1-based file lines.
pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Csv("missing header line".into()));
    }
    if &headers[0] != "t" {
        return Err(Error::CsvRow {
            row: 1,
            msg: format!("first column must be `t`, found `{}`", &headers[0]),
        });
    }
    if headers.len() < 2 {
        return Err(Error::CsvRow {
            row: 1,
            msg: "no signal columns after `t`".into(),
        });
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() || name == "t" || names[..i].contains(name) {
            return Err(Error::CsvRow {
                row: 1,
                msg: format!("invalid or repeated column name `{name}`"),
            });
        }
    }

    let mut times = Vec::new();
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|e| Error::CsvRow { row, msg: e.to_string() })?;
        if record.len() != headers.len() {
            return Err(Error::CsvRow {
                row,
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::CsvRow {
                row,
                msg: format!("column {} (`{}`): cannot parse `{field}`", col + 1, &headers[col]),
            })?;
            if !v.is_finite() {
                return Err(Error::CsvRow {
                    row,
                    msg: format!("column {} (`{}`): non-finite value", col + 1, &headers[col]),
                });
            }
            if col == 0 {
                times.push(v);
            } else {
                data[col - 1].push(v);
            }
        }
    }

    if times.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    if times.len() == 1 {
        return Err(Error::CsvRow {
            row: 2,
            msg: "at least two rows are needed to define the time step".into(),
        });
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::NonUniformGrid { row: 3 });
    }
    // Relative bound on the step plus the rounding slack of decimal time stamps.
    let t_mag = times[0].abs().max(times[times.len() - 1].abs());
    let tol = GRID_UNIFORMITY_RTOL * dt + 4.0 * f64::EPSILON * t_mag;
    for (i, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if !(step > 0.0) || (step - dt).abs() > tol {
            // w[1] is data row i + 1; +2 converts to a 1-based file line after the header.
            return Err(Error::NonUniformGrid { row: i + 3 });
        }
    }
    Ok(Table {
        t0: times[0],
        dt,
        columns: names.into_iter().zip(data).collect(),
    })
}

pub fn read_table_bytes(bytes: &[u8]) -> Result<Table> {
    read_table(bytes)
}

/// Writes a table with shortest round-trip number formatting.
pub fn write_table<W: Write>(table: &Table, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend(table.columns.iter().map(|(n, _)| n.clone()));
    w.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..table.len() {
        row.clear();
        row.push(fmt_num(table.t0 + i as f64 * table.dt));
        row.extend(table.columns.iter().map(|(_, v)| fmt_num(v[i])));
        w.write_record(&row).map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// Writes arbitrary rows under a header; used for non-time-series outputs
/// such as spectra and restoring-force samples.
pub fn write_rows<W: Write>(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(|e| Error::Csv(e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|&v| fmt_num(v)))
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}
