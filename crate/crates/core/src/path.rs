use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time-stamped sequence of prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PricePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidPath(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidPath("path is empty".into()));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite entry".into()));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPath(format!(
                "times must be strictly increasing (violated at row {})",
                i + 1
            )));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Last index `N` of the path.
    pub fn last_index(&self) -> usize {
        self.times.len() - 1
    }

    /// Sub-path over the inclusive index range `[from, to]`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from > to || to >= self.len() {
            return Err(Error::InvalidPath(format!(
                "slice [{from}, {to}] out of bounds for length {}",
                self.len()
            )));
        }
        Ok(Self {
            times: self.times[from..=to].to_vec(),
            values: self.values[from..=to].to_vec(),
        })
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.times, self.values)
    }

    /// Writes the `t,x` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "x"]).map_err(csv_err)?;
        for (t, x) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), x.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (times, values) = read_two_columns(reader, ("t", "x"))?;
        Self::new(times, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file =
            std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::read_csv(file).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

pub(crate) fn csv_err(err: csv::Error) -> Error {
    Error::Parse(err.to_string())
}

/// Reads a two-column numeric CSV with the given header names.
pub(crate) fn read_two_columns<R: Read>(
    reader: R,
    header: (&str, &str),
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.len() != 2 || &headers[0] != header.0 || &headers[1] != header.1 {
        return Err(Error::Parse(format!(
            "expected header `{},{}`, found `{}`",
            header.0,
            header.1,
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let parse = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().map_err(|e| {
                Error::Parse(format!("row {}: column `{}`: {e}", row + 1, &headers[i]))
            })
        };
        a.push(parse(0)?);
        b.push(parse(1)?);
    }
    Ok((a, b))
}
