//! CSV readers and writers.
//!
//! One-sample files use the header `x1,...,xk,o,d,y`; two-sample files are a
//! labeled file `x1,...,xk,d,y` and an unlabeled file `x1,...,xk`. Missing
//! values are the literal token `NA`. Floats are written in Rust's shortest
//! round-trip form, so a read/write cycle is bit-exact.

use std::io::{Read, Write};

use crate::data::{
    validate_one_sample, validate_two_sample, Arm, LabeledRow, OneSampleDataset, OneSampleRow,
    TwoSampleDataset,
};
use crate::error::{Error, Result};

pub const NA: &str = "NA";

fn parse_err(line: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        line,
        detail: detail.into(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    parse_err(line, e.to_string())
}

fn parse_float(line: usize, col: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| {
        parse_err(
            line,
            format!("column {col}: cannot parse {s:?} as a number"),
        )
    })
}

fn parse_indicator(line: usize, col: &str, s: &str) -> Result<u8> {
    match s.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(parse_err(
            line,
            format!("column {col}: indicator must be 0 or 1, got {other:?}"),
        )),
    }
}

fn optional<T>(s: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if s.trim() == NA {
        Ok(None)
    } else {
        f(s).map(Some)
    }
}

fn header_names<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>> {
    Ok(rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect())
}

fn check_trailing(header: &[String], expected: &[&str]) -> Result<usize> {
    let t = expected.len();
    if header.len() <= t || header[header.len() - t..] != *expected {
        return Err(parse_err(
            1,
            format!(
                "header must be x1,...,xk,{} with k >= 1, got {}",
                expected.join(","),
                header.join(",")
            ),
        ));
    }
    Ok(header.len() - t)
}

fn covariates(line: usize, rec: &csv::StringRecord, k: usize) -> Result<Vec<f64>> {
    (0..k)
        .map(|j| parse_float(line, &format!("x{}", j + 1), &rec[j]))
        .collect()
}

/// Parse one-sample rows without validating the NA coupling.
pub fn parse_one_sample<R: Read>(reader: R) -> Result<Vec<OneSampleRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let header = header_names(&mut rdr)?;
    let k = check_trailing(&header, &["o", "d", "y"])?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let x = covariates(line, &rec, k)?;
        let o = parse_indicator(line, "o", &rec[k])?;
        let d = optional(&rec[k + 1], |s| parse_indicator(line, "d", s))?;
        let y = optional(&rec[k + 2], |s| parse_float(line, "y", s))?;
        rows.push(OneSampleRow {
            x,
            observed: o == 1,
            d: d.map(|v| Arm::from_indicator(v).expect("indicator already checked")),
            y,
        });
    }
    Ok(rows)
}

/// Read and validate a one-sample CSV.
pub fn read_one_sample<R: Read>(reader: R) -> Result<OneSampleDataset> {
    validate_one_sample(parse_one_sample(reader)?)
}

pub fn parse_labeled<R: Read>(reader: R) -> Result<Vec<LabeledRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let header = header_names(&mut rdr)?;
    let k = check_trailing(&header, &["d", "y"])?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let x = covariates(line, &rec, k)?;
        let d = parse_indicator(line, "d", &rec[k])?;
        let y = parse_float(line, "y", &rec[k + 1])?;
        rows.push(LabeledRow {
            x,
            d: Arm::from_indicator(d).expect("indicator already checked"),
            y,
        });
    }
    Ok(rows)
}

pub fn parse_unlabeled<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let header = header_names(&mut rdr)?;
    if header.is_empty() {
        return Err(parse_err(1, "header must be x1,...,xk with k >= 1"));
    }
    let k = header.len();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        rows.push(covariates(line, &rec, k)?);
    }
    Ok(rows)
}

pub fn read_two_sample<R1: Read, R2: Read>(labeled: R1, unlabeled: R2) -> Result<TwoSampleDataset> {
    validate_two_sample(parse_labeled(labeled)?, parse_unlabeled(unlabeled)?)
}

fn x_header(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("x{j}")).collect()
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

pub fn write_one_sample<W: Write>(w: W, data: &OneSampleDataset) -> Result<()> {
    let mut wtr = writer(w);
    let mut header = x_header(data.k());
    header.extend(["o", "d", "y"].map(String::from));
    wtr.write_record(&header).map_err(io_err)?;
    for r in data.rows() {
        let mut rec: Vec<String> = r.x.iter().map(|&v| fmt_f64(v)).collect();
        rec.push(if r.observed { "1" } else { "0" }.to_string());
        rec.push(r.d.map_or(NA.to_string(), |d| d.indicator().to_string()));
        rec.push(r.y.map_or(NA.to_string(), fmt_f64));
        wtr.write_record(&rec).map_err(io_err)?;
    }
    wtr.flush().map_err(io_err)
}

pub fn write_labeled<W: Write>(w: W, rows: &[LabeledRow], k: usize) -> Result<()> {
    let mut wtr = writer(w);
    let mut header = x_header(k);
    header.extend(["d", "y"].map(String::from));
    wtr.write_record(&header).map_err(io_err)?;
    for r in rows {
        let mut rec: Vec<String> = r.x.iter().map(|&v| fmt_f64(v)).collect();
        rec.push(r.d.indicator().to_string());
        rec.push(fmt_f64(r.y));
        wtr.write_record(&rec).map_err(io_err)?;
    }
    wtr.flush().map_err(io_err)
}

pub fn write_unlabeled<W: Write>(w: W, rows: &[Vec<f64>], k: usize) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(x_header(k)).map_err(io_err)?;
    for z in rows {
        wtr.write_record(z.iter().map(|&v| fmt_f64(v)))
            .map_err(io_err)?;
    }
    wtr.flush().map_err(io_err)
}
