//! Artifact serialization: CSV schemas, state checkpoints, JSON helpers.
//!
//! All floating-point values are written with 17 significant digits
//! (`{:.16e}`), which round-trips every finite f64 exactly; identical runs
//! therefore produce byte-identical files.
//!
//! Topology series (ground truth and estimates) share one schema with a
//! `t,i,j,value` header: rows with `i != j` carry adjacency entries, and
//! since the adjacency diagonal is structurally zero, rows with `i == j`
//! carry the exogenous gain `b_i` instead.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hindsight::ComparatorTrace;
use crate::model::TopologySnapshot;
use crate::tracker::Tracker;

/// 17-significant-digit scientific notation; parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Csv(format!("bad float '{s}': {e}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|e| Error::Csv(format!("bad index '{s}': {e}")))
}

/// Write a topology series (ground truth or estimates).
pub fn write_topology_csv(path: &Path, snapshots: &[TopologySnapshot]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "i", "j", "value"])?;
    for snap in snapshots {
        let n = snap.dim();
        for i in 0..n {
            for j in 0..n {
                let value = if i == j { snap.b[i] } else { snap.a[(i, j)] };
                w.write_record([
                    snap.t.to_string(),
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(value),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_topology_csv(path: &Path) -> Result<Vec<TopologySnapshot>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut per_t: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Csv(format!("expected 4 columns, got {}", record.len())));
        }
        let t = parse_usize(&record[0])?;
        let i = parse_usize(&record[1])?;
        let j = parse_usize(&record[2])?;
        let value = parse_f64(&record[3])?;
        n = n.max(i + 1).max(j + 1);
        per_t.entry(t).or_default().push((i, j, value));
    }
    let mut snapshots = Vec::with_capacity(per_t.len());
    for (t, rows) in per_t {
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for (i, j, value) in rows {
            if i == j {
                b[i] = value;
            } else {
                a[(i, j)] = value;
            }
        }
        snapshots.push(TopologySnapshot::new(t, a, b)?);
    }
    Ok(snapshots)
}

/// Write a dense matrix with a `c0,c1,...` header row.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = (0..m.ncols()).map(|c| format!("c{c}")).collect();
    w.write_record(&header)?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let cols = reader.headers()?.len();
    let mut data: Vec<f64> = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        if record.len() != cols {
            return Err(Error::Csv(format!(
                "ragged matrix: row {} has {} fields, expected {cols}",
                rows + 1,
                record.len()
            )));
        }
        for field in record.iter() {
            data.push(parse_f64(field)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Csv(format!("empty matrix file {}", path.display())));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Comparator trace rows: `t,i,coordinate,value,converged,iterations`.
pub fn write_comparators_csv(path: &Path, trace: &ComparatorTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "i", "coordinate", "value", "converged", "iterations"])?;
    for t in 1..=trace.horizon() {
        for i in 0..trace.n() {
            let v = &trace.v_star[i][t - 1];
            for k in 0..v.len() {
                w.write_record([
                    t.to_string(),
                    i.to_string(),
                    k.to_string(),
                    fmt_f64(v[k]),
                    trace.converged[i][t - 1].to_string(),
                    trace.iterations[i][t - 1].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_comparators_csv(path: &Path) -> Result<ComparatorTrace> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut n = 0;
    let mut horizon = 0;
    let mut dim = 0;
    let mut rows: Vec<(usize, usize, usize, f64, bool, usize)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 6 {
            return Err(Error::Csv(format!("expected 6 columns, got {}", record.len())));
        }
        let t = parse_usize(&record[0])?;
        let i = parse_usize(&record[1])?;
        let k = parse_usize(&record[2])?;
        let value = parse_f64(&record[3])?;
        let converged = match record[4].trim() {
            "true" => true,
            "false" => false,
            other => return Err(Error::Csv(format!("bad converged flag '{other}'"))),
        };
        let iterations = parse_usize(&record[5])?;
        n = n.max(i + 1);
        horizon = horizon.max(t);
        dim = dim.max(k + 1);
        rows.push((t, i, k, value, converged, iterations));
    }
    let mut trace = ComparatorTrace {
        v_star: vec![vec![DVector::zeros(dim); horizon]; n],
        converged: vec![vec![false; horizon]; n],
        iterations: vec![vec![0; horizon]; n],
    };
    for (t, i, k, value, converged, iterations) in rows {
        trace.v_star[i][t - 1][k] = value;
        trace.converged[i][t - 1] = converged;
        trace.iterations[i][t - 1] = iterations;
    }
    Ok(trace)
}

/// One row of the run trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub regret_cumulative: f64,
    /// Absent when the bound's assumptions fail.
    pub bound_cumulative: Option<f64>,
    /// Absent when no ground truth is available (ingested streams).
    pub mse: Option<f64>,
}

pub fn write_traces_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "regret_cumulative", "bound_cumulative", "mse"])?;
    for row in rows {
        w.write_record([
            row.t.to_string(),
            fmt_f64(row.regret_cumulative),
            row.bound_cumulative.map(fmt_f64).unwrap_or_default(),
            row.mse.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Tracker checkpoint as a single self-describing JSON file.
pub fn write_checkpoint(path: &Path, tracker: &Tracker) -> Result<()> {
    write_json(path, tracker)
}

pub fn read_checkpoint(path: &Path) -> Result<Tracker> {
    read_json(path)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Lowercase hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
