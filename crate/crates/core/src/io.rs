//! Point-set files and CSV tables.
//!
//! Point-set CSV files have one row per node holding its `m·d` coordinates,
//! under a header `x{j}_{i}` (coordinate `i` of component `j`, both counted
//! from 1), from which `d` and `m` are recovered on reading. JSON files hold
//! `{"d": .., "m": .., "points": [[[x_1, ..], ..], ..]}`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex::ProductPoint;
use crate::wce::ProductPointSet;

fn column_name(j: usize, i: usize) -> String {
    format!("x{j}_{i}")
}

fn parse_column(name: &str) -> Option<(usize, usize)> {
    let (j, i) = name.trim().strip_prefix('x')?.split_once('_')?;
    Some((j.parse().ok()?, i.parse().ok()?))
}

pub fn write_point_set_csv<W: Write>(set: &ProductPointSet, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<String> = (1..=set.m()).flat_map(|j| (1..=set.d()).map(move |i| column_name(j, i))).collect();
    out.write_record(&header)?;
    for p in set.points() {
        out.write_record(p.flat().iter().map(|v| format!("{v:?}")))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_point_set_csv<R: Read>(r: R) -> Result<ProductPointSet> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let mut cols = Vec::with_capacity(header.len());
    for name in header.iter() {
        cols.push(parse_column(name).ok_or_else(|| Error::Parse(format!("unexpected point-set column {name:?}")))?);
    }
    let m = cols.iter().map(|c| c.0).max().unwrap_or(0);
    let d = cols.iter().map(|c| c.1).max().unwrap_or(0);
    let expected: Vec<(usize, usize)> = (1..=m).flat_map(|j| (1..=d).map(move |i| (j, i))).collect();
    if m == 0 || d == 0 || cols != expected {
        return Err(Error::Parse("point-set header must list x{j}_{i} for j = 1..m, i = 1..d in order".into()));
    }
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let coords = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        points.push(ProductPoint::from_flat(&coords, d, m)?);
    }
    ProductPointSet::new(points)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a point set, choosing the format from the file extension
/// (`.csv`, anything else is JSON).
pub fn read_point_set(path: &Path) -> Result<ProductPointSet> {
    let file = BufReader::new(File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?);
    if is_csv(path) {
        read_point_set_csv(file)
    } else {
        Ok(serde_json::from_reader(file)?)
    }
}

pub fn write_point_set(path: &Path, set: &ProductPointSet) -> Result<()> {
    let mut file = BufWriter::new(File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?);
    if is_csv(path) {
        write_point_set_csv(set, &mut file)?;
    } else {
        serde_json::to_writer_pretty(&mut file, set)?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(())
}

/// Writes serializable rows as CSV with a header row.
pub fn write_rows_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rows_csv_file<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_rows_csv(rows, BufWriter::new(file))
}
