//! Flat-file formats: dense matrices as CSV with a header row.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{param, Result};

/// Write `m` as CSV with one header row of column names.
pub fn write_matrix_csv<W: Write>(out: W, m: &DMatrix<f64>, prefix: &str) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record((0..m.ncols()).map(|j| format!("{prefix}{j}")))?;
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let ncols = r.headers()?.len();
    let mut data = Vec::new();
    let mut nrows = 0;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != ncols {
            return param(format!("row {nrows} has {} fields, expected {ncols}", rec.len()));
        }
        for field in rec.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| crate::Error::Parameter(format!("not a number: {field:?}")))?;
            data.push(v);
        }
        nrows += 1;
    }
    Ok(DMatrix::from_row_slice(nrows, ncols, &data))
}

pub fn save_matrix_csv(path: &Path, m: &DMatrix<f64>, prefix: &str) -> Result<()> {
    write_matrix_csv(File::create(path)?, m, prefix)
}

pub fn load_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    read_matrix_csv(File::open(path)?)
}
