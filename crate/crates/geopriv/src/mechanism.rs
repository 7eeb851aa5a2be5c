//! Cell-to-cell mechanisms as row-stochastic matrices.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Dimension("matrix needs at least one row".into()));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Apply `f` to every entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

pub const ROW_SUM_TOL: f64 = 1e-8;

/// A mechanism from input cells to output cells: `k.get(x, z)` is the
/// probability of reporting cell `z` when the input is cell `x`. Every
/// row is a probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMechanism {
    k: Matrix,
}

impl DiscreteMechanism {
    pub fn new(k: Matrix) -> Result<Self> {
        for i in 0..k.nrows() {
            let mut sum = 0.0;
            for j in 0..k.ncols() {
                let v = k.get(i, j);
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::domain(format!(
                        "mechanism entry ({i}, {j}) = {v} is negative or non-finite"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::domain(format!(
                    "row {i} sums to {sum}, not 1 within {ROW_SUM_TOL}"
                )));
            }
        }
        Ok(DiscreteMechanism { k })
    }

    /// `n x n` uniform mechanism: every row is `1/n`.
    pub fn uniform(n: usize) -> Self {
        let mut k = Matrix::zeros(n, n);
        let p = 1.0 / n as f64;
        for i in 0..n {
            for j in 0..n {
                k.set(i, j, p);
            }
        }
        DiscreteMechanism { k }
    }

    /// Identity mechanism (report the true cell).
    pub fn identity(n: usize) -> Self {
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            k.set(i, i, 1.0);
        }
        DiscreteMechanism { k }
    }

    pub fn num_inputs(&self) -> usize {
        self.k.nrows()
    }

    pub fn num_outputs(&self) -> usize {
        self.k.ncols()
    }

    #[inline]
    pub fn prob(&self, x: usize, z: usize) -> f64 {
        self.k.get(x, z)
    }

    pub fn row(&self, x: usize) -> &[f64] {
        self.k.row(x)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.k
    }

    /// Write as CSV: header row of output cell indices, then one row per
    /// input cell led by its index.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (0..self.num_outputs()).map(|z| z.to_string()).collect();
        writeln!(w, "input_cell,{}", header.join(","))?;
        for x in 0..self.num_inputs() {
            let row: Vec<String> = self.row(x).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{x},{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty mechanism file".into()))??;
        let cols = header.trim().split(',').count();
        if cols < 2 || !header.starts_with("input_cell") {
            return Err(Error::Parse("expected header 'input_cell,<indices...>'".into()));
        }
        let n_out = cols - 1;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let x = crate::csvio::parse_field(parts.next(), "input_cell", idx + 2)? as usize;
            if x != rows.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected input cell {}, got {x}",
                    idx + 2,
                    rows.len()
                )));
            }
            let row: Vec<f64> = parts
                .enumerate()
                .map(|(j, s)| {
                    crate::csvio::parse_field(Some(s), &format!("output {j}"), idx + 2)
                })
                .collect::<Result<_>>()?;
            if row.len() != n_out {
                return Err(Error::Parse(format!(
                    "line {}: expected {n_out} probabilities, got {}",
                    idx + 2,
                    row.len()
                )));
            }
            rows.push(row);
        }
        DiscreteMechanism::new(Matrix::from_rows(rows)?)
    }
}
