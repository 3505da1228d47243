//! Benchmark problem generators: RAN1 spin glasses and the binary
//! least-squares column update of nonnegative/binary matrix factorization.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ising::{IsingProblem, QuboProblem};
use crate::topology::Topology;
use crate::{Error, Result};

/// RAN1 instance on `t`: zero fields and an independent fair `+/-1` coupling
/// on every edge, drawn in sorted edge order.
pub fn ran1<R: Rng + ?Sized>(t: &Topology, rng: &mut R) -> IsingProblem {
    let mut p = IsingProblem::new(t.num_qubits());
    for (a, b) in t.edges() {
        let v = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        p.set_j(a, b, v).expect("topology edges are valid pairs");
    }
    p
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, actual: bad.len() });
        }
        Ok(Matrix { rows: rows.len(), cols, data: rows.into_iter().flatten().collect() })
    }

    /// Reads a headerless CSV of numbers.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| Error::InvalidParameter(format!("bad number '{f}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Matrix::from_rows(rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Matrix::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.data.chunks(m.cols.max(1)).take(m.rows).map(<[f64]>::to_vec).collect()
    }
}

/// Data matrix `A` (`n x m`) and nonnegative basis `B` (`n x k`) for the
/// binary update `C = argmin ||A - B X||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNbmf", into = "RawNbmf")]
pub struct NbmfInstance {
    a: Matrix,
    b: Matrix,
}

#[derive(Serialize, Deserialize)]
struct RawNbmf {
    a: Matrix,
    b: Matrix,
}

impl TryFrom<RawNbmf> for NbmfInstance {
    type Error = Error;

    fn try_from(raw: RawNbmf) -> Result<Self> {
        NbmfInstance::new(raw.a, raw.b)
    }
}

impl From<NbmfInstance> for RawNbmf {
    fn from(i: NbmfInstance) -> Self {
        RawNbmf { a: i.a, b: i.b }
    }
}

impl NbmfInstance {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        if a.rows() != b.rows() {
            return Err(Error::DimensionMismatch { expected: a.rows(), actual: b.rows() });
        }
        if let Some(v) = b.data.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!("B must be nonnegative, found {v}")));
        }
        Ok(NbmfInstance { a, b })
    }

    pub fn from_csv_paths(a: impl AsRef<Path>, b: impl AsRef<Path>) -> Result<Self> {
        NbmfInstance::new(Matrix::from_csv_path(a)?, Matrix::from_csv_path(b)?)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// Number of binary variables per column (`k`).
    pub fn rank(&self) -> usize {
        self.b.cols()
    }

    /// `||A_col - B c||^2` evaluated directly.
    pub fn residual(&self, col: usize, c: &[u8]) -> Result<f64> {
        self.check_col(col)?;
        if c.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), actual: c.len() });
        }
        Ok((0..self.a.rows())
            .map(|r| {
                let fit: f64 = (0..self.rank()).filter(|&i| c[i] != 0).map(|i| self.b.get(r, i)).sum();
                let d = self.a.get(r, col) - fit;
                d * d
            })
            .sum())
    }

    fn check_col(&self, col: usize) -> Result<()> {
        if col < self.a.cols() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: col, size: self.a.cols() })
        }
    }
}

/// QUBO whose energy at binary `c` equals `||A_col - B c||^2`:
/// `Q_ii = (B^T B)_ii - 2 (B^T a)_i`, `Q_ij = 2 (B^T B)_ij` for `i < j`,
/// offset `||a||^2`.
pub fn nbmf_column_qubo(inst: &NbmfInstance, col: usize) -> Result<QuboProblem> {
    inst.check_col(col)?;
    let (b, k, rows) = (&inst.b, inst.rank(), inst.a.rows());
    let a = inst.a.column(col);
    let gram = |i: usize, j: usize| (0..rows).map(|r| b.get(r, i) * b.get(r, j)).sum::<f64>();
    let mut q = QuboProblem::new(k).with_offset(a.iter().map(|v| v * v).sum());
    for i in 0..k {
        let bta: f64 = (0..rows).map(|r| b.get(r, i) * a[r]).sum();
        q.add(i, i, gram(i, i) - 2.0 * bta)?;
        for j in i + 1..k {
            q.add(i, j, 2.0 * gram(i, j))?;
        }
    }
    Ok(q)
}

/// Ising form of [`nbmf_column_qubo`]; spin `+1` means `c_i = 1`.
pub fn nbmf_column_ising(inst: &NbmfInstance, col: usize) -> Result<IsingProblem> {
    Ok(nbmf_column_qubo(inst, col)?.to_ising())
}

/// Random instance with entries of `A` in `[0, 1)` and `B` in `[0, 1)`.
pub fn random_nbmf<R: Rng + ?Sized>(rows: usize, cols: usize, rank: usize, rng: &mut R) -> NbmfInstance {
    let mut fill = |r: usize, c: usize| {
        let mut m = Matrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                m.set(i, j, rng.gen::<f64>());
            }
        }
        m
    };
    let a = fill(rows, cols);
    let b = fill(rows, rank);
    NbmfInstance { a, b }
}
