//! Dense row-major embedding matrices and their binary interchange format.
//!
//! The on-disk format is magic `DPEM`, little-endian `u32` row count,
//! `u32` dimension, then `rows * dim` little-endian `f64` values in
//! row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::PrivacyError;

const MAGIC: &[u8; 4] = b"DPEM";

/// An n×d matrix of finite reals, one embedding per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            rows,
            dim,
            values: vec![0.0; rows * dim],
        }
    }

    pub fn from_values(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self, PrivacyError> {
        if values.len() != rows * dim {
            return Err(PrivacyError::ShapeMismatch {
                rows,
                dim,
                values: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(PrivacyError::NonFiniteValue {
                    row: if dim == 0 { 0 } else { i / dim },
                    col: if dim == 0 { 0 } else { i % dim },
                });
            }
        }
        Ok(Self { rows, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, PrivacyError> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(PrivacyError::ShapeMismatch {
                    rows: rows.len(),
                    dim,
                    values: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_values(rows.len(), dim, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the elementwise difference.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.dim, other.dim);
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_iterator(self.rows, self.dim, self.values.iter().copied())
    }

    pub fn from_dmatrix(m: &nalgebra::DMatrix<f64>) -> Self {
        let mut values = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                values.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            dim: m.ncols(),
            values,
        }
    }

    /// Serializes to the `DPEM` binary format.
    pub fn write_dpem(&self, path: impl AsRef<Path>) -> Result<(), PrivacyError> {
        let path = path.as_ref();
        let io_err = |source| PrivacyError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut buf = Vec::with_capacity(12 + self.values.len() * 8);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut file = fs::File::create(path).map_err(io_err)?;
        file.write_all(&buf).map_err(io_err)
    }

    /// Reads the `DPEM` binary format.
    pub fn read_dpem(path: impl AsRef<Path>) -> Result<Self, PrivacyError> {
        let path = path.as_ref();
        let bad = |reason: &str| PrivacyError::BadEmbeddingFile {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let bytes = fs::read(path).map_err(|source| PrivacyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if bytes.len() < 12 {
            return Err(bad("file too short for header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(bad("bad magic, expected DPEM"));
        }
        let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let expected = 12 + rows * dim * 8;
        if bytes.len() != expected {
            return Err(bad(&format!(
                "expected {expected} bytes for {rows}x{dim}, found {}",
                bytes.len()
            )));
        }
        let mut values = Vec::with_capacity(rows * dim);
        for chunk in bytes[12..].chunks_exact(8) {
            values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        Self::from_values(rows, dim, values).map_err(|e| bad(&e.to_string()))
    }
}

/// Rescales every row with L2 norm above `bound` down to exactly `bound`;
/// rows within the bound are untouched.
pub fn clip_rows(matrix: &EmbeddingMatrix, bound: f64) -> EmbeddingMatrix {
    assert!(bound > 0.0, "clip bound must be positive");
    let mut out = matrix.clone();
    for i in 0..out.rows() {
        let norm = out.row_norm(i);
        if norm > bound {
            let scale = bound / norm;
            for v in out.row_mut(i) {
                *v *= scale;
            }
        }
    }
    out
}

/// Adds iid N(0, σ²) noise to every entry. σ = 0 returns the input
/// unchanged without consuming randomness.
pub fn add_gaussian_noise(
    matrix: &EmbeddingMatrix,
    sigma: f64,
    rng: &mut impl Rng,
) -> EmbeddingMatrix {
    if sigma == 0.0 {
        return matrix.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated by caller");
    let mut out = matrix.clone();
    for v in &mut out.values {
        *v += normal.sample(rng);
    }
    out
}
