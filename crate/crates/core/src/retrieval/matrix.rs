use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MatrixError {
    #[error("matrix must have at least one row")]
    NoRows,
    #[error("dimension must be at least 1")]
    ZeroDim,
    #[error("{len} values do not fill rows of width {dim}")]
    Ragged { len: usize, dim: usize },
    #[error("row {0} has a non-finite value")]
    NonFinite(usize),
    #[error("row {0} has zero norm and cannot be normalized")]
    ZeroRow(usize),
}

/// Token embeddings stored row-major as `f32`; one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddingMatrix {
    dim: usize,
    values: Vec<f32>,
}

impl TokenEmbeddingMatrix {
    /// Wraps row-major values without normalizing them.
    pub fn from_raw(dim: usize, values: Vec<f32>) -> Result<Self, MatrixError> {
        if dim == 0 {
            return Err(MatrixError::ZeroDim);
        }
        if values.is_empty() {
            return Err(MatrixError::NoRows);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(MatrixError::Ragged {
                len: values.len(),
                dim,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite(i / dim));
        }
        Ok(Self { dim, values })
    }

    /// Builds a matrix from `f64` rows, scaling each row to unit length.
    pub fn from_rows_normalized(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let dim = rows.first().ok_or(MatrixError::NoRows)?.len();
        if dim == 0 {
            return Err(MatrixError::ZeroDim);
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(MatrixError::Ragged {
                    len: row.len(),
                    dim,
                });
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(MatrixError::NonFinite(i));
            }
            if norm == 0.0 {
                return Err(MatrixError::ZeroRow(i));
            }
            values.extend(row.iter().map(|x| (x / norm) as f32));
        }
        Ok(Self { dim, values })
    }

    /// Rescales every row to unit L2 norm.
    pub fn normalize_rows(&mut self) -> Result<(), MatrixError> {
        let dim = self.dim;
        for (i, row) in self.values.chunks_exact_mut(dim).enumerate() {
            let norm = row
                .iter()
                .map(|&x| f64::from(x) * f64::from(x))
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 {
                return Err(MatrixError::ZeroRow(i));
            }
            for x in row.iter_mut() {
                *x = (f64::from(*x) / norm) as f32;
            }
        }
        Ok(())
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.iter_rows().all(|row| {
            let n = row
                .iter()
                .map(|&x| f64::from(x) * f64::from(x))
                .sum::<f64>()
                .sqrt();
            (n - 1.0).abs() <= tol
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}
