use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Row-major dense matrix as it appears in every JSON spec and report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>, CliError> {
        if self.rows * self.cols != self.data.len() {
            return Err(CliError::validation(format!(
                "matrix data length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(CliError::validation("matrix must be nonempty"));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

pub fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Parse the input spec, falling back to the subcommand's built-in default
/// when no file was given. Any JSON problem is a validation failure before
/// anything is computed or written.
pub fn read_spec<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let bytes = fs::read(p).map_err(|e| CliError::validation(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_slice(&bytes).map_err(|e| CliError::validation(format!("{}: {e}", p.display())))
        }
    }
}

pub fn check_schema(schema: u32) -> Result<(), CliError> {
    if schema != 1 {
        return Err(CliError::validation(format!("unsupported schema version {schema}, expected 1")));
    }
    Ok(())
}
