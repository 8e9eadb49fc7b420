use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("row has {got} cells, matrix has {expected} columns")]
    RowLength { expected: usize, got: usize },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
}

/// Identifies one measured pair: simulator, topic and the simulated query's rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowKey {
    pub simulator_id: String,
    pub session_id: String,
    pub rank: u32,
}

/// Rows are measured pairs, columns are measures; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureMatrix<T> {
    row_keys: Vec<RowKey>,
    column_names: Vec<String>,
    cells: Vec<Option<T>>,
}

impl<T: Scalar> MeasureMatrix<T> {
    pub fn new(column_names: Vec<String>) -> Result<Self, MatrixError> {
        let mut seen = HashSet::new();
        for c in &column_names {
            if !seen.insert(c.as_str()) {
                return Err(MatrixError::DuplicateColumn(c.clone()));
            }
        }
        Ok(MeasureMatrix {
            row_keys: Vec::new(),
            column_names,
            cells: Vec::new(),
        })
    }

    /// Builds a matrix from complete columns, with synthetic row keys.
    pub fn from_columns(columns: Vec<(String, Vec<T>)>) -> Result<Self, MatrixError> {
        let n = columns.first().map_or(0, |(_, v)| v.len());
        let mut m = Self::new(columns.iter().map(|(name, _)| name.clone()).collect())?;
        for i in 0..n {
            let row = columns
                .iter()
                .map(|(_, v)| v.get(i).copied())
                .collect::<Vec<_>>();
            m.push_row(
                RowKey {
                    simulator_id: String::new(),
                    session_id: i.to_string(),
                    rank: 1,
                },
                row,
            )?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, key: RowKey, values: Vec<Option<T>>) -> Result<(), MatrixError> {
        if values.len() != self.column_names.len() {
            return Err(MatrixError::RowLength {
                expected: self.column_names.len(),
                got: values.len(),
            });
        }
        self.row_keys.push(key);
        self.cells.extend(values);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.row_keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row_keys(&self) -> &[RowKey] {
        &self.row_keys
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        self.cells[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[Option<T>] {
        let n = self.n_cols();
        &self.cells[row * n..(row + 1) * n]
    }

    pub fn column(&self, col: usize) -> Vec<Option<T>> {
        (0..self.n_rows()).map(|r| self.get(r, col)).collect()
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Self, MatrixError> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| MatrixError::UnknownColumn(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = Self::new(names.to_vec())?;
        for r in 0..self.n_rows() {
            out.push_row(
                self.row_keys[r].clone(),
                idx.iter().map(|&c| self.get(r, c)).collect(),
            )?;
        }
        Ok(out)
    }
}

/// Rows where both series are present.
pub fn pairwise_complete<T: Copy>(x: &[Option<T>], y: &[Option<T>]) -> (Vec<T>, Vec<T>) {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    x.iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip()
}
