//! Tabulated probabilities on a time grid.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Column<T> {
    pub label: String,
    pub values: Vec<T>,
}

impl<T> Column<T> {
    pub fn new(label: impl Into<String>, values: Vec<T>) -> Self {
        Self { label: label.into(), values }
    }
}

/// Probability columns sharing one time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult<T> {
    tau: Vec<T>,
    columns: Vec<Column<T>>,
}

impl<T: Real> SimulationResult<T> {
    pub fn new(tau: Vec<T>, columns: Vec<Column<T>>) -> Self {
        Self { tau, columns }
    }

    pub fn empty(tau: Vec<T>) -> Self {
        Self { tau, columns: Vec::new() }
    }

    pub fn tau(&self) -> &[T] {
        &self.tau
    }

    pub fn columns(&self) -> &[Column<T>] {
        &self.columns
    }

    pub fn column(&self, label: &str) -> Option<&[T]> {
        self.columns.iter().find(|c| c.label == label).map(|c| c.values.as_slice())
    }

    pub fn push(&mut self, column: Column<T>) -> Result<()> {
        if column.values.len() != self.tau.len() {
            return Err(Error::InvalidInput(format!(
                "column {} has {} rows, expected {}",
                column.label,
                column.values.len(),
                self.tau.len()
            )));
        }
        if self.column(&column.label).is_some() {
            return Err(Error::InvalidInput(format!("duplicate column {}", column.label)));
        }
        self.columns.push(column);
        Ok(())
    }

    /// Appends the columns of `other`, which must share the time axis.
    pub fn merge(&mut self, other: SimulationResult<T>) -> Result<()> {
        if other.tau != self.tau {
            return Err(Error::GridMismatch);
        }
        for c in other.columns {
            self.push(c)?;
        }
        Ok(())
    }
}
