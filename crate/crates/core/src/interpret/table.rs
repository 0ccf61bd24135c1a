use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::LinkFailure;
use crate::kb::{EntityId, PropertyId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("table has no rows")]
    NoRows,
    #[error("table has no columns")]
    NoColumns,
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
}

/// Rectangular grid of text cells. Column 0 is the main (subject) column;
/// there is no header row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    rows: Vec<Vec<String>>,
    n_cols: usize,
}

impl Table {
    pub fn new(rows: Vec<Vec<String>>) -> Result<Self, TableError> {
        let first = rows.first().ok_or(TableError::NoRows)?;
        let n_cols = first.len();
        if n_cols == 0 {
            return Err(TableError::NoColumns);
        }
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_cols) {
            return Err(TableError::Ragged {
                row,
                expected: n_cols,
                found: r.len(),
            });
        }
        Ok(Self { rows, n_cols })
    }

    /// Convenience constructor from string slices.
    pub fn from_strs(rows: &[&[&str]]) -> Result<Self, TableError> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|c| String::from(*c)).collect())
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn cell(&self, i: usize, j: usize) -> &str {
        &self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> &[String] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = &str> {
        self.rows.iter().map(move |r| r[j].as_str())
    }

    /// Sub-table of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, TableError> {
        Self::new(rows.iter().map(|&i| self.rows[i].clone()).collect())
    }
}

/// A table with its main column linked to entities and its other columns
/// linked to properties. Unlinked cells and columns are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkedTable {
    pub table: Table,
    pub main_column: Vec<Option<EntityId>>,
    /// Keys are column indices `1..n`.
    pub column_links: BTreeMap<usize, Option<PropertyId>>,
    /// Why each `None` column link failed.
    pub link_failures: BTreeMap<usize, LinkFailure>,
}

impl LinkedTable {
    pub fn unlinked_columns(table: Table, main_column: Vec<Option<EntityId>>) -> Self {
        debug_assert_eq!(table.n_rows(), main_column.len());
        Self {
            table,
            main_column,
            column_links: BTreeMap::new(),
            link_failures: BTreeMap::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.table.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.table.n_cols()
    }

    pub fn property(&self, j: usize) -> Option<&PropertyId> {
        self.column_links.get(&j).and_then(Option::as_ref)
    }

    /// `(row, entity)` for every linked main-column cell.
    pub fn linked_rows(&self) -> impl Iterator<Item = (usize, &EntityId)> {
        self.main_column
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|e| (i, e)))
    }

    /// Distinct linked subjects in row order.
    pub fn seeds(&self) -> Vec<EntityId> {
        let mut out: Vec<EntityId> = Vec::new();
        for (_, e) in self.linked_rows() {
            if !out.contains(e) {
                out.push(e.clone());
            }
        }
        out
    }

    /// Properties of all linked columns, in column order.
    pub fn in_table_properties(&self) -> Vec<PropertyId> {
        let mut out: Vec<PropertyId> = Vec::new();
        for p in self.column_links.values().flatten() {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }

    /// Restriction to the given rows; column links are kept as they are.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, TableError> {
        Ok(Self {
            table: self.table.select_rows(rows)?,
            main_column: rows.iter().map(|&i| self.main_column[i].clone()).collect(),
            column_links: self.column_links.clone(),
            link_failures: self.link_failures.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_validation() {
        assert_eq!(Table::new(Vec::new()), Err(TableError::NoRows));
        assert_eq!(Table::from_strs(&[&[]]), Err(TableError::NoColumns));
        assert_eq!(
            Table::from_strs(&[&["a", "b"], &["c"]]),
            Err(TableError::Ragged {
                row: 1,
                expected: 2,
                found: 1
            })
        );
        let t = Table::from_strs(&[&["a", "1"], &["b", "2"]]).unwrap();
        assert_eq!((t.n_rows(), t.n_cols()), (2, 2));
        assert_eq!(t.column(1).collect::<Vec<_>>(), ["1", "2"]);
        assert_eq!(t.select_rows(&[1]).unwrap().cell(0, 0), "b");
    }
}
