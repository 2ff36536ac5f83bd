use serde::{Deserialize, Serialize};

use crate::error::{IrtError, Result};

/// Binary subject × item responses, stored row-major by subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseMatrix {
    subjects: Vec<String>,
    items: Vec<String>,
    cells: Vec<u8>,
}

impl ResponseMatrix {
    pub fn new(subjects: Vec<String>, items: Vec<String>, cells: Vec<u8>) -> Result<Self> {
        let (n, i) = (subjects.len(), items.len());
        if n < 2 || i < 2 {
            return Err(IrtError::invalid(format!(
                "need at least 2 subjects and 2 items, got {n} x {i}"
            )));
        }
        if cells.len() != n * i {
            return Err(IrtError::invalid(format!(
                "{} cells for a {n} x {i} matrix",
                cells.len()
            )));
        }
        if let Some(pos) = cells.iter().position(|&v| v > 1) {
            return Err(IrtError::Parse {
                row: pos / i + 1,
                column: pos % i + 1,
                message: format!("response {} is not binary", cells[pos]),
            });
        }
        Ok(ResponseMatrix {
            subjects,
            items,
            cells,
        })
    }

    /// Builds a matrix with generated ids `s1..sn`, `i1..iI`.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(IrtError::invalid("ragged response rows"));
        }
        let subjects = (1..=n).map(|j| format!("s{j}")).collect();
        let items = (1..=width).map(|i| format!("i{i}")).collect();
        ResponseMatrix::new(subjects, items, rows.concat())
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subjects
    }

    pub fn item_ids(&self) -> &[String] {
        &self.items
    }

    #[inline]
    pub fn get(&self, subject: usize, item: usize) -> bool {
        self.cells[subject * self.items.len() + item] == 1
    }

    pub fn row(&self, subject: usize) -> &[u8] {
        let i = self.items.len();
        &self.cells[subject * i..(subject + 1) * i]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn subject_scores(&self) -> Vec<usize> {
        (0..self.n_subjects())
            .map(|j| self.row(j).iter().map(|&v| v as usize).sum())
            .collect()
    }

    pub fn item_totals(&self) -> Vec<usize> {
        let mut totals = vec![0; self.n_items()];
        for row in self.cells.chunks_exact(self.n_items()) {
            for (t, &v) in totals.iter_mut().zip(row) {
                *t += v as usize;
            }
        }
        totals
    }

    /// Items on which every subject gave the same answer.
    pub fn degenerate_items(&self) -> Vec<usize> {
        let n = self.n_subjects();
        self.item_totals()
            .into_iter()
            .enumerate()
            .filter(|&(_, t)| t == 0 || t == n)
            .map(|(i, _)| i)
            .collect()
    }
}
