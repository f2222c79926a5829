//! Short-term (tabu) and intermediate (best-solution) memory.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::space::Cell;

/// FIFO of the last `tenure` visited cells.
#[derive(Debug, Clone)]
pub struct TabuList {
    tenure: usize,
    entries: VecDeque<Cell>,
}

impl TabuList {
    pub fn new(tenure: usize) -> Self {
        Self { tenure, entries: VecDeque::with_capacity(tenure + 1) }
    }

    pub fn tenure(&self) -> usize {
        self.tenure
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, cell: &Cell) -> bool {
        self.entries.iter().any(|c| c == cell)
    }

    /// Appends `cell`, evicting the oldest entry once the tenure is exceeded.
    pub fn record(&mut self, cell: Cell) {
        self.entries.push_back(cell);
        while self.entries.len() > self.tenure {
            self.entries.pop_front();
        }
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Cell> {
        self.entries.iter()
    }
}

/// The `m` best distinct cells seen so far, best first.
#[derive(Debug, Clone)]
pub struct BestList {
    capacity: usize,
    entries: Vec<(Cell, f64)>,
}

impl BestList {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, entries: Vec::with_capacity(capacity + 1) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Cell, f64)] {
        &self.entries
    }

    pub fn best(&self) -> Option<&(Cell, f64)> {
        self.entries.first()
    }

    /// Offers a solution. Returns true if the list changed.
    pub fn offer(&mut self, cell: &Cell, value: f64) -> bool {
        if self.capacity == 0 || self.entries.iter().any(|(c, _)| c == cell) {
            return false;
        }
        if self.entries.len() == self.capacity {
            match self.entries.last() {
                Some((_, worst)) if value < *worst => {
                    self.entries.pop();
                }
                _ => return false,
            }
        }
        let at = self.entries.partition_point(|(_, v)| *v <= value);
        self.entries.insert(at, (cell.clone(), value));
        true
    }

    /// Restart cell built from what the retained solutions have in common.
    ///
    /// A dimension on which every entry lies within one minimum step keeps the
    /// best entry's index; any other dimension takes the rounded mean index.
    pub fn intensify(&self) -> Result<Cell> {
        let (best, _) = self.entries.first().ok_or(Error::EmptyBestList)?;
        let d = best.0.len();
        let n = self.entries.len() as f64;
        let cell = (0..d)
            .map(|i| {
                let col = self.entries.iter().map(|(c, _)| c.0[i]);
                let lo = col.clone().min().unwrap_or(best.0[i]);
                let hi = col.clone().max().unwrap_or(best.0[i]);
                if hi - lo <= 1 {
                    best.0[i]
                } else {
                    (col.map(|k| k as f64).sum::<f64>() / n).round() as i64
                }
            })
            .collect();
        Ok(Cell(cell))
    }
}
