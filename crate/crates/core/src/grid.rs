//! Strike-by-barrier grids keyed by Black–Scholes delta.
//!
//! Rows are strike deltas, columns barrier deltas. A cell is populated when
//! the barrier delta is below the strike delta, which puts the barrier above
//! the strike. The tiny barrier delta [`VANILLA_DELTA`] places the barrier far
//! enough out that the option is a plain call for all practical purposes.

use serde::{Deserialize, Serialize};

/// Barrier delta of the vanilla column.
pub const VANILLA_DELTA: f64 = 1e-100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid<T> {
    pub strike_deltas: Vec<f64>,
    pub barrier_deltas: Vec<f64>,
    /// Row-major cells.
    pub cells: Vec<Option<T>>,
}

impl<T> DeltaGrid<T> {
    pub fn new(strike_deltas: Vec<f64>, barrier_deltas: Vec<f64>) -> Self {
        let n = strike_deltas.len() * barrier_deltas.len();
        DeltaGrid {
            strike_deltas,
            barrier_deltas,
            cells: (0..n).map(|_| None).collect(),
        }
    }

    fn index(&self, i: usize, j: usize) -> usize {
        i * self.barrier_deltas.len() + j
    }

    pub fn is_populated(&self, i: usize, j: usize) -> bool {
        self.barrier_deltas[j] < self.strike_deltas[i]
    }

    /// `(row, column)` of every populated cell in row-major order.
    pub fn populated(&self) -> Vec<(usize, usize)> {
        (0..self.strike_deltas.len())
            .flat_map(|i| (0..self.barrier_deltas.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| self.is_populated(i, j))
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&T> {
        self.cells[self.index(i, j)].as_ref()
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        let k = self.index(i, j);
        self.cells[k] = Some(value);
    }

    /// Cell lookup by deltas, matched to 1e-12.
    pub fn find(&self, strike_delta: f64, barrier_delta: f64) -> Option<&T> {
        let i = self
            .strike_deltas
            .iter()
            .position(|d| (d - strike_delta).abs() < 1e-12)?;
        let j = self
            .barrier_deltas
            .iter()
            .position(|d| (d - barrier_delta).abs() < 1e-12 * d.max(1e-100).max(barrier_delta))?;
        self.get(i, j)
    }

    /// Apply `f` to every populated cell, present or not.
    pub fn map_all<U>(&self, f: impl Fn(Option<&T>) -> Option<U>) -> DeltaGrid<U> {
        let mut out = DeltaGrid::new(self.strike_deltas.clone(), self.barrier_deltas.clone());
        for (i, j) in self.populated() {
            if let Some(v) = f(self.get(i, j)) {
                out.set(i, j, v);
            }
        }
        out
    }

    /// Apply `f` to every present cell.
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> DeltaGrid<U> {
        DeltaGrid {
            strike_deltas: self.strike_deltas.clone(),
            barrier_deltas: self.barrier_deltas.clone(),
            cells: self.cells.iter().map(|c| c.as_ref().map(&f)).collect(),
        }
    }

    pub fn barrier_label(delta: f64) -> String {
        if delta <= 1e-50 {
            "1E-100".into()
        } else {
            format!("{delta:.2}")
        }
    }
}
