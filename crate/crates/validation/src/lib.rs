//! Published reference values for the standard tables, as printed to three
//! decimals.

use std::collections::HashMap;

const TABLE3_CSV: &str = include_str!("../data/table3.csv");

/// Rows i–v of every populated Table 3 cell, keyed by strike delta, barrier
/// delta and row name.
pub struct PrintedTable {
    cells: HashMap<(u64, u64, String), f64>,
}

impl PrintedTable {
    pub fn table3() -> Self {
        let mut cells = HashMap::new();
        for line in TABLE3_CSV.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let strike: f64 = f[0].parse().expect("strike delta");
            let barrier: f64 = f[1].parse().expect("barrier delta");
            let value: f64 = f[3].parse().expect("value");
            cells.insert((strike.to_bits(), barrier.to_bits(), f[2].to_string()), value);
        }
        PrintedTable { cells }
    }

    pub fn get(&self, strike_delta: f64, barrier_delta: f64, row: &str) -> Option<f64> {
        self.cells
            .get(&(strike_delta.to_bits(), barrier_delta.to_bits(), row.to_string()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Table 4 spot cells: strike delta, barrier delta, rows ii and iii. A
/// barrier delta of `1e-100` is the vanilla column.
pub const TABLE4_SPOT: [(f64, f64, f64, f64); 3] = [
    (0.49, 1e-100, 5.039, 0.428),
    (0.49, 0.10, 2.020, 1.226),
    (0.75, 0.30, 1.525, 1.013),
];
