//! Sharpe-ratio price quotes and risk-premium tables.
//!
//! A seller charging `C̃ = V₀ + e^{−rT} h √T ε₀` earns an annualized
//! incremental Sharpe ratio `h` on the optimally hedged position. The premium
//! ratio `√T ε₀ / V₀` is the premium per unit of `h` relative to the mean value.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DeltaGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpeQuote {
    pub v0: f64,
    pub eps0: f64,
    pub h: f64,
    pub t: f64,
    pub r: f64,
    pub price: f64,
    /// `√T ε₀ / V₀`; `None` when `V₀ = 0`.
    pub premium_ratio: Option<f64>,
}

impl SharpeQuote {
    /// Annualized Sharpe ratio `e^{rT}(C̃ − V₀)/(√T ε₀)` delivered by the price.
    pub fn realized_sharpe(&self) -> Option<f64> {
        (self.eps0 > 0.0).then(|| (self.r * self.t).exp() * (self.price - self.v0) / (self.t.sqrt() * self.eps0))
    }
}

/// `√T ε₀ / V₀`, undefined for a zero mean value.
pub fn premium_ratio(v0: f64, eps0: f64, t: f64) -> Option<f64> {
    (v0 != 0.0).then(|| t.sqrt() * eps0 / v0)
}

pub fn sharpe_price(v0: f64, eps0: f64, h: f64, t: f64, r: f64) -> Result<SharpeQuote> {
    if !(eps0 >= 0.0) || !(t > 0.0) || !v0.is_finite() || !h.is_finite() || !r.is_finite() {
        return Err(Error::Parameter(format!(
            "need eps0 >= 0, T > 0 and finite inputs (eps0={eps0}, T={t})"
        )));
    }
    Ok(SharpeQuote {
        v0,
        eps0,
        h,
        t,
        r,
        price: v0 + (-r * t).exp() * h * t.sqrt() * eps0,
        premium_ratio: premium_ratio(v0, eps0, t),
    })
}

/// One entry of a premium table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PremiumCell {
    Ratio(f64),
    /// The mean value is zero.
    Undefined,
    /// No run for this cell.
    Missing,
}

/// Premium ratios of a grid of `(V₀, ε₀)` pairs. Cells outside the grid's
/// populated region are `Missing`.
pub fn premium_table(values: &DeltaGrid<(f64, f64)>, t: f64) -> DeltaGrid<PremiumCell> {
    values.map_all(|cell| match cell {
        None => Some(PremiumCell::Missing),
        Some(&(v0, eps0)) => Some(match premium_ratio(v0, eps0, t) {
            Some(r) => PremiumCell::Ratio(r),
            None => PremiumCell::Undefined,
        }),
    })
}

fn cell_text(cell: Option<&PremiumCell>, percent: bool) -> String {
    match cell {
        Some(PremiumCell::Ratio(r)) if percent && 100.0 * r.abs() < 1.0 => format!("{:.1}%", 100.0 * r),
        Some(PremiumCell::Ratio(r)) if percent => format!("{:.0}%", 100.0 * r),
        Some(PremiumCell::Ratio(r)) => format!("{r}"),
        Some(PremiumCell::Undefined) => "undefined".into(),
        Some(PremiumCell::Missing) | None => if percent { "" } else { "NA" }.into(),
    }
}

/// Markdown with integer percentages, one decimal below 1%; barriers as
/// columns, strikes as rows.
pub fn premium_markdown(table: &DeltaGrid<PremiumCell>) -> String {
    let mut out = String::new();
    let _ = write!(out, "| strike \\ barrier |");
    for b in &table.barrier_deltas {
        let _ = write!(out, " {} |", DeltaGrid::<()>::barrier_label(*b));
    }
    out.push('\n');
    out.push_str(&"|---".repeat(table.barrier_deltas.len() + 1));
    out.push_str("|\n");
    for (i, k) in table.strike_deltas.iter().enumerate() {
        let _ = write!(out, "| {k} |");
        for j in 0..table.barrier_deltas.len() {
            let populated = table.is_populated(i, j);
            let text = if populated {
                cell_text(table.get(i, j), true)
            } else {
                String::new()
            };
            let _ = write!(out, " {text} |");
        }
        out.push('\n');
    }
    out
}

/// CSV rows `strike_delta,barrier_delta,ratio` at full precision for the
/// populated cells.
pub fn premium_csv(table: &DeltaGrid<PremiumCell>) -> String {
    let mut out = String::from("strike_delta,barrier_delta,ratio\n");
    for (i, k) in table.strike_deltas.iter().enumerate() {
        for (j, b) in table.barrier_deltas.iter().enumerate() {
            if table.is_populated(i, j) {
                let _ = writeln!(out, "{k},{b:e},{}", cell_text(table.get(i, j), false));
            }
        }
    }
    out
}
