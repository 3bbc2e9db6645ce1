//! Strike-by-barrier tables of mean values and hedging errors, rebalancing
//! studies, kurtosis tables and run manifests.
//!
//! Each table cell carries five numbers:
//! 1. the continuously monitored Black–Scholes value,
//! 2. the lattice mean value under Gaussian risk-neutral transitions,
//! 3. the lattice hedging error under Gaussian physical transitions,
//! 4. the lattice mean value under the model's transitions,
//! 5. the lattice hedging error under the model's transitions.

mod kurtosis;
mod presets;
mod scaling;

pub use kurtosis::{kurtosis_markdown, kurtosis_table, KurtosisRow};
pub use presets::{study_intervals, Fidelity, Preset, PresetJob, BARRIER_DELTAS, PRESET_NAMES, STRIKE_DELTAS};
pub use scaling::{
    fit_alpha, heuristic, scaling_markdown, scaling_study, ScalingConfig, ScalingRow, ScalingStudy, ALPHA_BAND,
};

use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bs::{bs_uoc_continuous, delta_to_level, gaussian_increment, BsParams, Measure};
use crate::calibration::Model;
use crate::distribution::{discretize, discretize_law, IncrementDistribution, InversionConfig};
use crate::engine::{barrier_interpolate, HedgeReport, LatticeOptions, UpAndOutCall};
use crate::error::{Error, Result};
use crate::grid::DeltaGrid;
use crate::market::{step_ratio, MarketParams};

/// Parameters of a strike-by-barrier table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub strike_deltas: Vec<f64>,
    pub barrier_deltas: Vec<f64>,
    pub s0: f64,
    /// Years.
    pub maturity: f64,
    /// Rebalancing interval in years.
    pub rebalancing: f64,
    /// Barrier monitoring interval in years.
    pub monitoring: f64,
    /// Arithmetic drift of the Gaussian rows; log drift of the model rows.
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
    pub inversion: InversionConfig,
    /// Model for rows iv and v; omitted rows stay empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
}

impl GridConfig {
    pub fn bs_params(&self) -> Result<BsParams> {
        BsParams::new(self.s0, self.sigma, self.r, self.mu, self.maturity)
    }

    pub fn market(&self) -> Result<MarketParams> {
        let p = MarketParams::new(self.mu, self.sigma, self.r, self.rebalancing)?;
        step_ratio(self.maturity, self.rebalancing)?;
        step_ratio(self.monitoring, self.rebalancing)?;
        Ok(p)
    }

    /// Strike and barrier levels of the table headers.
    pub fn levels(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = self.bs_params()?;
        let to = |ds: &[f64]| ds.iter().map(|&d| delta_to_level(&p, d)).collect::<Result<Vec<_>>>();
        Ok((to(&self.strike_deltas)?, to(&self.barrier_deltas)?))
    }
}

/// Transition laws shared by every cell of a table.
pub struct Laws {
    pub risk_neutral: IncrementDistribution,
    pub physical: IncrementDistribution,
    pub model: Option<IncrementDistribution>,
}

impl Laws {
    pub fn new(cfg: &GridConfig) -> Result<Self> {
        let p = cfg.bs_params()?;
        let dt = cfg.rebalancing;
        let bin = |m| -> Result<IncrementDistribution> {
            discretize_law(&gaussian_increment(&p, dt, m)?, dt, &cfg.inversion)
        };
        let model = match &cfg.model {
            None => None,
            Some(m) => {
                let kappa = m.with_params(cfg.mu, cfg.sigma).cumulant()?;
                Some(discretize(&kappa, dt, &cfg.inversion).map_err(|e| e.context(&m.name))?)
            }
        };
        Ok(Laws {
            risk_neutral: bin(Measure::RiskNeutral)?,
            physical: bin(Measure::Physical)?,
            model,
        })
    }
}

/// The five numbers of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRows {
    pub strike: f64,
    pub barrier: f64,
    pub bs_continuous: f64,
    pub v_hat: f64,
    pub eps_hat: f64,
    #[serde(default)]
    pub v_model: Option<f64>,
    #[serde(default)]
    pub eps_model: Option<f64>,
}

impl CellRows {
    pub fn rows(&self) -> [Option<f64>; 5] {
        [
            Some(self.bs_continuous),
            Some(self.v_hat),
            Some(self.eps_hat),
            self.v_model,
            self.eps_model,
        ]
    }
}

/// Lattice run at one strike/barrier pair, interpolating off-grid barriers.
pub fn lattice_cell(
    strike: f64,
    barrier: Option<f64>,
    cfg: &GridConfig,
    dist: &IncrementDistribution,
) -> Result<HedgeReport> {
    let option = UpAndOutCall::new(strike, barrier, cfg.maturity, cfg.monitoring)?;
    barrier_interpolate(&option, dist, &cfg.market()?, cfg.s0, &LatticeOptions::default())
}

fn cell(strike: f64, barrier: f64, cfg: &GridConfig, laws: &Laws) -> Result<CellRows> {
    let p = cfg.bs_params()?;
    let rn = lattice_cell(strike, Some(barrier), cfg, &laws.risk_neutral)?;
    let ph = lattice_cell(strike, Some(barrier), cfg, &laws.physical)?;
    let model = laws
        .model
        .as_ref()
        .map(|d| lattice_cell(strike, Some(barrier), cfg, d))
        .transpose()?;
    Ok(CellRows {
        strike,
        barrier,
        bs_continuous: bs_uoc_continuous(&p, strike, barrier),
        v_hat: rn.v0,
        eps_hat: ph.eps0_dyn,
        v_model: model.as_ref().map(|r| r.v0),
        eps_model: model.as_ref().map(|r| r.eps0_dyn),
    })
}

/// Every populated cell of the table, computed in parallel.
pub fn table_grid(cfg: &GridConfig) -> Result<DeltaGrid<CellRows>> {
    let (strikes, barriers) = cfg.levels()?;
    let laws = Laws::new(cfg)?;
    let mut grid = DeltaGrid::new(cfg.strike_deltas.clone(), cfg.barrier_deltas.clone());
    let cells = grid.populated();
    let results: Vec<Result<CellRows>> = cells
        .par_iter()
        .map(|&(i, j)| {
            cell(strikes[i], barriers[j], cfg, &laws).map_err(|e| {
                e.context(&format!(
                    "cell (strike delta {}, barrier delta {})",
                    cfg.strike_deltas[i],
                    DeltaGrid::<()>::barrier_label(cfg.barrier_deltas[j])
                ))
            })
        })
        .collect();
    for (&(i, j), r) in cells.iter().zip(results) {
        grid.set(i, j, r?);
    }
    Ok(grid)
}

const ROW_NAMES: [&str; 5] = ["i", "ii", "iii", "iv", "v"];

/// Markdown with five lines per strike; barriers as columns.
pub fn grid_markdown(grid: &DeltaGrid<CellRows>, strike_levels: &[f64], barrier_levels: &[f64]) -> String {
    let mut out = String::new();
    out.push_str("| strike delta | strike | row |");
    for (d, b) in grid.barrier_deltas.iter().zip(barrier_levels) {
        let _ = write!(out, " {} ({b:.1}) |", DeltaGrid::<()>::barrier_label(*d));
    }
    out.push('\n');
    out.push_str(&"|---".repeat(grid.barrier_deltas.len() + 3));
    out.push_str("|\n");
    for (i, (d, k)) in grid.strike_deltas.iter().zip(strike_levels).enumerate() {
        for (r, name) in ROW_NAMES.iter().enumerate() {
            let (dl, kl) = if r == 0 {
                (format!("{d}"), format!("{k:.1}"))
            } else {
                (String::new(), String::new())
            };
            let _ = write!(out, "| {dl} | {kl} | {name} |");
            for j in 0..grid.barrier_deltas.len() {
                let text = grid
                    .get(i, j)
                    .and_then(|c| c.rows()[r])
                    .map(|v| format!("{v:.3}"))
                    .unwrap_or_default();
                let _ = write!(out, " {text} |");
            }
            out.push('\n');
        }
    }
    out
}

/// CSV rows `strike_delta,strike,barrier_delta,barrier,row,value` at full
/// precision; rows absent from the run are skipped.
pub fn grid_csv(grid: &DeltaGrid<CellRows>) -> String {
    let mut out = String::from("strike_delta,strike,barrier_delta,barrier,row,value\n");
    for (i, j) in grid.populated() {
        let Some(c) = grid.get(i, j) else { continue };
        for (r, v) in c.rows().iter().enumerate() {
            if let Some(v) = v {
                let _ = writeln!(
                    out,
                    "{},{},{:e},{},{},{}",
                    grid.strike_deltas[i], c.strike, grid.barrier_deltas[j], c.barrier, ROW_NAMES[r], v
                );
            }
        }
    }
    out
}

/// `(V₀, ε₀)` pairs of rows iv/v, or of rows ii/iii when no model was run.
pub fn premium_inputs(grid: &DeltaGrid<CellRows>) -> DeltaGrid<(f64, f64)> {
    grid.map(|c| match (c.v_model, c.eps_model) {
        (Some(v), Some(e)) => (v, e),
        _ => (c.v_hat, c.eps_hat),
    })
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub parameters: serde_json::Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, preset: Option<&str>, parameters: &impl Serialize) -> Result<Self> {
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            preset: preset.map(Into::into),
            parameters: serde_json::to_value(parameters).map_err(|e| Error::Input(format!("manifest: {e}")))?,
            notes: Vec::new(),
        })
    }
}
