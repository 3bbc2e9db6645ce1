//! Named parameter blocks for the standard tables.
//!
//! All presets use `S₀ = 100`, `σ = 0.2`, `r = 0` and daily barrier
//! monitoring. Rows iv and v use the synthetic leptokurtic model with daily
//! kurtosis 3.72; `table3-bs` leaves them out.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GridConfig, ScalingConfig};
use crate::calibration::synthetic::{leptokurtic, LEPTOKURTIC_DAILY_KURTOSIS};
use crate::calibration::Model;
use crate::distribution::InversionConfig;
use crate::error::{Error, Result};
use crate::grid::VANILLA_DELTA;
use crate::market::{Calendar, TimeSpan};

pub const STRIKE_DELTAS: [f64; 7] = [0.01, 0.1, 0.3, 0.45, 0.49, 0.75, 0.99];
pub const BARRIER_DELTAS: [f64; 6] = [VANILLA_DELTA, 0.01, 0.10, 0.30, 0.45, 0.49];

const S0: f64 = 100.0;
const SIGMA: f64 = 0.2;
const R: f64 = 0.0;

/// Lattice resolution tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    /// `η = 0.002`.
    #[default]
    Ci,
    /// `η = 0.0005`.
    Fine,
}

impl Fidelity {
    pub fn eta(self) -> f64 {
        match self {
            Fidelity::Ci => 0.002,
            Fidelity::Fine => 0.0005,
        }
    }
}

impl FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ci" => Ok(Fidelity::Ci),
            "fine" => Ok(Fidelity::Fine),
            _ => Err(Error::Input(format!("unknown fidelity '{s}' (expected ci or fine)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Kurtosis against rebalancing interval.
    Table1,
    /// One cell across rebalancing intervals.
    Table2,
    /// One month, daily rebalancing, `μ = 0.1`.
    Table3,
    /// Table 3 without the model rows.
    Table3Bs,
    /// Six months, daily rebalancing, `μ = 0.1`.
    Table4,
    /// Six months, daily rebalancing, `μ = −0.1`.
    Table5,
    /// One month, hourly rebalancing, `μ = 0.1`.
    Table6,
    /// Premium ratios of Table 3.
    Table7,
    /// Premium ratios of Table 4.
    Table8,
}

pub const PRESET_NAMES: [&str; 9] = [
    "table1",
    "table2",
    "table3",
    "table3-bs",
    "table4",
    "table5",
    "table6",
    "table7",
    "table8",
];

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "table1" => Preset::Table1,
            "table2" => Preset::Table2,
            "table3" => Preset::Table3,
            "table3-bs" => Preset::Table3Bs,
            "table4" => Preset::Table4,
            "table5" => Preset::Table5,
            "table6" => Preset::Table6,
            "table7" => Preset::Table7,
            "table8" => Preset::Table8,
            _ => {
                return Err(Error::Input(format!(
                    "unknown preset '{s}' (expected one of {})",
                    PRESET_NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = match self {
            Preset::Table1 => 0,
            Preset::Table2 => 1,
            Preset::Table3 => 2,
            Preset::Table3Bs => 3,
            Preset::Table4 => 4,
            Preset::Table5 => 5,
            Preset::Table6 => 6,
            Preset::Table7 => 7,
            Preset::Table8 => 8,
        };
        f.write_str(PRESET_NAMES[i])
    }
}

/// What a preset runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetJob {
    Grid(GridConfig),
    /// Grid followed by the premium-ratio map.
    Premium(GridConfig),
    Scaling(ScalingConfig),
    Kurtosis {
        model: Model,
        intervals: Vec<TimeSpan>,
        calendar: Calendar,
        inversion: InversionConfig,
    },
}

/// Rebalancing intervals of the scaling and kurtosis studies.
pub fn study_intervals() -> Vec<TimeSpan> {
    vec![
        TimeSpan::Minutes(5.0),
        TimeSpan::Minutes(15.0),
        TimeSpan::Minutes(30.0),
        TimeSpan::Hours(1.0),
        TimeSpan::Hours(2.0),
        TimeSpan::Hours(4.0),
        TimeSpan::Hours(8.0),
    ]
}

fn grid(mu: f64, maturity: TimeSpan, rebalancing: TimeSpan, model: bool, fidelity: Fidelity) -> Result<GridConfig> {
    let cal = Calendar::default();
    Ok(GridConfig {
        strike_deltas: STRIKE_DELTAS.to_vec(),
        barrier_deltas: BARRIER_DELTAS.to_vec(),
        s0: S0,
        maturity: maturity.years(&cal),
        rebalancing: rebalancing.years(&cal),
        monitoring: cal.day(),
        mu,
        sigma: SIGMA,
        r: R,
        inversion: InversionConfig::with_eta(fidelity.eta()),
        model: if model {
            Some(leptokurtic(mu, SIGMA, LEPTOKURTIC_DAILY_KURTOSIS, &cal)?)
        } else {
            None
        },
    })
}

impl Preset {
    pub fn job(self, fidelity: Fidelity) -> Result<PresetJob> {
        let cal = Calendar::default();
        let month = TimeSpan::Months(1.0);
        let half_year = TimeSpan::Months(6.0);
        let day = TimeSpan::Days(1.0);
        Ok(match self {
            Preset::Table1 => PresetJob::Kurtosis {
                model: leptokurtic(0.1, SIGMA, LEPTOKURTIC_DAILY_KURTOSIS, &cal)?,
                intervals: study_intervals(),
                calendar: cal,
                inversion: InversionConfig::with_eta(fidelity.eta()),
            },
            // rounded table levels; maturity one month
            Preset::Table2 => PresetJob::Scaling(ScalingConfig {
                intervals: study_intervals(),
                reference: day,
                strike: 103.3,
                barrier: Some(107.9),
                s0: S0,
                maturity: month.years(&cal),
                monitoring: cal.day(),
                mu: 0.1,
                sigma: SIGMA,
                r: R,
                calendar: cal,
                inversion: InversionConfig::with_eta(fidelity.eta()),
                model: Some(leptokurtic(0.1, SIGMA, LEPTOKURTIC_DAILY_KURTOSIS, &cal)?),
                alpha: Some(0.25),
            }),
            Preset::Table3 => PresetJob::Grid(grid(0.1, month, day, true, fidelity)?),
            Preset::Table3Bs => PresetJob::Grid(grid(0.1, month, day, false, fidelity)?),
            Preset::Table4 => PresetJob::Grid(grid(0.1, half_year, day, true, fidelity)?),
            Preset::Table5 => PresetJob::Grid(grid(-0.1, half_year, day, true, fidelity)?),
            Preset::Table6 => PresetJob::Grid(grid(0.1, month, TimeSpan::Hours(1.0), true, fidelity)?),
            Preset::Table7 => PresetJob::Premium(grid(0.1, month, day, true, fidelity)?),
            Preset::Table8 => PresetJob::Premium(grid(0.1, half_year, day, true, fidelity)?),
        })
    }
}
