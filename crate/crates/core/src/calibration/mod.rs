//! Empirical Lévy measures and cumulant functions.
//!
//! A sample of high-frequency log returns is binned into a piecewise-linear
//! Lévy density, which is then rescaled to a target annual volatility and
//! combined with a drift into a [`CumulantFunction`].

mod cumulant;
pub mod io;
mod levy;
pub mod synthetic;

pub use cumulant::{CumulantFunction, JumpMeasure, PeriodMoments};
pub use levy::LevyDensity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketParams;

/// Log returns sampled at a fixed interval (in years).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    pub values: Vec<f64>,
    pub sample_interval: f64,
}

impl ReturnSample {
    pub fn new(values: Vec<f64>, sample_interval: f64) -> Result<Self> {
        let s = ReturnSample {
            values,
            sample_interval,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval > 0.0) || !self.sample_interval.is_finite() {
            return Err(Error::Parameter(format!(
                "sample interval must be > 0, got {}",
                self.sample_interval
            )));
        }
        if self.values.is_empty() {
            return Err(Error::DegenerateSample("empty sample".into()));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("return #{i} is not finite")));
        }
        Ok(())
    }

    /// Sample second moment per year, `Σ x² / (M Δ₀)`.
    pub fn second_moment_rate(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>() / (self.values.len() as f64 * self.sample_interval)
    }
}

/// Bin a return sample into a raw Lévy density with `n_interior` grid points.
///
/// The interior nodes run from the smallest to the largest return; each
/// return is counted in the bin of width `δ` centred on its nearest node. The
/// frequency density divided by the sample interval gives the node value.
pub fn build_raw_levy(sample: &ReturnSample, n_interior: usize) -> Result<LevyDensity> {
    sample.validate()?;
    if n_interior < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 grid points, got {n_interior}"
        )));
    }
    let (lo, hi) = sample
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !(hi > lo) {
        return Err(Error::DegenerateSample("fewer than 2 distinct return values".into()));
    }
    let spacing = (hi - lo) / (n_interior - 1) as f64;
    let start = lo - spacing;
    let mut counts = vec![0u64; n_interior + 2];
    for &x in &sample.values {
        let j = ((x - start) / spacing).round() as usize;
        counts[j.clamp(1, n_interior)] += 1;
    }
    let norm = 1.0 / (sample.values.len() as f64 * spacing * sample.sample_interval);
    let density = counts.iter().map(|&c| c as f64 * norm).collect();
    LevyDensity::new(start, spacing, density)
}

/// Rescale a raw model to annual volatility `params.sigma` and drift `params.mu`.
pub fn rescale(raw: &CumulantFunction, params: &MarketParams) -> Result<CumulantFunction> {
    raw.rescaled(params.mu, params.sigma)
}

/// Cumulant function of a raw empirical density rescaled per `params`.
pub fn rescale_density(raw: &LevyDensity, params: &MarketParams) -> Result<CumulantFunction> {
    let k = CumulantFunction::new(0.0, 0.0, Some(JumpMeasure::PiecewiseLinear(raw.clone())))?;
    rescale(&k, params)
}

/// Mean, variance, skewness and kurtosis of the period-`delta` log return.
pub fn annualized_moments(kappa: &CumulantFunction, delta: f64) -> Result<PeriodMoments> {
    kappa.period_moments(delta)
}

/// A calibrated or synthetic model, stored unscaled together with its target
/// drift and volatility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub name: String,
    /// Shape of the law; only its scale-free features matter.
    pub raw: CumulantFunction,
    /// Sampling interval of the source data, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    pub mu: f64,
    pub sigma: f64,
}

impl Model {
    pub fn gaussian(mu: f64, sigma: f64) -> Result<Model> {
        Ok(Model {
            name: "gaussian".into(),
            raw: CumulantFunction::gaussian(0.0, 1.0)?,
            sample_interval: None,
            mu,
            sigma,
        })
    }

    pub fn from_sample(sample: &ReturnSample, n_interior: usize, mu: f64, sigma: f64) -> Result<Model> {
        let raw = build_raw_levy(sample, n_interior)?;
        Ok(Model {
            name: "empirical".into(),
            raw: CumulantFunction::new(0.0, 0.0, Some(JumpMeasure::PiecewiseLinear(raw)))?,
            sample_interval: Some(sample.sample_interval),
            mu,
            sigma,
        })
    }

    /// True when the model has no jump part.
    pub fn is_gaussian(&self) -> bool {
        self.raw.jumps().is_none()
    }

    /// Same shape with a different drift and volatility.
    pub fn with_params(&self, mu: f64, sigma: f64) -> Model {
        Model {
            mu,
            sigma,
            ..self.clone()
        }
    }

    /// Rescaled cumulant function.
    pub fn cumulant(&self) -> Result<CumulantFunction> {
        self.raw.rescaled(self.mu, self.sigma)
    }
}
