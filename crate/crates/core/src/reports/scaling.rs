//! Hedging error as a function of the rebalancing interval.
//!
//! For a barrier option, suppose a fraction `α` of the error variance comes
//! from the strike region and scales like the rebalancing interval, while the
//! rest comes from the barrier and scales like its square root. The error
//! relative to the reference interval is then `√(fα + √f(1 − α))` with time
//! factor `f = Δ/Δ_ref`. With excess kurtosis `f` is replaced by
//! `f·(K_Δ − 1)/(K_ref − 1)` using the lattice kurtosis of returns.

use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lattice_cell, GridConfig, Laws};
use crate::calibration::Model;
use crate::distribution::InversionConfig;
use crate::error::{Error, Result};
use crate::market::{step_ratio, Calendar, TimeSpan};

/// Range of `α` used for the heuristic bands.
pub const ALPHA_BAND: (f64, f64) = (0.25, 0.4);

/// `√(fα + √f(1 − α))`.
pub fn heuristic(alpha: f64, factor: f64) -> f64 {
    (factor * alpha + factor.sqrt() * (1.0 - alpha)).sqrt()
}

/// `α` at which [`heuristic`] equals `ratio`.
pub fn fit_alpha(ratio: f64, factor: f64) -> Option<f64> {
    let s = factor.sqrt();
    (s != factor).then(|| (s - ratio * ratio) / (s - factor))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub intervals: Vec<TimeSpan>,
    /// Interval the ratios are taken against.
    pub reference: TimeSpan,
    pub strike: f64,
    #[serde(default)]
    pub barrier: Option<f64>,
    pub s0: f64,
    pub maturity: f64,
    pub monitoring: f64,
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
    #[serde(default)]
    pub calendar: Calendar,
    pub inversion: InversionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    /// Heuristic `α`; fitted from the one-hour Gaussian ratio when absent.
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub interval: TimeSpan,
    pub delta: f64,
    pub v0_hat: f64,
    pub eps_hat: f64,
    pub ratio_hat: f64,
    pub v0_model: Option<f64>,
    pub eps_model: Option<f64>,
    pub ratio_model: Option<f64>,
    /// `Δ/Δ_ref`.
    pub time_factor: f64,
    /// Kurtosis-adjusted factor from the model lattice.
    pub kurtosis_factor: Option<f64>,
    pub heuristic_hat: Option<f64>,
    pub heuristic_model: Option<f64>,
    /// Heuristic over [`ALPHA_BAND`].
    pub band_hat: (f64, f64),
    pub band_model: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
    pub alpha: Option<f64>,
    pub alpha_fitted: Option<f64>,
}

struct Run {
    v0_hat: f64,
    eps_hat: f64,
    model: Option<(f64, f64, f64)>,
}

fn run_interval(cfg: &ScalingConfig, delta: f64) -> Result<Run> {
    let grid = GridConfig {
        strike_deltas: vec![],
        barrier_deltas: vec![],
        s0: cfg.s0,
        maturity: cfg.maturity,
        rebalancing: delta,
        monitoring: cfg.monitoring,
        mu: cfg.mu,
        sigma: cfg.sigma,
        r: cfg.r,
        inversion: cfg.inversion.clone(),
        model: cfg.model.clone(),
    };
    grid.market()?;
    let laws = Laws::new(&grid)?;
    let rn = lattice_cell(cfg.strike, cfg.barrier, &grid, &laws.risk_neutral)?;
    let ph = lattice_cell(cfg.strike, cfg.barrier, &grid, &laws.physical)?;
    let model = match &laws.model {
        None => None,
        Some(d) => {
            let r = lattice_cell(cfg.strike, cfg.barrier, &grid, d)?;
            Some((r.v0, r.eps0_dyn, d.moments().level_kurtosis))
        }
    };
    Ok(Run {
        v0_hat: rn.v0,
        eps_hat: ph.eps0_dyn,
        model,
    })
}

pub fn scaling_study(cfg: &ScalingConfig) -> Result<ScalingStudy> {
    let reference = cfg.reference.years(&cfg.calendar);
    for span in &cfg.intervals {
        step_ratio(cfg.monitoring, span.years(&cfg.calendar))
            .map_err(|e| e.context(&format!("interval {span} does not divide the monitoring interval")))?;
    }
    let mut spans = cfg.intervals.clone();
    if !spans.iter().any(|s| (s.years(&cfg.calendar) - reference).abs() < 1e-15) {
        spans.push(cfg.reference);
    }
    let runs: Vec<Result<Run>> = spans
        .par_iter()
        .map(|s| run_interval(cfg, s.years(&cfg.calendar)).map_err(|e| e.context(&format!("interval {s}"))))
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let ref_idx = spans
        .iter()
        .position(|s| (s.years(&cfg.calendar) - reference).abs() < 1e-15)
        .ok_or_else(|| Error::InternalConsistency("reference interval missing".into()))?;
    let base = &runs[ref_idx];
    let mut rows: Vec<ScalingRow> = cfg
        .intervals
        .iter()
        .zip(&runs)
        .map(|(span, run)| {
            let delta = span.years(&cfg.calendar);
            let f = delta / reference;
            let kf = match (run.model, base.model) {
                (Some((_, _, k)), Some((_, _, k_ref))) => Some(f * (k - 1.0) / (k_ref - 1.0)),
                _ => None,
            };
            ScalingRow {
                interval: *span,
                delta,
                v0_hat: run.v0_hat,
                eps_hat: run.eps_hat,
                ratio_hat: run.eps_hat / base.eps_hat,
                v0_model: run.model.map(|m| m.0),
                eps_model: run.model.map(|m| m.1),
                ratio_model: run.model.zip(base.model).map(|(m, b)| m.1 / b.1),
                time_factor: f,
                kurtosis_factor: kf,
                heuristic_hat: None,
                heuristic_model: None,
                band_hat: (heuristic(ALPHA_BAND.0, f), heuristic(ALPHA_BAND.1, f)),
                band_model: kf.map(|k| (heuristic(ALPHA_BAND.0, k), heuristic(ALPHA_BAND.1, k))),
            }
        })
        .collect();
    let hour = cfg.calendar.hour();
    let alpha_fitted = rows
        .iter()
        .find(|r| (r.delta - hour).abs() < 1e-15)
        .and_then(|r| fit_alpha(r.ratio_hat, r.time_factor));
    let alpha = cfg.alpha.or(alpha_fitted);
    if let Some(a) = alpha {
        for r in &mut rows {
            r.heuristic_hat = Some(heuristic(a, r.time_factor));
            r.heuristic_model = r.kurtosis_factor.map(|k| heuristic(a, k));
        }
    }
    Ok(ScalingStudy {
        rows,
        alpha,
        alpha_fitted,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_default()
}

pub fn scaling_markdown(study: &ScalingStudy) -> String {
    let mut out = String::from(
        "| interval | V̂₀ | ε̂₀ | ε̂₀ ratio | heuristic | V₀ | ε₀ | ε₀ ratio | heuristic |\n|---|---|---|---|---|---|---|---|---|\n",
    );
    for r in &study.rows {
        let _ = writeln!(
            out,
            "| {} | {:.3} | {:.3} | {:.3} | {} | {} | {} | {} | {} |",
            r.interval,
            r.v0_hat,
            r.eps_hat,
            r.ratio_hat,
            opt(r.heuristic_hat),
            opt(r.v0_model),
            opt(r.eps_model),
            opt(r.ratio_model),
            opt(r.heuristic_model)
        );
    }
    if let Some(a) = study.alpha {
        let _ = writeln!(out, "\nα = {a:.3}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heuristic_limits_and_fit() {
        assert!((heuristic(0.3, 1.0) - 1.0).abs() < 1e-15);
        assert!((heuristic(1.0, 0.125) - 0.125f64.sqrt()).abs() < 1e-15);
        // five-minute Black–Scholes factor with α = 0.25
        assert!((heuristic(0.25, 1.0 / 96.0) - 0.2813).abs() < 1e-4);
        for a in [0.1, 0.25, 0.4, 0.9] {
            let f = 0.125;
            assert!((fit_alpha(heuristic(a, f), f).unwrap() - a).abs() < 1e-12);
        }
        assert_eq!(fit_alpha(1.0, 1.0), None);
    }

    #[test]
    fn errors_fall_with_rebalancing() {
        let cal = Calendar::default();
        let cfg = ScalingConfig {
            intervals: vec![TimeSpan::Hours(2.0), TimeSpan::Hours(4.0), TimeSpan::Days(1.0)],
            reference: TimeSpan::Days(1.0),
            strike: 100.0,
            barrier: Some(106.0),
            s0: 100.0,
            maturity: 5.0 * cal.day(),
            monitoring: cal.day(),
            mu: 0.1,
            sigma: 0.2,
            r: 0.0,
            calendar: cal,
            inversion: InversionConfig::with_eta(0.002),
            model: None,
            alpha: Some(0.3),
        };
        let s = scaling_study(&cfg).unwrap();
        let e: Vec<f64> = s.rows.iter().map(|r| r.eps_hat).collect();
        assert!(e[0] < e[1] && e[1] < e[2]);
        assert_eq!(s.rows[2].ratio_hat, 1.0);
        assert!(s.rows[0].heuristic_hat.is_some());
        let bad = ScalingConfig {
            intervals: vec![TimeSpan::Hours(3.0)],
            ..cfg
        };
        assert!(matches!(scaling_study(&bad), Err(Error::Configuration(_))));
    }
}
