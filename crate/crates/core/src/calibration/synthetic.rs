//! Parametric stand-ins for an empirical Lévy model.
//!
//! Jump densities are tabulated on a fine grid so that every backend goes
//! through the same piecewise-linear cumulant code as calibrated data.

use super::{CumulantFunction, JumpMeasure, LevyDensity, Model};
use crate::error::{Error, Result};
use crate::market::Calendar;

/// Tabulate `f` on `[left, right]` with spacing `h` and a node at zero.
fn tabulate_through_zero(f: impl Fn(f64) -> f64, left: f64, right: f64, h: f64) -> Result<LevyDensity> {
    let n_left = (-left / h).ceil().max(1.0) as i64;
    let n_right = (right / h).ceil().max(1.0) as i64;
    let start = -(n_left + 1) as f64 * h;
    let mut density = Vec::with_capacity((n_left + n_right + 3) as usize);
    density.push(0.0);
    for j in -n_left..=n_right {
        density.push(f(j as f64 * h).max(0.0));
    }
    density.push(0.0);
    LevyDensity::new(start, h, density)
}

/// Brownian motion with drift `mu` and volatility `sigma`.
pub fn gaussian(mu: f64, sigma: f64) -> Result<CumulantFunction> {
    CumulantFunction::gaussian(mu, sigma * sigma)
}

/// Brownian part plus compound-Poisson jumps at fixed sizes.
pub fn compound_poisson(mu: f64, sigma_c: f64, atoms: Vec<(f64, f64)>) -> Result<CumulantFunction> {
    CumulantFunction::new(mu, sigma_c * sigma_c, Some(JumpMeasure::Atoms { atoms }))
}

/// Brownian part plus normally distributed jumps with intensity `lambda`.
pub fn merton(
    mu: f64,
    sigma_c: f64,
    lambda: f64,
    jump_mean: f64,
    jump_sd: f64,
    nodes: usize,
) -> Result<CumulantFunction> {
    if !(jump_sd > 0.0) || !(lambda >= 0.0) {
        return Err(Error::Parameter("merton needs jump_sd > 0 and lambda >= 0".into()));
    }
    let norm = lambda / (jump_sd * (2.0 * std::f64::consts::PI).sqrt());
    let f = |x: f64| norm * (-0.5 * ((x - jump_mean) / jump_sd).powi(2)).exp();
    let d = LevyDensity::tabulate(f, jump_mean - 9.0 * jump_sd, jump_mean + 9.0 * jump_sd, nodes)?;
    CumulantFunction::new(mu, sigma_c * sigma_c, Some(JumpMeasure::PiecewiseLinear(d)))
}

/// Brownian part plus double-exponential jumps: intensity `lambda`, upward
/// probability `p`, rates `rate_up` and `rate_down`.
pub fn double_exponential(
    mu: f64,
    sigma_c: f64,
    lambda: f64,
    p: f64,
    rate_up: f64,
    rate_down: f64,
    spacing: f64,
) -> Result<CumulantFunction> {
    if !(rate_up > 0.0 && rate_down > 0.0) || !(0.0..=1.0).contains(&p) || !(lambda >= 0.0) {
        return Err(Error::Parameter("invalid double-exponential parameters".into()));
    }
    let f = |x: f64| {
        if x > 0.0 {
            lambda * p * rate_up * (-rate_up * x).exp()
        } else if x < 0.0 {
            lambda * (1.0 - p) * rate_down * (rate_down * x).exp()
        } else {
            lambda * 0.5 * (p * rate_up + (1.0 - p) * rate_down)
        }
    };
    let d = tabulate_through_zero(f, -40.0 / rate_down, 40.0 / rate_up, spacing)?;
    CumulantFunction::new(mu, sigma_c * sigma_c, Some(JumpMeasure::PiecewiseLinear(d)))
}

/// Share of the variance carried by the Brownian part in [`leptokurtic`].
pub const LEPTOKURTIC_DIFFUSION_SHARE: f64 = 0.5;

/// Daily log-return kurtosis targeted by the bundled benchmark model.
pub const LEPTOKURTIC_DAILY_KURTOSIS: f64 = 3.72;

/// Synthetic leptokurtic benchmark: Brownian motion plus symmetric Laplace
/// jumps, calibrated so that the annual variance is `sigma²` and the one-day
/// log-return kurtosis equals `daily_kurtosis`.
pub fn leptokurtic(mu: f64, sigma: f64, daily_kurtosis: f64, calendar: &Calendar) -> Result<Model> {
    if !(daily_kurtosis > 3.0) || !(sigma > 0.0) {
        return Err(Error::Parameter("need daily kurtosis > 3 and sigma > 0".into()));
    }
    let w = LEPTOKURTIC_DIFFUSION_SHARE;
    // unit Laplace shape, tabulated exactly as it will be integrated
    let base = tabulate_through_zero(|x| 0.5 * (-x.abs()).exp(), -30.0, 30.0, 0.05)?;
    let (m2, m4) = (base.moment(2), base.moment(4));
    let v_jump = (1.0 - w) * sigma * sigma;
    let k4 = (daily_kurtosis - 3.0) * sigma.powi(4) * calendar.day();
    // λ t² m2 = v_jump and λ t⁴ m4 = k4
    let t2 = k4 * m2 / (v_jump * m4);
    let lambda = v_jump / (t2 * m2);
    let jumps = base.scaled(t2.sqrt())?.times(lambda)?;
    let raw = CumulantFunction::new(0.0, w * sigma * sigma, Some(JumpMeasure::PiecewiseLinear(jumps)))?;
    Ok(Model {
        name: format!("leptokurtic(k_day={daily_kurtosis})"),
        raw,
        sample_interval: None,
        mu,
        sigma,
    })
}
