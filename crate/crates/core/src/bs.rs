//! Black–Scholes reference values: vanilla and continuously monitored
//! up-and-out calls, delta-parametrized levels, and Gaussian period laws.

use serde::{Deserialize, Serialize};

use crate::distribution::NormalLaw;
use crate::error::{Error, Result};
use crate::normal::{cdf as n, inv_cdf};

/// Barrier shift constant `−ζ(1/2)/√(2π)` for discrete monitoring.
pub const BARRIER_SHIFT_BETA: f64 = 0.582_597_157_939_010_6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsParams {
    pub s0: f64,
    pub sigma: f64,
    pub r: f64,
    /// Arithmetic drift of the price under the physical measure.
    pub mu: f64,
    /// Maturity in years.
    pub t: f64,
}

impl BsParams {
    pub fn new(s0: f64, sigma: f64, r: f64, mu: f64, t: f64) -> Result<Self> {
        if !(s0 > 0.0 && sigma > 0.0 && t > 0.0) {
            return Err(Error::Parameter("need s0, sigma and t > 0".into()));
        }
        Ok(BsParams { s0, sigma, r, mu, t })
    }

    fn vol_sqrt_t(&self) -> f64 {
        self.sigma * self.t.sqrt()
    }

    fn d1(&self, k: f64) -> f64 {
        ((self.s0 / k).ln() + (self.r + 0.5 * self.sigma * self.sigma) * self.t) / self.vol_sqrt_t()
    }
}

/// Price and delta `N(d₁)` of a European call.
pub fn bs_vanilla(p: &BsParams, k: f64) -> (f64, f64) {
    if !(k > 0.0) {
        return (p.s0, 1.0);
    }
    let d1 = p.d1(k);
    let d2 = d1 - p.vol_sqrt_t();
    let price = p.s0 * n(d1) - k * (-p.r * p.t).exp() * n(d2);
    (price, n(d1))
}

/// Strike or barrier level whose call delta `N(d₁)` equals `delta`.
pub fn delta_to_level(p: &BsParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must be in (0, 1), got {delta}")));
    }
    let d1 = inv_cdf(delta);
    Ok(p.s0 * ((p.r + 0.5 * p.sigma * p.sigma) * p.t - d1 * p.vol_sqrt_t()).exp())
}

/// Continuously monitored up-and-out call without rebate.
pub fn bs_uoc_continuous(p: &BsParams, k: f64, b: f64) -> f64 {
    if b <= p.s0 || b <= k {
        return 0.0;
    }
    let (vanilla, _) = bs_vanilla(p, k);
    let st = p.vol_sqrt_t();
    let lam = (p.r + 0.5 * p.sigma * p.sigma) / (p.sigma * p.sigma);
    let disc = (-p.r * p.t).exp();
    let x1 = (p.s0 / b).ln() / st + lam * st;
    let y = (b * b / (p.s0 * k)).ln() / st + lam * st;
    let y1 = (b / p.s0).ln() / st + lam * st;
    let ratio = b / p.s0;
    // up-and-in value for a barrier above the strike
    let up_in = p.s0 * n(x1) - k * disc * n(x1 - st) - p.s0 * ratio.powf(2.0 * lam) * (n(-y) - n(-y1))
        + k * disc * ratio.powf(2.0 * lam - 2.0) * (n(-y + st) - n(-y1 + st));
    (vanilla - up_in).max(0.0)
}

/// Continuous formula at the barrier shifted to `B·e^{βσ√δt}`.
pub fn bgk_corrected_price(p: &BsParams, k: f64, b: f64, monitoring_interval: f64) -> f64 {
    if b <= p.s0 {
        return 0.0;
    }
    let shifted = b * (BARRIER_SHIFT_BETA * p.sigma * monitoring_interval.max(0.0).sqrt()).exp();
    bs_uoc_continuous(p, k, shifted)
}

/// Which measure a Gaussian period law is taken under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Physical,
    RiskNeutral,
}

/// Normal law of the period-`delta` log return, `N((m − σ²/2)Δ, σ²Δ)` with
/// `m = μ` or `m = r`.
pub fn gaussian_increment(p: &BsParams, delta: f64, measure: Measure) -> Result<NormalLaw> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be > 0, got {delta}")));
    }
    let drift = match measure {
        Measure::Physical => p.mu,
        Measure::RiskNeutral => p.r,
    };
    Ok(NormalLaw {
        mean: (drift - 0.5 * p.sigma * p.sigma) * delta,
        sd: p.sigma * delta.sqrt(),
    })
}
