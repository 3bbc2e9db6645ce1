//! Mean value, hedge ratios and hedging errors of the variance-optimal
//! strategy for an up-and-out call.
//!
//! With `X = e^Z − R`, `a = E[X]/E[X²]` and `b = 1 − E[X]²/E[X²]`, the mean
//! value solves `V_i = E_i[(1 − aX)V_{i+1}]/(bR)` with `V_n = H`, the locally
//! optimal hedge is `ξ_i = E_i[(V_{i+1} − RV_i)X]/(S_i E[X²])`, and the
//! one-step residual `ψ_i = E_i[(RV_i + ξ_i S_i X − V_{i+1})²]` feeds
//! `ε₀²(φ) = Σ (R²b)^{n−j−1} E[ψ_j]` and `ε₀²(ξ) = Σ R^{2(n−j−1)} E[ψ_j]`.

mod lattice;
mod tree;

pub use lattice::{LatticeOptions, Level, Surfaces};
pub use tree::TreeEngine;

use serde::{Deserialize, Serialize};

use crate::distribution::IncrementDistribution;
use crate::error::{Error, Result};
use crate::market::{step_ratio, MarketParams};

/// Gross one-period returns `e^Z` with their probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStepLaw {
    pub growth: Vec<f64>,
    pub probs: Vec<f64>,
}

impl OneStepLaw {
    pub fn new(growth: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if growth.is_empty() || growth.len() != probs.len() {
            return Err(Error::Parameter(
                "growth and probs must be non-empty and of equal length".into(),
            ));
        }
        if growth.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::Parameter("gross returns must be positive".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Parameter("probabilities must be >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("probabilities sum to {total}")));
        }
        Ok(OneStepLaw { growth, probs })
    }

    pub fn from_distribution(dist: &IncrementDistribution) -> Self {
        let (growth, probs) = dist.support().map(|(_, z, p)| (z.exp(), p)).unzip();
        OneStepLaw { growth, probs }
    }
}

/// `a`, `b` and the moments of `X = e^Z − R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnePeriodCoefficients {
    pub a: f64,
    pub b: f64,
    pub r_gross: f64,
    pub mean_x: f64,
    pub mean_x2: f64,
}

/// Coefficients from an arbitrary one-step law.
pub fn law_coefficients(law: &OneStepLaw, r_gross: f64) -> Result<OnePeriodCoefficients> {
    if !(r_gross > 0.0) {
        return Err(Error::Parameter(format!("gross rate must be > 0, got {r_gross}")));
    }
    let (mut ex, mut ex2) = (0.0, 0.0);
    for (g, p) in law.growth.iter().zip(&law.probs) {
        let x = g - r_gross;
        ex += p * x;
        ex2 += p * x * x;
    }
    if !(ex2 > 0.0) {
        return Err(Error::DegenerateReturns);
    }
    let a = ex / ex2;
    let b = 1.0 - a * ex;
    if !(b > 0.0) {
        return Err(Error::DegenerateReturns);
    }
    Ok(OnePeriodCoefficients {
        a,
        b,
        r_gross,
        mean_x: ex,
        mean_x2: ex2,
    })
}

/// Coefficients from a discretized increment law.
pub fn coefficients(dist: &IncrementDistribution, r_gross: f64) -> Result<OnePeriodCoefficients> {
    law_coefficients(&OneStepLaw::from_distribution(dist), r_gross)
}

/// Up-and-out European call without rebate. `barrier: None` is a vanilla call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpAndOutCall {
    pub strike: f64,
    pub barrier: Option<f64>,
    /// Years.
    pub maturity: f64,
    /// Years between barrier checks; maturity is always checked.
    pub monitoring_interval: f64,
}

impl UpAndOutCall {
    pub fn new(strike: f64, barrier: Option<f64>, maturity: f64, monitoring_interval: f64) -> Result<Self> {
        let o = UpAndOutCall {
            strike,
            barrier,
            maturity,
            monitoring_interval,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0) || !(self.maturity > 0.0) || !(self.monitoring_interval > 0.0) {
            return Err(Error::Parameter(
                "strike, maturity and monitoring interval must be > 0".into(),
            ));
        }
        if let Some(b) = self.barrier {
            if !(b > 0.0) || b.is_nan() {
                return Err(Error::Parameter(format!("barrier must be > 0, got {b}")));
            }
        }
        Ok(())
    }

    pub fn payoff(&self, s: f64) -> f64 {
        (s - self.strike).max(0.0)
    }

    /// `(n, steps per monitoring date)` for rebalancing interval `delta`.
    pub fn steps(&self, delta: f64) -> Result<(usize, usize)> {
        let n = step_ratio(self.maturity, delta)?;
        let m = step_ratio(self.monitoring_interval, delta)?;
        Ok((n, m))
    }

    /// True when the barrier is at or below the spot, so the option is dead.
    pub fn is_dead(&self, s0: f64) -> bool {
        matches!(self.barrier, Some(b) if b <= s0)
    }
}

/// Which strategy a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// `φ = ξ + aR(V − G)/S`.
    Dynamic,
    /// `ξ`.
    Local,
}

/// Grid and snapping details of a lattice run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub eta: f64,
    pub n_down: usize,
    pub n_up: usize,
    /// Snapped barrier offset `k_b` with `ln(B/S₀) = (k_b + ½)η`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier_offset: Option<i64>,
    /// Weight on the upper of two snapped barriers when interpolating.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier_weight: Option<f64>,
    /// Widest level array used.
    pub max_width: usize,
    /// Largest per-step probability leakage seen in the forward pass.
    pub leakage: f64,
}

/// Output of the recursions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeReport {
    pub v0: f64,
    /// ε₀(φ) at `x = V₀`.
    pub eps0_dyn: f64,
    /// ε₀(ξ) at `x = V₀`.
    pub eps0_loc: f64,
    /// ξ₀ at the initial node.
    pub xi0: f64,
    /// `E[ψ_j]` for `j = 0..n`.
    pub psi_means: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub r_gross: f64,
    /// Feedback coefficient `aR` of the dynamic strategy.
    pub phi_coefficient: f64,
    pub n_steps: usize,
    pub steps_per_monitor: usize,
    pub diagnostics: Diagnostics,
    /// Value and hedge surfaces, when requested.
    #[serde(skip)]
    pub surfaces: Option<Surfaces>,
}

impl HedgeReport {
    /// `ε₀²` of a strategy from `E[ψ_j]`.
    fn accumulate(psi_means: &[f64], weight: f64) -> f64 {
        // Σ_j w^{n−j−1} E[ψ_j] by Horner's rule
        psi_means.iter().fold(0.0, |acc, &p| acc * weight + p)
    }

    fn from_psi(v0: f64, xi0: f64, psi_means: Vec<f64>, c: &OnePeriodCoefficients, n: usize, m: usize) -> Self {
        let r2 = c.r_gross * c.r_gross;
        let e_dyn = Self::accumulate(&psi_means, r2 * c.b);
        let e_loc = Self::accumulate(&psi_means, r2);
        HedgeReport {
            v0,
            eps0_dyn: e_dyn.max(0.0).sqrt(),
            eps0_loc: e_loc.max(0.0).sqrt(),
            xi0,
            psi_means,
            a: c.a,
            b: c.b,
            r_gross: c.r_gross,
            phi_coefficient: c.a * c.r_gross,
            n_steps: n,
            steps_per_monitor: m,
            diagnostics: Diagnostics::default(),
            surfaces: None,
        }
    }

    /// Coefficient of `(x − V₀)²` in the expected squared error.
    pub fn endowment_coefficient(&self, strategy: Strategy) -> f64 {
        let r2 = self.r_gross * self.r_gross;
        match strategy {
            Strategy::Dynamic => (r2 * self.b).powi(self.n_steps as i32),
            Strategy::Local => r2.powi(self.n_steps as i32),
        }
    }

    /// `E[(G_n − H)²]` when starting from endowment `x`.
    pub fn expected_squared_error(&self, x: f64, strategy: Strategy) -> f64 {
        let eps = match strategy {
            Strategy::Dynamic => self.eps0_dyn,
            Strategy::Local => self.eps0_loc,
        };
        self.endowment_coefficient(strategy) * (x - self.v0).powi(2) + eps * eps
    }

    /// Report of an option that is dead at inception.
    fn dead(c: &OnePeriodCoefficients, n: usize, m: usize) -> Self {
        Self::from_psi(0.0, 0.0, vec![0.0; n], c, n, m)
    }
}

/// Snapped barrier position `x = ln(B/S₀)/η − ½`.
fn barrier_position(barrier: f64, s0: f64, eta: f64) -> f64 {
    (barrier / s0).ln() / eta - 0.5
}

const SNAP_TOL: f64 = 1e-9;

/// Run the recursions with the barrier snapped to `ln(B/S₀) ∈ (ℤ + ½)η`.
///
/// Errors if the barrier is not on that grid.
pub fn backward_induct(
    option: &UpAndOutCall,
    dist: &IncrementDistribution,
    params: &MarketParams,
    s0: f64,
    opts: &LatticeOptions,
) -> Result<HedgeReport> {
    option.validate()?;
    params.validate()?;
    let (n, m) = option.steps(params.delta)?;
    let c = coefficients(dist, params.gross_rate())?;
    if option.is_dead(s0) {
        return Ok(HedgeReport::dead(&c, n, m));
    }
    let kb = match option.barrier {
        None => None,
        Some(b) => {
            let x = barrier_position(b, s0, dist.eta());
            if (x - x.round()).abs() > SNAP_TOL {
                return Err(Error::Configuration(format!(
                    "barrier {b} is not on the half-grid (offset {x}); use barrier_interpolate"
                )));
            }
            Some(x.round() as i64)
        }
    };
    lattice::run(option, kb, dist, &c, n, m, s0, opts)
}

/// Run at the two snapped barriers around `B` and interpolate `V₀`, `ε₀²` and
/// `E[ψ_j]` linearly in `ln B`. Falls through to a direct run when `B` is
/// already on the grid or absent.
pub fn barrier_interpolate(
    option: &UpAndOutCall,
    dist: &IncrementDistribution,
    params: &MarketParams,
    s0: f64,
    opts: &LatticeOptions,
) -> Result<HedgeReport> {
    let Some(b) = option.barrier else {
        return backward_induct(option, dist, params, s0, opts);
    };
    if b <= s0 {
        return backward_induct(option, dist, params, s0, opts);
    }
    let eta = dist.eta();
    let x = barrier_position(b, s0, eta);
    if (x - x.round()).abs() <= SNAP_TOL {
        let snapped = UpAndOutCall {
            barrier: Some(s0 * ((x.round() + 0.5) * eta).exp()),
            ..*option
        };
        return backward_induct(&snapped, dist, params, s0, opts);
    }
    let lo = x.floor();
    let w = x - lo;
    let at = |k: f64| {
        let o = UpAndOutCall {
            barrier: Some(s0 * ((k + 0.5) * eta).exp()),
            ..*option
        };
        backward_induct(&o, dist, params, s0, opts)
    };
    let (r0, r1) = (at(lo)?, at(lo + 1.0)?);
    let mix = |p: f64, q: f64| (1.0 - w) * p + w * q;
    let psi_means: Vec<f64> = r0
        .psi_means
        .iter()
        .zip(&r1.psi_means)
        .map(|(&p, &q)| mix(p, q))
        .collect();
    let mut out = r0.clone();
    out.v0 = mix(r0.v0, r1.v0);
    out.xi0 = mix(r0.xi0, r1.xi0);
    out.eps0_dyn = mix(r0.eps0_dyn.powi(2), r1.eps0_dyn.powi(2)).sqrt();
    out.eps0_loc = mix(r0.eps0_loc.powi(2), r1.eps0_loc.powi(2)).sqrt();
    out.psi_means = psi_means;
    out.surfaces = None;
    out.diagnostics.barrier_weight = Some(w);
    out.diagnostics.max_width = r0.diagnostics.max_width.max(r1.diagnostics.max_width);
    out.diagnostics.leakage = r0.diagnostics.leakage.max(r1.diagnostics.leakage);
    Ok(out)
}

/// Recursions for the constant claim `H ≡ c` (no barrier).
pub fn constant_claim_check(
    c: f64,
    dist: &IncrementDistribution,
    params: &MarketParams,
    n: usize,
) -> Result<HedgeReport> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Parameter("need at least one step".into()));
    }
    let coef = coefficients(dist, params.gross_rate())?;
    lattice::run_constant(c, dist, &coef, n)
}
