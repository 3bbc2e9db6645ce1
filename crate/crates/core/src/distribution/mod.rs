//! Discretized one-period log-return laws on the grid `jη`.

mod fourier;

pub use fourier::{cdf, FourierLaw};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::CumulantFunction;
use crate::error::{Error, Result};
use crate::normal;

/// Settings for the Fourier inversion and the lattice grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InversionConfig {
    /// Tail mass left outside the grid on each side.
    pub alpha: f64,
    /// Grid spacing in log-return units.
    pub eta: f64,
    /// Damping search range for `|c|`, in units of one over the period
    /// standard deviation.
    pub damping_bracket: (f64, f64),
    /// The λ-integral stops once the integrand modulus stays below this.
    pub truncation_tol: f64,
    /// Absolute tolerance between successive step halvings.
    pub quadrature_tol: f64,
    /// Quadrature points per oscillation period of `e^{−iλ(z − mean)}`.
    pub steps_per_period: f64,
    /// Step is at most `|c|` divided by this.
    pub pole_resolution: f64,
    pub max_halvings: usize,
    /// Integrand evaluations allowed per sweep.
    pub max_evaluations: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            alpha: 1e-5,
            eta: 0.0005,
            damping_bracket: (1e-2, 2e2),
            truncation_tol: 1e-14,
            quadrature_tol: 1e-12,
            steps_per_period: 16.0,
            pole_resolution: 6.0,
            max_halvings: 4,
            max_evaluations: 1 << 20,
        }
    }
}

impl InversionConfig {
    pub fn with_eta(eta: f64) -> Self {
        InversionConfig {
            eta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Parameter(format!(
                "alpha must be in (0, 0.5), got {}",
                self.alpha
            )));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Parameter(format!("eta must be > 0, got {}", self.eta)));
        }
        let (lo, hi) = self.damping_bracket;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Parameter("damping bracket must satisfy 0 < lo < hi".into()));
        }
        if !(self.truncation_tol > 0.0
            && self.quadrature_tol > 0.0
            && self.steps_per_period >= 1.0
            && self.pole_resolution >= 1.0
            && self.max_halvings >= 1
            && self.max_evaluations >= 16)
        {
            return Err(Error::Parameter("invalid quadrature settings".into()));
        }
        Ok(())
    }
}

/// A one-period law with a distribution function.
pub trait PeriodLaw: Sync {
    fn cdf(&self, z: f64) -> Result<f64>;
    fn mean(&self) -> f64;
    fn sd(&self) -> f64;
}

impl PeriodLaw for FourierLaw<'_> {
    fn cdf(&self, z: f64) -> Result<f64> {
        FourierLaw::cdf(self, z)
    }
    fn mean(&self) -> f64 {
        FourierLaw::mean(self)
    }
    fn sd(&self) -> f64 {
        FourierLaw::sd(self)
    }
}

/// Normal law with closed-form CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalLaw {
    pub mean: f64,
    pub sd: f64,
}

impl PeriodLaw for NormalLaw {
    fn cdf(&self, z: f64) -> Result<f64> {
        Ok(normal::cdf((z - self.mean) / self.sd))
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn sd(&self) -> f64 {
        self.sd
    }
}

/// Exact moments of a discrete law, for log returns and gross returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeMoments {
    pub log_mean: f64,
    pub log_variance: f64,
    pub log_kurtosis: f64,
    pub level_mean: f64,
    pub level_variance: f64,
    pub level_kurtosis: f64,
}

fn moments_of(values: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64, f64) {
    let mean: f64 = values.clone().map(|(x, p)| p * x).sum();
    let (mut m2, mut m4) = (0.0, 0.0);
    for (x, p) in values {
        let d = x - mean;
        let d2 = d * d;
        m2 += p * d2;
        m4 += p * d2 * d2;
    }
    (mean, m2, m4 / (m2 * m2))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DistributionSpec {
    eta: f64,
    n_down: usize,
    n_up: usize,
    delta: f64,
    probs: Vec<f64>,
}

/// Law of `Ẑ` on the points `jη`, `j = −n_down..=n_up`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub struct IncrementDistribution {
    eta: f64,
    n_down: usize,
    n_up: usize,
    delta: f64,
    probs: Vec<f64>,
    moments: LatticeMoments,
}

impl TryFrom<DistributionSpec> for IncrementDistribution {
    type Error = Error;
    fn try_from(s: DistributionSpec) -> Result<Self> {
        IncrementDistribution::new(s.eta, s.n_down, s.n_up, s.delta, s.probs)
    }
}

impl From<IncrementDistribution> for DistributionSpec {
    fn from(d: IncrementDistribution) -> Self {
        DistributionSpec {
            eta: d.eta,
            n_down: d.n_down,
            n_up: d.n_up,
            delta: d.delta,
            probs: d.probs,
        }
    }
}

impl IncrementDistribution {
    /// Build from explicit probabilities; they must be nonnegative and sum to
    /// one within `1e-12`.
    pub fn new(eta: f64, n_down: usize, n_up: usize, delta: f64, probs: Vec<f64>) -> Result<Self> {
        if !(eta > 0.0) || !(delta > 0.0) {
            return Err(Error::Parameter("eta and delta must be > 0".into()));
        }
        if n_down < 1 || n_up < 1 {
            return Err(Error::Parameter("n_down and n_up must be >= 1".into()));
        }
        if probs.len() != n_down + n_up + 1 {
            return Err(Error::Parameter(format!(
                "expected {} probabilities, got {}",
                n_down + n_up + 1,
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Parameter("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("probabilities sum to {total}")));
        }
        let mut d = IncrementDistribution {
            eta,
            n_down,
            n_up,
            delta,
            probs,
            moments: LatticeMoments {
                log_mean: 0.0,
                log_variance: 0.0,
                log_kurtosis: 0.0,
                level_mean: 0.0,
                level_variance: 0.0,
                level_kurtosis: 0.0,
            },
        };
        d.moments = d.compute_moments();
        Ok(d)
    }

    fn compute_moments(&self) -> LatticeMoments {
        let (log_mean, log_variance, log_kurtosis) = moments_of(self.support().map(|(_, z, p)| (z, p)));
        let (level_mean, level_variance, level_kurtosis) = moments_of(self.support().map(|(_, z, p)| (z.exp(), p)));
        LatticeMoments {
            log_mean,
            log_variance,
            log_kurtosis,
            level_mean,
            level_variance,
            level_kurtosis,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n_down(&self) -> usize {
        self.n_down
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Probabilities indexed from `j = −n_down`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `(j, z_j, p_j)` triples.
    pub fn support(&self) -> impl Iterator<Item = (i64, f64, f64)> + Clone + '_ {
        let lo = -(self.n_down as i64);
        self.probs.iter().enumerate().map(move |(i, &p)| {
            let j = lo + i as i64;
            (j, j as f64 * self.eta, p)
        })
    }

    pub fn moments(&self) -> &LatticeMoments {
        &self.moments
    }

    /// `E[e^Ẑ]`.
    pub fn gross_mean(&self) -> f64 {
        self.moments.level_mean
    }

    /// CSV with one `j,z,p` row per support point and a commented header.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# eta={:e} delta={:e}\nj,z,p\n", self.eta, self.delta);
        for (j, z, p) in self.support() {
            out.push_str(&format!("{j},{z:e},{p:e}\n"));
        }
        out
    }

    /// Inverse of [`IncrementDistribution::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut eta = None;
        let mut delta = None;
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                for kv in rest.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("eta", v)) => eta = v.parse::<f64>().ok(),
                        Some(("delta", v)) => delta = v.parse::<f64>().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with('j') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed = (cols.len() == 3)
                .then(|| Some((cols[0].parse::<i64>().ok()?, cols[2].parse::<f64>().ok()?)))
                .flatten();
            rows.push(parsed.ok_or_else(|| Error::Input(format!("bad distribution row '{line}'")))?);
        }
        let eta = eta.ok_or_else(|| Error::Input("missing eta in header".into()))?;
        let delta = delta.ok_or_else(|| Error::Input("missing delta in header".into()))?;
        let first = rows.first().ok_or_else(|| Error::Input("no rows".into()))?.0;
        if rows.iter().enumerate().any(|(i, (j, _))| *j != first + i as i64) || first > -1 {
            return Err(Error::Input("rows must list consecutive j starting below 0".into()));
        }
        let n_down = (-first) as usize;
        let n_up = rows.len() - 1 - n_down;
        IncrementDistribution::new(eta, n_down, n_up, delta, rows.into_iter().map(|r| r.1).collect())
    }
}

/// Smallest `n ≥ 1` with `pred(n)`, for a predicate monotone in `n`.
fn minimal_n(guess: usize, pred: impl Fn(usize) -> Result<bool>) -> Result<usize> {
    let mut hi = guess.max(1);
    while !pred(hi)? {
        hi = hi
            .checked_mul(2)
            .filter(|&h| h < 1 << 40)
            .ok_or_else(|| Error::InversionAccuracy("tail condition never met while growing the grid".into()))?;
    }
    let mut lo = 0;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Bin a period law onto the grid `jη` with tail mass `alpha` folded into the
/// two end points.
pub fn discretize_law(law: &dyn PeriodLaw, delta: f64, cfg: &InversionConfig) -> Result<IncrementDistribution> {
    cfg.validate()?;
    let eta = cfg.eta;
    let (m, sd) = (law.mean(), law.sd());
    let q = -normal::inv_cdf(cfg.alpha);
    let guess_down = ((q * sd - m) / eta).ceil().max(1.0) as usize;
    let guess_up = ((q * sd + m) / eta).ceil().max(1.0) as usize;
    let n_down = minimal_n(guess_down, |n| Ok(law.cdf(-(n as f64) * eta)? <= cfg.alpha))?;
    let n_up = minimal_n(guess_up, |n| Ok(law.cdf(n as f64 * eta)? >= 1.0 - cfg.alpha))?;
    // F at the half-grid points (j + ½)η, j = −n_down..n_up−1
    let cuts: Vec<f64> = (0..n_down + n_up)
        .into_par_iter()
        .map(|i| law.cdf((i as f64 - n_down as f64 + 0.5) * eta))
        .collect::<Result<_>>()?;
    let mut probs = Vec::with_capacity(n_down + n_up + 1);
    probs.push(cuts[0]);
    probs.extend(cuts.windows(2).map(|w| w[1] - w[0]));
    probs.push(1.0 - cuts[cuts.len() - 1]);
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| **p < -1e-10) {
        return Err(Error::InversionAccuracy(format!(
            "negative probability {p:e} at j={}",
            i as i64 - n_down as i64
        )));
    }
    probs.iter_mut().for_each(|p| *p = p.max(0.0));
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() >= 1e-6 {
        return Err(Error::InversionAccuracy(format!("probabilities sum to {total}")));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    IncrementDistribution::new(eta, n_down, n_up, delta, probs)
}

/// Discretize the period-`delta` law of `kappa` through Fourier inversion.
pub fn discretize(kappa: &CumulantFunction, delta: f64, cfg: &InversionConfig) -> Result<IncrementDistribution> {
    let law = FourierLaw::new(kappa, delta, cfg)?;
    discretize_law(&law, delta, cfg)
}

/// Exact moments of the discrete law for log and gross returns.
pub fn lattice_moments(dist: &IncrementDistribution) -> LatticeMoments {
    *dist.moments()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn daily_gaussian(mu: f64) -> (CumulantFunction, f64) {
        (CumulantFunction::gaussian(mu, 0.04).unwrap(), 1.0 / 250.0)
    }

    #[test]
    fn two_point_law_has_unit_kurtosis() {
        let d = IncrementDistribution::new(0.01, 1, 1, 1.0, vec![0.5, 0.0, 0.5]).unwrap();
        assert!((d.moments().log_kurtosis - 1.0).abs() < 1e-12);
        assert!(d.moments().log_mean.abs() < 1e-18);
    }

    #[test]
    fn gaussian_grid_extent_matches_normal_quantile() {
        let (k, dt) = daily_gaussian(0.02);
        let cfg = InversionConfig::default();
        let d = discretize(&k, dt, &cfg).unwrap();
        let sd = (0.04 * dt).sqrt();
        let m = 0.02 * dt;
        let q = -normal::inv_cdf(1e-5);
        assert_eq!(d.n_down(), ((q * sd - m) / cfg.eta).ceil() as usize);
        assert_eq!(d.n_up(), ((q * sd + m) / cfg.eta).ceil() as usize);
        // minimality
        let law = FourierLaw::new(&k, dt, &cfg).unwrap();
        assert!(law.cdf(-((d.n_down() - 1) as f64) * cfg.eta).unwrap() > 1e-5);
        assert!(law.cdf((d.n_up() - 1) as f64 * cfg.eta).unwrap() < 1.0 - 1e-5);
    }

    #[test]
    fn symmetric_law_has_symmetric_probabilities() {
        let (k, dt) = daily_gaussian(0.0);
        let d = discretize(&k, dt, &InversionConfig::default()).unwrap();
        assert_eq!(d.n_down(), d.n_up());
        let p = d.probs();
        for i in 0..p.len() {
            assert!((p[i] - p[p.len() - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn fourier_and_closed_form_bins_agree() {
        let (k, dt) = daily_gaussian(0.1);
        let cfg = InversionConfig::default();
        let a = discretize(&k, dt, &cfg).unwrap();
        let b = discretize_law(
            &NormalLaw {
                mean: 0.1 * dt,
                sd: (0.04 * dt).sqrt(),
            },
            dt,
            &cfg,
        )
        .unwrap();
        assert_eq!((a.n_down(), a.n_up()), (b.n_down(), b.n_up()));
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let d = IncrementDistribution::new(0.001, 2, 1, 0.004, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let back = IncrementDistribution::from_csv(&d.to_csv()).unwrap();
        assert_eq!(back.probs(), d.probs());
        assert_eq!((back.n_down(), back.n_up()), (2, 1));
        let json = serde_json::to_string(&d).unwrap();
        let back: IncrementDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<IncrementDistribution>(
            r#"{"eta":0.001,"n_down":1,"n_up":1,"delta":1,"probs":[0.5,0.5,0.5]}"#
        )
        .is_err());
    }

    #[test]
    fn rejects_bad_laws() {
        assert!(IncrementDistribution::new(0.01, 1, 1, 1.0, vec![0.5, 0.6, -0.1]).is_err());
        assert!(IncrementDistribution::new(0.01, 0, 1, 1.0, vec![0.5, 0.5]).is_err());
        assert!(IncrementDistribution::new(0.01, 1, 1, 1.0, vec![0.5, 0.5]).is_err());
    }
}
