//! Cumulant generating function of an exponential Lévy model.
//!
//! `κ(u) = μu + ½ σ_c² u² + ∫ (e^{ux} − 1 − ux) F(dx)`, with the truncation
//! function `h(x) = x`, so that `κ'(0) = μ` is the annualized mean log return.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::levy::{LevyDensity, MAX_MOMENT};
use crate::error::{Error, Result};

/// Jump part of a Lévy triplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JumpMeasure {
    /// Absolutely continuous measure with piecewise-linear density.
    PiecewiseLinear(LevyDensity),
    /// Finite sum of point masses `(location, weight)`.
    Atoms { atoms: Vec<(f64, f64)> },
}

impl JumpMeasure {
    fn validate(&self) -> Result<()> {
        match self {
            JumpMeasure::PiecewiseLinear(d) => d.validate(),
            JumpMeasure::Atoms { atoms } => {
                if atoms.iter().any(|(x, w)| !x.is_finite() || !w.is_finite() || *w < 0.0) {
                    return Err(Error::Parameter("atoms need finite locations and weights >= 0".into()));
                }
                Ok(())
            }
        }
    }

    fn moment(&self, k: usize) -> f64 {
        match self {
            JumpMeasure::PiecewiseLinear(d) => d.moment(k),
            JumpMeasure::Atoms { atoms } => atoms.iter().map(|(x, w)| w * x.powi(k as i32)).sum(),
        }
    }

    fn max_abs(&self) -> f64 {
        match self {
            JumpMeasure::PiecewiseLinear(d) => d.max_abs(),
            JumpMeasure::Atoms { atoms } => atoms.iter().fold(0.0, |m, (x, _)| m.max(x.abs())),
        }
    }

    /// Push-forward under `x -> scale * x`.
    pub fn scaled(&self, scale: f64) -> Result<JumpMeasure> {
        Ok(match self {
            JumpMeasure::PiecewiseLinear(d) => JumpMeasure::PiecewiseLinear(d.scaled(scale)?),
            JumpMeasure::Atoms { atoms } => JumpMeasure::Atoms {
                atoms: atoms.iter().map(|(x, w)| (x * scale, *w)).collect(),
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CumulantSpec {
    drift: f64,
    diffusion: f64,
    jumps: Option<JumpMeasure>,
}

/// Per-year cumulant function of the log price.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CumulantSpec", into = "CumulantSpec")]
pub struct CumulantFunction {
    drift: f64,
    diffusion: f64,
    jumps: Option<JumpMeasure>,
    moments: Vec<f64>,
    support: f64,
}

impl PartialEq for CumulantFunction {
    fn eq(&self, other: &Self) -> bool {
        self.drift == other.drift && self.diffusion == other.diffusion && self.jumps == other.jumps
    }
}

impl TryFrom<CumulantSpec> for CumulantFunction {
    type Error = Error;
    fn try_from(s: CumulantSpec) -> Result<Self> {
        CumulantFunction::new(s.drift, s.diffusion, s.jumps)
    }
}

impl From<CumulantFunction> for CumulantSpec {
    fn from(c: CumulantFunction) -> Self {
        CumulantSpec {
            drift: c.drift,
            diffusion: c.diffusion,
            jumps: c.jumps,
        }
    }
}

/// Cumulants of the log return over one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// `e^z − 1 − z` without cancellation for small `z`.
fn exp_m1_m_lin(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = z * z * 0.5;
        let mut acc = term;
        for k in 3..30 {
            term = term * z / k as f64;
            acc += term;
            if term.norm() < 1e-18 * acc.norm() {
                break;
            }
        }
        acc
    } else {
        z.exp() - 1.0 - z
    }
}

impl CumulantFunction {
    pub fn new(drift: f64, diffusion: f64, jumps: Option<JumpMeasure>) -> Result<Self> {
        if !drift.is_finite() || !(diffusion >= 0.0) || !diffusion.is_finite() {
            return Err(Error::Parameter("drift must be finite and diffusion >= 0".into()));
        }
        if let Some(j) = &jumps {
            j.validate()?;
        }
        let moments = match &jumps {
            Some(j) => (0..=MAX_MOMENT).map(|k| j.moment(k)).collect(),
            None => vec![0.0; MAX_MOMENT + 1],
        };
        let support = jumps.as_ref().map_or(0.0, |j| j.max_abs());
        Ok(CumulantFunction {
            drift,
            diffusion,
            jumps,
            moments,
            support,
        })
    }

    /// Brownian motion with drift: `κ(u) = drift u + ½ variance u²`.
    pub fn gaussian(drift: f64, variance: f64) -> Result<Self> {
        CumulantFunction::new(drift, variance, None)
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn jumps(&self) -> Option<&JumpMeasure> {
        self.jumps.as_ref()
    }

    /// `∫ x^k F(dx)` of the jump measure.
    pub fn jump_moment(&self, k: usize) -> f64 {
        if k <= MAX_MOMENT {
            self.moments[k]
        } else {
            self.jumps.as_ref().map_or(0.0, |j| j.moment(k))
        }
    }

    /// Largest |x| in the support of the jump measure.
    pub fn jump_support(&self) -> f64 {
        self.support
    }

    /// Per-year second moment of the martingale part, `σ_c² + ∫x²F(dx)`.
    pub fn variance_rate(&self) -> f64 {
        self.diffusion + self.moments[2]
    }

    /// `k`-th derivative of κ at zero, from moment integrals.
    pub fn cumulant(&self, k: usize) -> f64 {
        match k {
            0 => 0.0,
            1 => self.drift,
            2 => self.variance_rate(),
            _ => self.jump_moment(k),
        }
    }

    /// κ at a complex argument.
    pub fn eval(&self, u: Complex64) -> Complex64 {
        if u == Complex64::new(0.0, 0.0) {
            return u;
        }
        let mut k = u * self.drift + u * u * (0.5 * self.diffusion);
        if let Some(j) = &self.jumps {
            k += self.jump_part(j, u);
        }
        k
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(Complex64::new(x, 0.0)).re
    }

    fn jump_part(&self, j: &JumpMeasure, u: Complex64) -> Complex64 {
        if u.norm() * self.support <= 1.0 {
            // Σ_{k≥2} u^k M_k / k!
            let mut acc = Complex64::new(0.0, 0.0);
            let mut pow = u;
            let mut fact = 1.0;
            for k in 2..=MAX_MOMENT {
                pow *= u;
                fact *= k as f64;
                let term = pow * (self.moments[k] / fact);
                acc += term;
                if term.norm() < 1e-18 * acc.norm() && k > 4 {
                    break;
                }
            }
            return acc;
        }
        match j {
            JumpMeasure::PiecewiseLinear(d) => d.exp_integral(u) - self.moments[0] - u * self.moments[1],
            JumpMeasure::Atoms { atoms } => atoms.iter().map(|&(x, w)| exp_m1_m_lin(u * x) * w).sum(),
        }
    }

    /// Point mass of the period-`delta` law, if any: a pure-jump model with a
    /// finite Lévy measure stays at its drift with probability `e^{−Δ F(ℝ)}`.
    pub fn atom(&self, delta: f64) -> Option<(f64, f64)> {
        if self.diffusion > 0.0 {
            return None;
        }
        let location = delta * (self.drift - self.moments[1]);
        let mass = (-delta * self.moments[0]).exp();
        Some((location, mass))
    }

    /// Cumulants of the period-`delta` log return.
    pub fn period_moments(&self, delta: f64) -> Result<PeriodMoments> {
        if !(delta > 0.0) {
            return Err(Error::Parameter(format!("delta must be > 0, got {delta}")));
        }
        let c2 = self.cumulant(2) * delta;
        if !(c2 > 0.0) {
            return Err(Error::DegenerateMeasure("zero variance".into()));
        }
        let c3 = self.cumulant(3) * delta;
        let c4 = self.cumulant(4) * delta;
        Ok(PeriodMoments {
            mean: self.drift * delta,
            variance: c2,
            skewness: c3 / c2.powf(1.5),
            kurtosis: 3.0 + c4 / (c2 * c2),
        })
    }

    /// Mean, variance and kurtosis of the gross return `e^Z` over `delta`.
    pub fn level_moments(&self, delta: f64) -> Result<(f64, f64, f64)> {
        if !(delta > 0.0) {
            return Err(Error::Parameter(format!("delta must be > 0, got {delta}")));
        }
        let k1 = self.eval_real(1.0);
        // g_j = E[Y^j] − 1 for Y = e^Z / E[e^Z]
        let g = |j: f64| (delta * (self.eval_real(j) - j * k1)).exp_m1();
        let (g2, g3, g4) = (g(2.0), g(3.0), g(4.0));
        let m2 = g2;
        let m4 = g4 - 4.0 * g3 + 6.0 * g2;
        let mean = (delta * k1).exp();
        Ok((mean, mean * mean * m2, m4 / (m2 * m2)))
    }

    /// Rescale the martingale part so the per-year variance becomes `sigma²`,
    /// and set the drift to `mu`. Jumps are pushed through `x -> s x`.
    pub fn rescaled(&self, mu: f64, sigma: f64) -> Result<CumulantFunction> {
        let v = self.variance_rate();
        if !(v > 0.0) {
            return Err(Error::DegenerateMeasure("variance rate is zero".into()));
        }
        if !(sigma > 0.0) {
            return Err(Error::Parameter(format!("sigma must be > 0, got {sigma}")));
        }
        let s = sigma / v.sqrt();
        let jumps = match &self.jumps {
            Some(j) => Some(j.scaled(s)?),
            None => None,
        };
        CumulantFunction::new(mu, self.diffusion * s * s, jumps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_at_origin_and_drift_slope() {
        let d = LevyDensity::new(-0.02, 0.01, vec![0.0, 300.0, 900.0, 100.0, 0.0]).unwrap();
        let k = CumulantFunction::new(0.07, 0.01, Some(JumpMeasure::PiecewiseLinear(d))).unwrap();
        assert_eq!(k.eval(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        assert_eq!(k.cumulant(1), 0.07);
    }

    #[test]
    fn two_atoms_match_direct_sum() {
        let atoms = vec![(-0.05, 10.0), (0.08, 4.0)];
        let k = CumulantFunction::new(0.1, 0.0, Some(JumpMeasure::Atoms { atoms: atoms.clone() })).unwrap();
        let direct: f64 = 0.1 + atoms.iter().map(|(x, w)| w * (x.exp() - 1.0 - x)).sum::<f64>();
        assert!((k.eval_real(1.0) - direct).abs() < 1e-15);
        // large argument goes through the closed form
        let u = Complex64::new(-2.0, 90.0);
        let direct: Complex64 = u * 0.1
            + atoms
                .iter()
                .map(|&(x, w)| ((u * x).exp() - 1.0 - u * x) * w)
                .sum::<Complex64>();
        assert!((k.eval(u) - direct).norm() < 1e-12);
    }

    #[test]
    fn series_and_closed_form_agree_at_the_switch() {
        let d = LevyDensity::new(-0.02, 0.01, vec![0.0, 300.0, 900.0, 100.0, 0.0]).unwrap();
        let k = CumulantFunction::new(0.0, 0.0, Some(JumpMeasure::PiecewiseLinear(d.clone()))).unwrap();
        let r = 1.0 / k.jump_support();
        for &(a, b) in &[(0.999, 1.001), (0.9999, 1.0001)] {
            let u1 = Complex64::from_polar(r * a, 0.7);
            let u2 = Complex64::from_polar(r * b, 0.7);
            let closed = d.exp_integral(u1) - d.moment(0) - u1 * d.moment(1);
            assert!((k.eval(u1) - closed).norm() < 1e-10 * closed.norm());
            assert!((k.eval(u2) - k.eval(u1)).norm() < 1e-2 * k.eval(u1).norm());
        }
    }

    #[test]
    fn gaussian_kurtosis_is_three() {
        let k = CumulantFunction::gaussian(0.05, 0.04).unwrap();
        for &dt in &[1.0 / 250.0, 1.0 / 2000.0] {
            let m = k.period_moments(dt).unwrap();
            assert_eq!(m.kurtosis, 3.0);
            assert!((m.variance - 0.04 * dt).abs() < 1e-18);
        }
        let (mean, var, kurt) = k.level_moments(1.0 / 250.0).unwrap();
        let s2: f64 = 0.04 / 250.0;
        let m: f64 = 0.05 / 250.0;
        assert!((mean - (m + 0.5 * s2).exp()).abs() < 1e-15);
        assert!((var - (s2.exp() - 1.0) * (2.0 * m + s2).exp()).abs() < 1e-15);
        let lognormal = (4.0 * s2).exp() + 2.0 * (3.0 * s2).exp() + 3.0 * (2.0 * s2).exp() - 3.0;
        assert!((kurt - lognormal).abs() < 1e-9);
    }

    #[test]
    fn rescale_hits_target_variance() {
        let d = LevyDensity::new(-0.02, 0.01, vec![0.0, 300.0, 900.0, 100.0, 0.0]).unwrap();
        let k = CumulantFunction::new(0.0, 0.0, Some(JumpMeasure::PiecewiseLinear(d))).unwrap();
        let r = k.rescaled(0.1, 0.2).unwrap();
        assert!((r.variance_rate() / 0.04 - 1.0).abs() < 1e-12);
        assert_eq!(r.drift(), 0.1);
        // kurtosis is scale free
        let a = k.period_moments(0.004).unwrap().kurtosis;
        let b = r.period_moments(0.004).unwrap().kurtosis;
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn serde_round_trip_rebuilds_cache() {
        let d = LevyDensity::new(-0.02, 0.01, vec![0.0, 300.0, 900.0, 100.0, 0.0]).unwrap();
        let k = CumulantFunction::new(0.1, 0.0, Some(JumpMeasure::PiecewiseLinear(d))).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        let back: CumulantFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
        assert_eq!(back.variance_rate(), k.variance_rate());
    }
}
