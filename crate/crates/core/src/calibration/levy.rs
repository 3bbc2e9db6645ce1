//! Piecewise-linear Lévy densities on an equidistant grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest moment order cached for the small-argument series of the cumulant.
pub(crate) const MAX_MOMENT: usize = 40;

/// Lévy density tabulated at `start + j * spacing`, `j = 0..len`, linear in
/// between and zero outside the first and last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyDensity {
    pub start: f64,
    pub spacing: f64,
    pub density: Vec<f64>,
}

impl LevyDensity {
    pub fn new(start: f64, spacing: f64, density: Vec<f64>) -> Result<Self> {
        let d = LevyDensity {
            start,
            spacing,
            density,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() || !self.start.is_finite() {
            return Err(Error::Parameter(format!(
                "grid spacing must be positive and finite, got {}",
                self.spacing
            )));
        }
        if self.density.len() < 3 {
            return Err(Error::Parameter("density needs at least 3 grid points".into()));
        }
        if self.density.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter("density values must be finite and >= 0".into()));
        }
        if self.density[0] != 0.0 || *self.density.last().unwrap() != 0.0 {
            return Err(Error::Parameter("density must vanish at both end points".into()));
        }
        Ok(())
    }

    /// Tabulate `f` on `n_interior` interior nodes spanning `[lo, hi]`, with one
    /// extra zero node at each side.
    pub fn tabulate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n_interior: usize) -> Result<Self> {
        if n_interior < 2 || !(hi > lo) {
            return Err(Error::Parameter("tabulate needs hi > lo and >= 2 nodes".into()));
        }
        let spacing = (hi - lo) / (n_interior - 1) as f64;
        let start = lo - spacing;
        let mut density = Vec::with_capacity(n_interior + 2);
        density.push(0.0);
        density.extend((1..=n_interior).map(|j| f(start + j as f64 * spacing).max(0.0)));
        density.push(0.0);
        LevyDensity::new(start, spacing, density)
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    /// Number of interior nodes (`N` in `m_0 < ... < m_{N+1}`).
    pub fn n_interior(&self) -> usize {
        self.density.len() - 2
    }

    pub fn node(&self, j: usize) -> f64 {
        self.start + j as f64 * self.spacing
    }

    pub fn end(&self) -> f64 {
        self.node(self.len() - 1)
    }

    /// Largest |x| on the support.
    pub fn max_abs(&self) -> f64 {
        self.start.abs().max(self.end().abs())
    }

    /// Density at `x` (linear interpolation, zero outside the support).
    pub fn value_at(&self, x: f64) -> f64 {
        let t = (x - self.start) / self.spacing;
        if !(t > 0.0) || t >= (self.len() - 1) as f64 {
            return 0.0;
        }
        let j = t.floor() as usize;
        let w = t - j as f64;
        self.density[j] * (1.0 - w) + self.density[j + 1] * w
    }

    /// `∫ x^k f(x) dx`, exact for the piecewise-linear density.
    ///
    /// Written as a sum of hat functions: each node contributes
    /// `h f_j Σ_{even i ≤ k} C(k,i) m_j^{k-i} h^i 2/((i+1)(i+2))`.
    pub fn moment(&self, k: usize) -> f64 {
        let h = self.spacing;
        let mut hat = Vec::with_capacity(k / 2 + 1);
        let mut binom = 1.0f64;
        for i in 0..=k {
            if i > 0 {
                binom = binom * (k + 1 - i) as f64 / i as f64;
            }
            if i % 2 == 0 {
                hat.push((k - i, binom * h.powi(i as i32) * 2.0 / ((i + 1) * (i + 2)) as f64));
            }
        }
        let mut acc = 0.0;
        for (j, &f) in self.density.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            let m = self.node(j);
            let s: f64 = hat.iter().map(|&(p, c)| c * m.powi(p as i32)).sum();
            acc += f * s;
        }
        h * acc
    }

    /// `∫ e^{ux} f(x) dx`, exact for the piecewise-linear density.
    ///
    /// Each hat function integrates to `h e^{u m_j} (sinh(w/2)/(w/2))^2` with `w = u h`.
    pub fn exp_integral(&self, u: Complex64) -> Complex64 {
        let h = self.spacing;
        let w = u * h;
        let half = w * 0.5;
        let shape = if half.norm() < 1e-3 {
            let h2 = half * half;
            Complex64::new(1.0, 0.0) + h2 / 3.0 + h2 * h2 * (2.0 / 45.0)
        } else {
            let s = half.sinh() / half;
            s * s
        };
        let step = w.exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut e = Complex64::new(0.0, 0.0);
        for (j, &f) in self.density.iter().enumerate() {
            if j % 64 == 0 {
                e = (u * self.node(j)).exp();
            } else {
                e *= step;
            }
            if f != 0.0 {
                acc += e * f;
            }
        }
        acc * shape * h
    }

    /// Push-forward under `x -> scale * x` (mass preserved).
    pub fn scaled(&self, scale: f64) -> Result<LevyDensity> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Parameter(format!("scale must be positive, got {scale}")));
        }
        LevyDensity::new(
            self.start * scale,
            self.spacing * scale,
            self.density.iter().map(|v| v / scale).collect(),
        )
    }

    /// Density multiplied by a constant intensity factor.
    pub fn times(&self, factor: f64) -> Result<LevyDensity> {
        LevyDensity::new(
            self.start,
            self.spacing,
            self.density.iter().map(|v| v * factor).collect(),
        )
    }
}
