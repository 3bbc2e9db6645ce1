//! Non-recombining tree for small problems with arbitrary gross returns.
//!
//! Node `id` at level `i` has children `id·L + j`. Everything is stored, so
//! the tree serves as an exact reference for the lattice and for Monte Carlo.

use super::{law_coefficients, HedgeReport, OnePeriodCoefficients, OneStepLaw};
use crate::error::{Error, Result};

/// Largest number of leaves a tree may have.
pub const MAX_TREE_LEAVES: usize = 1 << 22;

#[derive(Debug, Clone)]
struct TreeLevel {
    price: Vec<f64>,
    alive: Vec<bool>,
    prob: Vec<f64>,
    value: Vec<f64>,
    hedge: Vec<f64>,
    psi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TreeEngine {
    law: OneStepLaw,
    coef: OnePeriodCoefficients,
    barrier: Option<f64>,
    n: usize,
    m: usize,
    levels: Vec<TreeLevel>,
}

impl TreeEngine {
    /// Up-and-out call over `n` steps, checked every `m` steps and at maturity.
    /// Nodes with `S > barrier` knock out.
    pub fn new(
        law: OneStepLaw,
        r_gross: f64,
        s0: f64,
        strike: f64,
        barrier: Option<f64>,
        n: usize,
        m: usize,
    ) -> Result<Self> {
        if strike.is_nan() {
            return Err(Error::Parameter("strike is NaN".into()));
        }
        Self::with_payoff(law, r_gross, s0, barrier, n, m, &|s: f64| (s - strike).max(0.0))
    }

    /// Same tree for an arbitrary payoff of the terminal price.
    pub fn with_payoff(
        law: OneStepLaw,
        r_gross: f64,
        s0: f64,
        barrier: Option<f64>,
        n: usize,
        m: usize,
        payoff: &dyn Fn(f64) -> f64,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Parameter("tree needs n, m >= 1".into()));
        }
        if !(s0 > 0.0) {
            return Err(Error::Parameter("need s0 > 0".into()));
        }
        let width = law.growth.len();
        let leaves = (width as f64).powi(n as i32);
        if leaves > MAX_TREE_LEAVES as f64 {
            return Err(Error::Size(format!("{width}^{n} tree leaves exceed {MAX_TREE_LEAVES}")));
        }
        let coef = law_coefficients(&law, r_gross)?;
        let mut t = TreeEngine {
            law,
            coef,
            barrier,
            n,
            m,
            levels: Vec::with_capacity(n + 1),
        };
        t.build(s0, payoff);
        Ok(t)
    }

    fn is_monitoring(&self, i: usize) -> bool {
        i > 0 && (i.is_multiple_of(self.m) || i == self.n)
    }

    fn build(&mut self, s0: f64, payoff: &dyn Fn(f64) -> f64) {
        let width = self.law.growth.len();
        let mut level = TreeLevel {
            price: vec![s0],
            alive: vec![self.barrier.is_none_or(|b| s0 <= b)],
            prob: vec![1.0],
            value: vec![],
            hedge: vec![],
            psi: vec![],
        };
        for i in 1..=self.n {
            let size = level.price.len() * width;
            let mut next = TreeLevel {
                price: Vec::with_capacity(size),
                alive: Vec::with_capacity(size),
                prob: Vec::with_capacity(size),
                value: vec![],
                hedge: vec![],
                psi: vec![],
            };
            for id in 0..level.price.len() {
                for (g, p) in self.law.growth.iter().zip(&self.law.probs) {
                    let s = level.price[id] * g;
                    let knocked = self.is_monitoring(i) && self.barrier.is_some_and(|b| s > b);
                    next.price.push(s);
                    next.alive.push(level.alive[id] && !knocked);
                    next.prob.push(level.prob[id] * p);
                }
            }
            self.levels.push(level);
            level = next;
        }
        level.value = level
            .price
            .iter()
            .zip(&level.alive)
            .map(|(&s, &a)| if a { payoff(s) } else { 0.0 })
            .collect();
        self.levels.push(level);
        let c = self.coef;
        for i in (0..self.n).rev() {
            let next = self.levels[i + 1].value.clone();
            let cur = &mut self.levels[i];
            let size = cur.price.len();
            cur.value = vec![0.0; size];
            cur.hedge = vec![0.0; size];
            cur.psi = vec![0.0; size];
            for id in 0..size {
                let s = cur.price[id];
                let kids = &next[id * width..(id + 1) * width];
                let (mut v, mut hx) = (0.0, 0.0);
                for ((g, p), vn) in self.law.growth.iter().zip(&self.law.probs).zip(kids) {
                    let x = g - c.r_gross;
                    v += p * (1.0 - c.a * x) * vn;
                    hx += p * x * vn;
                }
                v /= c.b * c.r_gross;
                let xi = (hx - c.r_gross * v * c.mean_x) / (s * c.mean_x2);
                let mut psi = 0.0;
                for ((g, p), vn) in self.law.growth.iter().zip(&self.law.probs).zip(kids) {
                    let e = c.r_gross * v + xi * s * (g - c.r_gross) - vn;
                    psi += p * e * e;
                }
                cur.value[id] = if cur.alive[id] { v } else { 0.0 };
                cur.hedge[id] = if cur.alive[id] { xi } else { 0.0 };
                cur.psi[id] = if cur.alive[id] { psi } else { 0.0 };
            }
        }
    }

    pub fn coefficients(&self) -> &OnePeriodCoefficients {
        &self.coef
    }

    pub fn law(&self) -> &OneStepLaw {
        &self.law
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    /// Number of nodes at level `i`.
    pub fn level_size(&self, i: usize) -> usize {
        self.levels[i].price.len()
    }

    pub fn price(&self, i: usize, id: usize) -> f64 {
        self.levels[i].price[id]
    }

    pub fn alive(&self, i: usize, id: usize) -> bool {
        self.levels[i].alive[id]
    }

    pub fn probability(&self, i: usize, id: usize) -> f64 {
        self.levels[i].prob[id]
    }

    pub fn value(&self, i: usize, id: usize) -> f64 {
        self.levels[i].value[id]
    }

    pub fn hedge(&self, i: usize, id: usize) -> f64 {
        self.levels[i].hedge[id]
    }

    pub fn psi(&self, i: usize, id: usize) -> f64 {
        self.levels[i].psi[id]
    }

    /// Claim paid at leaf `id`.
    pub fn claim(&self, id: usize) -> f64 {
        self.levels[self.n].value[id]
    }

    pub fn report(&self) -> HedgeReport {
        let psi_means = (0..self.n)
            .map(|i| {
                let l = &self.levels[i];
                l.prob.iter().zip(&l.psi).map(|(p, s)| p * s).sum()
            })
            .collect();
        HedgeReport::from_psi(
            self.value(0, 0),
            self.hedge(0, 0),
            psi_means,
            &self.coef,
            self.n,
            self.m,
        )
    }
}
