//! Recombining lattice on log-price offsets `k`, with `S = S₀e^{kη}`.
//!
//! Each step only touches the window of nodes where the value can be
//! nonzero: above the lowest node that can still finish in the money, and
//! below the highest node that can still survive the next monitoring date.
//! Forward probabilities are recomputed per block from checkpoints, so memory
//! stays at `O(√n)` levels unless surfaces are requested.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Diagnostics, HedgeReport, OnePeriodCoefficients, UpAndOutCall};
use crate::distribution::IncrementDistribution;
use crate::error::{Error, Result};

/// Work per step below which a step runs on one thread.
const PARALLEL_WORK: usize = 1 << 14;
/// Largest allowed per-step probability leakage.
const LEAKAGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    /// Keep `V_i` and `ξ_i` on every level.
    pub store_surfaces: bool,
    /// Steps between stored forward levels; defaults to `⌈√n⌉`.
    pub checkpoint_interval: Option<usize>,
}

/// Values on the nodes `lo, lo + 1, …` of one time level.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub lo: i64,
    pub values: Vec<f64>,
}

impl Level {
    fn empty() -> Self {
        Level::default()
    }

    /// Value at node `k`, zero outside the stored range.
    pub fn at(&self, k: i64) -> f64 {
        let t = k - self.lo;
        if t < 0 || t as usize >= self.values.len() {
            0.0
        } else {
            self.values[t as usize]
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }
}

/// `V_i` (after knock-out) for `i = 0..=n` and `ξ_i` for `i = 0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surfaces {
    pub s0: f64,
    pub eta: f64,
    pub values: Vec<Level>,
    pub hedges: Vec<Level>,
}

/// Claim paid at maturity on the nodes that survive every monitoring date.
pub(super) struct Contract<'a> {
    pub n: usize,
    pub m: usize,
    /// Nodes `k > kb` knock out at monitoring steps.
    pub kb: Option<i64>,
    /// Lowest node with a nonzero payoff, if bounded.
    pub k_low: Option<i64>,
    pub terminal: &'a (dyn Fn(f64) -> f64 + Sync),
}

impl Contract<'_> {
    fn is_monitoring(&self, i: usize) -> bool {
        i > 0 && (i.is_multiple_of(self.m) || i == self.n)
    }

    fn next_monitoring(&self, i: usize) -> usize {
        ((i / self.m + 1) * self.m).min(self.n)
    }

    /// Nodes of step `i` that can carry a nonzero value.
    fn window(&self, i: usize, nd: usize, nu: usize) -> Option<(i64, i64)> {
        let (i64n, i64i) = (self.n as i64, i as i64);
        let mut lo = -i64i * nd as i64;
        if let Some(kl) = self.k_low {
            lo = lo.max(kl - (i64n - i64i) * nu as i64);
        }
        let mut hi = i64i * nu as i64;
        if let Some(kb) = self.kb {
            let cap = if self.is_monitoring(i) {
                kb
            } else {
                kb + (self.next_monitoring(i) - i) as i64 * nd as i64
            };
            hi = hi.min(cap);
        }
        (lo <= hi).then_some((lo, hi))
    }
}

struct Kernel {
    nd: i64,
    probs: Vec<f64>,
    /// `X_j = e^{z_j} − R`.
    x: Vec<f64>,
    /// `p_j(1 − aX_j)/(bR)`.
    value_weights: Vec<f64>,
    /// `p_j X_j`.
    hedge_weights: Vec<f64>,
    /// `Σ_{l<j} p_l`.
    cum: Vec<f64>,
    c: OnePeriodCoefficients,
}

impl Kernel {
    fn new(dist: &IncrementDistribution, c: &OnePeriodCoefficients) -> Self {
        let probs = dist.probs().to_vec();
        let x: Vec<f64> = dist.support().map(|(_, z, _)| z.exp() - c.r_gross).collect();
        let value_weights = probs
            .iter()
            .zip(&x)
            .map(|(p, x)| p * (1.0 - c.a * x) / (c.b * c.r_gross))
            .collect();
        let hedge_weights = probs.iter().zip(&x).map(|(p, x)| p * x).collect();
        let mut cum = Vec::with_capacity(probs.len() + 1);
        cum.push(0.0);
        for p in &probs {
            cum.push(cum.last().unwrap() + p);
        }
        Kernel {
            nd: dist.n_down() as i64,
            probs,
            x,
            value_weights,
            hedge_weights,
            cum,
            c: *c,
        }
    }

    fn len(&self) -> usize {
        self.probs.len()
    }

    /// `(V, ξ, ψ)` at node `k` with price `s` from the next level.
    fn node(&self, next: &Level, k: i64, s: f64) -> (f64, f64, f64) {
        let base = k - self.nd - next.lo;
        let len = next.values.len() as i64;
        let j0 = (-base).clamp(0, self.len() as i64) as usize;
        let j1 = (len - base).clamp(0, self.len() as i64) as usize;
        let (mut v, mut hx) = (0.0, 0.0);
        for j in j0..j1 {
            let vn = next.values[(base + j as i64) as usize];
            v += self.value_weights[j] * vn;
            hx += self.hedge_weights[j] * vn;
        }
        let r = self.c.r_gross;
        let xi = (hx - r * v * self.c.mean_x) / (s * self.c.mean_x2);
        let mut psi = 0.0;
        for j in 0..self.len() {
            let vn = if j >= j0 && j < j1 {
                next.values[(base + j as i64) as usize]
            } else {
                0.0
            };
            let e = r * v + xi * s * self.x[j] - vn;
            psi += self.probs[j] * e * e;
        }
        (v, xi, psi)
    }
}

fn parallel<T: Send>(width: usize, work: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if width * work >= PARALLEL_WORK {
        (0..width).into_par_iter().map(f).collect()
    } else {
        (0..width).map(f).collect()
    }
}

/// One forward step of the node probabilities. Returns the new level and the
/// mass that left the window.
fn forward(kernel: &Kernel, cur: &Level, next: Option<(i64, i64)>) -> (Level, f64) {
    let Some((lo, hi)) = next else {
        return (Level::empty(), cur.values.iter().sum());
    };
    let width = (hi - lo + 1) as usize;
    let l = kernel.len() as i64;
    let values = parallel(width, kernel.len(), |t| {
        let k = lo + t as i64;
        // π'(k) = Σ_j p_j π(k − j + nd)
        let mut acc = 0.0;
        for j in 0..l {
            acc += kernel.probs[j as usize] * cur.at(k - j + kernel.nd);
        }
        acc
    });
    let mut out = 0.0;
    for (t, &pi) in cur.values.iter().enumerate() {
        let k = cur.lo + t as i64;
        let j0 = (lo - k + kernel.nd).clamp(0, l) as usize;
        let j1 = (hi - k + kernel.nd + 1).clamp(0, l) as usize;
        let inside = if j1 > j0 { kernel.cum[j1] - kernel.cum[j0] } else { 0.0 };
        out += pi * (1.0 - inside);
    }
    (Level { lo, values }, out)
}

pub(super) fn run_contract(
    contract: &Contract,
    dist: &IncrementDistribution,
    c: &OnePeriodCoefficients,
    s0: f64,
    opts: &LatticeOptions,
) -> Result<HedgeReport> {
    let n = contract.n;
    let (nd, nu) = (dist.n_down(), dist.n_up());
    let eta = dist.eta();
    let kernel = Kernel::new(dist, c);
    let windows: Vec<Option<(i64, i64)>> = (0..=n).map(|i| contract.window(i, nd, nu)).collect();
    let max_width = windows
        .iter()
        .map(|w| w.map_or(0, |(lo, hi)| (hi - lo + 1) as usize))
        .max()
        .unwrap_or(0);
    let block = opts
        .checkpoint_interval
        .unwrap_or_else(|| (n as f64).sqrt().ceil() as usize)
        .max(1);

    // forward pass: checkpoints and leakage
    let start = match windows[0] {
        Some((lo, hi)) if lo <= 0 && 0 <= hi => Level {
            lo: 0,
            values: vec![1.0],
        },
        _ => Level::empty(),
    };
    let mut checkpoints = Vec::with_capacity(n / block + 1);
    let mut leakage: f64 = 0.0;
    let mut cur = start;
    for i in 0..n {
        if i % block == 0 {
            checkpoints.push(cur.clone());
        }
        let before: f64 = cur.values.iter().sum();
        let (next, out) = forward(&kernel, &cur, windows[i + 1]);
        let after: f64 = next.values.iter().sum();
        leakage = leakage.max((after + out - before).abs());
        cur = next;
    }
    if leakage > LEAKAGE_TOL {
        return Err(Error::InternalConsistency(format!(
            "forward probabilities leak {leakage:e} per step"
        )));
    }

    // terminal values
    let mut next = match windows[n] {
        Some((lo, hi)) => Level {
            lo,
            values: (lo..=hi)
                .map(|k| (contract.terminal)(s0 * (k as f64 * eta).exp()))
                .collect(),
        },
        None => Level::empty(),
    };
    let mut surfaces = opts.store_surfaces.then(|| Surfaces {
        s0,
        eta,
        values: vec![Level::empty(); n + 1],
        hedges: vec![Level::empty(); n],
    });
    if let Some(s) = surfaces.as_mut() {
        s.values[n] = next.clone();
    }

    let mut psi_means = vec![0.0; n];
    let mut xi0 = 0.0;
    for (q, checkpoint) in checkpoints.iter().enumerate().rev() {
        let first = q * block;
        let last = ((q + 1) * block).min(n);
        let mut probs = Vec::with_capacity(last - first);
        probs.push(checkpoint.clone());
        for &window in &windows[first + 1..last] {
            let (lvl, _) = forward(&kernel, probs.last().unwrap(), window);
            probs.push(lvl);
        }
        for i in (first..last).rev() {
            let Some((lo, hi)) = windows[i] else {
                next = Level::empty();
                if let Some(s) = surfaces.as_mut() {
                    s.values[i] = Level::empty();
                }
                continue;
            };
            let width = (hi - lo + 1) as usize;
            let nodes = parallel(width, 3 * kernel.len(), |t| {
                let k = lo + t as i64;
                kernel.node(&next, k, s0 * (k as f64 * eta).exp())
            });
            let pi = &probs[i - first];
            let mut mean = 0.0;
            for (t, node) in nodes.iter().enumerate() {
                mean += pi.at(lo + t as i64) * node.2;
            }
            psi_means[i] = mean;
            if i == 0 {
                let t = (-lo) as usize;
                xi0 = nodes.get(t).map_or(0.0, |n| n.1);
            }
            let values: Vec<f64> = nodes.iter().map(|n| n.0).collect();
            if let Some(s) = surfaces.as_mut() {
                s.hedges[i] = Level {
                    lo,
                    values: nodes.iter().map(|n| n.1).collect(),
                };
                s.values[i] = Level {
                    lo,
                    values: values.clone(),
                };
            }
            next = Level { lo, values };
        }
    }
    let v0 = next.at(0);
    let mut report = HedgeReport::from_psi(v0, xi0, psi_means, c, n, contract.m);
    report.diagnostics = Diagnostics {
        eta,
        n_down: nd,
        n_up: nu,
        barrier_offset: contract.kb,
        barrier_weight: None,
        max_width,
        leakage,
    };
    report.surfaces = surfaces;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
pub(super) fn run(
    option: &UpAndOutCall,
    kb: Option<i64>,
    dist: &IncrementDistribution,
    c: &OnePeriodCoefficients,
    n: usize,
    m: usize,
    s0: f64,
    opts: &LatticeOptions,
) -> Result<HedgeReport> {
    let eta = dist.eta();
    // first node strictly above the strike
    let k_low = ((option.strike / s0).ln() / eta).floor() as i64 + 1;
    let k_low = (k_low - 1..=k_low + 1)
        .find(|&k| option.payoff(s0 * (k as f64 * eta).exp()) > 0.0)
        .unwrap_or(k_low);
    let terminal = |s: f64| option.payoff(s);
    let contract = Contract {
        n,
        m,
        kb,
        k_low: Some(k_low),
        terminal: &terminal,
    };
    run_contract(&contract, dist, c, s0, opts)
}

pub(super) fn run_constant(
    value: f64,
    dist: &IncrementDistribution,
    c: &OnePeriodCoefficients,
    n: usize,
) -> Result<HedgeReport> {
    let terminal = move |_: f64| value;
    let contract = Contract {
        n,
        m: n,
        kb: None,
        k_low: None,
        terminal: &terminal,
    };
    run_contract(&contract, dist, c, 1.0, &LatticeOptions::default())
}
