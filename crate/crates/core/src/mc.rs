//! Monte Carlo execution of the hedging strategies and an exhaustive
//! least-squares optimum for small trees.
//!
//! Paths use ChaCha8 (the ChaCha stream cipher with 8 rounds) seeded once per
//! run, with path `p` on stream `p`, so results do not depend on the number of
//! threads. Increments are drawn by inverse-CDF lookup on the same discrete law
//! that the recursions use.

use std::fmt::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::IncrementDistribution;
use crate::engine::{HedgeReport, Strategy, Surfaces, TreeEngine, UpAndOutCall};
use crate::error::{Error, Result};

/// Discrete-time model with stored mean values and hedge ratios.
///
/// States are opaque keys: a log-price offset on the lattice or a node id in
/// a tree.
pub trait HedgeModel: Sync {
    fn steps(&self) -> usize;
    /// `(a, R)`.
    fn feedback(&self) -> (f64, f64);
    fn probs(&self) -> &[f64];
    fn root(&self) -> i64;
    fn child(&self, i: usize, key: i64, j: usize) -> i64;
    fn price(&self, i: usize, key: i64) -> f64;
    /// False when state `key` at step `i` is knocked out.
    fn survives(&self, i: usize, key: i64) -> bool;
    fn value(&self, i: usize, key: i64) -> Result<f64>;
    fn hedge(&self, i: usize, key: i64) -> Result<f64>;
    fn payoff(&self, s: f64) -> f64;
}

/// Lattice surfaces of a run together with the contract they belong to.
pub struct LatticeModel<'a> {
    surfaces: &'a Surfaces,
    option: UpAndOutCall,
    a: f64,
    r_gross: f64,
    probs: &'a [f64],
    n_down: usize,
    n_up: usize,
    n: usize,
    m: usize,
    kb: Option<i64>,
}

impl<'a> LatticeModel<'a> {
    pub fn new(report: &'a HedgeReport, option: &UpAndOutCall, dist: &'a IncrementDistribution) -> Result<Self> {
        let surfaces = report
            .surfaces
            .as_ref()
            .ok_or_else(|| Error::Configuration("report carries no surfaces; rerun with store_surfaces".into()))?;
        if report.diagnostics.barrier_weight.is_some() {
            return Err(Error::Configuration(
                "interpolated reports have no single lattice to simulate".into(),
            ));
        }
        Ok(LatticeModel {
            surfaces,
            option: *option,
            a: report.a,
            r_gross: report.r_gross,
            probs: dist.probs(),
            n_down: dist.n_down(),
            n_up: dist.n_up(),
            n: report.n_steps,
            m: report.steps_per_monitor,
            kb: report.diagnostics.barrier_offset,
        })
    }

    fn check(&self, i: usize, key: i64) -> Result<()> {
        let i = i as i64;
        if key < -i * self.n_down as i64 || key > i * self.n_up as i64 {
            return Err(Error::InternalConsistency(format!(
                "state {key} unreachable at step {i}"
            )));
        }
        Ok(())
    }
}

impl HedgeModel for LatticeModel<'_> {
    fn steps(&self) -> usize {
        self.n
    }

    fn feedback(&self) -> (f64, f64) {
        (self.a, self.r_gross)
    }

    fn probs(&self) -> &[f64] {
        self.probs
    }

    fn root(&self) -> i64 {
        0
    }

    fn child(&self, _i: usize, key: i64, j: usize) -> i64 {
        key + j as i64 - self.n_down as i64
    }

    fn price(&self, _i: usize, key: i64) -> f64 {
        self.surfaces.s0 * (key as f64 * self.surfaces.eta).exp()
    }

    fn survives(&self, i: usize, key: i64) -> bool {
        let monitoring = i > 0 && (i.is_multiple_of(self.m) || i == self.n);
        !(monitoring && self.kb.is_some_and(|kb| key > kb))
    }

    fn value(&self, i: usize, key: i64) -> Result<f64> {
        self.check(i, key)?;
        Ok(self.surfaces.values[i].at(key))
    }

    fn hedge(&self, i: usize, key: i64) -> Result<f64> {
        self.check(i, key)?;
        Ok(self.surfaces.hedges[i].at(key))
    }

    fn payoff(&self, s: f64) -> f64 {
        self.option.payoff(s)
    }
}

impl HedgeModel for TreeEngine {
    fn steps(&self) -> usize {
        TreeEngine::steps(self)
    }

    fn feedback(&self) -> (f64, f64) {
        let c = TreeEngine::coefficients(self);
        (c.a, c.r_gross)
    }

    fn probs(&self) -> &[f64] {
        &self.law().probs
    }

    fn root(&self) -> i64 {
        0
    }

    fn child(&self, _i: usize, key: i64, j: usize) -> i64 {
        key * self.law().probs.len() as i64 + j as i64
    }

    fn price(&self, i: usize, key: i64) -> f64 {
        TreeEngine::price(self, i, key as usize)
    }

    fn survives(&self, i: usize, key: i64) -> bool {
        self.alive(i, key as usize)
    }

    fn value(&self, i: usize, key: i64) -> Result<f64> {
        Ok(TreeEngine::value(self, i, key as usize))
    }

    fn hedge(&self, i: usize, key: i64) -> Result<f64> {
        Ok(TreeEngine::hedge(self, i, key as usize))
    }

    fn payoff(&self, _s: f64) -> f64 {
        // leaves carry their own claims; see `terminal_claim`
        f64::NAN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub paths: usize,
    pub seed: u64,
    pub strategy: Strategy,
    /// Initial endowment; defaults to `V₀`.
    #[serde(default)]
    pub endowment: Option<f64>,
}

impl SimConfig {
    pub fn new(paths: usize, seed: u64, strategy: Strategy) -> Self {
        SimConfig {
            paths,
            seed,
            strategy,
            endowment: None,
        }
    }
}

/// Sample statistics of the terminal shortfall `G_n − H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub paths: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub std: f64,
    pub se_std: f64,
    /// `E[(G_n − H)²]`.
    pub second_moment: f64,
    pub se_second_moment: f64,
}

impl SimSummary {
    /// `(mean − target)/se`, zero when both sides vanish.
    pub fn z(value: f64, target: f64, se: f64) -> f64 {
        let d = value - target;
        if se > 0.0 {
            d / se
        } else if d.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Sum by recursive halving, fixed regardless of thread count.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn pairwise_map_sum(xs: &[f64], f: &impl Fn(f64) -> f64) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().map(|&x| f(x)).sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_map_sum(a, f) + pairwise_map_sum(b, f)
}

pub fn summarize(shortfalls: &[f64]) -> Result<SimSummary> {
    let n = shortfalls.len();
    if n == 0 {
        return Err(Error::Parameter("need at least one path".into()));
    }
    let nf = n as f64;
    let mean = pairwise_sum(shortfalls) / nf;
    let m2 = pairwise_map_sum(shortfalls, &|x| (x - mean).powi(2)) / nf;
    let m4 = pairwise_map_sum(shortfalls, &|x| (x - mean).powi(4)) / nf;
    let second = pairwise_map_sum(shortfalls, &|x| x * x) / nf;
    let fourth = pairwise_map_sum(shortfalls, &|x| x.powi(4)) / nf;
    let std = m2.sqrt();
    let se_std = if std > 0.0 {
        ((m4 - m2 * m2).max(0.0) / nf).sqrt() / (2.0 * std)
    } else {
        0.0
    };
    Ok(SimSummary {
        paths: n,
        mean,
        se_mean: (m2 / nf).sqrt(),
        std,
        se_std,
        second_moment: second,
        se_second_moment: ((fourth - second * second).max(0.0) / nf).sqrt(),
    })
}

/// Terminal claim of a tree leaf, or of a lattice state via its payoff.
fn terminal_claim(model: &dyn HedgeModel, tree: Option<&TreeEngine>, key: i64, s: f64, alive: bool) -> f64 {
    match tree {
        Some(t) => t.claim(key as usize),
        None if alive => model.payoff(s),
        None => 0.0,
    }
}

fn run_paths(model: &dyn HedgeModel, tree: Option<&TreeEngine>, cfg: &SimConfig) -> Result<Vec<f64>> {
    if cfg.paths == 0 {
        return Err(Error::Parameter("paths must be >= 1".into()));
    }
    let (a, r) = model.feedback();
    let n = model.steps();
    let mut cum: Vec<f64> = model
        .probs()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    if let Some(last) = cum.last_mut() {
        *last = f64::INFINITY;
    }
    let x = match cfg.endowment {
        Some(x) => x,
        None => model.value(0, model.root())?,
    };
    let path = |p: usize| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(p as u64);
        let mut key = model.root();
        let mut s = model.price(0, key);
        let mut g = x;
        let mut alive = model.survives(0, key);
        for i in 0..n {
            let (v, xi) = if alive {
                (model.value(i, key)?, model.hedge(i, key)?)
            } else {
                (0.0, 0.0)
            };
            let theta = match cfg.strategy {
                Strategy::Local => xi,
                Strategy::Dynamic => xi + a * r * (v - g) / s,
            };
            let u: f64 = rng.gen();
            let j = cum.partition_point(|&q| q <= u);
            key = model.child(i, key, j);
            let s_next = model.price(i + 1, key);
            g = r * g + theta * (s_next - r * s);
            s = s_next;
            alive = alive && model.survives(i + 1, key);
        }
        Ok(g - terminal_claim(model, tree, key, s, alive))
    };
    (0..cfg.paths).into_par_iter().map(path).collect()
}

/// Per-path shortfalls `G_n − H` of a lattice run.
pub fn shortfalls(model: &dyn HedgeModel, cfg: &SimConfig) -> Result<Vec<f64>> {
    run_paths(model, None, cfg)
}

/// Per-path shortfalls on a tree.
pub fn tree_shortfalls(tree: &TreeEngine, cfg: &SimConfig) -> Result<Vec<f64>> {
    run_paths(tree, Some(tree), cfg)
}

/// Simulate a lattice run and summarize.
pub fn simulate_hedge(model: &dyn HedgeModel, cfg: &SimConfig) -> Result<SimSummary> {
    summarize(&shortfalls(model, cfg)?)
}

pub fn simulate_tree(tree: &TreeEngine, cfg: &SimConfig) -> Result<SimSummary> {
    summarize(&tree_shortfalls(tree, cfg)?)
}

/// CSV `path,shortfall` at full precision.
pub fn shortfalls_csv(values: &[f64]) -> String {
    let mut out = String::from("path,shortfall\n");
    for (p, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{p},{v:e}");
    }
    out
}

/// Largest tree `brute_force_optimum` accepts.
pub const BRUTE_FORCE_MAX_STEPS: usize = 3;
pub const BRUTE_FORCE_MAX_OUTCOMES: usize = 5;

/// Minimize `E[(G_n − H)²]` over the endowment and every node's position by
/// weighted least squares on the full tree. Returns `(x*, ε²*)`.
pub fn brute_force_optimum(tree: &TreeEngine) -> Result<(f64, f64)> {
    let n = tree.steps();
    let width = tree.law().probs.len();
    if n > BRUTE_FORCE_MAX_STEPS || width > BRUTE_FORCE_MAX_OUTCOMES {
        return Err(Error::Size(format!(
            "brute force needs n <= {BRUTE_FORCE_MAX_STEPS} and <= {BRUTE_FORCE_MAX_OUTCOMES} outcomes, got n={n}, {width}"
        )));
    }
    let r = tree.coefficients().r_gross;
    // column 0 is x, then one column per internal node in level order
    let mut offsets = vec![1usize];
    for i in 0..n {
        offsets.push(offsets[i] + tree.level_size(i));
    }
    let cols = offsets[n];
    let leaves = tree.level_size(n);
    let mut a = DMatrix::<f64>::zeros(leaves, cols);
    let mut y = DVector::<f64>::zeros(leaves);
    for leaf in 0..leaves {
        let w = tree.probability(n, leaf).sqrt();
        a[(leaf, 0)] = w * r.powi(n as i32);
        let mut ancestors = vec![0usize; n + 1];
        ancestors[n] = leaf;
        for i in (0..n).rev() {
            ancestors[i] = ancestors[i + 1] / width;
        }
        for i in 0..n {
            let gain = tree.price(i + 1, ancestors[i + 1]) - r * tree.price(i, ancestors[i]);
            a[(leaf, offsets[i] + ancestors[i])] = w * r.powi((n - i - 1) as i32) * gain;
        }
        y[leaf] = w * tree.claim(leaf);
    }
    let svd = a.clone().svd(true, true);
    let theta = svd
        .solve(&y, 1e-13)
        .map_err(|e| Error::InternalConsistency(format!("least squares failed: {e}")))?;
    let resid = &a * &theta - &y;
    Ok((theta[0], resid.norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::OneStepLaw;

    fn uniform(growth: &[f64]) -> OneStepLaw {
        let p = 1.0 / growth.len() as f64;
        OneStepLaw::new(growth.to_vec(), vec![p; growth.len()]).unwrap()
    }

    #[test]
    fn brute_force_hand_cases() {
        let t = TreeEngine::new(uniform(&[0.9, 1.1]), 1.0, 100.0, 100.0, None, 1, 1).unwrap();
        let (x, e) = brute_force_optimum(&t).unwrap();
        assert!((x - 5.0).abs() < 1e-10 && e.abs() < 1e-18);
        let t = TreeEngine::new(uniform(&[0.9, 1.0, 1.1]), 1.0, 100.0, 100.0, None, 1, 1).unwrap();
        let (x, e) = brute_force_optimum(&t).unwrap();
        assert!((x - 10.0 / 3.0).abs() < 1e-10 && (e - 50.0 / 9.0).abs() < 1e-10);
        let t = TreeEngine::with_payoff(uniform(&[0.8, 1.0, 1.3]), 1.0, 100.0, None, 3, 1, &|_| 4.0).unwrap();
        let (x, e) = brute_force_optimum(&t).unwrap();
        assert!((x - 4.0).abs() < 1e-10 && e.abs() < 1e-18);
    }

    #[test]
    fn brute_force_size_limit() {
        let t = TreeEngine::new(uniform(&[0.9, 1.0, 1.1]), 1.0, 100.0, 100.0, None, 4, 1).unwrap();
        assert!(matches!(brute_force_optimum(&t), Err(Error::Size(_))));
    }

    #[test]
    fn complete_market_paths_replicate() {
        let t = TreeEngine::new(uniform(&[0.9, 1.1]), 1.0, 100.0, 100.0, Some(115.0), 4, 2).unwrap();
        for strategy in [Strategy::Dynamic, Strategy::Local] {
            let s = tree_shortfalls(&t, &SimConfig::new(500, 9, strategy)).unwrap();
            assert!(s.iter().all(|d| d.abs() < 1e-10));
        }
    }

    #[test]
    fn three_point_std_matches() {
        let t = TreeEngine::new(uniform(&[0.9, 1.0, 1.1]), 1.0, 100.0, 100.0, None, 1, 1).unwrap();
        let s = simulate_tree(&t, &SimConfig::new(200_000, 42, Strategy::Dynamic)).unwrap();
        let eps = (50.0f64 / 9.0).sqrt();
        assert!(SimSummary::z(s.std, eps, s.se_std).abs() < 3.0, "{s:?}");
        assert!(SimSummary::z(s.mean, 0.0, s.se_mean).abs() < 3.0);
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let t = TreeEngine::new(uniform(&[0.85, 1.0, 1.05, 1.2]), 1.001, 100.0, 98.0, Some(112.0), 3, 1).unwrap();
        let cfg = SimConfig::new(3000, 7, Strategy::Dynamic);
        let a = simulate_tree(&t, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_tree(&t, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn summary_moments() {
        let s = summarize(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!((s.mean, s.std, s.second_moment), (0.0, 1.0, 1.0));
        assert_eq!(s.se_std, 0.0);
        assert!(summarize(&[]).is_err());
    }
}
