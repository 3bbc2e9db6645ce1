//! Fully resolved commands. Every invocation is turned into a [`Job`] first,
//! which is what the run manifest records and what `replay` executes.

use std::fmt::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qhedge::bs::{gaussian_increment, BsParams, Measure};
use qhedge::calibration::{io, Model, ReturnSample};
use qhedge::distribution::{discretize, discretize_law, IncrementDistribution, InversionConfig};
use qhedge::engine::{backward_induct, barrier_interpolate, HedgeReport, LatticeOptions, Strategy, UpAndOutCall};
use qhedge::mc::{simulate_hedge, LatticeModel, SimConfig, SimSummary};
use qhedge::pricing::{premium_csv, premium_markdown, premium_table, sharpe_price};
use qhedge::reports::{
    grid_csv, grid_markdown, kurtosis_markdown, kurtosis_table, premium_inputs, scaling_markdown, scaling_study,
    table_grid, KurtosisRow, PresetJob, ScalingStudy,
};
use qhedge::{Error, MarketParams};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

/// Transition law of a hedging run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawSpec {
    Gaussian {
        measure: Measure,
    },
    Model {
        model: Model,
    },
    /// A ready-made lattice law; its interval is the rebalancing interval.
    Fixture {
        dist: IncrementDistribution,
    },
}

/// One lattice run. Also the layout of a `hedge --config` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeSpec {
    pub law: LawSpec,
    #[serde(default = "default_s0")]
    pub s0: f64,
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub r: f64,
    pub strike: f64,
    #[serde(default)]
    pub barrier: Option<f64>,
    /// Years.
    pub maturity: f64,
    /// Years.
    pub rebalancing: f64,
    /// Years.
    pub monitoring: f64,
    #[serde(default)]
    pub inversion: InversionConfig,
}

fn default_s0() -> f64 {
    100.0
}

fn default_sigma() -> f64 {
    0.2
}

impl HedgeSpec {
    pub fn rebalancing(&self) -> f64 {
        match &self.law {
            LawSpec::Fixture { dist } => dist.delta(),
            _ => self.rebalancing,
        }
    }

    pub fn market(&self) -> qhedge::Result<MarketParams> {
        MarketParams::new(self.mu, self.sigma, self.r, self.rebalancing())
    }

    pub fn option(&self) -> qhedge::Result<UpAndOutCall> {
        UpAndOutCall::new(self.strike, self.barrier, self.maturity, self.monitoring)
    }

    pub fn distribution(&self) -> qhedge::Result<IncrementDistribution> {
        let dt = self.rebalancing();
        match &self.law {
            LawSpec::Gaussian { measure } => {
                let p = BsParams::new(self.s0, self.sigma, self.r, self.mu, self.maturity)?;
                discretize_law(&gaussian_increment(&p, dt, *measure)?, dt, &self.inversion)
            }
            LawSpec::Model { model } => {
                let kappa = model.with_params(self.mu, self.sigma).cumulant()?;
                discretize(&kappa, dt, &self.inversion)
            }
            LawSpec::Fixture { dist } => Ok(dist.clone()),
        }
    }
}

/// Output of `hedge`, and input of `sharpe` and `mc-check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeFile {
    pub spec: HedgeSpec,
    pub report: HedgeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateJob {
    pub returns: PathBuf,
    /// Sampling interval in years.
    pub delta0: f64,
    pub bins: usize,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistJob {
    pub law: LawSpec,
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
    /// Years.
    pub dt: f64,
    pub inversion: InversionConfig,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpeJob {
    pub v0: f64,
    pub eps0: f64,
    pub h: f64,
    pub t: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCheckJob {
    pub spec: HedgeSpec,
    pub paths: usize,
    pub seed: u64,
    pub z_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    Calibrate(CalibrateJob),
    Dist(DistJob),
    Hedge(HedgeSpec),
    Table { job: PresetJob, format: Format },
    Sharpe(SharpeJob),
    McCheck(McCheckJob),
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Calibrate(_) => "calibrate",
            Job::Dist(_) => "dist",
            Job::Hedge(_) => "hedge",
            Job::Table { .. } => "table",
            Job::Sharpe(_) => "sharpe",
            Job::McCheck(_) => "mc-check",
        }
    }
}

/// Rendered output and whether every check in it passed.
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, passed: true }
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Io(format!("serialize: {e}")))
}

pub fn execute(job: &Job) -> Result<Outcome, CliError> {
    match job {
        Job::Calibrate(j) => calibrate(j),
        Job::Dist(j) => dist(j),
        Job::Hedge(spec) => {
            let report = hedge(spec)?;
            Ok(Outcome::ok(json(&HedgeFile {
                spec: spec.clone(),
                report,
            })?))
        }
        Job::Table { job, format } => table(job, *format).map(Outcome::ok),
        Job::Sharpe(j) => Ok(Outcome::ok(json(&sharpe_price(j.v0, j.eps0, j.h, j.t, j.r)?)?)),
        Job::McCheck(j) => mc_check(j),
    }
}

fn calibrate(j: &CalibrateJob) -> Result<Outcome, CliError> {
    let values = io::read_returns(&j.returns)?;
    let sample = ReturnSample::new(values, j.delta0)?;
    let model = Model::from_sample(&sample, j.bins, j.mu, j.sigma)?;
    Ok(Outcome::ok(json(&model)?))
}

fn dist(j: &DistJob) -> Result<Outcome, CliError> {
    let spec = HedgeSpec {
        law: j.law.clone(),
        s0: 100.0,
        mu: j.mu,
        sigma: j.sigma,
        r: j.r,
        strike: 100.0,
        barrier: None,
        maturity: j.dt,
        rebalancing: j.dt,
        monitoring: j.dt,
        inversion: j.inversion.clone(),
    };
    let d = spec.distribution()?;
    Ok(Outcome::ok(match j.format {
        Format::Csv => d.to_csv(),
        Format::Json => json(&d)?,
        Format::Markdown => {
            let m = d.moments();
            let mut out = String::from("| η | n_down | n_up | log mean | log variance | log kurtosis | level kurtosis |\n|---|---|---|---|---|---|---|\n");
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:e} | {:e} | {:.4} | {:.4} |",
                d.eta(),
                d.n_down(),
                d.n_up(),
                m.log_mean,
                m.log_variance,
                m.log_kurtosis,
                m.level_kurtosis
            );
            out
        }
    }))
}

fn hedge(spec: &HedgeSpec) -> Result<HedgeReport, CliError> {
    let dist = spec.distribution()?;
    let report = barrier_interpolate(
        &spec.option()?,
        &dist,
        &spec.market()?,
        spec.s0,
        &LatticeOptions::default(),
    )?;
    Ok(report)
}

fn scaling_csv(s: &ScalingStudy) -> String {
    let mut out = String::from(
        "interval,delta,v0_hat,eps_hat,ratio_hat,heuristic_hat,v0_model,eps_model,ratio_model,heuristic_model,time_factor,kurtosis_factor\n",
    );
    let o = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
    for r in &s.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.interval,
            r.delta,
            r.v0_hat,
            r.eps_hat,
            r.ratio_hat,
            o(r.heuristic_hat),
            o(r.v0_model),
            o(r.eps_model),
            o(r.ratio_model),
            o(r.heuristic_model),
            r.time_factor,
            o(r.kurtosis_factor)
        );
    }
    out
}

fn kurtosis_csv(rows: &[KurtosisRow]) -> String {
    let mut out = String::from("interval,delta,lattice_log,lattice_level,levy_log,levy_level,down_sd,up_sd\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.interval, r.delta, r.lattice_log, r.lattice_level, r.levy_log, r.levy_level, r.down_sd, r.up_sd
        );
    }
    out
}

fn table(job: &PresetJob, format: Format) -> Result<String, CliError> {
    Ok(match job {
        PresetJob::Grid(cfg) => {
            let grid = table_grid(cfg)?;
            match format {
                Format::Markdown => {
                    let (k, b) = cfg.levels()?;
                    grid_markdown(&grid, &k, &b)
                }
                Format::Csv => grid_csv(&grid),
                Format::Json => json(&grid)?,
            }
        }
        PresetJob::Premium(cfg) => {
            let grid = table_grid(cfg)?;
            let table = premium_table(&premium_inputs(&grid), cfg.maturity);
            match format {
                Format::Markdown => premium_markdown(&table),
                Format::Csv => premium_csv(&table),
                Format::Json => json(&table)?,
            }
        }
        PresetJob::Scaling(cfg) => {
            let study = scaling_study(cfg)?;
            match format {
                Format::Markdown => scaling_markdown(&study),
                Format::Csv => scaling_csv(&study),
                Format::Json => json(&study)?,
            }
        }
        PresetJob::Kurtosis {
            model,
            intervals,
            calendar,
            inversion,
        } => {
            let rows = kurtosis_table(&model.cumulant()?, intervals, calendar, inversion)?;
            match format {
                Format::Markdown => kurtosis_markdown(&rows),
                Format::Csv => kurtosis_csv(&rows),
                Format::Json => json(&rows)?,
            }
        }
    })
}

fn check_line(out: &mut String, label: &str, z: f64, z_max: f64, detail: String) -> bool {
    let pass = z.abs() < z_max;
    let _ = writeln!(
        out,
        "{} {label}: z = {z:+.3} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

/// Simulate every lattice behind the report. An interpolated barrier has two.
fn mc_check(j: &McCheckJob) -> Result<Outcome, CliError> {
    let spec = &j.spec;
    let dist = spec.distribution()?;
    let params = spec.market()?;
    let option = spec.option()?;
    let opts = LatticeOptions {
        store_surfaces: true,
        checkpoint_interval: None,
    };
    let barriers: Vec<Option<f64>> = match option.barrier {
        Some(b) if b > spec.s0 => {
            let eta = dist.eta();
            let x = (b / spec.s0).ln() / eta - 0.5;
            let snap = |k: f64| Some(spec.s0 * ((k + 0.5) * eta).exp());
            if (x - x.round()).abs() <= 1e-9 {
                vec![snap(x.round())]
            } else {
                vec![snap(x.floor()), snap(x.floor() + 1.0)]
            }
        }
        b => vec![b],
    };
    let mut out = String::new();
    let mut passed = true;
    for barrier in barriers {
        let o = UpAndOutCall { barrier, ..option };
        let rep = backward_induct(&o, &dist, &params, spec.s0, &opts)?;
        let model = LatticeModel::new(&rep, &o, &dist)?;
        let _ = writeln!(
            out,
            "lattice barrier {}: V0 = {}, eps0(phi) = {}, eps0(xi) = {}",
            barrier.map_or("none".into(), |b| b.to_string()),
            rep.v0,
            rep.eps0_dyn,
            rep.eps0_loc
        );
        let dy = simulate_hedge(&model, &SimConfig::new(j.paths, j.seed, Strategy::Dynamic))?;
        let lo = simulate_hedge(&model, &SimConfig::new(j.paths, j.seed, Strategy::Local))?;
        passed &= check_line(
            &mut out,
            "mean shortfall (phi)",
            SimSummary::z(dy.mean, 0.0, dy.se_mean),
            j.z_max,
            format!("mean {:e}, se {:e}", dy.mean, dy.se_mean),
        );
        passed &= check_line(
            &mut out,
            "std of shortfall (phi)",
            SimSummary::z(dy.std, rep.eps0_dyn, dy.se_std),
            j.z_max,
            format!("std {}, se {:e}, eps0 {}", dy.std, dy.se_std, rep.eps0_dyn),
        );
        passed &= check_line(
            &mut out,
            "second moment (xi)",
            SimSummary::z(lo.second_moment, rep.eps0_loc.powi(2), lo.se_second_moment),
            j.z_max,
            format!(
                "mean square {}, se {:e}, eps0^2 {}",
                lo.second_moment,
                lo.se_second_moment,
                rep.eps0_loc.powi(2)
            ),
        );
    }
    Ok(Outcome { text: out, passed })
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}
