//! Command-line front end: calibration, lattice laws, single hedging runs,
//! the standard tables, Sharpe-ratio quotes and Monte Carlo checks.
//!
//! Output goes to stdout or `-o`. Every run writes a manifest that `replay`
//! accepts. Errors are printed to stderr as JSON with a nonzero exit code.

mod jobs;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use jobs::{execute, CalibrateJob, DistJob, Format, HedgeFile, HedgeSpec, Job, LawSpec, McCheckJob, SharpeJob};
use qhedge::bs::{delta_to_level, BsParams, Measure};
use qhedge::calibration::{io, Model};
use qhedge::distribution::{IncrementDistribution, InversionConfig};
use qhedge::market::BareM;
use qhedge::reports::{study_intervals, Fidelity, GridConfig, Preset, PresetJob, RunManifest, ScalingConfig};
use qhedge::{Calendar, TimeSpan};

#[derive(Debug)]
pub enum CliError {
    Core(qhedge::Error),
    Usage(String),
    Io(String),
    CheckFailed,
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::CheckFailed => "check_failed",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::CheckFailed => "one or more Monte Carlo checks failed".into(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qhedge",
    version,
    about = "Variance-optimal hedging of discretely monitored barrier options"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Manifest path (default: next to `-o`, else stderr).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output path (default: stdout).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an empirical Lévy model from a returns file.
    Calibrate {
        returns: PathBuf,
        /// Sampling interval of the returns, e.g. `1m` (bare `m` is minutes).
        #[arg(long)]
        delta0: String,
        /// Interior grid points of the Lévy density.
        #[arg(long, default_value_t = 200)]
        bins: usize,
        #[arg(long, default_value_t = 0.1)]
        mu: f64,
        #[arg(long, default_value_t = 0.2)]
        sigma: f64,
    },
    /// Discretize a model onto the lattice.
    Dist {
        /// Model JSON, or `gaussian`.
        model: String,
        /// Rebalancing interval, e.g. `1d` or `5m`.
        #[arg(long)]
        dt: String,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        #[arg(long, value_enum, default_value_t = MeasureArg::Physical)]
        measure: MeasureArg,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Mean value and hedging errors of one up-and-out call.
    Hedge(HedgeArgs),
    /// Strike-by-barrier tables and premium tables.
    Table(StudyArgs),
    /// Hedging error against the rebalancing interval.
    Scaling(StudyArgs),
    /// Kurtosis of one-period returns against the rebalancing interval.
    Kurtosis {
        #[command(flatten)]
        study: StudyArgs,
        /// Model JSON, or `gaussian`, when no preset is given.
        #[arg(long)]
        model: Option<String>,
        /// Comma-separated intervals.
        #[arg(long, value_delimiter = ',')]
        intervals: Vec<String>,
    },
    /// Price at a target annualized Sharpe ratio.
    Sharpe {
        /// Output of `hedge`.
        report: Option<PathBuf>,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long)]
        eps0: Option<f64>,
        /// Maturity, e.g. `1mo` or `0.5y` (bare `m` is months).
        #[arg(long = "T")]
        maturity: Option<String>,
        #[arg(long)]
        r: Option<f64>,
        /// Use ε₀ of the locally optimal strategy.
        #[arg(long)]
        local: bool,
    },
    /// Simulate the stored strategy and compare with the reported errors.
    McCheck {
        /// Output of `hedge`.
        report: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 3.0)]
        z_max: f64,
    },
    /// Rerun a command from its manifest.
    Replay { manifest_file: PathBuf },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MeasureArg {
    Physical,
    RiskNeutral,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Physical => Measure::Physical,
            MeasureArg::RiskNeutral => Measure::RiskNeutral,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    /// Lattice spacing in log-price units.
    #[arg(long)]
    eta: Option<f64>,
    /// Tail mass left outside the lattice on each side.
    #[arg(long)]
    alpha: Option<f64>,
}

impl GridArgs {
    fn apply(&self, cfg: &mut InversionConfig) {
        if let Some(e) = self.eta {
            cfg.eta = e;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
    }
}

#[derive(Args)]
struct HedgeArgs {
    /// Run file (TOML or JSON) with the layout of the `spec` block of a report.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model JSON, or `gaussian`.
    #[arg(long, conflicts_with = "dist")]
    model: Option<String>,
    /// Lattice law JSON from `dist`; its interval sets the rebalancing.
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long = "K", conflicts_with = "k_delta")]
    strike: Option<f64>,
    #[arg(long = "K-delta")]
    k_delta: Option<f64>,
    #[arg(long = "B", conflicts_with = "b_delta")]
    barrier: Option<f64>,
    #[arg(long = "B-delta")]
    b_delta: Option<f64>,
    /// Maturity, e.g. `1m` (bare `m` is months).
    #[arg(long = "T")]
    maturity: Option<String>,
    /// Rebalancing interval (bare `m` is minutes).
    #[arg(long)]
    dt: Option<String>,
    /// Barrier monitoring interval (bare `m` is minutes).
    #[arg(long, default_value = "1d")]
    monitor: String,
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long, default_value_t = 100.0)]
    s0: f64,
    /// Measure of the Gaussian law.
    #[arg(long, value_enum, default_value_t = MeasureArg::Physical)]
    measure: MeasureArg,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct StudyArgs {
    /// Named parameter block.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Config file (TOML or JSON) for the job.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `ci` (η = 0.002) or `fine` (η = 0.0005).
    #[arg(long, default_value = "ci")]
    fidelity: String,
    /// Render premium ratios of a grid instead of the grid itself.
    #[arg(long)]
    premium: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
}

fn core<T>(r: qhedge::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Core)
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let toml_ext = path.extension().is_some_and(|e| e == "toml");
    let parsed = if toml_ext {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Core(qhedge::Error::Input(format!("{}: {e}", path.display()))))
}

fn span(s: &str, bare: BareM, cal: &Calendar) -> Result<f64, CliError> {
    Ok(core(TimeSpan::parse(s, bare))?.years(cal))
}

fn load_model(arg: &str, mu: f64, sigma: f64) -> Result<Model, CliError> {
    if arg == "gaussian" {
        core(Model::gaussian(mu, sigma))
    } else {
        core(io::read_json::<Model>(Path::new(arg)))
    }
}

fn hedge_spec(a: &HedgeArgs) -> Result<HedgeSpec, CliError> {
    if let Some(path) = &a.config {
        return read_config(path);
    }
    let cal = Calendar::default();
    let maturity = span(
        a.maturity
            .as_deref()
            .ok_or_else(|| CliError::Usage("--T is required".into()))?,
        BareM::Months,
        &cal,
    )?;
    let monitoring = span(&a.monitor, BareM::Minutes, &cal)?;
    let mut inversion = InversionConfig::default();
    a.grid.apply(&mut inversion);
    let law = match (&a.dist, &a.model) {
        (Some(path), _) => LawSpec::Fixture {
            dist: core(io::read_json::<IncrementDistribution>(path))?,
        },
        (None, Some(m)) if m != "gaussian" => LawSpec::Model {
            model: load_model(m, a.mu, a.sigma)?,
        },
        _ => LawSpec::Gaussian {
            measure: a.measure.into(),
        },
    };
    let rebalancing = match (&law, &a.dt) {
        (LawSpec::Fixture { dist }, _) => dist.delta(),
        (_, Some(dt)) => span(dt, BareM::Minutes, &cal)?,
        (_, None) => return Err(CliError::Usage("--dt is required".into())),
    };
    let bs = core(BsParams::new(a.s0, a.sigma, a.r, a.mu, maturity))?;
    let strike = match (a.strike, a.k_delta) {
        (Some(k), _) => k,
        (None, Some(d)) => core(delta_to_level(&bs, d))?,
        (None, None) => return Err(CliError::Usage("one of --K or --K-delta is required".into())),
    };
    let barrier = match (a.barrier, a.b_delta) {
        (Some(b), _) => Some(b),
        (None, Some(d)) => Some(core(delta_to_level(&bs, d))?),
        (None, None) => None,
    };
    Ok(HedgeSpec {
        law,
        s0: a.s0,
        mu: a.mu,
        sigma: a.sigma,
        r: a.r,
        strike,
        barrier,
        maturity,
        rebalancing,
        monitoring,
        inversion,
    })
}

fn preset_job(s: &StudyArgs) -> Result<Option<(Preset, PresetJob)>, CliError> {
    let Some(name) = &s.preset else { return Ok(None) };
    let preset: Preset = core(name.parse())?;
    let fidelity: Fidelity = core(s.fidelity.parse())?;
    Ok(Some((preset, core(preset.job(fidelity))?)))
}

fn tune(mut job: PresetJob, s: &StudyArgs) -> PresetJob {
    match &mut job {
        PresetJob::Grid(c) | PresetJob::Premium(c) => s.grid.apply(&mut c.inversion),
        PresetJob::Scaling(c) => s.grid.apply(&mut c.inversion),
        PresetJob::Kurtosis { inversion, .. } => s.grid.apply(inversion),
    }
    match job {
        PresetJob::Grid(c) if s.premium => PresetJob::Premium(c),
        other => other,
    }
}

/// Turn the command line into a job, plus the preset name if any.
fn resolve(command: &Command) -> Result<(Job, Option<String>), CliError> {
    let cal = Calendar::default();
    Ok(match command {
        Command::Calibrate {
            returns,
            delta0,
            bins,
            mu,
            sigma,
        } => (
            Job::Calibrate(CalibrateJob {
                returns: returns.clone(),
                delta0: span(delta0, BareM::Minutes, &cal)?,
                bins: *bins,
                mu: *mu,
                sigma: *sigma,
            }),
            None,
        ),
        Command::Dist {
            model,
            dt,
            mu,
            sigma,
            r,
            measure,
            grid,
            format,
        } => {
            let mut inversion = InversionConfig::default();
            grid.apply(&mut inversion);
            let (law, mu, sigma) = if model == "gaussian" {
                (
                    LawSpec::Gaussian {
                        measure: (*measure).into(),
                    },
                    mu.unwrap_or(0.1),
                    sigma.unwrap_or(0.2),
                )
            } else {
                let m = load_model(model, 0.0, 0.0)?;
                let (mu, sigma) = (mu.unwrap_or(m.mu), sigma.unwrap_or(m.sigma));
                (LawSpec::Model { model: m }, mu, sigma)
            };
            (
                Job::Dist(DistJob {
                    law,
                    mu,
                    sigma,
                    r: *r,
                    dt: span(dt, BareM::Minutes, &cal)?,
                    inversion,
                    format: *format,
                }),
                None,
            )
        }
        Command::Hedge(a) => (Job::Hedge(hedge_spec(a)?), None),
        Command::Table(s) => {
            let (job, name) = match (preset_job(s)?, &s.config) {
                (Some((p, job)), _) => (job, Some(p.to_string())),
                (None, Some(path)) => (PresetJob::Grid(read_config::<GridConfig>(path)?), None),
                (None, None) => return Err(CliError::Usage("table needs --preset or --config".into())),
            };
            (
                Job::Table {
                    job: tune(job, s),
                    format: s.format,
                },
                name,
            )
        }
        Command::Scaling(s) => {
            let (job, name) = match (preset_job(s)?, &s.config) {
                (Some((p, job)), _) => (job, Some(p.to_string())),
                (None, Some(path)) => (PresetJob::Scaling(read_config::<ScalingConfig>(path)?), None),
                (None, None) => return Err(CliError::Usage("scaling needs --preset or --config".into())),
            };
            (
                Job::Table {
                    job: tune(job, s),
                    format: s.format,
                },
                name,
            )
        }
        Command::Kurtosis {
            study,
            model,
            intervals,
        } => {
            let (job, name) = match (preset_job(study)?, model) {
                (Some((p, job)), _) => (job, Some(p.to_string())),
                (None, Some(m)) => {
                    let fidelity: Fidelity = core(study.fidelity.parse())?;
                    let intervals = if intervals.is_empty() {
                        study_intervals()
                    } else {
                        intervals
                            .iter()
                            .map(|s| core(TimeSpan::parse(s, BareM::Minutes)))
                            .collect::<Result<_, _>>()?
                    };
                    (
                        PresetJob::Kurtosis {
                            model: load_model(m, 0.1, 0.2)?,
                            intervals,
                            calendar: cal,
                            inversion: InversionConfig::with_eta(fidelity.eta()),
                        },
                        None,
                    )
                }
                (None, None) => return Err(CliError::Usage("kurtosis needs --preset or --model".into())),
            };
            (
                Job::Table {
                    job: tune(job, study),
                    format: study.format,
                },
                name,
            )
        }
        Command::Sharpe {
            report,
            h,
            v0,
            eps0,
            maturity,
            r,
            local,
        } => {
            let file = report
                .as_ref()
                .map(|p| core(io::read_json::<HedgeFile>(p)))
                .transpose()?;
            let from_file = |f: fn(&HedgeFile) -> f64| file.as_ref().map(f);
            let need = |v: Option<f64>, flag: &str| {
                v.ok_or_else(|| CliError::Usage(format!("{flag} is required without a report")))
            };
            let eps_file = if *local {
                from_file(|f| f.report.eps0_loc)
            } else {
                from_file(|f| f.report.eps0_dyn)
            };
            let t = match maturity {
                Some(s) => Some(span(s, BareM::Months, &cal)?),
                None => from_file(|f| f.spec.maturity),
            };
            (
                Job::Sharpe(SharpeJob {
                    v0: need(v0.or(from_file(|f| f.report.v0)), "--v0")?,
                    eps0: need(eps0.or(eps_file), "--eps0")?,
                    h: *h,
                    t: need(t, "--T")?,
                    r: r.or(from_file(|f| f.spec.r)).unwrap_or(0.0),
                }),
                None,
            )
        }
        Command::McCheck {
            report,
            paths,
            seed,
            z_max,
        } => {
            let file: HedgeFile = core(io::read_json(report))?;
            (
                Job::McCheck(McCheckJob {
                    spec: file.spec,
                    paths: *paths,
                    seed: *seed,
                    z_max: *z_max,
                }),
                None,
            )
        }
        Command::Replay { manifest_file } => {
            let m: RunManifest = core(io::read_json(manifest_file))?;
            let job: Job = serde_json::from_value(m.parameters.clone())
                .map_err(|e| CliError::Core(qhedge::Error::Input(format!("manifest parameters: {e}"))))?;
            if job.name() != m.command {
                return Err(CliError::Core(qhedge::Error::Input(format!(
                    "manifest command '{}' does not match its parameters ('{}')",
                    m.command,
                    job.name()
                ))));
            }
            (job, m.preset)
        }
    })
}

fn manifest_notes(job: &Job) -> Vec<String> {
    let mut notes = Vec::new();
    if let Job::Table {
        job: PresetJob::Scaling(_),
        ..
    } = job
    {
        notes
            .push("scaling study uses a one-month maturity with strike and barrier at the rounded table levels".into());
    }
    if let Job::McCheck(_) = job {
        notes.push("paths use ChaCha8 with one stream per path; results do not depend on thread count".into());
    }
    notes
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let (job, preset) = resolve(&cli.command)?;
    let mut manifest = core(RunManifest::new(job.name(), preset.as_deref(), &job))?;
    manifest.notes = manifest_notes(&job);
    let outcome = execute(&job)?;
    write_out(cli.output.as_deref(), &outcome.text)?;
    let manifest_path = cli.manifest.clone().or_else(|| {
        cli.output.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match manifest_path {
        Some(p) => core(io::write_json(&p, &manifest))?,
        None => eprintln!("{}", json!({ "manifest": manifest })),
    }
    if outcome.passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": { "kind": "usage", "message": e.to_string().trim() } })
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.message() } }));
            ExitCode::from(match e {
                CliError::CheckFailed => 3,
                CliError::Usage(_) => 2,
                _ => 1,
            })
        }
    }
}
