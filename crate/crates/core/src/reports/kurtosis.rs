//! Kurtosis of one-period returns against the rebalancing interval, for the
//! continuous model and its lattice approximation.

use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::CumulantFunction;
use crate::distribution::{discretize, InversionConfig};
use crate::error::Result;
use crate::market::{Calendar, TimeSpan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KurtosisRow {
    pub interval: TimeSpan,
    pub delta: f64,
    pub lattice_log: f64,
    pub lattice_level: f64,
    pub levy_log: f64,
    pub levy_level: f64,
    /// `n_down η` in one-period standard deviations of the log return.
    pub down_sd: f64,
    /// `n_up η` in one-period standard deviations of the log return.
    pub up_sd: f64,
}

pub fn kurtosis_table(
    kappa: &CumulantFunction,
    intervals: &[TimeSpan],
    calendar: &Calendar,
    inversion: &InversionConfig,
) -> Result<Vec<KurtosisRow>> {
    intervals
        .par_iter()
        .map(|span| {
            let delta = span.years(calendar);
            let dist = discretize(kappa, delta, inversion).map_err(|e| e.context(&format!("interval {span}")))?;
            let exact = kappa.period_moments(delta)?;
            let (_, _, level) = kappa.level_moments(delta)?;
            let sd = exact.variance.sqrt();
            let m = dist.moments();
            Ok(KurtosisRow {
                interval: *span,
                delta,
                lattice_log: m.log_kurtosis,
                lattice_level: m.level_kurtosis,
                levy_log: exact.kurtosis,
                levy_level: level,
                down_sd: dist.n_down() as f64 * dist.eta() / sd,
                up_sd: dist.n_up() as f64 * dist.eta() / sd,
            })
        })
        .collect()
}

fn quarter_up(x: f64) -> f64 {
    (4.0 * x - 1e-9).ceil() / 4.0
}

/// Markdown with grid extents rounded up to the nearest quarter.
pub fn kurtosis_markdown(rows: &[KurtosisRow]) -> String {
    let mut out = String::from(
        "| Δ | lattice log | lattice level | model log | model level | n_down η/σ | n_up η/σ |\n|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {:.2} | {:.2} | {:.2} | {:.2} | {} | {} |",
            r.interval,
            r.lattice_log,
            r.lattice_level,
            r.levy_log,
            r.levy_level,
            quarter_up(r.down_sd),
            quarter_up(r.up_sd)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::synthetic;

    #[test]
    fn gaussian_kurtosis_is_three() {
        let cal = Calendar::default();
        let kappa = synthetic::gaussian(0.1, 0.2).unwrap();
        let rows = kurtosis_table(
            &kappa,
            &[TimeSpan::Hours(1.0), TimeSpan::Days(1.0)],
            &cal,
            &InversionConfig::with_eta(0.0005),
        )
        .unwrap();
        for r in &rows {
            assert!((r.levy_log - 3.0).abs() < 1e-12);
            assert!((r.lattice_log / 3.0 - 1.0).abs() < 5e-3, "{}", r.lattice_log);
            // tail mass 1e-5 sits about 4.26 sd out
            assert!(r.down_sd > 4.2 && r.down_sd < 4.6);
        }
        let md = kurtosis_markdown(&rows);
        assert!(md.contains("| 1h | 3.0"));
    }

    #[test]
    fn quarter_rounding() {
        assert_eq!(quarter_up(5.6), 5.75);
        assert_eq!(quarter_up(6.0), 6.0);
        assert_eq!(quarter_up(9.26), 9.5);
    }
}
