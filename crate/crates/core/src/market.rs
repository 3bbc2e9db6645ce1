//! Market parameters and the trading-time calendar.
//!
//! All times are in years of trading time. With the default calendar a year
//! has 250 days of 8 hours, and a "month" is 21 trading days.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calendar {
    pub hours_per_day: u32,
    pub days_per_year: u32,
}

impl Default for Calendar {
    fn default() -> Self {
        Calendar {
            hours_per_day: 8,
            days_per_year: 250,
        }
    }
}

/// Trading days in a calendar month.
pub const DAYS_PER_MONTH: u32 = 21;

impl Calendar {
    pub fn validate(&self) -> Result<()> {
        if self.hours_per_day == 0 || self.days_per_year == 0 {
            return Err(Error::Parameter("calendar entries must be positive".into()));
        }
        Ok(())
    }

    pub fn day(&self) -> f64 {
        1.0 / self.days_per_year as f64
    }

    pub fn hour(&self) -> f64 {
        self.day() / self.hours_per_day as f64
    }

    pub fn minute(&self) -> f64 {
        self.hour() / 60.0
    }

    pub fn month(&self) -> f64 {
        DAYS_PER_MONTH as f64 * self.day()
    }
}

/// Drift, volatility, rate and rebalancing interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Annualized mean log return.
    pub mu: f64,
    /// Annualized volatility.
    pub sigma: f64,
    /// Continuously compounded risk-free rate.
    pub r: f64,
    /// Rebalancing interval in years.
    pub delta: f64,
    #[serde(default)]
    pub calendar: Calendar,
}

impl MarketParams {
    pub fn new(mu: f64, sigma: f64, r: f64, delta: f64) -> Result<Self> {
        let p = MarketParams {
            mu,
            sigma,
            r,
            delta,
            calendar: Calendar::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Parameter(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Parameter(format!("delta must be > 0, got {}", self.delta)));
        }
        if !self.mu.is_finite() || !self.r.is_finite() {
            return Err(Error::Parameter("mu and r must be finite".into()));
        }
        self.calendar.validate()
    }

    /// One-period gross risk-free return `e^{r delta}`.
    pub fn gross_rate(&self) -> f64 {
        (self.r * self.delta).exp()
    }

    /// Number of rebalancing periods in `horizon`; errors unless it is an integer.
    pub fn periods_in(&self, horizon: f64) -> Result<usize> {
        step_ratio(horizon, self.delta)
    }
}

/// `numerator / denominator` as an exact positive integer.
pub fn step_ratio(numerator: f64, denominator: f64) -> Result<usize> {
    let q = numerator / denominator;
    let n = q.round();
    if !(n >= 1.0) || (q - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::Configuration(format!(
            "{numerator} is not an integer multiple of {denominator} (ratio {q})"
        )));
    }
    Ok(n as usize)
}

/// A span of trading time, written like `5m`, `1h`, `1d`, `1mo`, `0.5y`.
///
/// The bare `m` suffix is ambiguous between minutes and months; [`TimeSpan::parse`]
/// resolves it from the context in which the span is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeSpan {
    Minutes(f64),
    Hours(f64),
    Days(f64),
    Months(f64),
    Years(f64),
}

/// How a bare `m` suffix is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BareM {
    Minutes,
    Months,
}

impl TimeSpan {
    pub fn parse(s: &str, bare_m: BareM) -> Result<Self> {
        let s = s.trim();
        let split = s.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let value: f64 = if num.is_empty() {
            1.0
        } else {
            num.parse().map_err(|_| Error::Input(format!("bad time span '{s}'")))?
        };
        if !(value > 0.0) {
            return Err(Error::Input(format!("time span must be positive: '{s}'")));
        }
        Ok(match unit {
            "min" | "mins" | "minute" | "minutes" => TimeSpan::Minutes(value),
            "m" => match bare_m {
                BareM::Minutes => TimeSpan::Minutes(value),
                BareM::Months => TimeSpan::Months(value),
            },
            "h" | "hr" | "hour" | "hours" => TimeSpan::Hours(value),
            "d" | "day" | "days" => TimeSpan::Days(value),
            "mo" | "month" | "months" => TimeSpan::Months(value),
            "y" | "yr" | "year" | "years" | "" => TimeSpan::Years(value),
            _ => return Err(Error::Input(format!("unknown time unit in '{s}'"))),
        })
    }

    pub fn years(&self, cal: &Calendar) -> f64 {
        match *self {
            TimeSpan::Minutes(v) => v * cal.minute(),
            TimeSpan::Hours(v) => v * cal.hour(),
            TimeSpan::Days(v) => v * cal.day(),
            TimeSpan::Months(v) => v * cal.month(),
            TimeSpan::Years(v) => v,
        }
    }
}

impl fmt::Display for TimeSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpan::Minutes(v) => write!(f, "{v}min"),
            TimeSpan::Hours(v) => write!(f, "{v}h"),
            TimeSpan::Days(v) => write!(f, "{v}d"),
            TimeSpan::Months(v) => write!(f, "{v}mo"),
            TimeSpan::Years(v) => write!(f, "{v}y"),
        }
    }
}

impl FromStr for TimeSpan {
    type Err = Error;

    /// Parses with bare `m` meaning minutes.
    fn from_str(s: &str) -> Result<Self> {
        TimeSpan::parse(s, BareM::Minutes)
    }
}
