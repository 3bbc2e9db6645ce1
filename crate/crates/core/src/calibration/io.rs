//! Reading return files and (de)serializing models.
//!
//! A returns file holds either one log return per line, or `timestamp,price`
//! rows with ISO-8601 timestamps, in which case log returns are formed from
//! consecutive prices. Blank lines, `#` comments and a single header line are
//! skipped.

use std::fs;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_utc());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Parse the contents of a returns file into log returns.
pub fn parse_returns(text: &str) -> Result<Vec<f64>> {
    let rows: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let Some(&(_, first)) = rows.first() else {
        return Err(Error::Input("returns file is empty".into()));
    };
    let two_columns = first.contains(',');
    let mut returns = Vec::new();
    let mut prev: Option<(NaiveDateTime, f64)> = None;
    for (idx, &(line, row)) in rows.iter().enumerate() {
        if two_columns {
            let mut cols = row.split(',').map(str::trim);
            let (ts, price) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
            let parsed = parse_timestamp(ts).zip(price.parse::<f64>().ok());
            let Some((t, p)) = parsed else {
                if idx == 0 {
                    continue;
                }
                return Err(Error::Input(format!("line {line}: expected timestamp,price")));
            };
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::Input(format!("line {line}: price must be positive")));
            }
            if let Some((t0, p0)) = prev {
                if t <= t0 {
                    return Err(Error::Input(format!("line {line}: timestamps must increase")));
                }
                returns.push((p / p0).ln());
            }
            prev = Some((t, p));
        } else {
            match row.parse::<f64>() {
                Ok(x) if x.is_finite() => returns.push(x),
                Ok(_) => return Err(Error::Input(format!("line {line}: return is not finite"))),
                Err(_) if idx == 0 => continue,
                Err(_) => return Err(Error::Input(format!("line {line}: cannot parse '{row}'"))),
            }
        }
    }
    if returns.is_empty() {
        return Err(Error::Input("no returns in file".into()));
    }
    Ok(returns)
}

pub fn read_returns(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse_returns(&text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(format!("serialize: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}
