//! Run configuration: a plain `key = value` file, overridable from the
//! command line.
//!
//! ```text
//! # start points as exact rationals
//! p1 = 0, 0
//! p2 = 1, 0
//! p3 = 0, 1
//! p4 = 5, 7
//! max_stage = 4
//! policy = skip
//! workers = 4
//! max_points = 2000000
//! max_lines = 2000000
//! max_bits = 4096
//! out_dir = runs/canonical
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;
use plc_core::{Budget, ParallelPolicy, StartConfig};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub start: StartConfig,
    pub max_stage: u32,
    pub budget: Budget,
    pub policy: ParallelPolicy,
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            start: StartConfig::canonical(),
            max_stage: 4,
            budget: Budget::default(),
            policy: ParallelPolicy::Skip,
            workers: default_workers(),
            out_dir: PathBuf::from("plc-out"),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunConfig {
    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_file(mut self, text: &str) -> Result<Self, ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| err(format!("line {}: {}", i + 1, e.0)))?;
        }
        Ok(self)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "p1" | "p2" | "p3" | "p4" => {
                let idx = usize::from(key.as_bytes()[1] - b'1');
                self.start.points[idx] = parse_point(value)?;
            }
            "max_stage" => self.max_stage = positive(key, value)?,
            "policy" => self.policy = ParallelPolicy::from_str(value).map_err(err)?,
            "workers" => self.workers = positive(key, value)?,
            "max_points" => self.budget.max_points = positive(key, value)?,
            "max_lines" => self.budget.max_lines = positive(key, value)?,
            "max_bits" => self.budget.max_bits = positive(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(err(format!("unknown key `{other}`"))),
        }
        Ok(())
    }
}

fn positive<T>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T: FromStr + PartialOrd + Default,
{
    let v: T = value
        .parse()
        .map_err(|_| err(format!("{key}: `{value}` is not a positive integer")))?;
    if v <= T::default() {
        return Err(err(format!("{key} must be positive")));
    }
    Ok(v)
}

/// `num/den` or a plain integer.
pub fn parse_rational(s: &str) -> Result<BigRational, ConfigError> {
    let s = s.trim();
    let bad = || err(format!("`{s}` is not a rational number (use num/den)"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d: num_bigint::BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(err(format!("`{s}` has a zero denominator")));
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// `x, y` with rational coordinates.
pub fn parse_point(s: &str) -> Result<(BigRational, BigRational), ConfigError> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| err(format!("`{s}` is not a point (use x, y)")))?;
    Ok((parse_rational(x)?, parse_rational(y)?))
}

/// Four points separated by `;`, e.g. `0,0; 1,0; 0,1; 5,7`.
pub fn parse_start(s: &str) -> Result<StartConfig, ConfigError> {
    let pts = s
        .split(';')
        .map(parse_point)
        .collect::<Result<Vec<_>, _>>()?;
    let points: [(BigRational, BigRational); 4] = pts
        .try_into()
        .map_err(|v: Vec<_>| err(format!("expected 4 start points, got {}", v.len())))?;
    Ok(StartConfig { points })
}

/// Comma-separated rationals.
pub fn parse_rational_list(s: &str) -> Result<Vec<BigRational>, ConfigError> {
    s.split(',').map(parse_rational).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let text = "# comment\np4 = -5/6, 7\nmax_stage = 3\npolicy = projective\nmax_points = 10 # inline\n";
        let cfg = RunConfig::default().apply_file(text).unwrap();
        assert_eq!(cfg.max_stage, 3);
        assert_eq!(cfg.policy, ParallelPolicy::Projective);
        assert_eq!(cfg.budget.max_points, 10);
        assert_eq!(
            cfg.start.points[3].0,
            BigRational::new((-5).into(), 6.into())
        );
        assert_eq!(cfg.start.points[0], StartConfig::canonical().points[0]);
    }

    #[test]
    fn rejects_bad_lines() {
        for text in [
            "max_stage = 0",
            "nope = 1",
            "p1 = 1",
            "p1 = 1/0, 2",
            "max_stage 3",
            "policy = loose",
        ] {
            assert!(RunConfig::default().apply_file(text).is_err(), "{text}");
        }
    }

    #[test]
    fn start_list() {
        let s = parse_start("0,0; 1,0; 0,1; 5,7").unwrap();
        assert_eq!(s, StartConfig::canonical());
        assert!(parse_start("0,0; 1,0; 0,1").is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(
            parse_rational(" 4/6 ").unwrap(),
            BigRational::new(2.into(), 3.into())
        );
        assert_eq!(
            parse_rational("-3").unwrap(),
            BigRational::from_integer((-3).into())
        );
        assert!(parse_rational("x").is_err());
        assert_eq!(parse_rational_list("0,1,2").unwrap().len(), 3);
    }
}
