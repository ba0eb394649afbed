//! Growth and degree inequalities evaluated on computed stages.
//!
//! Constant-free inequalities are hard checks on exact integers: a failure is
//! a [`BoundsError::TheoremViolation`] and means the engine is wrong. Claims
//! that only assert the existence of some constant are reported as measured
//! ratios, never compared against a threshold.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::engine::{Configuration, StageStats};
use crate::oracles::{pencil_grid, PencilGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `n_{k+1} >= n_k + 1`
    StrictGrowth,
    /// `delta_k >= 3`
    MinDegree,
    /// `delta_{k+1} >= min(n_k - 1, 2 delta_k - 3)`
    DegreeRecurrence,
    /// `n_{k+1} <= C(m_k, 2)`
    PointsFromLines,
    /// `m_{k+1} <= C(n_{k+1}, 2)`
    LinesFromPoints,
    /// `8 n_{k+1} < n_k^4`
    PointsQuartic,
    /// `8 m_{k+1} < m_k^4`
    LinesQuartic,
    /// `n_k <= 4^(4^k)`
    UpperEnvelope,
    /// measured ratios must be strictly positive
    PositiveRatio,
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inequality::StrictGrowth => "n_{k+1} >= n_k + 1",
            Inequality::MinDegree => "delta_k >= 3",
            Inequality::DegreeRecurrence => "delta_{k+1} >= min(n_k - 1, 2 delta_k - 3)",
            Inequality::PointsFromLines => "n_{k+1} <= C(m_k, 2)",
            Inequality::LinesFromPoints => "m_{k+1} <= C(n_{k+1}, 2)",
            Inequality::PointsQuartic => "n_{k+1} < n_k^4 / 8",
            Inequality::LinesQuartic => "m_{k+1} < m_k^4 / 8",
            Inequality::UpperEnvelope => "n_k <= 4^(4^k)",
            Inequality::PositiveRatio => "measured ratio > 0",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("theorem violation at stage {stage}: {inequality} fails ({detail})")]
    TheoremViolation {
        stage: u32,
        inequality: Inequality,
        detail: String,
    },
    #[error("stages {prev} and {cur} are not consecutive stages of one run")]
    NotConsecutive { prev: u32, cur: u32 },
    #[error("envelope needs at least 2 stages, got {0}")]
    TooFewStages(usize),
}

fn violation(stage: u32, inequality: Inequality, detail: String) -> BoundsError {
    BoundsError::TheoremViolation {
        stage,
        inequality,
        detail,
    }
}

fn choose2(n: usize) -> BigUint {
    let n = BigUint::from(n);
    if n < BigUint::from(2u8) {
        return BigUint::zero();
    }
    &n * (&n - 1u8) / 2u8
}

/// Outcome of the constant-free checks for the transition `k -> k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageBounds {
    /// Stage index of the *new* stage, `k + 1`.
    pub k: u32,
    pub strict_growth_ok: bool,
    pub min_degree_ok: bool,
    pub degree_recurrence_ok: bool,
    /// `min(n_k - 1, 2 delta_k - 3)`, the lower bound applied to `delta_{k+1}`.
    pub degree_recurrence_bound: i64,
    pub trivial_upper_ok: bool,
    pub envelope_ok: bool,
}

/// `min(n_k - 1, 2 delta_k - 3)`.
pub fn degree_recurrence_bound(prev: &StageStats) -> i64 {
    let n = prev.n() as i64;
    let delta = prev.delta() as i64;
    (n - 1).min(2 * delta - 3)
}

/// `n <= 4^(4^k)`, decided exactly.
pub fn within_upper_envelope(n: usize, k: u32) -> bool {
    // 4^(4^k) = 2^(2 * 4^k); anything that fits a usize is below 2^64
    if k >= 3 {
        return true;
    }
    let exp = 2u32 * 4u32.pow(k);
    (n as u128) <= 1u128 << exp
}

/// Hard checks for one stage on its own: minimum degree and the upper envelope.
pub fn check_single_stage(s: &StageStats) -> Result<(), BoundsError> {
    if s.delta() < 3 {
        return Err(violation(
            s.k,
            Inequality::MinDegree,
            format!("delta_{} = {}", s.k, s.delta()),
        ));
    }
    if !within_upper_envelope(s.n(), s.k) {
        return Err(violation(
            s.k,
            Inequality::UpperEnvelope,
            format!("n_{} = {}", s.k, s.n()),
        ));
    }
    Ok(())
}

/// Exact evaluation of every constant-free inequality between two
/// consecutive stages. The first failing inequality is returned as an error.
pub fn check_stage_bounds(prev: &StageStats, cur: &StageStats) -> Result<StageBounds, BoundsError> {
    if cur.k != prev.k + 1 {
        return Err(BoundsError::NotConsecutive {
            prev: prev.k,
            cur: cur.k,
        });
    }
    let k = cur.k;
    let (n0, m0) = (prev.n(), prev.m());
    let (n1, m1) = (cur.n(), cur.m());

    if n1 < n0 + 1 {
        return Err(violation(
            k,
            Inequality::StrictGrowth,
            format!("n_{} = {n1}, n_{} = {n0}", k, prev.k),
        ));
    }
    check_single_stage(prev)?;
    check_single_stage(cur)?;

    let bound = degree_recurrence_bound(prev);
    if (cur.delta() as i64) < bound {
        return Err(violation(
            k,
            Inequality::DegreeRecurrence,
            format!("delta_{} = {} < {bound}", k, cur.delta()),
        ));
    }

    if BigUint::from(n1) > choose2(m0) {
        return Err(violation(
            k,
            Inequality::PointsFromLines,
            format!("n = {n1}, C({m0}, 2) = {}", choose2(m0)),
        ));
    }
    if BigUint::from(m1) > choose2(n1) {
        return Err(violation(
            k,
            Inequality::LinesFromPoints,
            format!("m = {m1}, C({n1}, 2) = {}", choose2(n1)),
        ));
    }
    if BigUint::from(n1) * 8u8 >= BigUint::from(n0).pow(4) {
        return Err(violation(
            k,
            Inequality::PointsQuartic,
            format!("8 * {n1} >= {n0}^4"),
        ));
    }
    if BigUint::from(m1) * 8u8 >= BigUint::from(m0).pow(4) {
        return Err(violation(
            k,
            Inequality::LinesQuartic,
            format!("8 * {m1} >= {m0}^4"),
        ));
    }
    Ok(StageBounds {
        k,
        strict_growth_ok: true,
        min_degree_ok: true,
        degree_recurrence_ok: true,
        degree_recurrence_bound: bound,
        trivial_upper_ok: true,
        envelope_ok: true,
    })
}

/// Measured constants of the per-point degree growth claim and of the
/// `n_{k+1}` vs `delta_k^{3/2} n_k^{1/2}` claim. Approximate values derived
/// from exact counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeLemmaRecord {
    /// Stage index of the *new* stage, `k + 1`.
    pub k: u32,
    /// `min_p d_{k+1}(p) * sqrt(d_k(p) / n_k) / delta_k`.
    pub point_growth_min_ratio: f64,
    /// Index of a point attaining the minimum.
    pub point_growth_argmin: usize,
    /// `n_{k+1} / (delta_k^{3/2} * n_k^{1/2})`.
    pub count_growth_ratio: f64,
}

pub fn measure_degree_lemma(
    prev: &Configuration,
    cur: &Configuration,
) -> Result<DegreeLemmaRecord, BoundsError> {
    let consecutive = cur.stage() == prev.stage() + 1
        && cur.n_points() >= prev.n_points()
        && cur.points()[..prev.n_points()] == *prev.points();
    if !consecutive {
        return Err(BoundsError::NotConsecutive {
            prev: prev.stage(),
            cur: cur.stage(),
        });
    }
    let n = prev.n_points() as f64;
    let delta = (0..prev.n_points())
        .map(|p| prev.point_degree(p))
        .min()
        .unwrap_or(0) as f64;
    let (argmin, ratio) = (0..prev.n_points())
        .map(|p| {
            let d = prev.point_degree(p) as f64;
            let next = cur.point_degree(p) as f64;
            (p, next * (d / n).sqrt() / delta)
        })
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let count_ratio = cur.n_points() as f64 / (delta.powf(1.5) * n.sqrt());
    let k = cur.stage();
    for (name, v) in [("point growth", ratio), ("count growth", count_ratio)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(violation(
                k,
                Inequality::PositiveRatio,
                format!("{name} ratio {v}"),
            ));
        }
    }
    Ok(DegreeLemmaRecord {
        k,
        point_growth_min_ratio: ratio,
        point_growth_argmin: argmin,
        count_growth_ratio: count_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub k: u32,
    pub n: usize,
    pub log4_n: f64,
    pub log4_log4_n: f64,
    /// `n_k <= 4^(4^k)`, exact.
    pub upper_ok: bool,
    /// `n_k / 4^(sqrt(1.1)^k)`: the measured lower-envelope constant.
    pub lower_constant: f64,
    /// `ln n_{k+1} / ln n_k` for the step to the next stage.
    pub growth_factor: Option<f64>,
    /// `ln` of the growth factor.
    pub growth_exponent: Option<f64>,
    /// Whether the growth factor lies in `[sqrt(1.1), 4]`.
    pub in_band: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    /// Lower end of the growth band, `sqrt(11/10)` truncated to `band_digits` digits.
    pub band_low: String,
    pub band_high: u32,
    pub band_digits: u32,
    pub rows: Vec<EnvelopeRow>,
}

/// `floor(sqrt(num / den) * 10^digits) / 10^digits`.
pub fn sqrt_truncated(num: u64, den: u64, digits: u32) -> BigRational {
    let scale = BigUint::from(10u8).pow(digits);
    let radicand = BigUint::from(num) * &scale * &scale / BigUint::from(den);
    BigRational::new(BigInt::from(radicand.sqrt()), BigInt::from(scale))
}

pub fn envelope_report(
    stats: &[StageStats],
    band_digits: u32,
) -> Result<EnvelopeReport, BoundsError> {
    if stats.len() < 2 {
        return Err(BoundsError::TooFewStages(stats.len()));
    }
    let band_low = sqrt_truncated(11, 10, band_digits);
    let low = band_low.to_f64().unwrap_or(f64::NAN);
    let log4 = |x: f64| x.ln() / 4f64.ln();
    let mut rows = Vec::with_capacity(stats.len());
    for (i, s) in stats.iter().enumerate() {
        let n = s.n();
        let upper_ok = within_upper_envelope(n, s.k);
        if !upper_ok {
            return Err(violation(
                s.k,
                Inequality::UpperEnvelope,
                format!("n_{} = {n}", s.k),
            ));
        }
        let growth = stats
            .get(i + 1)
            .map(|next| (next.n() as f64).ln() / (n as f64).ln());
        let lower_constant = (n as f64).ln() - low.powi(s.k as i32) * 4f64.ln();
        rows.push(EnvelopeRow {
            k: s.k,
            n,
            log4_n: log4(n as f64),
            log4_log4_n: log4(log4(n as f64)),
            upper_ok,
            lower_constant: lower_constant.exp(),
            growth_factor: growth,
            growth_exponent: growth.map(f64::ln),
            in_band: growth.map(|g| g >= low && g <= 4.0),
        });
    }
    Ok(EnvelopeReport {
        band_low: band_low.to_string(),
        band_high: 4,
        band_digits,
        rows,
    })
}

/// `eps -> (1 + 2 eps) / 12`.
pub fn bootstrap_step(eps: &BigRational) -> BigRational {
    (BigRational::one() + eps * BigRational::from_integer(2.into()))
        / BigRational::from_integer(12.into())
}

/// `[eps_0, eps_1, ..., eps_iterations]`, exact.
pub fn bootstrap_trace(eps0: &BigRational, iterations: usize) -> Vec<BigRational> {
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(eps0.clone());
    for _ in 0..iterations {
        let next = bootstrap_step(trace.last().expect("nonempty"));
        trace.push(next);
    }
    trace
}

/// `1/10 - (1/10) (1/6)^j`, the iterate from `eps_0 = 0`.
pub fn bootstrap_closed_form(j: u32) -> BigRational {
    let tenth = BigRational::new(1.into(), 10.into());
    let sixth_pow = BigRational::new(1.into(), BigInt::from(6u8).pow(j));
    &tenth - &tenth * sixth_pow
}

/// Degree exponent produced from an exponent `eps`: `(1 + 2 eps) / 3`.
pub fn degree_exponent(eps: &BigRational) -> BigRational {
    (BigRational::one() + eps * BigRational::from_integer(2.into()))
        / BigRational::from_integer(3.into())
}

/// Full report for a run, accumulated stage by stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub stages: Vec<StageBounds>,
    pub degree_lemma: Vec<DegreeLemmaRecord>,
    pub pencil_grids: Vec<PencilGrid>,
    pub envelope: Option<EnvelopeReport>,
    /// Exact bootstrap iterates from 0, as `num/den`.
    pub bootstrap: Vec<String>,
    #[serde(skip)]
    stats: Vec<StageStats>,
}

impl BoundsReport {
    pub fn new(first: &Configuration, first_stats: &StageStats) -> Result<Self, BoundsError> {
        check_single_stage(first_stats)?;
        Ok(Self {
            stages: Vec::new(),
            degree_lemma: Vec::new(),
            pencil_grids: pencil_grid(first).into_iter().collect(),
            envelope: None,
            bootstrap: bootstrap_trace(&BigRational::zero(), 20)
                .iter()
                .map(ToString::to_string)
                .collect(),
            stats: vec![first_stats.clone()],
        })
    }

    pub fn push(
        &mut self,
        prev: &Configuration,
        cur: &Configuration,
        cur_stats: &StageStats,
    ) -> Result<(), BoundsError> {
        let prev_stats = self.stats.last().expect("report starts with a stage");
        let row = check_stage_bounds(prev_stats, cur_stats)?;
        let lemma = measure_degree_lemma(prev, cur)?;
        self.stages.push(row);
        self.degree_lemma.push(lemma);
        self.pencil_grids.extend(pencil_grid(cur));
        self.stats.push(cur_stats.clone());
        Ok(())
    }

    pub fn finish(mut self) -> Result<Self, BoundsError> {
        if self.stats.len() >= 2 {
            self.envelope = Some(envelope_report(&self.stats, 12)?);
        }
        Ok(self)
    }
}
