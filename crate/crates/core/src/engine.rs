//! Stage execution for the iterated point-line closure.
//!
//! A stage maps `(P_k, L_k)` to `(P_{k+1}, L_{k+1})` in two ordered steps:
//! every meet of two lines becomes a point, then every join of two points
//! (of the enlarged point set) becomes a line. Both steps are the same
//! operation up to duality, so they share [`cross_closure`].
//!
//! The incremental engine only looks at pairs touching at least one element
//! added by the previous step; older pairs were already closed. The
//! [`naive_stage`] path recomputes everything from scratch and rebuilds
//! incidence by exhaustive scan, and exists to cross-check the engine.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::projective::{
    incident, line_through, meet, Line, Point, Role, StartConfig, StartViolation, Tagged,
};

/// Pairs handed to the worker pool per block; budgets are checked between blocks.
const PAIR_BLOCK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParallelPolicy {
    /// Abort on the first pair of parallel lines.
    Error,
    /// Discard meets at infinity and count them.
    Skip,
    /// Keep meets at infinity as points with `z = 0`.
    Projective,
}

impl fmt::Display for ParallelPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParallelPolicy::Error => "error",
            ParallelPolicy::Skip => "skip",
            ParallelPolicy::Projective => "projective",
        })
    }
}

impl FromStr for ParallelPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(ParallelPolicy::Error),
            "skip" => Ok(ParallelPolicy::Skip),
            "projective" => Ok(ParallelPolicy::Projective),
            other => Err(format!(
                "unknown parallel policy `{other}` (expected error, skip or projective)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BudgetResource {
    Points,
    Lines,
    CoordinateBits,
}

impl fmt::Display for BudgetResource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetResource::Points => "points",
            BudgetResource::Lines => "lines",
            BudgetResource::CoordinateBits => "coordinate bits",
        })
    }
}

/// Hard caps on configuration size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_points: usize,
    pub max_lines: usize,
    pub max_bits: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_points: 2_000_000,
            max_lines: 2_000_000,
            max_bits: 4096,
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Self {
            max_points: usize::MAX,
            max_lines: usize::MAX,
            max_bits: u64::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("start configuration is not in general position: {}", join_violations(.0))]
    InvalidStart(Vec<StartViolation>),
    #[error("parallel lines {first} and {second} meet at infinity")]
    ParallelLinesEncountered { first: Box<Line>, second: Box<Line> },
    #[error("{resource} budget exceeded: limit {limit}, reached at least {reached}")]
    BudgetExceeded {
        resource: BudgetResource,
        limit: u64,
        reached: u64,
    },
}

fn join_violations(v: &[StartViolation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Points, lines and their full incidence structure at the start of a stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    stage: u32,
    points: Vec<Point>,
    lines: Vec<Line>,
    /// Sorted line indices through each point.
    point_lines: Vec<Vec<u32>>,
    /// Sorted point indices on each line.
    line_points: Vec<Vec<u32>>,
    /// Points from this index on were added by the latest intersection step.
    fresh_points_from: usize,
    /// Lines from this index on were added by the latest connection step.
    fresh_lines_from: usize,
}

impl Configuration {
    /// Assembles a configuration and rebuilds incidence by exhaustive scan.
    pub fn from_parts(
        stage: u32,
        points: Vec<Point>,
        lines: Vec<Line>,
        fresh_points_from: usize,
        fresh_lines_from: usize,
    ) -> Self {
        let (point_lines, line_points) = scan_incidence(&points, &lines);
        Self {
            stage,
            points,
            lines,
            point_lines,
            line_points,
            fresh_points_from,
            fresh_lines_from,
        }
    }

    pub fn stage(&self) -> u32 {
        self.stage
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn lines_through(&self, point: usize) -> &[u32] {
        &self.point_lines[point]
    }

    pub fn points_on(&self, line: usize) -> &[u32] {
        &self.line_points[line]
    }

    pub fn point_degree(&self, point: usize) -> usize {
        self.point_lines[point].len()
    }

    pub fn line_degree(&self, line: usize) -> usize {
        self.line_points[line].len()
    }

    pub fn fresh_points_from(&self) -> usize {
        self.fresh_points_from
    }

    pub fn fresh_lines_from(&self) -> usize {
        self.fresh_lines_from
    }

    pub fn max_coordinate_bits(&self) -> u64 {
        let p = self.points.iter().map(Tagged::max_bits);
        let l = self.lines.iter().map(Tagged::max_bits);
        p.chain(l).max().unwrap_or(0)
    }

    /// Swaps the roles of points and lines, incidence and frontiers included.
    pub fn dual(&self) -> Self {
        Self {
            stage: self.stage,
            points: self.lines.iter().map(Tagged::dual).collect(),
            lines: self.points.iter().map(Tagged::dual).collect(),
            point_lines: self.line_points.clone(),
            line_points: self.point_lines.clone(),
            fresh_points_from: self.fresh_lines_from,
            fresh_lines_from: self.fresh_points_from,
        }
    }

    /// Structural invariants that do not need a full scan.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.points.len();
        let m = self.lines.len();
        if self.point_lines.len() != n || self.line_points.len() != m {
            return Err("incidence tables do not match element counts".into());
        }
        if self.fresh_points_from > n || self.fresh_lines_from > m {
            return Err("fresh frontier beyond element count".into());
        }
        if let Some(dup) = first_duplicate(&self.points) {
            return Err(format!("duplicate {dup}"));
        }
        if let Some(dup) = first_duplicate(&self.lines) {
            return Err(format!("duplicate {dup}"));
        }
        let mut mirrored = 0usize;
        for (li, pts) in self.line_points.iter().enumerate() {
            if !pts.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("point list of line {li} is not strictly sorted"));
            }
            if pts.len() < 2 {
                return Err(format!("line {li} carries {} point(s)", pts.len()));
            }
            for &pi in pts {
                let pi = pi as usize;
                if pi >= n {
                    return Err(format!("line {li} references missing point {pi}"));
                }
                if self.point_lines[pi].binary_search(&(li as u32)).is_err() {
                    return Err(format!("point {pi} does not list line {li}"));
                }
                if !incident(&self.points[pi], &self.lines[li]) {
                    return Err(format!(
                        "point {pi} is recorded on line {li} but is not incident"
                    ));
                }
                mirrored += 1;
            }
        }
        let total: usize = self.point_lines.iter().map(Vec::len).sum();
        if total != mirrored {
            return Err("point-side incidence has entries missing on the line side".into());
        }
        for (pi, ls) in self.point_lines.iter().enumerate() {
            if !ls.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("line list of point {pi} is not strictly sorted"));
            }
            if ls.len() < 2 {
                return Err(format!("point {pi} lies on {} line(s)", ls.len()));
            }
        }
        Ok(())
    }

    /// Compares stored incidence with an exhaustive `n x m` scan.
    pub fn verify_against_scan(&self) -> Result<(), String> {
        let (point_lines, line_points) = scan_incidence(&self.points, &self.lines);
        if let Some(li) = (0..self.lines.len()).find(|&i| line_points[i] != self.line_points[i]) {
            return Err(format!(
                "line {li}: stored points {:?}, scan found {:?}",
                self.line_points[li], line_points[li]
            ));
        }
        if point_lines != self.point_lines {
            return Err("point-side incidence differs from scan".into());
        }
        Ok(())
    }
}

fn first_duplicate<R: Role>(items: &[Tagged<R>]) -> Option<&Tagged<R>> {
    let mut seen = std::collections::HashSet::with_capacity(items.len());
    items.iter().find(|t| !seen.insert(*t))
}

/// Exhaustive incidence: for every line, every point with zero dot product.
pub fn scan_incidence(points: &[Point], lines: &[Line]) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let line_points: Vec<Vec<u32>> = lines
        .par_iter()
        .map(|l| {
            points
                .iter()
                .enumerate()
                .filter(|(_, p)| incident(p, l))
                .map(|(i, _)| i as u32)
                .collect()
        })
        .collect();
    let mut point_lines = vec![Vec::new(); points.len()];
    for (li, pts) in line_points.iter().enumerate() {
        for &pi in pts {
            point_lines[pi as usize].push(li as u32);
        }
    }
    (point_lines, line_points)
}

/// Degree extrema of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegreeStats {
    pub n: usize,
    pub m: usize,
    pub min_point_degree: usize,
    pub max_point_degree: usize,
    pub min_line_degree: usize,
    pub max_line_degree: usize,
}

pub fn degrees(c: &Configuration) -> DegreeStats {
    let (pmin, pmax) = extrema(c.point_lines.iter().map(Vec::len));
    let (lmin, lmax) = extrema(c.line_points.iter().map(Vec::len));
    DegreeStats {
        n: c.n_points(),
        m: c.n_lines(),
        min_point_degree: pmin,
        max_point_degree: pmax,
        min_line_degree: lmin,
        max_line_degree: lmax,
    }
}

fn extrema(it: impl Iterator<Item = usize>) -> (usize, usize) {
    it.fold(None, |acc: Option<(usize, usize)>, d| match acc {
        None => Some((d, d)),
        Some((lo, hi)) => Some((lo.min(d), hi.max(d))),
    })
    .unwrap_or((0, 0))
}

/// Per-stage record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageStats {
    pub k: u32,
    pub degrees: DegreeStats,
    /// Line pairs meeting at infinity during the step that produced this stage.
    /// `None` when unknown (e.g. a stage loaded from a snapshot).
    pub parallel_pairs: Option<u64>,
    pub max_coord_bits: u64,
    pub intersect_ms: f64,
    pub connect_ms: f64,
}

impl StageStats {
    pub fn of(c: &Configuration) -> Self {
        Self {
            k: c.stage,
            degrees: degrees(c),
            parallel_pairs: None,
            max_coord_bits: c.max_coordinate_bits(),
            intersect_ms: 0.0,
            connect_ms: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.degrees.n
    }

    pub fn m(&self) -> usize {
        self.degrees.m
    }

    pub fn delta(&self) -> usize {
        self.degrees.min_point_degree
    }
}

/// What a single step did besides producing the new configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    pub added: usize,
    pub parallel_pairs: u64,
}

/// Worker pool plus the run-wide policy and budget.
#[derive(Clone)]
pub struct Engine {
    policy: ParallelPolicy,
    budget: Budget,
    workers: usize,
    pool: Arc<rayon::ThreadPool>,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("policy", &self.policy)
            .field("budget", &self.budget)
            .field("workers", &self.workers)
            .finish()
    }
}

impl Engine {
    pub fn new(policy: ParallelPolicy, budget: Budget, workers: usize) -> Self {
        let workers = workers.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("plc-worker-{i}"))
            .build()
            .expect("failed to build worker pool");
        Self {
            policy,
            budget,
            workers,
            pool: Arc::new(pool),
        }
    }

    pub fn policy(&self) -> ParallelPolicy {
        self.policy
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn init(&self, cfg: &StartConfig) -> Result<Configuration, EngineError> {
        init(cfg, self.policy)
    }

    /// Adds every meet of two lines that is not yet a point.
    pub fn intersection_step(
        &self,
        c: &Configuration,
    ) -> Result<(Configuration, StepReport), EngineError> {
        let outcome = self.pool.install(|| {
            cross_closure(
                &c.lines,
                c.fresh_lines_from,
                &c.points,
                Some(self.policy),
                Limit {
                    resource: BudgetResource::Points,
                    max_total: self.budget.max_points,
                    max_bits: self.budget.max_bits,
                },
            )
        });
        let outcome = outcome.map_err(|e| e.into_engine_error(&c.lines))?;
        let report = StepReport {
            added: outcome.items.len(),
            parallel_pairs: outcome.parallel_pairs,
        };
        let mut next = c.clone();
        next.fresh_points_from = next.points.len();
        append(
            &mut next.points,
            &mut next.point_lines,
            &mut next.line_points,
            outcome.items,
        );
        Ok((next, report))
    }

    /// Adds every join of two points that is not yet a line.
    pub fn connection_step(
        &self,
        c: &Configuration,
    ) -> Result<(Configuration, StepReport), EngineError> {
        let outcome = self.pool.install(|| {
            cross_closure(
                &c.points,
                c.fresh_points_from,
                &c.lines,
                None,
                Limit {
                    resource: BudgetResource::Lines,
                    max_total: self.budget.max_lines,
                    max_bits: self.budget.max_bits,
                },
            )
        });
        let outcome = outcome.map_err(|e| e.into_engine_error(&c.points))?;
        let report = StepReport {
            added: outcome.items.len(),
            parallel_pairs: 0,
        };
        let mut next = c.clone();
        next.fresh_lines_from = next.lines.len();
        append(
            &mut next.lines,
            &mut next.line_points,
            &mut next.point_lines,
            outcome.items,
        );
        Ok((next, report))
    }

    /// Intersection then connection; returns stage `k + 1` and its stats.
    pub fn run_stage(&self, c: &Configuration) -> Result<(Configuration, StageStats), EngineError> {
        let t0 = Instant::now();
        let (mid, isect) = self.intersection_step(c)?;
        let t1 = Instant::now();
        let (mut next, _) = self.connection_step(&mid)?;
        let t2 = Instant::now();
        next.stage = c.stage + 1;
        let stats = StageStats {
            k: next.stage,
            degrees: degrees(&next),
            parallel_pairs: Some(isect.parallel_pairs),
            max_coord_bits: next.max_coordinate_bits(),
            intersect_ms: (t1 - t0).as_secs_f64() * 1e3,
            connect_ms: (t2 - t1).as_secs_f64() * 1e3,
        };
        Ok((next, stats))
    }
}

/// Stage-1 configuration: the four start points and their six joins.
pub fn init(cfg: &StartConfig, policy: ParallelPolicy) -> Result<Configuration, EngineError> {
    let violations = crate::projective::validate_start(cfg);
    let fatal = violations.iter().any(|v| !v.is_parallel());
    if fatal || (!violations.is_empty() && policy == ParallelPolicy::Error) {
        return Err(EngineError::InvalidStart(violations));
    }
    let mut points = cfg.projective_points().to_vec();
    points.sort();
    let mut lines = Vec::with_capacity(6);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            lines.push(line_through(&points[i], &points[j]).expect("distinct start points"));
        }
    }
    lines.sort();
    Ok(Configuration::from_parts(1, points, lines, 0, 0))
}

struct Limit {
    resource: BudgetResource,
    max_total: usize,
    max_bits: u64,
}

struct ClosureOutcome<D: Role> {
    /// New elements in canonical order, each with its sorted incident sources.
    items: Vec<(Tagged<D>, Vec<u32>)>,
    parallel_pairs: u64,
}

enum ClosureError {
    Parallel(usize, usize),
    Budget {
        resource: BudgetResource,
        limit: u64,
        reached: u64,
    },
}

impl ClosureError {
    fn into_engine_error<R: Role>(self, sources: &[Tagged<R>]) -> EngineError {
        match self {
            ClosureError::Parallel(i, j) => EngineError::ParallelLinesEncountered {
                first: Box::new(Line::new(sources[i].triple().clone())),
                second: Box::new(Line::new(sources[j].triple().clone())),
            },
            ClosureError::Budget {
                resource,
                limit,
                reached,
            } => EngineError::BudgetExceeded {
                resource,
                limit,
                reached,
            },
        }
    }
}

enum Candidate<D: Role> {
    New(Tagged<D>, u32, u32, bool),
    /// Parallel pair whose meet is dropped (or rejected) by policy.
    AtInfinity(usize, usize),
    /// Parallel pair whose point at infinity is already present.
    KnownAtInfinity,
}

/// Cross products of all source pairs `(i, j)`, `i < j`, `j >= fresh_from`,
/// that are not already present among `targets`.
///
/// `policy` is `Some` only when the products are points (meets), in which
/// case products with zero third component are handled per policy.
fn cross_closure<R: Role>(
    sources: &[Tagged<R>],
    fresh_from: usize,
    targets: &[Tagged<R::Dual>],
    policy: Option<ParallelPolicy>,
    limit: Limit,
) -> Result<ClosureOutcome<R::Dual>, ClosureError> {
    let existing: HashMap<&Tagged<R::Dual>, u32> = targets
        .iter()
        .enumerate()
        .map(|(i, t)| (t, i as u32))
        .collect();
    let mut found: HashMap<Tagged<R::Dual>, Vec<u32>> = HashMap::new();
    let mut parallel_pairs = 0u64;

    for (lo, hi) in pair_blocks(fresh_from, sources.len()) {
        let candidates: Vec<Candidate<R::Dual>> = (lo..hi)
            .into_par_iter()
            .flat_map_iter(|j| (0..j).map(move |i| (i, j)))
            .filter_map(|(i, j)| {
                let t = sources[i].triple().cross(sources[j].triple())?;
                let at_infinity = policy.is_some() && t.c().is_zero();
                if at_infinity && policy != Some(ParallelPolicy::Projective) {
                    return Some(Candidate::AtInfinity(i, j));
                }
                let t = Tagged::<R::Dual>::new(t);
                if !existing.contains_key(&t) {
                    Some(Candidate::New(t, i as u32, j as u32, at_infinity))
                } else if at_infinity {
                    Some(Candidate::KnownAtInfinity)
                } else {
                    None
                }
            })
            .collect();

        let mut worst_bits = 0u64;
        for cand in candidates {
            match cand {
                Candidate::AtInfinity(i, j) => {
                    if policy == Some(ParallelPolicy::Error) {
                        // collect() preserves pair order, so this is the first pair
                        return Err(ClosureError::Parallel(i, j));
                    }
                    parallel_pairs += 1;
                }
                Candidate::KnownAtInfinity => parallel_pairs += 1,
                Candidate::New(t, i, j, at_infinity) => {
                    parallel_pairs += u64::from(at_infinity);
                    worst_bits = worst_bits.max(t.max_bits());
                    let entry = found.entry(t).or_default();
                    entry.push(i);
                    entry.push(j);
                }
            }
        }
        if worst_bits > limit.max_bits {
            return Err(ClosureError::Budget {
                resource: BudgetResource::CoordinateBits,
                limit: limit.max_bits,
                reached: worst_bits,
            });
        }
        let total = targets.len() + found.len();
        if total > limit.max_total {
            return Err(ClosureError::Budget {
                resource: limit.resource,
                limit: limit.max_total as u64,
                reached: total as u64,
            });
        }
    }

    let mut items: Vec<(Tagged<R::Dual>, Vec<u32>)> = found
        .into_iter()
        .map(|(t, mut src)| {
            src.sort_unstable();
            src.dedup();
            (t, src)
        })
        .collect();
    items.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(ClosureOutcome {
        items,
        parallel_pairs,
    })
}

/// Splits `j in fresh_from..len` into ranges holding about `PAIR_BLOCK` pairs each.
fn pair_blocks(fresh_from: usize, len: usize) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut lo = fresh_from;
    let mut pairs = 0usize;
    for j in fresh_from..len {
        pairs += j;
        if pairs >= PAIR_BLOCK {
            blocks.push((lo, j + 1));
            lo = j + 1;
            pairs = 0;
        }
    }
    if lo < len {
        blocks.push((lo, len));
    }
    blocks
}

/// Appends new elements with their incidences, keeping all lists sorted.
fn append<D: Role>(
    items: &mut Vec<Tagged<D>>,
    incidence: &mut Vec<Vec<u32>>,
    mirror: &mut [Vec<u32>],
    new_items: Vec<(Tagged<D>, Vec<u32>)>,
) {
    for (t, sources) in new_items {
        let idx = items.len() as u32;
        for &s in &sources {
            mirror[s as usize].push(idx);
        }
        items.push(t);
        incidence.push(sources);
    }
}

/// Reference stage: all-pairs meet, all-pairs join, incidence by full scan.
pub fn naive_stage(
    c: &Configuration,
    policy: ParallelPolicy,
) -> Result<Configuration, EngineError> {
    let mut points = c.points.clone();
    let known: std::collections::HashSet<Point> = points.iter().cloned().collect();
    let mut new_points = std::collections::BTreeSet::new();
    for i in 0..c.lines.len() {
        for j in i + 1..c.lines.len() {
            let p = meet(&c.lines[i], &c.lines[j]).expect("lines are distinct");
            if p.is_at_infinity() {
                match policy {
                    ParallelPolicy::Error => {
                        return Err(EngineError::ParallelLinesEncountered {
                            first: Box::new(c.lines[i].clone()),
                            second: Box::new(c.lines[j].clone()),
                        })
                    }
                    ParallelPolicy::Skip => continue,
                    ParallelPolicy::Projective => {}
                }
            }
            if !known.contains(&p) {
                new_points.insert(p);
            }
        }
    }
    let fresh_points_from = points.len();
    points.extend(new_points);

    let mut lines = c.lines.clone();
    let known: std::collections::HashSet<Line> = lines.iter().cloned().collect();
    let mut new_lines = std::collections::BTreeSet::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let l = line_through(&points[i], &points[j]).expect("points are distinct");
            if !known.contains(&l) {
                new_lines.insert(l);
            }
        }
    }
    let fresh_lines_from = lines.len();
    lines.extend(new_lines);
    Ok(Configuration::from_parts(
        c.stage + 1,
        points,
        lines,
        fresh_points_from,
        fresh_lines_from,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::StartConfig;

    fn engine() -> Engine {
        Engine::new(ParallelPolicy::Skip, Budget::default(), 2)
    }

    #[test]
    fn init_canonical() {
        let c = init(&StartConfig::canonical(), ParallelPolicy::Error).unwrap();
        assert_eq!((c.n_points(), c.n_lines()), (4, 6));
        let d = degrees(&c);
        assert_eq!((d.min_point_degree, d.max_point_degree), (3, 3));
        assert_eq!((d.min_line_degree, d.max_line_degree), (2, 2));
        c.check_invariants().unwrap();
    }

    #[test]
    fn init_square_rejected_under_error_policy() {
        let sq = StartConfig::from_integers([(0, 0), (1, 0), (1, 1), (0, 1)]);
        match init(&sq, ParallelPolicy::Error) {
            Err(EngineError::InvalidStart(v)) => assert_eq!(v.len(), 2),
            other => panic!("expected InvalidStart, got {other:?}"),
        }
        assert!(init(&sq, ParallelPolicy::Skip).is_ok());
    }

    #[test]
    fn init_collinear_always_rejected() {
        let bad = StartConfig::from_integers([(0, 0), (1, 1), (2, 2), (0, 1)]);
        for policy in [
            ParallelPolicy::Error,
            ParallelPolicy::Skip,
            ParallelPolicy::Projective,
        ] {
            assert!(matches!(
                init(&bad, policy),
                Err(EngineError::InvalidStart(_))
            ));
        }
    }

    #[test]
    fn first_intersection_adds_diagonal_points() {
        let e = engine();
        let c = e.init(&StartConfig::canonical()).unwrap();
        let (mid, rep) = e.intersection_step(&c).unwrap();
        assert_eq!(rep.added, 3);
        assert_eq!(mid.n_points(), 7);
        let expect: Vec<Point> = [(-5, 0, 6), (0, -7, 4), (5, 7, 12)]
            .iter()
            .map(|&(a, b, c)| Point::from_i64(a, b, c).unwrap())
            .collect();
        for p in &expect {
            assert!(mid.points().contains(p), "{p} missing");
        }
        let (next, rep) = e.connection_step(&mid).unwrap();
        assert_eq!(rep.added, 3);
        assert_eq!(next.n_lines(), 9);
        next.check_invariants().unwrap();
        next.verify_against_scan().unwrap();
    }

    #[test]
    fn closed_configuration_is_fixed() {
        let e = engine();
        let c = e.init(&StartConfig::canonical()).unwrap();
        let (mid, _) = e.intersection_step(&c).unwrap();
        // no fresh lines since the last intersection: nothing to do
        let mut closed = mid.clone();
        closed.fresh_lines_from = closed.n_lines();
        let (again, rep) = e.intersection_step(&closed).unwrap();
        assert_eq!(rep.added, 0);
        assert_eq!(again.points(), closed.points());
        let (next, _) = e.connection_step(&mid).unwrap();
        let mut joined = next.clone();
        joined.fresh_points_from = joined.n_points();
        let (again, rep) = e.connection_step(&joined).unwrap();
        assert_eq!(rep.added, 0);
        assert_eq!(again.lines(), joined.lines());
    }

    #[test]
    fn stage_two_degrees() {
        let e = engine();
        let c = e.init(&StartConfig::canonical()).unwrap();
        let (c2, s2) = e.run_stage(&c).unwrap();
        assert_eq!(c2.stage(), 2);
        assert_eq!((s2.n(), s2.m()), (7, 9));
        assert_eq!(s2.degrees.min_point_degree, 3);
        assert_eq!(s2.degrees.max_point_degree, 4);
        assert_eq!(s2.degrees.max_line_degree, 3);
        assert_eq!(s2.parallel_pairs, Some(0));
    }

    #[test]
    fn intersection_budget_leaves_input_untouched() {
        let budget = Budget {
            max_points: 10,
            ..Budget::default()
        };
        let e = Engine::new(ParallelPolicy::Skip, budget, 1);
        let c1 = e.init(&StartConfig::canonical()).unwrap();
        let (c2, _) = e.run_stage(&c1).unwrap();
        let before = c2.clone();
        match e.run_stage(&c2) {
            Err(EngineError::BudgetExceeded {
                resource, limit, ..
            }) => {
                assert_eq!(resource, BudgetResource::Points);
                assert_eq!(limit, 10);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        assert_eq!(c2, before);
    }

    #[test]
    fn bit_budget() {
        let budget = Budget {
            max_bits: 3,
            ..Budget::default()
        };
        let e = Engine::new(ParallelPolicy::Skip, budget, 1);
        let c1 = e.init(&StartConfig::canonical()).unwrap();
        assert!(matches!(
            e.run_stage(&c1),
            Err(EngineError::BudgetExceeded {
                resource: BudgetResource::CoordinateBits,
                ..
            })
        ));
    }

    #[test]
    fn error_policy_reports_parallel_pair() {
        let sq = StartConfig::from_integers([(0, 0), (1, 0), (1, 1), (0, 1)]);
        let e = Engine::new(ParallelPolicy::Error, Budget::default(), 1);
        let c = init(&sq, ParallelPolicy::Skip).unwrap();
        match e.intersection_step(&c) {
            Err(EngineError::ParallelLinesEncountered { first, second }) => {
                assert!(crate::projective::are_parallel(&first, &second));
            }
            other => panic!("expected parallel error, got {other:?}"),
        }
        assert!(matches!(
            naive_stage(&c, ParallelPolicy::Error),
            Err(EngineError::ParallelLinesEncountered { .. })
        ));
    }

    #[test]
    fn skip_and_projective_on_square() {
        let sq = StartConfig::from_integers([(0, 0), (1, 0), (1, 1), (0, 1)]);
        let c = init(&sq, ParallelPolicy::Skip).unwrap();
        let skip = Engine::new(ParallelPolicy::Skip, Budget::default(), 1);
        let (mid, rep) = skip.intersection_step(&c).unwrap();
        assert_eq!(rep.parallel_pairs, 2);
        assert_eq!(rep.added, 1); // only the centre
        assert!(mid.points().iter().all(|p| !p.is_at_infinity()));

        let proj = Engine::new(ParallelPolicy::Projective, Budget::default(), 1);
        let (mid, rep) = proj.intersection_step(&c).unwrap();
        assert_eq!(rep.added, 3);
        assert_eq!(
            mid.points().iter().filter(|p| p.is_at_infinity()).count(),
            2
        );
        let (next, _) = proj.run_stage(&c).unwrap();
        let naive = naive_stage(&c, ParallelPolicy::Projective).unwrap();
        assert_eq!(next.points(), naive.points());
        assert_eq!(next.lines(), naive.lines());
    }

    #[test]
    fn naive_matches_incremental_stage_three() {
        let e = engine();
        let mut c = e.init(&StartConfig::canonical()).unwrap();
        for _ in 0..2 {
            let (next, _) = e.run_stage(&c).unwrap();
            let naive = naive_stage(&c, ParallelPolicy::Skip).unwrap();
            assert_eq!(next, naive);
            c = next;
        }
        assert_eq!(c.n_points(), 13);
    }

    #[test]
    fn pair_blocks_cover_range() {
        let blocks = pair_blocks(3, 2000);
        assert_eq!(blocks.first().unwrap().0, 3);
        assert_eq!(blocks.last().unwrap().1, 2000);
        assert!(blocks.windows(2).all(|w| w[0].1 == w[1].0));
        assert!(pair_blocks(5, 5).is_empty());
    }

    #[test]
    fn dual_is_an_involution() {
        let e = engine();
        let c = e.init(&StartConfig::canonical()).unwrap();
        let (c2, _) = e.run_stage(&c).unwrap();
        assert_eq!(c2.dual().dual(), c2);
        c2.dual().check_invariants().unwrap();
    }

    #[test]
    fn policy_parse() {
        for p in [
            ParallelPolicy::Error,
            ParallelPolicy::Skip,
            ParallelPolicy::Projective,
        ] {
            assert_eq!(p.to_string().parse::<ParallelPolicy>().unwrap(), p);
        }
        assert!("nope".parse::<ParallelPolicy>().is_err());
    }
}
