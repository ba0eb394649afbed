//! Brute-force combinatorial oracles: grid covering by a third parallel
//! family, sumset cardinality, and point counts for families of parallel
//! lines.
//!
//! Everything here is exhaustive enumeration in exact rational arithmetic.
//! None of it shares code paths with the closure engine beyond the
//! projective meet/join primitives.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::engine::Configuration;
use crate::projective::{line_through, meet, Line, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sumset instance: {0}")]
    InvalidSumset(String),
    #[error(
        "incidence bound violated by sample {sample}: |P| = {points}, N = {families}, k = {lines}, ratio {ratio:.6}"
    )]
    BoundViolation {
        sample: usize,
        points: usize,
        families: usize,
        lines: usize,
        ratio: f64,
    },
}

/// A family of parallel lines `a*x + b*y = offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    direction: Line,
    offsets: Vec<BigRational>,
}

impl Family {
    /// `a*x + b*y = o` for each offset `o`; offsets must be strictly increasing.
    pub fn new(a: BigInt, b: BigInt, offsets: Vec<BigRational>) -> Result<Self, OracleError> {
        let direction = Line::from_raw(a, b, BigInt::zero())
            .map_err(|_| OracleError::InvalidGrid("family direction is (0, 0)".into()))?;
        if !offsets.windows(2).all(|w| w[0] < w[1]) {
            return Err(OracleError::InvalidGrid(
                "family offsets must be strictly increasing".into(),
            ));
        }
        Ok(Self { direction, offsets })
    }

    pub fn from_i64(a: i64, b: i64, offsets: &[i64]) -> Result<Self, OracleError> {
        let offsets = offsets
            .iter()
            .map(|&o| BigRational::from_integer(o.into()))
            .collect();
        Self::new(a.into(), b.into(), offsets)
    }

    /// Canonical `(a, b, 0)` triple shared by every line of the family.
    pub fn direction(&self) -> &Line {
        &self.direction
    }

    pub fn offsets(&self) -> &[BigRational] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn lines(&self) -> Vec<Line> {
        let t = self.direction.triple();
        self.offsets
            .iter()
            .map(|o| {
                Line::from_raw(t.a() * o.denom(), t.b() * o.denom(), -o.numer().clone())
                    .expect("direction is nonzero")
            })
            .collect()
    }
}

/// `N` families of parallel lines; family 0 is the designated `F_1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    families: Vec<Family>,
}

impl GridSpec {
    pub fn new(families: Vec<Family>) -> Result<Self, OracleError> {
        if families.len() < 2 {
            return Err(OracleError::InvalidGrid(format!(
                "need at least 2 families, got {}",
                families.len()
            )));
        }
        for (i, f) in families.iter().enumerate() {
            if f.len() < 2 {
                return Err(OracleError::InvalidGrid(format!(
                    "family {i} has {} line(s), need at least 2",
                    f.len()
                )));
            }
        }
        for i in 0..families.len() {
            for j in i + 1..families.len() {
                if families[i].direction == families[j].direction {
                    return Err(OracleError::DegenerateGrid(format!(
                        "families {i} and {j} share direction {:?}",
                        families[i].direction.triple()
                    )));
                }
            }
        }
        Ok(Self { families })
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn family_count(&self) -> usize {
        self.families.len()
    }

    /// Common family size, if all families have the same number of lines.
    pub fn uniform_size(&self) -> Option<usize> {
        let k = self.families[0].len();
        self.families.iter().all(|f| f.len() == k).then_some(k)
    }

    /// Axis-aligned `n x n` grid with offsets `0..n`.
    pub fn arithmetic(n: usize) -> Result<Self, OracleError> {
        Self::arithmetic_families(2, n)
    }

    /// `families` arithmetic families with offsets `0..lines`, pairwise
    /// non-parallel directions taken from a fixed list.
    pub fn arithmetic_families(families: usize, lines: usize) -> Result<Self, OracleError> {
        let offsets: Vec<i64> = (0..lines as i64).collect();
        let fams = small_directions()
            .take(families)
            .map(|(a, b)| Family::from_i64(a, b, &offsets))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(fams)
    }

    /// Random non-parallel directions and random rational offsets.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, families: usize, lines: usize) -> Self {
        let mut directions: Vec<Line> = Vec::with_capacity(families);
        while directions.len() < families {
            let a: i64 = rng.random_range(-9..=9);
            let b: i64 = rng.random_range(-9..=9);
            if let Ok(d) = Line::from_i64(a, b, 0) {
                if !directions.contains(&d) {
                    directions.push(d);
                }
            }
        }
        let fams = directions
            .into_iter()
            .map(|d| {
                let mut offs = BTreeSet::new();
                while offs.len() < lines {
                    offs.insert(random_rational(rng, 50, 6));
                }
                let t = d.triple();
                Family::new(t.a().clone(), t.b().clone(), offs.into_iter().collect())
                    .expect("valid family")
            })
            .collect();
        Self::new(fams).expect("directions are distinct")
    }

    /// Axis-aligned `n x n` grid with random distinct rational offsets.
    pub fn random_offsets<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        let mut fams = Vec::new();
        for (a, b) in [(1, 0), (0, 1)] {
            let mut offs = BTreeSet::new();
            while offs.len() < n {
                offs.insert(random_rational(rng, 20, 4));
            }
            fams.push(Family::new(a.into(), b.into(), offs.into_iter().collect()).unwrap());
        }
        Self::new(fams).unwrap()
    }
}

/// Pairwise non-parallel small integer directions: (1,0), (0,1), (1,1), (1,-1), (1,2), ...
fn small_directions() -> impl Iterator<Item = (i64, i64)> {
    let mut seen = HashSet::new();
    (1i64..)
        .flat_map(|r| {
            let mut v = vec![(1, 0), (0, 1)];
            for s in 1..=r {
                v.extend([(s, r), (s, -r), (r, s), (r, -s)]);
            }
            v
        })
        .filter(move |&(a, b)| {
            let d = Line::from_i64(a, b, 0).expect("nonzero");
            seen.insert(d)
        })
}

pub fn random_rational<R: Rng + ?Sized>(rng: &mut R, max_num: i64, max_den: i64) -> BigRational {
    let n: i64 = rng.random_range(-max_num..=max_num);
    let d: i64 = rng.random_range(1..=max_den);
    BigRational::new(n.into(), d.into())
}

/// The `n^2` intersection points of a two-family grid, as affine rationals.
fn grid_points(g: &GridSpec) -> Result<Vec<Point>, OracleError> {
    let [q, r] = g.families() else {
        return Err(OracleError::InvalidGrid(format!(
            "grid cover needs exactly 2 families, got {}",
            g.family_count()
        )));
    };
    if q.len() != r.len() {
        return Err(OracleError::InvalidGrid(format!(
            "grid families must have equal size, got {} and {}",
            q.len(),
            r.len()
        )));
    }
    let mut pts = Vec::with_capacity(q.len() * r.len());
    for lq in q.lines() {
        for lr in r.lines() {
            pts.push(meet(&lq, &lr).expect("families are not parallel"));
        }
    }
    Ok(pts)
}

/// Directions of lines through two grid points, excluding both grid directions.
fn candidate_directions(g: &GridSpec, pts: &[Point]) -> BTreeSet<Line> {
    let excluded: Vec<&Line> = g.families().iter().map(Family::direction).collect();
    let mut dirs = BTreeSet::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let l = line_through(&pts[i], &pts[j]).expect("grid points are distinct");
            let (a, b) = l.direction().expect("affine points span an affine line");
            let d = Line::from_raw(a, b, BigInt::zero()).expect("nonzero");
            if !excluded.contains(&&d) {
                dirs.insert(d);
            }
        }
    }
    dirs
}

/// Value of `a*x + b*y` for a direction `(a, b, 0)` at an affine point; two points
/// share a line of that direction exactly when these values agree.
fn projection(direction: &Line, p: &Point) -> BigRational {
    let (x, y) = p.to_affine().expect("grid points are affine");
    direction.linear_form_at(&x, &y)
}

/// Fewest parallel lines, in a direction other than the two grid directions,
/// that together cover all `n^2` intersections of an `n x n` grid.
pub fn grid_cover_min(g: &GridSpec) -> Result<usize, OracleError> {
    let pts = grid_points(g)?;
    let best = candidate_directions(g, &pts)
        .iter()
        .map(|d| {
            pts.iter()
                .map(|p| projection(d, p))
                .collect::<HashSet<_>>()
                .len()
        })
        .min();
    Ok(best.unwrap_or(pts.len()))
}

/// Same minimum, evaluated per direction as `|A + B|` where `A` holds the
/// projections along one line of the first family and `B` the offsets along
/// one line of the second family relative to their common point.
pub fn grid_cover_via_sumset(g: &GridSpec) -> Result<usize, OracleError> {
    let pts = grid_points(g)?;
    let n = g.families()[0].len();
    let best = candidate_directions(g, &pts)
        .iter()
        .map(|d| {
            // pts[i * n + j] = q_i ∩ r_j; fix q_0 and r_0
            let corner = projection(d, &pts[0]);
            let a: Vec<BigRational> = (0..n).map(|j| projection(d, &pts[j])).collect();
            let b: Vec<BigRational> = (0..n)
                .map(|i| projection(d, &pts[i * n]) - &corner)
                .collect();
            sumset_size(&SumsetInstance { a, b })
        })
        .min();
    Ok(best.unwrap_or(pts.len()))
}

/// Two finite sets of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumsetInstance {
    a: Vec<BigRational>,
    b: Vec<BigRational>,
}

impl SumsetInstance {
    pub fn new(a: Vec<BigRational>, b: Vec<BigRational>) -> Result<Self, OracleError> {
        for (name, s) in [("A", &a), ("B", &b)] {
            if s.is_empty() {
                return Err(OracleError::InvalidSumset(format!("{name} is empty")));
            }
            if s.iter().collect::<HashSet<_>>().len() != s.len() {
                return Err(OracleError::InvalidSumset(format!(
                    "{name} has repeated elements"
                )));
            }
        }
        Ok(Self { a, b })
    }

    pub fn from_i64(a: &[i64], b: &[i64]) -> Result<Self, OracleError> {
        let conv = |s: &[i64]| {
            s.iter()
                .map(|&v| BigRational::from_integer(v.into()))
                .collect()
        };
        Self::new(conv(a), conv(b))
    }

    pub fn a(&self) -> &[BigRational] {
        &self.a
    }

    pub fn b(&self) -> &[BigRational] {
        &self.b
    }
}

/// `|{a + b : a in A, b in B}|`.
pub fn sumset_size(inst: &SumsetInstance) -> usize {
    let mut sums = HashSet::with_capacity(inst.a.len() * inst.b.len());
    for x in &inst.a {
        for y in &inst.b {
            sums.insert(x + y);
        }
    }
    sums.len()
}

/// Which non-designated families take part in a family intersection count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyRange {
    /// `F_2 ..= F_N`.
    #[default]
    AllOthers,
    /// `F_2 ..= F_k` with `k` the family size (the literal index range).
    UpToLineCount,
}

/// Distinct points on a line of `F_1` and a line of another family in range.
pub fn family_intersection_count(g: &GridSpec, range: FamilyRange) -> Result<usize, OracleError> {
    let k = g.uniform_size().ok_or_else(|| {
        OracleError::InvalidGrid("families must all have the same number of lines".into())
    })?;
    let last = match range {
        FamilyRange::AllOthers => g.family_count(),
        FamilyRange::UpToLineCount => k.min(g.family_count()),
    };
    let designated = g.families()[0].lines();
    let mut pts = HashSet::new();
    for fam in &g.families()[1..last] {
        for l in fam.lines() {
            for d in &designated {
                pts.insert(meet(d, &l).expect("families are not parallel"));
            }
        }
    }
    Ok(pts.len())
}

/// One sample of the family point-count bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncidenceSample {
    pub families: usize,
    pub lines: usize,
    pub points: usize,
    /// `|P| / (k^2 * sqrt(N))`, approximate.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncidenceReport {
    /// The constant asserted against, as `num/den`.
    pub constant: String,
    pub samples: Vec<IncidenceSample>,
    pub min_ratio: f64,
    pub median_ratio: f64,
    pub argmin: usize,
}

/// `|P| >= c * k^2 * sqrt(N)` checked exactly as `|P|^2 >= c^2 * k^4 * N`.
pub fn satisfies_incidence_bound(
    points: usize,
    families: usize,
    lines: usize,
    c: &BigRational,
) -> bool {
    let p = BigRational::from_integer(points.into());
    let k = BigRational::from_integer(lines.into());
    let n = BigRational::from_integer(families.into());
    let k2 = &k * &k;
    &p * &p >= c * c * &k2 * &k2 * n
}

pub fn incidence_sample(g: &GridSpec, range: FamilyRange) -> Result<IncidenceSample, OracleError> {
    let families = g.family_count();
    let lines = g.uniform_size().ok_or_else(|| {
        OracleError::InvalidGrid("families must all have the same number of lines".into())
    })?;
    let points = family_intersection_count(g, range)?;
    Ok(IncidenceSample {
        families,
        lines,
        points,
        ratio: points as f64 / ((lines * lines) as f64 * (families as f64).sqrt()),
    })
}

/// Ratios `|P| / (k^2 sqrt(N))` over the samples; every one must reach `c`.
pub fn incidence_bound_report(
    samples: &[GridSpec],
    c: &BigRational,
) -> Result<IncidenceReport, OracleError> {
    let mut out = Vec::with_capacity(samples.len());
    for (i, g) in samples.iter().enumerate() {
        let s = incidence_sample(g, FamilyRange::AllOthers)?;
        if s.families < 4 || s.lines < 2 {
            return Err(OracleError::InvalidGrid(format!(
                "sample {i}: need N >= 4 families of k >= 2 lines, got N = {}, k = {}",
                s.families, s.lines
            )));
        }
        if !satisfies_incidence_bound(s.points, s.families, s.lines, c) {
            return Err(OracleError::BoundViolation {
                sample: i,
                points: s.points,
                families: s.families,
                lines: s.lines,
                ratio: s.ratio,
            });
        }
        out.push(s);
    }
    if out.is_empty() {
        return Err(OracleError::InvalidGrid("no samples".into()));
    }
    let (argmin, min_ratio) = out
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.ratio))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let mut sorted: Vec<f64> = out.iter().map(|s| s.ratio).collect();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median_ratio = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    Ok(IncidenceReport {
        constant: c.to_string(),
        samples: out,
        min_ratio,
        median_ratio,
        argmin,
    })
}

/// Grid obtained from a stage configuration by treating a line through a
/// minimum-degree point as the line at infinity: every other point on that
/// line contributes a "parallel" family of its remaining lines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PencilGrid {
    pub stage: u32,
    /// Index of the minimum-degree point `p`.
    pub point: usize,
    /// Index of the line through `p` sent to infinity.
    pub line: usize,
    /// Families used, one per other point on the line.
    pub families: usize,
    /// Lines kept per family: `delta_k - 1`.
    pub lines_per_family: usize,
    /// Distinct meets of the reference family with the other families.
    pub grid_points: usize,
    /// Distinct lines joining `p` to those meets.
    pub joining_lines: usize,
    /// `grid_points / (k^2 sqrt(N))`, approximate.
    pub ratio: f64,
}

impl fmt::Display for PencilGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stage {}: N = {}, k = {}, |P0| = {}, t = {}, ratio {:.6}",
            self.stage,
            self.families,
            self.lines_per_family,
            self.grid_points,
            self.joining_lines,
            self.ratio
        )
    }
}

/// Builds the pencil grid of a configuration, or `None` when the richest
/// line through the chosen point carries fewer than 4 other points.
pub fn pencil_grid(c: &Configuration) -> Option<PencilGrid> {
    let stats = crate::engine::degrees(c);
    let delta = stats.min_point_degree;
    let p = (0..c.n_points()).find(|&i| c.point_degree(i) == delta)?;
    let line =
        *c.lines_through(p)
            .iter()
            .max_by_key(|&&l| (c.line_degree(l as usize), std::cmp::Reverse(l)))? as usize;
    let others: Vec<usize> = c
        .points_on(line)
        .iter()
        .map(|&q| q as usize)
        .filter(|&q| q != p)
        .collect();
    if others.len() < 4 || delta < 3 {
        return None;
    }
    let keep = delta - 1;
    let families: Vec<Vec<&Line>> = others
        .iter()
        .map(|&q| {
            c.lines_through(q)
                .iter()
                .filter(|&&l| l as usize != line)
                .take(keep)
                .map(|&l| &c.lines()[l as usize])
                .collect()
        })
        .collect();
    let mut p0 = HashSet::new();
    for fam in &families[1..] {
        for l in fam {
            for r in &families[0] {
                p0.insert(meet(r, l).expect("lines through distinct points of the line differ"));
            }
        }
    }
    let origin = &c.points()[p];
    let joins: HashSet<Line> = p0
        .iter()
        .map(|q| line_through(origin, q).expect("grid points lie off the chosen line"))
        .collect();
    let n = others.len();
    Some(PencilGrid {
        stage: c.stage(),
        point: p,
        line,
        families: n,
        lines_per_family: keep,
        grid_points: p0.len(),
        joining_lines: joins.len(),
        ratio: p0.len() as f64 / ((keep * keep) as f64 * (n as f64).sqrt()),
    })
}

/// `1/13`.
pub fn default_incidence_constant() -> BigRational {
    BigRational::new(BigInt::one(), 13.into())
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
