//! Exact projective-plane primitives over the integers.
//!
//! Every point and line is a [`HomogeneousTriple`] in canonical form: the
//! components are coprime and the first nonzero one is positive. Two triples
//! are projectively equal exactly when their canonical forms are equal, so
//! `Eq` and `Hash` on the canonical triple are the deduplication keys used
//! throughout the engine.
//!
//! A point `(x:y:z)` with `z != 0` is the affine point `(x/z, y/z)`; `z == 0`
//! is a point at infinity. A line `(a:b:c)` is the set `a*x + b*y + c*z = 0`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::marker::PhantomData;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("all three homogeneous components are zero")]
    ZeroTriple,
    #[error("cannot join a point with itself: {0}")]
    IdenticalPoints(HomogeneousTriple),
    #[error("cannot meet a line with itself: {0}")]
    IdenticalLines(HomogeneousTriple),
}

/// Canonical integer representative of a projective class.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HomogeneousTriple {
    a: BigInt,
    b: BigInt,
    c: BigInt,
}

impl HomogeneousTriple {
    /// Reduces `(a, b, c)` by the gcd of the absolute values and flips the
    /// sign so that the first nonzero component is positive.
    pub fn normalize(a: BigInt, b: BigInt, c: BigInt) -> Result<Self, GeometryError> {
        let g = a.gcd(&b).gcd(&c);
        if g.is_zero() {
            return Err(GeometryError::ZeroTriple);
        }
        let leading = if !a.is_zero() {
            a.sign()
        } else if !b.is_zero() {
            b.sign()
        } else {
            c.sign()
        };
        let g = if leading == Sign::Minus { -g } else { g };
        if g.is_one() {
            return Ok(Self { a, b, c });
        }
        Ok(Self {
            a: a / &g,
            b: b / &g,
            c: c / &g,
        })
    }

    pub fn from_i64(a: i64, b: i64, c: i64) -> Result<Self, GeometryError> {
        Self::normalize(a.into(), b.into(), c.into())
    }

    /// Checks the canonical-form invariants without normalizing.
    pub fn is_canonical(a: &BigInt, b: &BigInt, c: &BigInt) -> bool {
        let g = a.gcd(b).gcd(c);
        if !g.is_one() {
            return false;
        }
        [a, b, c]
            .into_iter()
            .find(|v| !v.is_zero())
            .is_some_and(|v| v.is_positive())
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn c(&self) -> &BigInt {
        &self.c
    }

    pub fn components(&self) -> [&BigInt; 3] {
        [&self.a, &self.b, &self.c]
    }

    pub fn dot(&self, other: &Self) -> BigInt {
        &self.a * &other.a + &self.b * &other.b + &self.c * &other.c
    }

    /// Canonical cross product; `None` when the operands are projectively equal.
    pub fn cross(&self, other: &Self) -> Option<Self> {
        let a = &self.b * &other.c - &self.c * &other.b;
        let b = &self.c * &other.a - &self.a * &other.c;
        let c = &self.a * &other.b - &self.b * &other.a;
        Self::normalize(a, b, c).ok()
    }

    /// Bit length of the widest component.
    pub fn max_bits(&self) -> u64 {
        self.components()
            .iter()
            .map(|v| v.bits())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Debug for HomogeneousTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{}:{})", self.a, self.b, self.c)
    }
}

impl fmt::Display for HomogeneousTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

mod sealed {
    pub trait Sealed {}
}

/// Role marker: a triple is either a point or a line, never both.
pub trait Role: sealed::Sealed + Send + Sync + 'static {
    type Dual: Role<Dual = Self>;
    const NAME: &'static str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointTag {}
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LineTag {}

impl sealed::Sealed for PointTag {}
impl sealed::Sealed for LineTag {}

impl Role for PointTag {
    type Dual = LineTag;
    const NAME: &'static str = "point";
}

impl Role for LineTag {
    type Dual = PointTag;
    const NAME: &'static str = "line";
}

/// A canonical triple carrying its point/line role in the type.
pub struct Tagged<R: Role> {
    triple: HomogeneousTriple,
    _role: PhantomData<fn() -> R>,
}

pub type Point = Tagged<PointTag>;
pub type Line = Tagged<LineTag>;

impl<R: Role> Tagged<R> {
    pub fn new(triple: HomogeneousTriple) -> Self {
        Self {
            triple,
            _role: PhantomData,
        }
    }

    pub fn from_i64(a: i64, b: i64, c: i64) -> Result<Self, GeometryError> {
        HomogeneousTriple::from_i64(a, b, c).map(Self::new)
    }

    pub fn from_raw(a: BigInt, b: BigInt, c: BigInt) -> Result<Self, GeometryError> {
        HomogeneousTriple::normalize(a, b, c).map(Self::new)
    }

    pub fn triple(&self) -> &HomogeneousTriple {
        &self.triple
    }

    pub fn into_triple(self) -> HomogeneousTriple {
        self.triple
    }

    /// Same coordinates, opposite role.
    pub fn dual(&self) -> Tagged<R::Dual> {
        Tagged::new(self.triple.clone())
    }

    pub fn into_dual(self) -> Tagged<R::Dual> {
        Tagged::new(self.triple)
    }

    pub fn max_bits(&self) -> u64 {
        self.triple.max_bits()
    }
}

impl Point {
    pub fn from_affine(x: &BigRational, y: &BigRational) -> Self {
        let a = x.numer() * y.denom();
        let b = y.numer() * x.denom();
        let c = x.denom() * y.denom();
        Self::from_raw(a, b, c).expect("affine point has nonzero z")
    }

    pub fn is_at_infinity(&self) -> bool {
        self.triple.c.is_zero()
    }

    /// Affine coordinates, or `None` for a point at infinity.
    pub fn to_affine(&self) -> Option<(BigRational, BigRational)> {
        if self.is_at_infinity() {
            return None;
        }
        let z = &self.triple.c;
        Some((
            BigRational::new(self.triple.a.clone(), z.clone()),
            BigRational::new(self.triple.b.clone(), z.clone()),
        ))
    }
}

impl Line {
    pub fn at_infinity() -> Self {
        Self::from_i64(0, 0, 1).expect("nonzero")
    }

    /// The `(a, b)` part, canonicalized; identifies the parallel class.
    pub fn direction(&self) -> Option<(BigInt, BigInt)> {
        let t = HomogeneousTriple::normalize(
            self.triple.a.clone(),
            self.triple.b.clone(),
            BigInt::zero(),
        )
        .ok()?;
        Some((t.a, t.b))
    }

    /// Evaluates `a*x + b*y` at an affine point.
    pub fn linear_form_at(&self, x: &BigRational, y: &BigRational) -> BigRational {
        x * BigRational::from_integer(self.triple.a.clone())
            + y * BigRational::from_integer(self.triple.b.clone())
    }
}

impl<R: Role> Clone for Tagged<R> {
    fn clone(&self) -> Self {
        Self::new(self.triple.clone())
    }
}

impl<R: Role> PartialEq for Tagged<R> {
    fn eq(&self, other: &Self) -> bool {
        self.triple == other.triple
    }
}

impl<R: Role> Eq for Tagged<R> {}

impl<R: Role> Hash for Tagged<R> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.triple.hash(state)
    }
}

impl<R: Role> PartialOrd for Tagged<R> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<R: Role> Ord for Tagged<R> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.triple.cmp(&other.triple)
    }
}

impl<R: Role> fmt::Debug for Tagged<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", R::NAME, self.triple)
    }
}

impl<R: Role> fmt::Display for Tagged<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", R::NAME, self.triple)
    }
}

pub fn normalize(a: BigInt, b: BigInt, c: BigInt) -> Result<HomogeneousTriple, GeometryError> {
    HomogeneousTriple::normalize(a, b, c)
}

pub fn line_through(p: &Point, q: &Point) -> Result<Line, GeometryError> {
    p.triple
        .cross(&q.triple)
        .map(Line::new)
        .ok_or_else(|| GeometryError::IdenticalPoints(p.triple.clone()))
}

/// Intersection of two distinct lines; a point at infinity when they are parallel.
pub fn meet(l1: &Line, l2: &Line) -> Result<Point, GeometryError> {
    l1.triple
        .cross(&l2.triple)
        .map(Point::new)
        .ok_or_else(|| GeometryError::IdenticalLines(l1.triple.clone()))
}

pub fn incident(p: &Point, l: &Line) -> bool {
    p.triple.dot(&l.triple).is_zero()
}

pub fn are_parallel(l1: &Line, l2: &Line) -> bool {
    l1.direction().is_some() && l1 != l2 && l1.direction() == l2.direction()
}

/// Four affine start points with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StartConfig {
    pub points: [(BigRational, BigRational); 4],
}

impl StartConfig {
    pub fn from_integers(coords: [(i64, i64); 4]) -> Self {
        let r = |v: i64| BigRational::from_integer(v.into());
        Self {
            points: coords.map(|(x, y)| (r(x), r(y))),
        }
    }

    /// (0,0), (1,0), (0,1), (5,7).
    pub fn canonical() -> Self {
        Self::from_integers([(0, 0), (1, 0), (0, 1), (5, 7)])
    }

    pub fn projective_points(&self) -> [Point; 4] {
        let [p0, p1, p2, p3] = &self.points;
        [p0, p1, p2, p3].map(|(x, y)| Point::from_affine(x, y))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StartViolation {
    Coincident(usize, usize),
    Collinear(usize, usize, usize),
    /// Line through `first` is parallel to the line through `second`.
    Parallel {
        first: (usize, usize),
        second: (usize, usize),
    },
}

impl StartViolation {
    pub fn is_parallel(&self) -> bool {
        matches!(self, StartViolation::Parallel { .. })
    }
}

impl fmt::Display for StartViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartViolation::Coincident(i, j) => write!(f, "points {i} and {j} coincide"),
            StartViolation::Collinear(i, j, k) => write!(f, "points {i}, {j}, {k} are collinear"),
            StartViolation::Parallel { first, second } => write!(
                f,
                "line {}{} is parallel to line {}{}",
                first.0, first.1, second.0, second.1
            ),
        }
    }
}

/// Lists every way the start fails general position. Empty means valid.
pub fn validate_start(cfg: &StartConfig) -> Vec<StartViolation> {
    let pts = cfg.projective_points();
    let mut violations = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            if pts[i] == pts[j] {
                violations.push(StartViolation::Coincident(i, j));
            }
        }
    }
    if !violations.is_empty() {
        return violations;
    }
    for i in 0..4 {
        for j in i + 1..4 {
            for k in j + 1..4 {
                let l = line_through(&pts[i], &pts[j]).expect("distinct");
                if incident(&pts[k], &l) {
                    violations.push(StartViolation::Collinear(i, j, k));
                }
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..4)
        .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
        .collect();
    let lines: Vec<Line> = pairs
        .iter()
        .map(|&(i, j)| line_through(&pts[i], &pts[j]).expect("distinct"))
        .collect();
    for x in 0..lines.len() {
        for y in x + 1..lines.len() {
            if let Ok(p) = meet(&lines[x], &lines[y]) {
                if p.is_at_infinity() {
                    violations.push(StartViolation::Parallel {
                        first: pairs[x],
                        second: pairs[y],
                    });
                }
            }
        }
    }
    violations
}
