//! Exact-arithmetic engine for the iterated point-line closure.
//!
//! - [`projective`]: canonical homogeneous triples, joins, meets, duality.
//! - [`engine`]: stage execution (incremental, parallel) and a naive reference.
//! - [`oracles`]: brute-force grid-cover, sumset and family-intersection counts.
//! - [`bounds`]: exact checks of the growth and degree inequalities on computed stages.

pub mod bounds;
pub mod engine;
pub mod oracles;
pub mod projective;

pub use engine::{
    degrees, init, naive_stage, Budget, BudgetResource, Configuration, DegreeStats, Engine,
    EngineError, ParallelPolicy, StageStats, StepReport,
};
pub use projective::{
    incident, line_through, meet, normalize, GeometryError, HomogeneousTriple, Line, LineTag,
    Point, PointTag, StartConfig, StartViolation,
};
