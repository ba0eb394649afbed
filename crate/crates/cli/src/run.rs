//! Iterate, resume and verify drivers.
//!
//! Every completed stage is checkpointed immediately, so an interrupted run
//! (budget, theorem failure, or a kill) can always be resumed from the last
//! snapshot on disk.

use std::fs;
use std::path::{Path, PathBuf};

use plc_core::bounds::{
    check_single_stage, check_stage_bounds, measure_degree_lemma, BoundsError, BoundsReport,
};
use plc_core::projective::validate_start;
use plc_core::{Configuration, Engine, EngineError, ParallelPolicy, StageStats, StartConfig};
use thiserror::Error;

use crate::config::RunConfig;
use crate::snapshot::{snapshot_file_name, Snapshot, SnapshotError};
use crate::stats::stats_csv;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_THEOREM: u8 = 4;
pub const EXIT_IO: u8 = 5;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("stopped after stage {stage}: {source}")]
    Budget { stage: u32, source: EngineError },
    #[error("bound check failed: {0}")]
    Theorem(#[from] BoundsError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => EXIT_INVALID,
            Self::Budget { .. } => EXIT_BUDGET,
            Self::Theorem(_) => EXIT_THEOREM,
            Self::Snapshot(_) | Self::Io { .. } => EXIT_IO,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Artifacts of a finished or interrupted run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub last_stage: u32,
    pub stats: Vec<StageStats>,
    pub stats_path: PathBuf,
    /// `None` when the bounds were not checked to the end.
    pub bounds_path: Option<PathBuf>,
    /// Why bound checking stopped early for a start outside general position.
    pub bounds_note: Option<String>,
    pub snapshots: Vec<PathBuf>,
}

struct Driver<'a> {
    engine: Engine,
    start: StartConfig,
    out: &'a Path,
    stats_path: PathBuf,
    bounds_path: PathBuf,
    snapshots: Vec<PathBuf>,
    stats: Vec<StageStats>,
    /// Bound failures are fatal only when the start has no parallel joins;
    /// otherwise the guarantees do not apply and checking just stops.
    enforce_bounds: bool,
    bounds_note: Option<String>,
}

impl Driver<'_> {
    fn checkpoint(&mut self, c: &Configuration) -> Result<(), RunError> {
        let path = self.out.join(snapshot_file_name(c.stage()));
        Snapshot::from_configuration(c, self.engine.policy(), &self.start).write(&path)?;
        self.snapshots.push(path);
        Ok(())
    }

    fn write_artifacts(&self, report: Option<BoundsReport>) -> Result<(), RunError> {
        fs::write(&self.stats_path, stats_csv(&self.stats)).map_err(io_err(&self.stats_path))?;
        if let Some(report) = report {
            let report = report.finish()?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            fs::write(&self.bounds_path, json + "\n").map_err(io_err(&self.bounds_path))?;
        }
        Ok(())
    }

    fn bounds_failed(&mut self, e: BoundsError) -> Result<(), RunError> {
        if self.enforce_bounds {
            self.write_artifacts(None)?;
            return Err(e.into());
        }
        eprintln!("warning: start is not in general position, bounds not enforced: {e}");
        self.bounds_note = Some(e.to_string());
        Ok(())
    }

    /// Advances `c` to `max_stage`, checking bounds after every stage.
    fn drive(mut self, mut c: Configuration, max_stage: u32) -> Result<RunSummary, RunError> {
        let first = self
            .stats
            .last()
            .cloned()
            .expect("seeded with the first stage");
        let mut report = match BoundsReport::new(&c, &first) {
            Ok(r) => Some(r),
            Err(e) => {
                self.bounds_failed(e)?;
                None
            }
        };
        while c.stage() < max_stage {
            let (next, s) = match self.engine.run_stage(&c) {
                Ok(v) => v,
                Err(e @ EngineError::BudgetExceeded { .. }) => {
                    self.write_artifacts(report)?;
                    return Err(RunError::Budget {
                        stage: c.stage(),
                        source: e,
                    });
                }
                Err(e) => {
                    self.write_artifacts(report)?;
                    return Err(RunError::Invalid(e.to_string()));
                }
            };
            self.checkpoint(&next)?;
            self.stats.push(s.clone());
            if let Some(r) = report.as_mut() {
                if let Err(e) = r.push(&c, &next, &s) {
                    report = None;
                    self.bounds_failed(e)?;
                }
            }
            c = next;
        }
        let checked = report.is_some();
        self.write_artifacts(report)?;
        Ok(RunSummary {
            last_stage: c.stage(),
            stats: self.stats,
            stats_path: self.stats_path,
            bounds_path: checked.then_some(self.bounds_path),
            bounds_note: self.bounds_note,
            snapshots: self.snapshots,
        })
    }
}

/// Runs from the start configuration, writing `stage-KKK.plc` for every
/// stage plus `stats.csv` and `bounds.json` into the output directory.
pub fn iterate(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let engine = Engine::new(cfg.policy, cfg.budget, cfg.workers);
    let c = engine
        .init(&cfg.start)
        .map_err(|e| RunError::Invalid(e.to_string()))?;
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    let mut d = Driver {
        engine,
        start: cfg.start.clone(),
        out: &cfg.out_dir,
        stats_path: cfg.out_dir.join("stats.csv"),
        bounds_path: cfg.out_dir.join("bounds.json"),
        snapshots: Vec::new(),
        stats: vec![StageStats::of(&c)],
        enforce_bounds: validate_start(&cfg.start).is_empty(),
        bounds_note: None,
    };
    d.checkpoint(&c)?;
    d.drive(c, cfg.max_stage)
}

/// Overrides honoured when resuming; everything else comes from the snapshot.
#[derive(Debug, Clone)]
pub struct ResumeOptions {
    pub max_stage: u32,
    pub budget: plc_core::Budget,
    pub workers: usize,
    pub policy: Option<ParallelPolicy>,
    /// Defaults to the snapshot's directory.
    pub out_dir: Option<PathBuf>,
}

/// Continues from a snapshot. Later snapshots use the same names as an
/// uninterrupted run; this segment's stats and bounds go to
/// `stats-resume-KKK.csv` and `bounds-resume-KKK.json`.
pub fn resume(snapshot: &Path, opts: &ResumeOptions) -> Result<RunSummary, RunError> {
    let snap = Snapshot::read(snapshot)?;
    let c = snap.to_configuration()?;
    let out = match &opts.out_dir {
        Some(d) => d.clone(),
        None => snapshot
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let k = c.stage();
    let d = Driver {
        engine: Engine::new(
            opts.policy.unwrap_or(snap.policy),
            opts.budget,
            opts.workers,
        ),
        enforce_bounds: validate_start(&snap.start).is_empty(),
        bounds_note: None,
        start: snap.start,
        out: &out,
        stats_path: out.join(format!("stats-resume-{k:03}.csv")),
        bounds_path: out.join(format!("bounds-resume-{k:03}.json")),
        snapshots: Vec::new(),
        stats: vec![StageStats::of(&c)],
    };
    d.drive(c, opts.max_stage)
}

/// Result of checking one snapshot file.
#[derive(Debug, Clone)]
pub struct VerifiedStage {
    pub path: PathBuf,
    pub stats: StageStats,
}

/// Loads every snapshot (checksum, version, canonical records, rebuilt
/// incidence), checks single-stage bounds, and checks the stage-to-stage
/// bounds for every consecutive pair among them.
pub fn verify(paths: &[PathBuf]) -> Result<Vec<VerifiedStage>, RunError> {
    let mut loaded = Vec::with_capacity(paths.len());
    for p in paths {
        let c = Snapshot::read(p)?.to_configuration()?;
        c.verify_against_scan().map_err(SnapshotError::Integrity)?;
        let stats = StageStats::of(&c);
        check_single_stage(&stats)?;
        loaded.push((p.clone(), c, stats));
    }
    loaded.sort_by_key(|(_, c, _)| c.stage());
    for w in loaded.windows(2) {
        let (_, pc, ps) = &w[0];
        let (_, cc, cs) = &w[1];
        if ps.k + 1 == cs.k {
            check_stage_bounds(ps, cs)?;
            measure_degree_lemma(pc, cc)?;
        }
    }
    Ok(loaded
        .into_iter()
        .map(|(path, _, stats)| VerifiedStage { path, stats })
        .collect())
}
