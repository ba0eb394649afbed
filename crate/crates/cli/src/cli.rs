//! Command-line front end. Values go to stdout, human summaries to stderr.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use plc_core::oracles::{
    default_incidence_constant, grid_cover_min, grid_cover_via_sumset, incidence_sample,
    satisfies_incidence_bound, sumset_size, FamilyRange, GridSpec, SumsetInstance,
};
use plc_core::ParallelPolicy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_rational, parse_rational_list, parse_start, RunConfig};
use crate::render::{render_svg, Viewport};
use crate::run::{self, ResumeOptions, RunError, EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_THEOREM};
use crate::snapshot::Snapshot;

#[derive(Debug, Parser)]
#[command(
    name = "plc",
    version,
    about = "Exact iterated point-line closure in the rational plane"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run stages from a start configuration.
    Iterate(IterateArgs),
    /// Continue a run from a snapshot file.
    Resume(ResumeArgs),
    /// Brute-force combinatorial oracles.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Draw a snapshot as SVG.
    Render(RenderArgs),
    /// Re-check snapshot integrity and stage bounds.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Last stage to compute.
    #[arg(long)]
    pub max_stage: Option<u32>,
    #[arg(long, value_parser = parse_policy)]
    pub policy: Option<ParallelPolicy>,
    #[arg(long, env = "PLC_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long)]
    pub max_points: Option<usize>,
    #[arg(long)]
    pub max_lines: Option<usize>,
    #[arg(long)]
    pub max_bits: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    /// Key-value config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Four start points, e.g. "0,0; 1,0; 0,1; 5,7".
    #[arg(long)]
    pub start: Option<String>,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    pub snapshot: PathBuf,
    /// Key-value config file supplying budgets, workers and max stage;
    /// the policy stays the snapshot's unless --policy is given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Output directory (default: the snapshot's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Arithmetic,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RangeArg {
    AllOthers,
    UpToLineCount,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Fewest extra lines covering an n x n grid without its two directions.
    GridCover {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Spacing::Arithmetic)]
        spacing: Spacing,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Size of the sumset A + B.
    Sumset {
        /// Comma-separated rationals.
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Points where one family meets the others, against c k^2 sqrt(N).
    Incidence {
        #[arg(long)]
        families: usize,
        #[arg(long)]
        lines: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        /// Constant as num/den (default 1/13).
        #[arg(long)]
        constant: Option<String>,
        #[arg(long, value_enum, default_value_t = RangeArg::AllOthers)]
        range: RangeArg,
    },
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub snapshot: PathBuf,
    /// xmin,xmax,ymin,ymax as rationals (default: fit the finite points).
    #[arg(long, allow_hyphen_values = true)]
    pub viewport: Option<String>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(required = true)]
    pub snapshots: Vec<PathBuf>,
}

fn parse_policy(s: &str) -> Result<ParallelPolicy, String> {
    s.parse()
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Iterate(a) => cmd_iterate(a),
        Command::Resume(a) => cmd_resume(a),
        Command::Oracle(o) => cmd_oracle(o),
        Command::Render(a) => cmd_render(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

struct Failure(u8, String);

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure(e.exit_code(), e.to_string())
    }
}

fn invalid(msg: impl ToString) -> Failure {
    Failure(EXIT_INVALID, msg.to_string())
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, Failure> {
    let cfg = RunConfig::default();
    match path {
        None => Ok(cfg),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure(EXIT_IO, format!("{}: {e}", p.display())))?;
            cfg.apply_file(&text)
                .map_err(|e| invalid(format!("{}: {e}", p.display())))
        }
    }
}

fn apply_engine_args(cfg: &mut RunConfig, a: &EngineArgs) -> Result<(), Failure> {
    fn positive<T: PartialOrd + Default + Copy>(
        name: &str,
        v: Option<T>,
        slot: &mut T,
    ) -> Result<(), Failure> {
        if let Some(v) = v {
            if v <= T::default() {
                return Err(invalid(format!("--{name} must be positive")));
            }
            *slot = v;
        }
        Ok(())
    }
    positive("max-stage", a.max_stage, &mut cfg.max_stage)?;
    positive("workers", a.workers, &mut cfg.workers)?;
    positive("max-points", a.max_points, &mut cfg.budget.max_points)?;
    positive("max-lines", a.max_lines, &mut cfg.budget.max_lines)?;
    positive("max-bits", a.max_bits, &mut cfg.budget.max_bits)?;
    if let Some(p) = a.policy {
        cfg.policy = p;
    }
    Ok(())
}

fn report_run(s: &run::RunSummary) {
    for st in &s.stats {
        eprintln!(
            "stage {:>2}: n = {:>9}, m = {:>9}, delta = {:>6}, bits = {:>5}",
            st.k,
            st.n(),
            st.m(),
            st.delta(),
            st.max_coord_bits
        );
    }
    eprintln!("stats: {}", s.stats_path.display());
    match (&s.bounds_path, &s.bounds_note) {
        (Some(p), _) => eprintln!("bounds: {}", p.display()),
        (None, Some(note)) => eprintln!("bounds: not checked ({note})"),
        (None, None) => {}
    }
    println!("{}", s.last_stage);
}

fn cmd_iterate(a: IterateArgs) -> Result<(), Failure> {
    let mut cfg = load_config(a.config.as_ref())?;
    if let Some(s) = &a.start {
        cfg.start = parse_start(s).map_err(invalid)?;
    }
    apply_engine_args(&mut cfg, &a.engine)?;
    if let Some(out) = a.out {
        cfg.out_dir = out;
    }
    let s = run::iterate(&cfg)?;
    report_run(&s);
    Ok(())
}

fn cmd_resume(a: ResumeArgs) -> Result<(), Failure> {
    let mut cfg = load_config(a.config.as_ref())?;
    apply_engine_args(&mut cfg, &a.engine)?;
    let opts = ResumeOptions {
        max_stage: cfg.max_stage,
        budget: cfg.budget,
        workers: cfg.workers,
        policy: a.engine.policy,
        out_dir: a.out,
    };
    let s = run::resume(&a.snapshot, &opts)?;
    report_run(&s);
    Ok(())
}

fn cmd_oracle(o: OracleCommand) -> Result<(), Failure> {
    match o {
        OracleCommand::GridCover { n, spacing, seed } => {
            if !(2..=6).contains(&n) {
                return Err(invalid("--n must be between 2 and 6"));
            }
            let g = match spacing {
                Spacing::Arithmetic => GridSpec::arithmetic(n).map_err(invalid)?,
                Spacing::Random => {
                    GridSpec::random_offsets(&mut ChaCha8Rng::seed_from_u64(seed), n)
                }
            };
            let best = grid_cover_min(&g).map_err(invalid)?;
            let via = grid_cover_via_sumset(&g).map_err(invalid)?;
            eprintln!(
                "{n} x {n} grid: minimum cover {best}, sumset route {via}, lower bound {}",
                2 * n - 1
            );
            println!("{best}");
        }
        OracleCommand::Sumset { a, b } => {
            let a = parse_rational_list(&a).map_err(invalid)?;
            let b = parse_rational_list(&b).map_err(invalid)?;
            let (na, nb) = (a.len(), b.len());
            let inst = SumsetInstance::new(a, b).map_err(invalid)?;
            let size = sumset_size(&inst);
            eprintln!(
                "|A| = {na}, |B| = {nb}, |A+B| = {size}, lower bound {}",
                na + nb - 1
            );
            println!("{size}");
        }
        OracleCommand::Incidence {
            families,
            lines,
            seed,
            samples,
            constant,
            range,
        } => {
            if families < 2 || lines < 2 || samples == 0 {
                return Err(invalid(
                    "need --families >= 2, --lines >= 2, --samples >= 1",
                ));
            }
            let c: BigRational = match constant {
                Some(s) => parse_rational(&s).map_err(invalid)?,
                None => default_incidence_constant(),
            };
            let range = match range {
                RangeArg::AllOthers => FamilyRange::AllOthers,
                RangeArg::UpToLineCount => FamilyRange::UpToLineCount,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: Option<plc_core::oracles::IncidenceSample> = None;
            let mut violations = 0usize;
            for _ in 0..samples {
                let g = GridSpec::random(&mut rng, families, lines);
                let s = incidence_sample(&g, range).map_err(invalid)?;
                if !satisfies_incidence_bound(s.points, s.families, s.lines, &c) {
                    violations += 1;
                }
                if worst.as_ref().is_none_or(|w| s.ratio < w.ratio) {
                    worst = Some(s);
                }
            }
            let w = worst.expect("at least one sample");
            eprintln!(
                "N = {families}, k = {lines}, {samples} sample(s): min |P| = {}, min ratio {:.6} vs c = {c}, {violations} below",
                w.points, w.ratio
            );
            println!("{} {:.12}", w.points, w.ratio);
            if violations > 0 && range == FamilyRange::AllOthers {
                return Err(Failure(
                    EXIT_THEOREM,
                    format!("{violations} sample(s) below c = {c}"),
                ));
            }
        }
    }
    Ok(())
}

fn cmd_render(a: RenderArgs) -> Result<(), Failure> {
    let c = Snapshot::read(&a.snapshot)
        .and_then(|s| s.to_configuration())
        .map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    let vp = match &a.viewport {
        Some(v) => Viewport::parse(v).map_err(invalid)?,
        None => Viewport::fit(&c),
    };
    let (svg, sum) = render_svg(&c, &vp);
    match &a.out {
        Some(p) => {
            fs::write(p, &svg).map_err(|e| Failure(EXIT_IO, format!("{}: {e}", p.display())))?
        }
        None => print!("{svg}"),
    }
    eprintln!(
        "stage {}: {} circles, {} segments, {} points at infinity",
        c.stage(),
        sum.circles,
        sum.segments,
        sum.at_infinity
    );
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let ok = run::verify(&a.snapshots)?;
    for v in &ok {
        eprintln!(
            "ok {} (stage {}, n = {}, m = {})",
            v.path.display(),
            v.stats.k,
            v.stats.n(),
            v.stats.m()
        );
    }
    println!("{}", ok.len());
    Ok(())
}
