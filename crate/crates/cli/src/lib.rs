//! Command-line driver: problem files in, result records out.
//!
//! Exit codes: 0 when a sweep completes (certified or not), 1 on parse or
//! usage errors, 2 when no order was solved to optimality.

pub mod problem;
pub mod report;
pub mod solve;

use std::io::Read;
use std::path::{Path as FsPath, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use lsipp_core::gen::{generate, GenSpec};
use lsipp_core::popt;
use lsipp_core::relax::{build_moment, build_moment_h, homogenize_problem};
use lsipp_core::sdp::sdpa::write_sdpa;
use lsipp_core::HierarchyOptions;

pub use problem::{parse_problem_file, Homogenize, Problem, ProblemFile};
pub use report::{Path, ResultRecord};
pub use solve::{solve_problem, SolveConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

/// Golden problems shipped with the binary, used by `selftest`.
pub const GOLDEN: [(&str, &str); 4] = [
    ("ex37", include_str!("../problems/ex37.json")),
    ("ex38", include_str!("../problems/ex38.json")),
    ("ex34", include_str!("../problems/ex34.json")),
    ("ex46", include_str!("../problems/ex46.json")),
];

#[derive(Parser, Debug)]
#[command(name = "lsipp", version, about = "Moment/SOS relaxations for linear semi-infinite polynomial programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the relaxation hierarchy on a problem file (`-` reads stdin).
    Solve(SolveArgs),
    /// Emit a random instance as a problem file.
    Gen(GenArgs),
    /// Write the moment relaxation of one order in sparse SDPA format.
    ExportSdpa(ExportArgs),
    /// Solve the bundled examples and check the known values.
    Selftest,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Knobs {
    /// Solver tolerance on gap and residuals.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Relative singular value threshold for numeric rank.
    #[arg(long = "rank-tol")]
    pub rank_tol: Option<f64>,
    /// Seed of the atom extraction.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the file's homogenize flag.
    #[arg(long, value_enum)]
    pub homogenize: Option<Homogenize>,
    /// Append the ball `M - ‖Y‖² >= 0` to the generators.
    #[arg(long)]
    pub ball: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub problem: String,
    #[arg(long)]
    pub kmin: Option<u32>,
    #[arg(long)]
    pub kmax: Option<u32>,
    #[command(flatten)]
    pub knobs: Knobs,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub t: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    pub problem: String,
    #[arg(long)]
    pub k: u32,
    #[command(flatten)]
    pub knobs: Knobs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failures mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("LSIPP_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

pub fn read_input(src: &str) -> anyhow::Result<String> {
    if src == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        std::fs::read_to_string(src).with_context(|| format!("reading {src}"))
    }
}

/// Parses a problem file and applies command-line overrides.
pub fn load_problem(text: &str, knobs: &Knobs) -> anyhow::Result<(Problem, Homogenize)> {
    let mut file = parse_problem_file(text)?;
    if knobs.ball.is_some() {
        file.flags.ball = knobs.ball;
    }
    let h = knobs.homogenize.unwrap_or(file.flags.homogenize);
    Ok((file.to_problem()?, h))
}

pub fn options(knobs: &Knobs) -> HierarchyOptions {
    let mut opts = HierarchyOptions::default();
    if let Some(t) = knobs.tol {
        opts.solver.tol = t;
        opts.solver.acceptable_tol = opts.solver.acceptable_tol.max(t);
    }
    if let Some(r) = knobs.rank_tol {
        opts.cert.rank_tol = r;
    }
    if let Some(s) = knobs.seed {
        opts.cert.seed = s;
    }
    opts
}

fn write_or_print(out: Option<&FsPath>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_knobs(k: &Knobs) -> anyhow::Result<()> {
    for (name, v) in [("--tol", k.tol), ("--rank-tol", k.rank_tol)] {
        if let Some(v) = v {
            anyhow::ensure!(v > 0.0 && v.is_finite(), "{name} must be positive, got {v}");
        }
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Failure> {
    check_knobs(&a.knobs)?;
    let (prob, homogenize) = load_problem(&read_input(&a.problem)?, &a.knobs)?;
    let cfg = SolveConfig {
        k_min: a.kmin,
        k_max: a.kmax,
        homogenize,
        opts: options(&a.knobs),
    };
    let rec = solve_problem(&prob, &cfg)?;
    let json = rec.to_json();
    if let Some(p) = &a.out {
        write_or_print(Some(p), &json)?;
        print!("{}", rec.table());
    } else {
        print!("{json}");
    }
    if let Some(p) = &a.csv {
        let f = std::fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
        rec.write_csv(f)?;
    }
    if rec.rows.iter().any(|r| r.optimal()) {
        Ok(())
    } else {
        Err(Failure::Solver(anyhow::anyhow!("no order was solved to optimality")))
    }
}

fn cmd_gen(a: &GenArgs) -> Result<(), Failure> {
    let spec = GenSpec::new(a.m, a.n, a.t, a.seed).map_err(anyhow::Error::from)?;
    let inst = generate(&spec).map_err(anyhow::Error::from)?;
    let file = ProblemFile::from_lsipp(&inst.problem);
    let json = serde_json::to_string_pretty(&file).map_err(anyhow::Error::from)? + "\n";
    write_or_print(a.out.as_deref(), &json)?;
    Ok(())
}

fn cmd_export(a: &ExportArgs) -> Result<(), Failure> {
    check_knobs(&a.knobs)?;
    let (prob, homogenize) = load_problem(&read_input(&a.problem)?, &a.knobs)?;
    let path = solve::choose_path(&prob, homogenize);
    let rel = match (&prob, path) {
        (Problem::Lsipp(p), Path::Compact) => build_moment(p, a.k),
        (Problem::Lsipp(p), Path::Homogenized) => homogenize_problem(p).and_then(|h| build_moment_h(&h, a.k)),
        (Problem::Popt(p), Path::Compact) => popt::build_compact(p, a.k),
        (Problem::Popt(p), Path::Homogenized) => popt::build_noncompact(p, a.k),
    }
    .map_err(anyhow::Error::from)?;
    write_or_print(a.out.as_deref(), &write_sdpa(&rel.sdp))?;
    Ok(())
}

/// Result of one `selftest` check.
#[derive(Debug, Clone)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn selftest() -> Vec<SelfCheck> {
    // (name, expected certified value, tolerance)
    let expected = [("ex37", -1.7869, 1e-3), ("ex38", 1.2019, 1e-3), ("ex34", -0.75, 1e-3), ("ex46", 3.618034, 1e-4)];
    GOLDEN
        .iter()
        .zip(expected)
        .map(|(&(name, text), (_, want, tol))| {
            let run = || -> anyhow::Result<ResultRecord> {
                let (prob, h) = load_problem(text, &Knobs::default())?;
                solve_problem(
                    &prob,
                    &SolveConfig {
                        homogenize: h,
                        ..Default::default()
                    },
                )
            };
            match run() {
                Ok(rec) => {
                    let got = rec.summary.best_value;
                    let passed = rec.summary.certified && got.is_some_and(|v| (v - want).abs() <= tol);
                    SelfCheck {
                        name,
                        passed,
                        detail: format!("value {got:?} at k={:?}, certified={}", rec.summary.best_k, rec.summary.certified),
                    }
                }
                Err(e) => SelfCheck {
                    name,
                    passed: false,
                    detail: e.to_string(),
                },
            }
        })
        .collect()
}

fn cmd_selftest() -> Result<(), Failure> {
    let checks = selftest();
    for c in &checks {
        println!("{}: {} ({})", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Solver(anyhow::anyhow!("selftest failed")))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let res = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Gen(a) => cmd_gen(a),
        Command::ExportSdpa(a) => cmd_export(a),
        Command::Selftest => cmd_selftest(),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e:#}");
            EXIT_SOLVER
        }
    }
}
