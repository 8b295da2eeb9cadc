mod commands;
mod config;

use clap::{Args, CommandFactory, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Analysis and execution of vector subdivision schemes with dilation m·I.
#[derive(Parser, Debug)]
#[command(name = "vecsub", version)]
pub struct Cli {
    /// key=value file supplying defaults for any flag.
    #[arg(long, global = true, env = "VECSUB_CONFIG")]
    pub config: Option<PathBuf>,
    /// Cap on lattice points per component.
    #[arg(long, global = true, env = "VECSUB_SUPPORT_CAP")]
    pub support_cap: Option<usize>,
    /// Exit with status 5 when a verdict is inconclusive.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Sum rules, matching jet, eigenvalues, symmetry, smoothness and C^m verdicts.
    Analyze(AnalyzeArgs),
    /// Smoothness estimates sm_p as CSV.
    Smooth(SmoothArgs),
    /// Run the scheme m^{|μ|n}[S^n v]∗u and write the grid as CSV.
    Run(RunArgs),
    /// Errors of the scheme against a spline oracle and the fitted decay exponent.
    Rate(RateArgs),
    /// Build a mask and write it in the filter format.
    Construct(ConstructArgs),
    /// Test a symmetry group about the given centres.
    CheckSymmetry(SymmetryArgs),
    /// Conjugate a mask by a strongly invertible filter.
    Transform(TransformArgs),
    /// Sample a B-spline (or balanced B-spline components) on a level-n grid.
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Clone)]
pub struct FilterArg {
    /// Filter file, or `fixture:NAME` (ex1 ex2 a4 a6 au2 au3 hat haar).
    pub filter: String,
    /// Dilation factor m; defaults to the file's `dilation` meta or 2.
    #[arg(long)]
    pub dilation: Option<i64>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: FilterArg,
    /// Smoothness target m of the C^m verdict; repeatable.
    #[arg(long = "target-m", action = clap::ArgAction::Append)]
    pub target_m: Vec<u32>,
    /// Hermite type ν^1;ν^2;… (e.g. `0;1`); adds the Λ-matching and GHSD checks.
    #[arg(long)]
    pub hermite: Option<String>,
    /// Symmetry group (D4, D6, H); defaults to the file's `symmetry` meta.
    #[arg(long)]
    pub group: Option<String>,
    /// Centres `x,y;x,y` one per component; defaults to the file's `centres` meta.
    #[arg(long)]
    pub centres: Option<String>,
    /// Subdivision levels for the smoothness estimate.
    #[arg(long, env = "VECSUB_N_MAX")]
    pub n_max: Option<u32>,
    /// Also write the report to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Include wall-clock timings (the report is then not reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub input: FilterArg,
    /// Norms to estimate, comma separated from 1, 2, inf.
    #[arg(long, default_value = "inf,2")]
    pub p: String,
    #[arg(long, env = "VECSUB_N_MAX")]
    pub n_max: Option<u32>,
    /// Raise n until stabilization, up to this level.
    #[arg(long)]
    pub n_cap: Option<u32>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: FilterArg,
    /// Initial 1×r data: `eL` for δe_Lᵀ or a filter file.
    #[arg(long, default_value = "e1")]
    pub data: String,
    /// Analysis filter u (r×1): `eL`, `genK` (K-th generator of mom_{υ,μ}) or a filter file.
    #[arg(long, default_value = "e1")]
    pub u: String,
    /// Derivative multi-index, comma separated; zero by default.
    #[arg(long)]
    pub mu: Option<String>,
    /// Number of subdivision steps.
    #[arg(long, default_value_t = 5)]
    pub n: u32,
    /// Print exact rational values instead of floats.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args, Debug)]
pub struct RateArgs {
    #[command(flatten)]
    pub input: FilterArg,
    #[arg(long, default_value = "e1")]
    pub data: String,
    #[arg(long, default_value = "e1")]
    pub u: String,
    #[arg(long)]
    pub mu: Option<String>,
    /// `bspline:K` (tensor B-spline of order K) or `balanced:K:quincunx|sqrt3`.
    #[arg(long)]
    pub oracle: String,
    #[arg(long, default_value_t = 3)]
    pub n0: u32,
    #[arg(long, default_value_t = 7)]
    pub n1: u32,
    /// Known sm_∞ for the theory column; estimated when absent.
    #[arg(long)]
    pub sm_inf: Option<f64>,
    #[arg(long, env = "VECSUB_N_MAX")]
    pub n_max: Option<u32>,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[command(subcommand)]
    pub kind: ConstructKind,
}

#[derive(Subcommand, Debug)]
pub enum ConstructKind {
    /// B-spline mask of order K on Z^d.
    Bspline {
        order: u32,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Three-direction box-spline mask u_M.
    ThreeDirection { m: u32 },
    /// Balanced vector mask from a scalar mask and a lattice matrix.
    Balanced {
        filter: String,
        /// quincunx or sqrt3
        #[arg(long, default_value = "quincunx")]
        lattice: String,
    },
    /// One of the built-in masks.
    Fixture { name: String },
}

#[derive(Args, Debug)]
pub struct SymmetryArgs {
    #[command(flatten)]
    pub input: FilterArg,
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub centres: Option<String>,
    /// Let each group element mix components by a searched matrix.
    #[arg(long)]
    pub search_mixing: bool,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    #[command(flatten)]
    pub input: FilterArg,
    /// r×r filter file U.
    #[arg(long, conflicts_with = "reduce")]
    pub u: Option<String>,
    /// Use the column reduction of the matching jet through this order.
    #[arg(long)]
    pub reduce: Option<u32>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// B-spline order K.
    #[arg(long)]
    pub order: u32,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub level: u32,
    #[arg(long)]
    pub mu: Option<String>,
    /// quincunx or sqrt3: sample the balanced components instead.
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub dilation: i64,
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::config_path(&raw) {
        Some(p) => match config::read_config(std::path::Path::new(&p)) {
            Ok(cfg) => config::merge(&Cli::command(), &raw, &cfg),
            Err(e) => return report_error(&e),
        },
        None => raw,
    };
    let cli = Cli::parse_from(args);
    if let Some(cap) = cli.support_cap {
        vecsub::config::set_support_cap(cap);
    }
    let mut out = std::io::stdout().lock();
    match commands::dispatch(&cli, &mut out) {
        Ok(status) => {
            if status.inconclusive && cli.strict {
                eprintln!("vecsub: inconclusive result with --strict");
                ExitCode::from(5)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &anyhow::Error) -> ExitCode {
    let piped = e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe));
    if piped {
        return ExitCode::SUCCESS;
    }
    // sources already quoted by their wrapper are skipped
    let mut parts: Vec<String> = Vec::new();
    for c in e.chain() {
        let msg = c.to_string();
        if !parts.last().is_some_and(|p| p.contains(&msg)) {
            parts.push(msg);
        }
    }
    eprintln!("vecsub: {}", parts.join(": "));
    ExitCode::from(exit_code(e))
}

/// 2 input/parse, 3 mathematical precondition, 4 resource cap.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<vecsub::Error>() {
            return match err {
                vecsub::Error::Parse { .. } | vecsub::Error::Io(_) => 2,
                vecsub::Error::Resource(_) => 4,
                _ => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    2
}
