//! `ellreg`: constants, solves, regularity analysis and Cordes checks from the command line.
//!
//! Exit codes: 0 success, 1 a checked condition does not hold, 2 usage or
//! input error, 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, Outcome};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "ellreg", version, about = "Explicit interior regularity for perturbed fully nonlinear elliptic equations")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Configuration file (`[section]` headers, `key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable, applied in order
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Print the effective configuration and exit
    #[arg(long, global = true)]
    dump_config: bool,

    #[arg(long, global = true)]
    grid_n: Option<String>,
    /// disk or square
    #[arg(long, global = true)]
    shape: Option<String>,
    #[arg(long, global = true)]
    extent: Option<String>,

    /// Base matrix `a,b,c` for [[a,b],[b,c]]
    #[arg(long, global = true)]
    w0: Option<String>,
    #[arg(long, global = true)]
    eps: Option<String>,
    /// none, sine or smooth-max
    #[arg(long, global = true)]
    perturbation: Option<String>,
    /// smooth-max parameters `d11,d12,d22,temperature`
    #[arg(long, global = true)]
    params: Option<String>,

    /// Space dimension used by the constants
    #[arg(short = 'n', global = true)]
    dim: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<String>,
    #[arg(long = "Lambda", global = true)]
    big_lambda: Option<String>,
    #[arg(long, global = true)]
    alpha_bar: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long = "K1", global = true)]
    k1: Option<String>,
    #[arg(long, global = true)]
    alpha0: Option<String>,
    #[arg(long = "Cprime", global = true)]
    cprime: Option<String>,
    #[arg(long = "K2", global = true)]
    k2: Option<String>,
    #[arg(long = "C3", global = true)]
    c3: Option<String>,
    /// proof or statement
    #[arg(long, global = true)]
    c0_variant: Option<String>,
}

impl CommonArgs {
    fn assignments(&self) -> Vec<(&'static str, &'static str, &String)> {
        [
            ("grid", "n", &self.grid_n),
            ("grid", "shape", &self.shape),
            ("grid", "extent", &self.extent),
            ("operator", "w0", &self.w0),
            ("operator", "eps", &self.eps),
            ("operator", "perturbation", &self.perturbation),
            ("operator", "params", &self.params),
            ("constants", "n", &self.dim),
            ("constants", "lambda", &self.lambda),
            ("constants", "Lambda", &self.big_lambda),
            ("constants", "alpha_bar", &self.alpha_bar),
            ("constants", "alpha", &self.alpha),
            ("constants", "K1", &self.k1),
            ("constants", "alpha0", &self.alpha0),
            ("constants", "Cprime", &self.cprime),
            ("constants", "K2", &self.k2),
            ("constants", "C3", &self.c3),
            ("constants", "c0_variant", &self.c0_variant),
        ]
        .into_iter()
        .filter_map(|(s, k, v)| v.as_ref().map(|v| (s, k, v)))
        .collect()
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the constant chain and its consistency checks
    Constants {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the Dirichlet problem on the configured grid
    Solve(SolveArgs),
    /// Decay table, single approximation step and Hölder certificate
    Analyze(AnalyzeArgs),
    /// Cordes-type conditions on the linearized coefficients
    Cordes {
        /// Grid function to linearize at; zero on the configured grid if absent
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        out_dir: Option<String>,
    },
    /// Run the built-in acceptance suite
    Selftest {
        /// Run only this criterion; repeatable
        #[arg(long)]
        criterion: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Boundary data expression
    #[arg(long)]
    boundary: Option<String>,
    /// Right-hand side expression
    #[arg(long)]
    rhs: Option<String>,
    /// Right-hand side as a grid file
    #[arg(long)]
    rhs_file: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_sweeps: Option<String>,
    #[arg(long)]
    relaxation: Option<String>,
    /// Write the solution grid file here
    #[arg(long)]
    out: Option<String>,
    /// Write the solve summary JSON here
    #[arg(long)]
    summary: Option<String>,
}

impl SolveArgs {
    fn assignments(&self) -> Vec<(&'static str, &'static str, &String)> {
        [
            ("boundary", &self.boundary),
            ("rhs", &self.rhs),
            ("rhs_file", &self.rhs_file),
            ("tol", &self.tol),
            ("max_sweeps", &self.max_sweeps),
            ("relaxation", &self.relaxation),
            ("out", &self.out),
            ("summary", &self.summary),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| ("solve", k, v)))
        .collect()
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Solution grid file; solved in-process if absent
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    kmax: Option<String>,
    /// Mollification radius for the single step
    #[arg(long)]
    gamma: Option<String>,
    /// Nodes per axis in the certificate sample
    #[arg(long)]
    subsample: Option<String>,
    /// Exit 1 when the decay table is truncated
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out_dir: Option<String>,
}

impl AnalyzeArgs {
    fn assignments(&self) -> Vec<(&'static str, &'static str, &String)> {
        let mut out = self.solve.assignments();
        out.extend(
            [
                ("input", &self.input),
                ("rho", &self.rho),
                ("kmax", &self.kmax),
                ("gamma", &self.gamma),
                ("subsample", &self.subsample),
                ("out_dir", &self.out_dir),
            ]
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| ("analyze", k, v))),
        );
        out
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p).map_err(|e| CliError::Usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    for a in &cli.common.set {
        cfg.set_dotted(a).map_err(|e| CliError::Usage(format!("--set {a}: {e}")))?;
    }
    let mut flags = cli.common.assignments();
    match &cli.command {
        Command::Solve(s) => flags.extend(s.assignments()),
        Command::Analyze(a) => flags.extend(a.assignments()),
        _ => {}
    }
    for (section, key, v) in flags {
        cfg.set(section, key, v)
            .map_err(|e| CliError::Usage(format!("{section}.{key}: {e}")))?;
    }
    if let Command::Analyze(a) = &cli.command {
        if a.strict {
            cfg.analyze.strict = true;
        }
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ELLREG_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("ELLREG_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    let cfg = effective_config(cli)?;
    if cli.common.dump_config {
        return Ok(Outcome {
            stdout: cfg.canonical(),
            warnings: Vec::new(),
            code: 0,
        });
    }
    match &cli.command {
        Command::Constants { out } => commands::cmd_constants(&cfg, out.as_deref()),
        Command::Solve(_) => commands::cmd_solve(&cfg),
        Command::Analyze(_) => commands::cmd_analyze(&cfg),
        Command::Cordes { input, out_dir } => commands::cmd_cordes(&cfg, input.as_deref(), out_dir),
        Command::Selftest { criterion, out } => commands::cmd_selftest(criterion, out.as_deref().map(Path::new)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(outcome.stdout.as_bytes());
            let _ = stdout.flush();
            for w in &outcome.warnings {
                eprintln!("ellreg: {w}");
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("ellreg: error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
