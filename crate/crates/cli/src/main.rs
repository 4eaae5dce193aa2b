//! `mvcf`: moments, orthogonal polynomials, common zeros, cubature and
//! moment convergents from the command line.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success; every requested verdict holds |
//! | 1 | I/O failure or another numerical failure |
//! | 2 | a moment beyond the provider's reliable degree was requested |
//! | 3 | invalid input: weight descriptor, arguments or input file |
//! | 4 | truncated Jacobi matrices do not commute (or the Hankel-Schur test fails) |
//! | 5 | the zero set contains multiple zeros |
//! | 6 | a `check` verdict other than commutativity fails |
//! | 7 | evaluation point hits a pole of the convergent |

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mvcf::Tolerances;

#[derive(Debug, Parser)]
#[command(name = "mvcf", version, about = "Multivariate orthogonal polynomials, cubature and moment convergents")]
#[command(after_help = "Weight descriptors:\n  legendre\n  chebyshev\n  gegenbauer:lambda=<f64>,mu=<f64>\n  symmap:base=<1d-weight>,d=<int>,sign=<-0.5|+0.5>\n\nA one-dimensional descriptor with --dim > 1 denotes the product weight.")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Weight descriptor.
    #[arg(long, global = true)]
    pub weight: Option<String>,
    /// JSON moment table used instead of a weight descriptor.
    #[arg(long, global = true, conflicts_with = "weight")]
    pub moments: Option<PathBuf>,
    /// Dimension; defaults to the descriptor's own dimension, else 1.
    #[arg(long = "dim", short = 'd', global = true)]
    pub dim: Option<usize>,
    /// Seed of the random combination in the joint eigensolver.
    #[arg(long, global = true, default_value_t = mvcf::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file, written atomically; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    #[arg(long = "tol-def", global = true)]
    pub def: Option<f64>,
    #[arg(long = "tol-orth", global = true)]
    pub orth: Option<f64>,
    #[arg(long = "tol-eval", global = true)]
    pub eval: Option<f64>,
    #[arg(long = "tol-comm", global = true)]
    pub comm: Option<f64>,
    #[arg(long = "tol-eig", global = true)]
    pub eig: Option<f64>,
    #[arg(long = "tol-pair", global = true)]
    pub pair: Option<f64>,
    #[arg(long = "tol-cub", global = true)]
    pub cub: Option<f64>,
    #[arg(long = "tol-fit", global = true)]
    pub fit: Option<f64>,
    #[arg(long = "tol-kernel", global = true)]
    pub kernel: Option<f64>,
    #[arg(long = "tol-hankel", global = true)]
    pub hankel: Option<f64>,
}

impl TolArgs {
    pub fn resolve(&self) -> Result<Tolerances, String> {
        let mut t = Tolerances::default();
        let slots: [(&str, Option<f64>, &mut f64); 10] = [
            ("def", self.def, &mut t.def),
            ("orth", self.orth, &mut t.orth),
            ("eval", self.eval, &mut t.eval),
            ("comm", self.comm, &mut t.comm),
            ("eig", self.eig, &mut t.eig),
            ("pair", self.pair, &mut t.pair),
            ("cub", self.cub, &mut t.cub),
            ("fit", self.fit, &mut t.fit),
            ("kernel", self.kernel, &mut t.kernel),
            ("hankel", self.hankel, &mut t.hankel),
        ];
        for (name, value, slot) in slots {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(format!("--tol-{name} must be positive and finite"));
                }
                *slot = v;
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    SignOrthonormal,
    Monic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Joint eigenvalues of the truncated Jacobi matrices.
    Pipeline,
    /// Closed form of the symmetric-map families.
    ClosedForm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moment table for |alpha| <= 2n.
    Moments {
        #[arg(long)]
        degree: usize,
    },
    /// Orthogonal basis through degree n and its recurrence matrices.
    Orthopoly {
        #[arg(long)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = FlavorArg::SignOrthonormal)]
        flavor: FlavorArg,
    },
    /// Common zeros of the degree-n orthogonal polynomials.
    Zeros {
        #[arg(long)]
        degree: usize,
    },
    /// Gaussian cubature rule of degree 2n-1.
    Cubature {
        #[arg(long)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Method::Pipeline)]
        method: Method,
    },
    /// Moment convergents mu^1..mu^N and their coincidence reports.
    Recover {
        #[arg(long)]
        levels: usize,
    },
    /// Evaluate the rational convergent mu^n(z).
    ConvergentEval {
        #[arg(long)]
        level: usize,
        /// Point as comma-separated complex numbers, e.g. `3+0.5i,-2+1i`.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// Output of `recover` to read the level from instead of recomputing.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Verdict bundle: definiteness, commutativity, Hankel-Schur, coincidence.
    Check {
        #[arg(long)]
        levels: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(outcome) => {
            if let Err(e) = commands::emit(&cli.global, &outcome.body) {
                eprintln!("mvcf: {e}");
                return ExitCode::from(commands::EXIT_OTHER);
            }
            if let Some(msg) = &outcome.diagnostic {
                eprintln!("mvcf: {msg}");
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("mvcf: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
