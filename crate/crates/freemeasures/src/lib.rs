//! `freemeasures`: partitions, free cumulants, exact expectations of
//! partition-dependent stochastic measures, and random-matrix sweeps.
//!
//! Exit codes: 0 when every check in scope passes, 1 when one fails, 2 on
//! usage or parse errors.

mod commands;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use report::{OutputFormat, Report, TOOL_VERSION};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "freemeasures",
    version,
    about = "Partition-dependent free stochastic measures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Set and noncrossing partitions.
    #[command(subcommand)]
    Partitions(PartitionsCmd),
    /// Moment-cumulant transforms of a single variable.
    #[command(subcommand)]
    Cumulants(CumulantsCmd),
    /// Exact identity checks; residuals are printed as "p/q".
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Monte Carlo sweeps over random-matrix models.
    #[command(subcommand)]
    Simulate(SimulateCmd),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Report path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LatticeArg {
    Full,
    Nc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    L1,
    L2,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    St,
    Pr,
}

#[derive(Debug, Subcommand)]
pub enum PartitionsCmd {
    /// List every partition of [k]. CSV columns: partition,blocks,noncrossing.
    Enumerate {
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = LatticeArg::Full)]
        lattice: LatticeArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// μ(π, σ); σ defaults to the one-block partition. CSV columns: lower,upper,lattice,mobius.
    Mobius {
        #[arg(long)]
        partition: String,
        #[arg(long)]
        upper: Option<String>,
        #[arg(long, value_enum, default_value_t = LatticeArg::Nc)]
        lattice: LatticeArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Kreweras complement. CSV columns: partition,complement,double_complement.
    Kreweras {
        #[arg(long)]
        partition: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Outer and inner classes. CSV columns: partition,noncrossing,outer,inner,outer_count,inner_count.
    Classify {
        #[arg(long)]
        partition: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum CumulantsCmd {
    /// Moments m_1..m_order of the first component. CSV columns: order,value.
    ToMoments {
        #[arg(long)]
        process: String,
        #[arg(long)]
        order: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Free cumulants from a comma-separated moment list. CSV columns: order,value.
    FromMoments {
        #[arg(long)]
        moments: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Every exact identity for partitions of size up to k-max.
    /// CSV columns: check,partition,process,subdivision,residual,pass,error.
    Suite {
        #[arg(long)]
        process: String,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Factorisation of St_π into inner cumulants and outer diagonal measures.
    MainTheorem {
        #[arg(long)]
        process: String,
        #[arg(long)]
        partition: String,
        #[arg(long, default_value = "1")]
        t: String,
        #[arg(long, value_enum, default_value_t = OrderArg::Both)]
        order: OrderArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed forms for free Poisson and free Brownian motion over NC(k), k ≤ k-max.
    Examples {
        #[arg(long)]
        process: String,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[arg(long, default_value = "1")]
        t: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed form in N over uniform subdivisions.
    /// CSV columns: kind,partition,process,t,power_of_n,coefficient,limit,pass.
    Formula {
        #[arg(long)]
        process: String,
        #[arg(long)]
        partition: String,
        #[arg(long, default_value = "1")]
        t: String,
        #[arg(long, value_enum, default_value_t = KindArg::St)]
        kind: KindArg,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    /// Mean normalised traces of words of increments against exact values.
    /// CSV columns: quantity,d,N,trial_count,estimate,stderr,reference,pass,seed.
    Calibrate {
        #[arg(long)]
        process: String,
        #[arg(long, default_value_t = 300)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value = "1")]
        t: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Relative Frobenius residual of the factorisation along (d, N) points;
    /// each row is the median over repetitions. Same CSV columns as calibrate.
    MainTheorem {
        #[arg(long, default_value = "free_poisson")]
        process: String,
        #[arg(long, default_value = "((1,3)(2))")]
        partition: String,
        /// Comma-separated d:N pairs.
        #[arg(long, default_value = "150:20,300:40,600:80")]
        points: String,
        /// Single point; overrides --points together with --n.
        #[arg(long, requires = "n")]
        dim: Option<usize>,
        #[arg(long, requires = "dim")]
        n: Option<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 4)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "1")]
        t: String,
        /// Bound on the last median.
        #[arg(long, default_value_t = 0.2)]
        bound: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Norm of Σ_i p_i Z_{i,1} p_i ⋯ Z_{i,k} p_i along mesh refinements. Same CSV columns as calibrate.
    ProjDecay {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 512)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Comma-separated numbers of intervals.
        #[arg(long, default_value = "2,4,8,16,32")]
        meshes: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// How a command ended, before it is mapped to an exit code.
#[derive(Debug)]
pub enum Outcome {
    Pass,
    Fail,
}

fn quote(arg: &str) -> String {
    if arg.is_empty()
        || arg
            .chars()
            .any(|c| c.is_whitespace() || "()\"'{}[];,".contains(c))
    {
        format!("{arg:?}")
    } else {
        arg.to_string()
    }
}

/// The invocation without the program name and without `--out`, so a rerun
/// elsewhere produces the same report.
fn command_line(args: &[String]) -> String {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        out.push(quote(a));
    }
    out.join(" ")
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    let args: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match commands::dispatch(cli.command, command_line(&args)) {
        Ok(Outcome::Pass) => EXIT_PASS,
        Ok(Outcome::Fail) => EXIT_FAIL,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}
