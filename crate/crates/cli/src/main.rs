mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Parser)]
#[command(name = "jnbellman", version, about = "Sharp John-Nirenberg constants, Bellman candidates and their optimizers")]
struct Cli {
    /// Output format (text by default; tabulate defaults to csv, file output to json).
    #[arg(long, short = 'f', value_enum, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// eps0(p), and C(eps, p) or its bracket at p = 1.
    Constants {
        /// Comma-separated exponents in [1, 2].
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        p: Vec<f64>,
        /// Comma-separated eps values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eps: Vec<f64>,
    },
    /// Evaluates a Bellman candidate at one point.
    Bellman {
        #[arg(long, value_enum)]
        kind: CandidateArg,
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        extra: ExtraArgs,
    },
    /// Builds an extremal function and reports its averages.
    Optimizer {
        #[arg(long, value_enum)]
        kind: OptimizerArg,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// Averaged function: square, abs:P, exp:DELTA or above:LEVEL.
        #[arg(long)]
        average: Option<String>,
        /// Dyadic depth of the characteristic scan.
        #[arg(long, default_value_t = 12)]
        depth: u32,
        /// Write the document here instead of standard output.
        #[arg(long, short = 'o')]
        out: Option<std::path::PathBuf>,
    },
    /// Runs verification suites; exits 1 when any check fails.
    Verify {
        /// Suite name or "all".
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 12)]
        depth: u32,
        /// Relative stopping tolerance of the interval refinement.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Sample count for the randomized suites.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Sweeps a candidate over a grid of x1 and x2 / e^x1.
    Tabulate {
        #[arg(long, value_enum)]
        kind: CandidateArg,
        #[arg(long = "C")]
        c: f64,
        #[command(flatten)]
        extra: ExtraArgs,
        /// x1 grid as LO:HI:N.
        #[arg(long, default_value = "0:0:1", allow_hyphen_values = true)]
        x1: String,
        /// Ratio grid x2 / e^x1 as LO:HI:N; defaults to 1:C:11.
        #[arg(long)]
        ratio: Option<String>,
    },
}

#[derive(Args)]
struct PointArgs {
    #[arg(long = "C")]
    c: f64,
    /// The point (x1, x2).
    #[arg(long, num_args = 2, value_names = ["X1", "X2"], required = true, allow_negative_numbers = true)]
    x: Vec<f64>,
}

#[derive(Args)]
struct ExtraArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CandidateArg {
    #[value(name = "b_p")]
    BP,
    #[value(name = "b1")]
    B1,
    #[value(name = "B2")]
    BigB2,
    #[value(name = "A")]
    A,
    #[value(name = "D")]
    D,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerArg {
    #[value(name = "phi+")]
    PhiPlus,
    #[value(name = "phi-")]
    PhiMinus,
    Psi,
    Eta,
}

fn init_threads() -> Result<(), commands::CliError> {
    let Ok(v) = std::env::var("JNBELLMAN_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| commands::CliError::Usage(format!("JNBELLMAN_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| commands::CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| commands::run(cli));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
