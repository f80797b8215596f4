//! Command-line front end for the `expansivity` library.

mod commands;
mod report;
mod setspec;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use expansivity::bounds::Bounds;
use expansivity::{Error, ErrorKind};

use report::Report;

const DEFAULT_SEED: u64 = 20_240_917;

const EXIT_USAGE: u8 = 1;
const EXIT_BOUND: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "expansivity", version, about = "Polynomial orbit expansion in finite rotations: value sets, spectral increments, counterexamples")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    /// Tabular output; only `weyl` has a table.
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Value set `{P(n) mod q}` of a univariate polynomial.
    ValueSet(commands::ValueSetArgs),
    /// First primes modulo which a polynomial misses some residue.
    DeficientPrimes(commands::DeficientPrimesArgs),
    /// Build the rotation counterexample and bound pinned progressions for each k.
    Counterexample(commands::CounterexampleArgs),
    /// Refute `{k, 2k, ..., mk} ⊂ (E - x) + P(E - y)` for every pinned pair.
    PinnedRefute(commands::PinnedRefuteArgs),
    /// Smallest k with `{-k..k}^d ⊂ k(E - E) + P(E - E)`, or the degenerate-polynomial check.
    Bogolyubov(commands::BogolyubovArgs),
    /// Signed simplex volumes spanned by a lattice set.
    Volspec(commands::VolspecArgs),
    /// Spectral measure of a set of states.
    Spectrum(commands::SpectrumArgs),
    /// Run the spectral increment loop on a finite rotation.
    Increment(commands::IncrementArgs),
    /// Search the moment-curve haystack for an expansive direction.
    Direction(commands::DirectionArgs),
    /// Weyl averages and the decay profile of `psi(q)`.
    Weyl(commands::WeylArgs),
    /// Smith normal form of an integer matrix or of a polynomial's coefficient matrix.
    Snf(commands::SnfArgs),
}

fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Bound => EXIT_BOUND,
        ErrorKind::Invariant => EXIT_INVARIANT,
    }
}

fn run(cmd: Command, seed: u64) -> expansivity::Result<Report> {
    match cmd {
        Command::ValueSet(a) => commands::value_set(a, seed),
        Command::DeficientPrimes(a) => commands::deficient_primes(a, seed),
        Command::Counterexample(a) => commands::counterexample(a, seed),
        Command::PinnedRefute(a) => commands::pinned_refute(a, seed),
        Command::Bogolyubov(a) => commands::bogolyubov(a, seed),
        Command::Volspec(a) => commands::volspec(a, seed),
        Command::Spectrum(a) => commands::spectrum(a, seed),
        Command::Increment(a) => commands::increment(a, seed),
        Command::Direction(a) => commands::direction(a, seed),
        Command::Weyl(a) => commands::weyl(a, seed),
        Command::Snf(a) => commands::snf(a, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = Bounds::from_env() {
        eprintln!("error: {}: {e}", expansivity::bounds::ENV_VAR);
        return ExitCode::from(EXIT_USAGE);
    }
    let GlobalOpts { format, output, seed } = cli.global;
    let report = match run(cli.command, seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let rendered = match format {
        Format::Json => report.render_json(),
        Format::Text => report.render_text(),
        Format::Csv => match &report.csv {
            Some(table) => table.clone(),
            None => {
                eprintln!("error: `{}` has no tabular output; use --format json or text", report.command);
                return ExitCode::from(EXIT_USAGE);
            }
        },
    };
    match output {
        Some(path) => {
            if let Err(e) = fs::write(&path, rendered) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_USAGE);
            }
        }
        None => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let mut out = std::io::stdout().lock();
            if let Err(e) = out.write_all(rendered.as_bytes()).and_then(|_| out.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("error: cannot write to stdout: {e}");
                    return ExitCode::from(EXIT_USAGE);
                }
            }
        }
    }
    if report.all_checks_passed() {
        ExitCode::SUCCESS
    } else {
        for c in report.checks.iter().filter(|c| !c.passed) {
            eprintln!("check failed: {} ({})", c.name, c.anchor);
        }
        ExitCode::from(EXIT_INVARIANT)
    }
}
