use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use flt_core::Conjecture;
use flt_verify::commands::{CoeffKind, CoeffMode};
use flt_verify::{
    cmd_coeffs, cmd_identity, cmd_oracle, cmd_verify, cmd_wieferich, Outcome, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "fltv",
    version,
    about = "Checks that p^2 never divides H_p(x, y) over residue classes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify conjecture 1 or 2 for every prime in a range, with resumable checkpoints.
    Verify {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        conjecture: u8,
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        /// Worker threads; defaults to FLTV_JOBS or the number of CPUs.
        #[arg(long, env = "FLTV_JOBS")]
        jobs: Option<usize>,
        /// Defaults to conjecture<N>.checkpoint.jsonl.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to conjecture<N>.report.jsonl.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Split each prime's residue scan into blocks of this size.
        #[arg(long)]
        chunk: Option<usize>,
        /// Start with the largest primes.
        #[arg(long)]
        largest_first: bool,
    },
    /// Print W, G or H coefficients as `index<TAB>value` lines.
    Coeffs {
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_enum, ignore_case = true)]
        which: Which,
    },
    /// Check the mixed-basis identity and W table endpoints for odd n <= max-n.
    Identity {
        #[arg(long)]
        max_n: u64,
    },
    /// List primes p <= to with p^2 | 2^(p-1) - 1.
    Wieferich {
        #[arg(long)]
        to: u64,
    },
    /// Run the exact big-integer cross-checks for primes <= max-p.
    Oracle {
        #[arg(long)]
        max_p: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    ModP,
    ModP2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    #[value(name = "W")]
    W,
    #[value(name = "G")]
    G,
    #[value(name = "H")]
    H,
}

fn run(cli: Cli) -> Result<Outcome> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let outcome = match cli.command {
        Command::Verify {
            conjecture,
            from,
            to,
            jobs,
            checkpoint,
            report,
            chunk,
            largest_first,
        } => {
            let jobs = jobs.unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(usize::from)
                    .unwrap_or(1)
            });
            let config = RunConfig {
                conjecture: Conjecture::try_from(conjecture)?,
                from,
                to,
                jobs,
                checkpoint_path: checkpoint
                    .unwrap_or_else(|| format!("conjecture{conjecture}.checkpoint.jsonl").into()),
                report_path: report
                    .unwrap_or_else(|| format!("conjecture{conjecture}.report.jsonl").into()),
                chunk,
                largest_first,
            };
            cmd_verify(&config, &mut out)?
        }
        Command::Coeffs { p, mode, which } => {
            let mode = match mode {
                Mode::Exact => CoeffMode::Exact,
                Mode::ModP => CoeffMode::ModP,
                Mode::ModP2 => CoeffMode::ModP2,
            };
            let which = match which {
                Which::W => CoeffKind::W,
                Which::G => CoeffKind::G,
                Which::H => CoeffKind::H,
            };
            cmd_coeffs(p, mode, which, &mut out)?;
            Outcome::Clean
        }
        Command::Identity { max_n } => cmd_identity(max_n, &mut out)?,
        Command::Wieferich { to } => cmd_wieferich(to, &mut out)?,
        Command::Oracle { max_p } => cmd_oracle(max_p, &mut out)?,
    };
    out.flush()?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
