use std::io::Write;
use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;

use anyhow::{bail, ensure, Context, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use rayon::prelude::*;

use flt_core::oracle::{
    corollary3_relation_check, crosscheck_modular, lemma1_random_sample, lemma3_scan,
    ORACLE_PRIME_LIMIT,
};
use flt_core::poly::{
    g_coeffs_mod, g_exact, h_coeffs_mod, h_exact, verify_identity_eq2, w_table, ModPoly,
    DEFAULT_EXACT_LIMIT,
};
use flt_core::verifier::wieferich_check;
use flt_core::{primes_in_range, Conjecture, Modulus, PrimeCase, PrimeContext};

use crate::checkpoint::{self, Appender, CheckpointLine, LineStatus};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Every check passed.
    Clean,
    /// A counterexample or violated property was found.
    Found,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Clean => 0,
            Outcome::Found => 2,
        }
    }
}

/// Largest prime the verifier accepts (`p³ < 2^63`).
pub const MAX_VERIFY_PRIME: u64 = 2_097_151;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub conjecture: Conjecture,
    pub from: u64,
    pub to: u64,
    pub jobs: usize,
    pub checkpoint_path: PathBuf,
    pub report_path: PathBuf,
    /// Residues per block when a single prime's scan is split across workers.
    pub chunk: Option<usize>,
    pub largest_first: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.from >= 5,
            "--from must be at least 5, got {}",
            self.from
        );
        ensure!(
            self.to >= self.from,
            "--to {} is below --from {}",
            self.to,
            self.from
        );
        ensure!(
            self.to <= MAX_VERIFY_PRIME,
            "--to {} exceeds {MAX_VERIFY_PRIME} (p³ must stay below 2^63)",
            self.to
        );
        ensure!(self.jobs >= 1, "--jobs must be at least 1");
        ensure!(self.chunk != Some(0), "--chunk must be positive");
        Ok(())
    }
}

fn run_prime(p: u64, config: &RunConfig) -> Result<CheckpointLine> {
    let ctx = PrimeContext::new(p)?;
    let report = ctx.verify(config.conjecture, config.chunk)?;
    Ok(CheckpointLine::from(&report))
}

pub fn cmd_verify(config: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    config.validate()?;
    let number = config.conjecture.number();
    let mut done = checkpoint::load(&config.checkpoint_path, number)?;
    let mut todo: Vec<u64> = primes_in_range(config.from, config.to)?
        .primes
        .into_iter()
        .filter(|p| !done.contains_key(p))
        .collect();
    if config.largest_first {
        todo.reverse();
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("building worker pool")?;
    let mut appender = Appender::open(&config.checkpoint_path)?;
    let (tx, rx) = mpsc::channel::<Result<CheckpointLine>>();
    let mut first_error = None;
    thread::scope(|scope| {
        let todo = &todo;
        scope.spawn(move || {
            pool.install(|| {
                todo.par_iter().with_max_len(1).for_each_with(tx, |tx, &p| {
                    let _ = tx.send(run_prime(p, config));
                })
            })
        });
        // single writer: the checkpoint belongs to this thread
        for result in rx {
            match result.and_then(|line| appender.append(&line).map(|_| line)) {
                Ok(line) => {
                    done.insert(line.p, line);
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
    });
    if let Some(e) = first_error {
        return Err(e);
    }

    let in_range: Vec<&CheckpointLine> = done
        .range(config.from..=config.to)
        .map(|(_, line)| line)
        .collect();
    checkpoint::finalize(&config.checkpoint_path, &config.report_path, &done)?;

    let counterexamples: Vec<&&CheckpointLine> = in_range
        .iter()
        .filter(|l| l.status == LineStatus::Counterexample)
        .collect();
    let with_suspicious = in_range.iter().filter(|l| !l.suspicious.is_empty()).count();
    let total_suspicious: usize = in_range.iter().map(|l| l.suspicious.len()).sum();
    writeln!(
        out,
        "conjecture {number}: {} primes in [{}, {}] ({} new, {} from checkpoint)",
        in_range.len(),
        config.from,
        config.to,
        todo.len(),
        in_range.len() - todo.len(),
    )?;
    writeln!(
        out,
        "suspicious residues: {total_suspicious} across {with_suspicious} primes"
    )?;
    if let Some(slowest) = in_range
        .iter()
        .max_by_key(|l| (l.ms, std::cmp::Reverse(l.p)))
    {
        writeln!(out, "slowest prime: {} ({} ms)", slowest.p, slowest.ms)?;
    }
    if counterexamples.is_empty() {
        writeln!(out, "all verified")?;
        Ok(Outcome::Clean)
    } else {
        for line in counterexamples {
            writeln!(out, "COUNTEREXAMPLE {}", line.to_json())?;
        }
        Ok(Outcome::Found)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffMode {
    Exact,
    ModP,
    ModP2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffKind {
    W,
    G,
    H,
}

fn dump<T: std::fmt::Display>(
    out: &mut dyn Write,
    values: impl IntoIterator<Item = T>,
) -> Result<()> {
    for (i, v) in values.into_iter().enumerate() {
        writeln!(out, "{i}\t{v}")?;
    }
    Ok(())
}

pub fn cmd_coeffs(p: u64, mode: CoeffMode, which: CoeffKind, out: &mut dyn Write) -> Result<()> {
    let k = match mode {
        CoeffMode::Exact => {
            ensure!(
                p <= DEFAULT_EXACT_LIMIT,
                "exact mode requires p <= {DEFAULT_EXACT_LIMIT}, got {p}"
            );
            if which == CoeffKind::W {
                return dump(out, w_table(p)?.big_w);
            }
            PrimeCase::new(p)?;
            let poly = match which {
                CoeffKind::G => g_exact(p)?,
                _ => h_exact(p)?,
            };
            return dump(out, poly.coeffs());
        }
        CoeffMode::ModP => 1,
        CoeffMode::ModP2 => 2,
    };
    PrimeCase::new(p)?;
    let poly: ModPoly = match which {
        CoeffKind::W => {
            ensure!(
                p <= DEFAULT_EXACT_LIMIT,
                "the W table is computed exactly and requires p <= {DEFAULT_EXACT_LIMIT}"
            );
            let m = Modulus::prime_power(p, k)?;
            let big_m = BigInt::from(m.get());
            let reduced: Vec<u64> = w_table(p)?
                .big_w
                .iter()
                .map(|w| u64::try_from(w.mod_floor(&big_m)).expect("residue fits"))
                .collect();
            ModPoly::new(m, reduced)
        }
        CoeffKind::G => g_coeffs_mod(p, k)?,
        CoeffKind::H => h_coeffs_mod(p, k)?,
    };
    dump(out, poly.coeffs())
}

pub fn cmd_identity(max_n: u64, out: &mut dyn Write) -> Result<Outcome> {
    ensure!(max_n % 2 == 1, "n must be odd, got {max_n}");
    ensure!(
        (3..=DEFAULT_EXACT_LIMIT).contains(&max_n),
        "--max-n must lie in [3, {DEFAULT_EXACT_LIMIT}], got {max_n}"
    );
    let mut all_ok = true;
    for n in (3..=max_n).step_by(2) {
        let table = w_table(n)?;
        let identity = verify_identity_eq2(n)?;
        let endpoints = table.endpoints_hold();
        let divisible = if n > 3 && flt_core::modmath::is_prime(n) {
            Some(table.small_w.is_some())
        } else {
            None
        };
        let ok = identity && endpoints && divisible != Some(false);
        all_ok &= ok;
        let div = match divisible {
            Some(true) => " divisible=ok",
            Some(false) => " divisible=FAIL",
            None => "",
        };
        writeln!(
            out,
            "n={n} identity={} endpoints={}{div}",
            if identity { "ok" } else { "FAIL" },
            if endpoints { "ok" } else { "FAIL" },
        )?;
    }
    Ok(if all_ok {
        Outcome::Clean
    } else {
        Outcome::Found
    })
}

pub const MAX_WIEFERICH_BOUND: u64 = 10_000_000;

pub fn cmd_wieferich(to: u64, out: &mut dyn Write) -> Result<Outcome> {
    ensure!(
        to <= MAX_WIEFERICH_BOUND,
        "--to must be at most {MAX_WIEFERICH_BOUND}"
    );
    if to < 2 {
        return Ok(Outcome::Clean);
    }
    let primes = primes_in_range(2, to)?.primes;
    let mut hits = primes
        .par_iter()
        .map(|&p| wieferich_check(p))
        .filter(|r| !matches!(r, Ok(rec) if rec.valuation < 2))
        .collect::<Result<Vec<_>, _>>()?;
    hits.sort();
    let mut outcome = Outcome::Clean;
    for rec in hits {
        if rec.violates_corollary() {
            writeln!(out, "{}\t>=3", rec.p)?;
            outcome = Outcome::Found;
        } else {
            writeln!(out, "{}\t{}", rec.p, rec.valuation)?;
        }
    }
    Ok(outcome)
}

pub const LEMMA1_SAMPLES: usize = 10_000;
pub const LEMMA1_SEED: u64 = 0x5EED;
pub const LEMMA3_LIMIT: u64 = 300;

pub fn cmd_oracle(max_p: u64, out: &mut dyn Write) -> Result<Outcome> {
    if !(5..=ORACLE_PRIME_LIMIT).contains(&max_p) {
        bail!("--max-p must lie in [5, {ORACLE_PRIME_LIMIT}], got {max_p}");
    }
    let primes = primes_in_range(5, max_p)?.primes;
    let checks = primes
        .par_iter()
        .map(|&p| -> Result<(u64, bool, bool, bool)> {
            Ok((
                p,
                crosscheck_modular(p, 1)?,
                crosscheck_modular(p, 2)?,
                corollary3_relation_check(p)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all_ok = true;
    let verdict = |b: bool| if b { "ok" } else { "FAIL" };
    for (p, k1, k2, cor) in checks {
        all_ok &= k1 && k2 && cor;
        writeln!(
            out,
            "p={p} crosscheck_k1={} crosscheck_k2={} corollary3={}",
            verdict(k1),
            verdict(k2),
            verdict(cor)
        )?;
    }
    let failures = lemma1_random_sample(LEMMA1_SAMPLES, LEMMA1_SEED);
    all_ok &= failures.is_empty();
    writeln!(
        out,
        "lemma1 samples={LEMMA1_SAMPLES} failures={}",
        failures.len()
    )?;
    match lemma3_scan(LEMMA3_LIMIT) {
        Ok(cases) => writeln!(
            out,
            "lemma3 limit={LEMMA3_LIMIT} pairs={} violations=0",
            cases.len()
        )?,
        Err(e) => {
            all_ok = false;
            writeln!(out, "lemma3 limit={LEMMA3_LIMIT} FAIL: {e}")?;
        }
    }
    Ok(if all_ok {
        Outcome::Clean
    } else {
        Outcome::Found
    })
}
