//! Exact big-integer oracles for small primes, and the scans for the two
//! elementary lemmas (the gcd identity for `(x^n + y^n)/(x + y)` and the
//! prime divisors of `x² + xy + y²`).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::modmath::Modulus;
use crate::poly::{h_exact, ModPoly, PolyError, PrimeCase};
use crate::verifier::{PrimeContext, VerifyError};

/// Largest prime the exact oracles accept.
pub const ORACLE_PRIME_LIMIT: u64 = 61;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("p = {0} outside the oracle range (3, {ORACLE_PRIME_LIMIT}]")]
    OutOfRange(u64),
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
    #[error("inexact division in exact H_p({x}, {y}) for p = {p}")]
    InexactDivision { p: u64, x: i64, y: i64 },
    #[error("prime factor {factor} ≡ 5 (mod 6) of x² + xy + y² at (x, y) = ({x}, {y})")]
    Lemma3Violation { x: u64, y: u64, factor: u64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

fn oracle_case(p: u64) -> Result<PrimeCase, OracleError> {
    if p > ORACLE_PRIME_LIMIT {
        return Err(OracleError::OutOfRange(p));
    }
    PrimeCase::new(p).map_err(|_| OracleError::OutOfRange(p))
}

/// `H_p(x, y) = ((x+y)^p - x^p - y^p) / (p x y (x+y) (x² + xy + y²)^ε)` as
/// an exact integer.
pub fn h_value_exact(p: u64, x: i64, y: i64) -> Result<BigInt, OracleError> {
    let case = oracle_case(p)?;
    if x == 0 || y == 0 || x + y == 0 || x.gcd(&y) != 1 {
        return Err(OracleError::InvalidArguments(format!(
            "need nonzero coprime x, y with x + y ≠ 0, got ({x}, {y})"
        )));
    }
    let (bx, by) = (BigInt::from(x), BigInt::from(y));
    let s = &bx + &by;
    let e = p as u32;
    let numer = Pow::pow(&s, e) - Pow::pow(&bx, e) - Pow::pow(&by, e);
    let f = &bx * &bx + &bx * &by + &by * &by;
    let denom = BigInt::from(p) * &bx * &by * &s * Pow::pow(&f, case.epsilon());
    let (q, r) = numer.div_rem(&denom);
    if !r.is_zero() {
        return Err(OracleError::InexactDivision { p, x, y });
    }
    Ok(q)
}

/// Checks `gcd(x+y, (x^n + y^n)/(x+y)) = gcd(x+y, n)`.
pub fn lemma1_check(x: i64, y: i64, n: u32) -> Result<bool, OracleError> {
    if x == 0 || y == 0 || x + y == 0 || x.gcd(&y) != 1 || n.is_multiple_of(2) {
        return Err(OracleError::InvalidArguments(format!(
            "need nonzero coprime x, y with x + y ≠ 0 and odd n, got ({x}, {y}, {n})"
        )));
    }
    let (bx, by) = (BigInt::from(x), BigInt::from(y));
    let s = &bx + &by;
    let (quot, rem) = (Pow::pow(&bx, n) + Pow::pow(&by, n)).div_rem(&s);
    debug_assert!(rem.is_zero(), "x + y divides x^n + y^n for odd n");
    Ok(s.gcd(&quot) == s.gcd(&BigInt::from(n)))
}

/// Runs [`lemma1_check`] on `count` random valid triples with
/// `|x|, |y| <= 10^4` and odd `n <= 99`. Returns the failing triples.
pub fn lemma1_random_sample(count: usize, seed: u64) -> Vec<(i64, i64, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut done = 0;
    while done < count {
        let x: i64 = rng.gen_range(-10_000..=10_000);
        let y: i64 = rng.gen_range(-10_000..=10_000);
        let n: u32 = 2 * rng.gen_range(0..50) + 1;
        if x == 0 || y == 0 || x + y == 0 || x.gcd(&y) != 1 {
            continue;
        }
        done += 1;
        if !lemma1_check(x, y, n).unwrap_or(false) {
            failures.push((x, y, n));
        }
    }
    failures
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma3Case {
    pub x: u64,
    pub y: u64,
    pub f_value: BigInt,
    /// `(prime, exponent)` pairs, increasing primes.
    pub factors: Vec<(u64, u32)>,
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Factors `x² + xy + y²` for every coprime `1 <= x <= y <= limit` and
/// fails on the first prime factor `≡ 5 (mod 6)`.
pub fn lemma3_scan(limit: u64) -> Result<Vec<Lemma3Case>, OracleError> {
    if limit < 2 {
        return Err(OracleError::InvalidArguments(format!("limit {limit} < 2")));
    }
    let mut cases = Vec::new();
    for y in 1..=limit {
        for x in 1..=y {
            if x.gcd(&y) != 1 {
                continue;
            }
            let f = x * x + x * y + y * y;
            let factors = factorize(f);
            if let Some(&(factor, _)) = factors.iter().find(|(q, _)| q % 6 == 5) {
                return Err(OracleError::Lemma3Violation { x, y, factor });
            }
            cases.push(Lemma3Case {
                x,
                y,
                f_value: BigInt::from(f),
                factors,
            });
        }
    }
    Ok(cases)
}

/// Compares, for every `X ∈ [0, p^k)`, the Horner value of the modular
/// coefficient pipeline against the exact polynomial `H_p(x, 1)` reduced
/// mod `p^k`, the direct fast path (where its denominator is a unit) and,
/// for `X >= 1`, the exact integer quotient `H_p(X, 1)`.
pub fn crosscheck_modular(p: u64, k: u32) -> Result<bool, OracleError> {
    oracle_case(p)?;
    if k != 1 && k != 2 {
        return Err(VerifyError::BadPrecision(k).into());
    }
    let ctx = PrimeContext::new(p)?;
    let m = ctx.modulus(k);
    let exact_poly = ModPoly::from_big(&h_exact(p)?, m);
    let big_m = BigInt::from(m.get());
    for x in 0..m.get() {
        let horner = ctx.eval_horner(x, k)?;
        if horner != exact_poly.eval(x) {
            return Ok(false);
        }
        match ctx.eval_direct(x, k) {
            Ok(direct) if direct != horner => return Ok(false),
            Ok(_) | Err(VerifyError::DenominatorNotInvertible(_)) => {}
            Err(e) => return Err(e.into()),
        }
        if x >= 1 {
            let exact = h_value_exact(p, x as i64, 1)?.mod_floor(&big_m);
            if exact != BigInt::from(horner) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `H_p(1, 1) · 3^ε · p = 2^{p-1} - 1`.
pub fn corollary3_relation_check(p: u64) -> Result<bool, OracleError> {
    let case = oracle_case(p)?;
    let h = h_value_exact(p, 1, 1)?;
    let lhs = h * BigInt::from(3u32.pow(case.epsilon())) * BigInt::from(p);
    let rhs = (BigInt::one() << (p - 1) as usize) - 1;
    Ok(lhs == rhs)
}

/// `H_p(X, 1) mod p^k` for `X ∈ [0, p^k)` straight from the exact quotient,
/// with `X = 0` taken as the constant term 1.
pub fn h_residues_exact(p: u64, k: u32) -> Result<Vec<u64>, OracleError> {
    oracle_case(p)?;
    let m = Modulus::prime_power(p, k).map_err(VerifyError::from)?;
    let big_m = BigInt::from(m.get());
    let mut out = vec![1];
    for x in 1..m.get() {
        let v = h_value_exact(p, x as i64, 1)?.mod_floor(&big_m);
        out.push(u64::try_from(v.abs()).expect("residue fits"));
    }
    Ok(out)
}
