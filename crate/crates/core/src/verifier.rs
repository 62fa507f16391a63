//! Two-stage check that `p²` never divides `H_p(X, 1)`.
//!
//! Stage 1 evaluates `H_p(X, 1) mod p` on the representatives
//! `X ∈ [1, (p-1)/2]`. The classes `X ≡ 0` and `X ≡ -1` are skipped because
//! `H_p` is identically 1 there, and `X`, `-1-X` give the same value. Any
//! zero found is a [`SuspiciousResidue`] and goes to stage 2, which lifts it
//! to residues mod `p²`: all `p` lifts for conjecture 1, only the lift with
//! `X'^{p-1} ≡ 1 (mod p²)` for conjecture 2.
//!
//! Values are computed from
//! `H_p(X,1) = ((X+1)^p - X^p - 1) / (p · X (X+1) (X²+X+1)^ε)`, where only the
//! numerator needs one extra power of `p` of precision. When the
//! denominator is not a unit (only possible for the roots of `X²+X+1`, and
//! only when `p ≡ 1 mod 6`) the coefficient form of `H_p(x, 1)` is used.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

use crate::modmath::{inv_mod, mul_mod, pow_mod, ModError, Modulus};
use crate::poly::{h_coeffs_mod, ModPoly, PolyError, PrimeCase};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("denominator X(X+1)(X²+X+1)^ε is not invertible at X = {0}")]
    DenominatorNotInvertible(u64),
    #[error("precision k = {0} must be 1 or 2")]
    BadPrecision(u32),
    #[error("conjecture must be 1 or 2, got {0}")]
    BadConjecture(u8),
    #[error("residue {0} must be nonzero modulo p")]
    ZeroResidue(u64),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Mod(#[from] ModError),
}

/// Which of the two conjectures a run checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Conjecture {
    /// Every lift of a suspicious residue to mod `p²`.
    One,
    /// Only the lift satisfying `X^{p-1} ≡ 1 (mod p²)`.
    Two,
}

impl Conjecture {
    pub fn number(self) -> u8 {
        match self {
            Conjecture::One => 1,
            Conjecture::Two => 2,
        }
    }
}

impl TryFrom<u8> for Conjecture {
    type Error = VerifyError;
    fn try_from(v: u8) -> Result<Self, VerifyError> {
        match v {
            1 => Ok(Conjecture::One),
            2 => Ok(Conjecture::Two),
            other => Err(VerifyError::BadConjecture(other)),
        }
    }
}

/// A stage-1 representative `X ∈ [1, (p-1)/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResidueRep(u64);

impl ResidueRep {
    pub fn new(p: u64, x: u64) -> Option<Self> {
        (1..=(p - 1) / 2).contains(&x).then_some(ResidueRep(x))
    }

    /// The representative of the class `{x, -1-x}`, or `None` for `0` and `-1`.
    pub fn canonical(p: u64, x: u64) -> Option<Self> {
        let x = x % p;
        let partner = p - 1 - x;
        ResidueRep::new(p, x.min(partner))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

/// A representative with `H_p(X, 1) ≡ 0 (mod p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SuspiciousResidue {
    pub x: ResidueRep,
    pub h_mod_p: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Verified,
    /// A lift `X'` mod `p²` with `H_p(X', 1) ≡ 0 (mod p²)`.
    Counterexample {
        lift: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjectureReport {
    pub p: u64,
    pub conjecture: Conjecture,
    pub status: Status,
    pub suspicious: Vec<SuspiciousResidue>,
    pub residues_scanned: u64,
    pub lifts_checked: u64,
    pub duration: Duration,
}

impl ConjectureReport {
    pub fn is_verified(&self) -> bool {
        self.status == Status::Verified
    }
}

/// Per-prime evaluation state: the moduli `p, p², p³` and lazily built
/// coefficient vectors of `H_p(x, 1)` for the Horner fallback.
#[derive(Debug)]
pub struct PrimeContext {
    case: PrimeCase,
    powers: [Modulus; 3],
    horner: [OnceLock<ModPoly>; 2],
}

impl PrimeContext {
    pub fn new(p: u64) -> Result<Self, VerifyError> {
        let case = PrimeCase::new(p)?;
        Ok(PrimeContext {
            case,
            powers: [
                Modulus::prime_power(p, 1)?,
                Modulus::prime_power(p, 2)?,
                Modulus::prime_power(p, 3)?,
            ],
            horner: [OnceLock::new(), OnceLock::new()],
        })
    }

    pub fn case(&self) -> PrimeCase {
        self.case
    }

    pub fn p(&self) -> u64 {
        self.case.p()
    }

    /// `p^k` for `k ∈ 1..=3`.
    pub fn modulus(&self, k: u32) -> Modulus {
        self.powers[k as usize - 1]
    }

    fn check_k(k: u32) -> Result<(), VerifyError> {
        if k == 1 || k == 2 {
            Ok(())
        } else {
            Err(VerifyError::BadPrecision(k))
        }
    }

    /// Coefficients of `H_p(x, 1) mod p^k`, built on first use.
    pub fn h_poly(&self, k: u32) -> Result<&ModPoly, VerifyError> {
        Self::check_k(k)?;
        let cell = &self.horner[k as usize - 1];
        if let Some(poly) = cell.get() {
            return Ok(poly);
        }
        let poly = h_coeffs_mod(self.p(), k)?;
        Ok(cell.get_or_init(|| poly))
    }

    /// `X(X+1)(X²+X+1)^ε mod p^k`.
    fn denominator(&self, x: u64, m: Modulus) -> u64 {
        let x1 = m.add(x, 1 % m.get());
        let f = m.add(mul_mod(x, x1, m), 1 % m.get());
        let f_eps = if self.case.epsilon() == 2 {
            mul_mod(f, f, m)
        } else {
            f
        };
        mul_mod(mul_mod(x, x1, m), f_eps, m)
    }

    /// `((X+1)^p - X^p - 1) / p mod p^k` from powers taken mod `p^{k+1}`.
    fn numerator_over_p(&self, x: u64, k: u32) -> u64 {
        let p = self.p();
        let hi = self.modulus(k + 1);
        let a = pow_mod(hi.add(x, 1), p, hi);
        let b = pow_mod(x, p, hi);
        let n = hi.sub(hi.sub(a, b), 1);
        debug_assert_eq!(n % p, 0, "Fermat's little theorem");
        n / p
    }

    pub fn eval_direct(&self, x: u64, k: u32) -> Result<u64, VerifyError> {
        Self::check_k(k)?;
        let m = self.modulus(k);
        let x = m.reduce(x);
        let inv = inv_mod(self.denominator(x, m), m)
            .map_err(|_| VerifyError::DenominatorNotInvertible(x))?;
        Ok(mul_mod(self.numerator_over_p(x, k), inv, m))
    }

    pub fn eval_horner(&self, x: u64, k: u32) -> Result<u64, VerifyError> {
        Ok(self.h_poly(k)?.eval(x))
    }

    /// Direct path, falling back to Horner where the denominator vanishes.
    pub fn eval(&self, x: u64, k: u32) -> Result<u64, VerifyError> {
        match self.eval_direct(x, k) {
            Err(VerifyError::DenominatorNotInvertible(_)) => self.eval_horner(x, k),
            other => other,
        }
    }

    /// `n^p mod p²` for `n ∈ [0, limit]`, using that `n ↦ n^p` is
    /// multiplicative: one exponentiation per prime `n`, one product per
    /// composite.
    fn pth_power_table(&self, limit: usize) -> Vec<u64> {
        let p = self.p();
        let m = self.modulus(2);
        let mut table = vec![0u64; limit + 1];
        if limit >= 1 {
            table[1] = 1;
        }
        let mut primes: Vec<usize> = Vec::new();
        for n in 2..=limit {
            if table[n] == 0 {
                table[n] = pow_mod(n as u64, p, m);
                primes.push(n);
            }
            for &q in &primes {
                let composite = q * n;
                if composite > limit {
                    break;
                }
                table[composite] = mul_mod(table[q], table[n], m);
                if n % q == 0 {
                    break;
                }
            }
        }
        table
    }

    /// Stage-1 values of `H_p(X, 1) mod p` for `X ∈ [lo, hi]`, zeros only.
    /// The denominators of the block are inverted together.
    fn scan_block(
        &self,
        table: &[u64],
        lo: u64,
        hi: u64,
    ) -> Result<Vec<SuspiciousResidue>, VerifyError> {
        let p = self.p();
        let mp = self.modulus(1);
        let mp2 = self.modulus(2);
        let len = (hi + 1 - lo) as usize;
        let mut numer = Vec::with_capacity(len);
        let mut denom = Vec::with_capacity(len);
        for x in lo..=hi {
            let n = mp2.sub(mp2.sub(table[x as usize + 1], table[x as usize]), 1);
            numer.push(n / p);
            denom.push(self.denominator(x, mp));
        }
        // prefix products over the invertible denominators
        let mut prefix = Vec::with_capacity(len);
        let mut acc = 1u64;
        for &d in &denom {
            prefix.push(acc);
            if d != 0 {
                acc = mul_mod(acc, d, mp);
            }
        }
        let mut inv_acc = inv_mod(acc, mp)?;
        let mut out = Vec::new();
        for i in (0..len).rev() {
            let x = lo + i as u64;
            let value = if denom[i] == 0 {
                self.eval_horner(x, 1)?
            } else {
                let inv = mul_mod(inv_acc, prefix[i], mp);
                inv_acc = mul_mod(inv_acc, denom[i], mp);
                mul_mod(numer[i], inv, mp)
            };
            if value == 0 {
                out.push(SuspiciousResidue {
                    x: ResidueRep(x),
                    h_mod_p: 0,
                });
            }
        }
        out.reverse();
        Ok(out)
    }

    /// All suspicious representatives, in increasing order. With
    /// `chunk = Some(c)` blocks of `c` residues are scanned in parallel.
    pub fn stage1(&self, chunk: Option<usize>) -> Result<Vec<SuspiciousResidue>, VerifyError> {
        let half = (self.p() - 1) / 2;
        let table = self.pth_power_table(half as usize + 1);
        match chunk {
            None => self.scan_block(&table, 1, half),
            Some(c) => {
                let c = c.max(1) as u64;
                let blocks: Vec<(u64, u64)> = (0..half.div_ceil(c))
                    .map(|i| (1 + i * c, half.min((i + 1) * c)))
                    .collect();
                let found = blocks
                    .par_iter()
                    .map(|&(lo, hi)| self.scan_block(&table, lo, hi))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(found.into_iter().flatten().collect())
            }
        }
    }

    /// `X^p mod p²`.
    pub fn teichmuller_lift(&self, x: u64) -> Result<u64, VerifyError> {
        let x = self.modulus(1).reduce(x);
        if x == 0 {
            return Err(VerifyError::ZeroResidue(x));
        }
        Ok(pow_mod(x, self.p(), self.modulus(2)))
    }

    pub fn verify(
        &self,
        which: Conjecture,
        chunk: Option<usize>,
    ) -> Result<ConjectureReport, VerifyError> {
        let started = Instant::now();
        let p = self.p();
        let suspicious = self.stage1(chunk)?;
        let mut status = Status::Verified;
        let mut lifts_checked = 0u64;
        'outer: for s in &suspicious {
            let x = s.x.get();
            let lifts: Box<dyn Iterator<Item = u64>> = match which {
                Conjecture::One => Box::new((0..p).map(move |t| x + t * p)),
                Conjecture::Two => Box::new(std::iter::once(self.teichmuller_lift(x)?)),
            };
            for lift in lifts {
                lifts_checked += 1;
                if self.eval(lift, 2)? == 0 {
                    status = Status::Counterexample { lift };
                    break 'outer;
                }
            }
        }
        Ok(ConjectureReport {
            p,
            conjecture: which,
            status,
            suspicious,
            residues_scanned: (p - 1) / 2,
            lifts_checked,
            duration: started.elapsed(),
        })
    }
}

/// `H_p(X, 1) mod p^k` via powers mod `p^{k+1}` and one inversion.
pub fn eval_h_direct(p: u64, x: u64, k: u32) -> Result<u64, VerifyError> {
    PrimeContext::new(p)?.eval_direct(x, k)
}

/// `H_p(X, 1) mod p^k` by Horner on the coefficient vector; defined for
/// every `X`.
pub fn eval_h_horner(p: u64, x: u64, k: u32) -> Result<u64, VerifyError> {
    PrimeContext::new(p)?.eval_horner(x, k)
}

pub fn stage1_scan(p: u64) -> Result<Vec<SuspiciousResidue>, VerifyError> {
    PrimeContext::new(p)?.stage1(None)
}

/// The unique lift of `X` to mod `p²` with `lift^{p-1} ≡ 1`.
pub fn teichmuller_lift(p: u64, x: u64) -> Result<u64, VerifyError> {
    PrimeContext::new(p)?.teichmuller_lift(x)
}

pub fn verify_conjecture(p: u64, which: Conjecture) -> Result<ConjectureReport, VerifyError> {
    PrimeContext::new(p)?.verify(which, None)
}

/// The `p`-adic valuation of `2^{p-1} - 1`, exact up to 2; a stored 3 means
/// "at least 3".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct WieferichRecord {
    pub p: u64,
    pub valuation: u32,
}

impl WieferichRecord {
    pub fn violates_corollary(&self) -> bool {
        self.valuation >= 3
    }
}

pub fn wieferich_check(p: u64) -> Result<WieferichRecord, VerifyError> {
    if !crate::modmath::is_prime(p) {
        return Err(ModError::NotPrime(p).into());
    }
    let valuation = if let Ok(cube) = Modulus::prime_power(p, 3) {
        let r = pow_mod(2, p - 1, cube);
        let square = p * p;
        if r % p != 1 % p {
            0
        } else if r % square != 1 {
            1
        } else if r != 1 {
            2
        } else {
            3
        }
    } else {
        let square = Modulus::prime_power(p, 2)?;
        let r = pow_mod(2, p - 1, square);
        if r % p != 1 {
            0
        } else if r != 1 {
            1
        } else {
            let cube = BigUint::from(p).pow(3);
            let r = BigUint::from(2u32).modpow(&BigUint::from(p - 1), &cube);
            if r == BigUint::from(1u32) {
                3
            } else {
                2
            }
        }
    };
    Ok(WieferichRecord { p, valuation })
}
