//! Construction of `F_n`, the `W_j` table, `G_p` and `H_p`.
//!
//! All polynomials here are specialized at `y = 1`, so `G_p(x, 1)` is an
//! ordinary univariate polynomial of degree `p - 3` and `H_p(x, 1)` has
//! degree `p - 3 - 2ε`. Coefficient vectors are indexed by degree.
//!
//! Two families of representations coexist:
//!
//! * [`BigPoly`] holds exact integer coefficients and is used for the
//!   identity checks and the multiplicity test for `f = x² + x + 1`.
//! * [`ModPoly`] holds residues modulo `p^k` and is what the verifier
//!   evaluates. It is built from the O(p) binomial recurrence for
//!   `C(p, j) / p`, never from big integers.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::modmath::{inv_mod, is_prime, mul_mod, ModError, Modulus};

/// Default cap on `n` for operations that expand polynomials exactly.
pub const DEFAULT_EXACT_LIMIT: u64 = 101;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("n = {0} must be odd and at least 3")]
    BadOddIndex(u64),
    #[error("p = {0} must be a prime greater than 3")]
    NotPrimeAbove3(u64),
    #[error("precision k = {0} not supported here")]
    BadPrecision(u32),
    #[error("n = {n} exceeds the exact-arithmetic limit {limit}")]
    ExceedsExactLimit { n: u64, limit: u64 },
    #[error("inexact division while computing {0}; the construction is broken")]
    InternalInexactDivision(&'static str),
    #[error(transparent)]
    Mod(#[from] ModError),
}

/// Cap on exact polynomial expansion sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimit(pub u64);

impl Default for ExactLimit {
    fn default() -> Self {
        ExactLimit(DEFAULT_EXACT_LIMIT)
    }
}

impl ExactLimit {
    pub fn check(self, n: u64) -> Result<(), PolyError> {
        if n > self.0 {
            Err(PolyError::ExceedsExactLimit { n, limit: self.0 })
        } else {
            Ok(())
        }
    }
}

/// A prime `p > 3` together with its class modulo 6 and the multiplicity
/// `ε` of `x² + xy + y²` in `G_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeCase {
    p: u64,
    class6: i8,
    epsilon: u32,
}

impl PrimeCase {
    pub fn new(p: u64) -> Result<Self, PolyError> {
        if p <= 3 || !is_prime(p) {
            return Err(PolyError::NotPrimeAbove3(p));
        }
        let (class6, epsilon) = if p % 6 == 1 { (1, 2) } else { (-1, 1) };
        Ok(PrimeCase { p, class6, epsilon })
    }

    pub fn p(self) -> u64 {
        self.p
    }

    /// `+1` or `-1`, the residue of `p` modulo 6.
    pub fn class6(self) -> i8 {
        self.class6
    }

    pub fn epsilon(self) -> u32 {
        self.epsilon
    }

    /// Degree of `H_p(x, 1)`.
    pub fn h_degree(self) -> usize {
        (self.p - 3 - 2 * self.epsilon as u64) as usize
    }
}

/// 1 for `p ≡ 5 (mod 6)`, 2 for `p ≡ 1 (mod 6)`.
pub fn epsilon_for(p: u64) -> Result<u32, PolyError> {
    PrimeCase::new(p).map(PrimeCase::epsilon)
}

// ---------------------------------------------------------------------------
// Exact polynomials

/// Dense polynomial with exact integer coefficients. The zero polynomial has
/// no coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BigPoly {
    coeffs: Vec<BigInt>,
}

impl BigPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        BigPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        BigPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        BigPoly::default()
    }

    pub fn one() -> Self {
        BigPoly::from_i64(&[1])
    }

    /// `c · x^d`.
    pub fn monomial(c: BigInt, d: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); d + 1];
        coeffs[d] = c;
        BigPoly::new(coeffs)
    }

    /// `x + 1`.
    pub fn x_plus_one() -> Self {
        BigPoly::from_i64(&[1, 1])
    }

    /// `f(x, 1) = x² + x + 1`.
    pub fn quadratic_form() -> Self {
        BigPoly::from_i64(&[1, 1, 1])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(BigPoly::one(), |acc, _| &acc * self)
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    /// Long division by a monic divisor.
    pub fn div_rem_monic(&self, divisor: &BigPoly) -> (BigPoly, BigPoly) {
        let d = divisor.degree().expect("division by zero polynomial");
        assert!(divisor.coeffs[d].is_one(), "divisor must be monic");
        let mut rem = self.coeffs.clone();
        if rem.len() <= d {
            return (BigPoly::zero(), self.clone());
        }
        let mut quot = vec![BigInt::zero(); rem.len() - d];
        for i in (0..quot.len()).rev() {
            let q = std::mem::take(&mut rem[i + d]);
            for (j, c) in divisor.coeffs[..d].iter().enumerate() {
                rem[i + j] -= &q * c;
            }
            quot[i] = q;
        }
        rem.truncate(d);
        (BigPoly::new(quot), BigPoly::new(rem))
    }

    /// Exact quotient by a monic divisor, or `None` if the remainder is
    /// nonzero.
    pub fn div_exact_monic(&self, divisor: &BigPoly) -> Option<BigPoly> {
        let (q, r) = self.div_rem_monic(divisor);
        r.is_zero().then_some(q)
    }

    /// Divides every coefficient by `c`, or `None` if any division is inexact.
    pub fn div_exact_scalar(&self, c: &BigInt) -> Option<BigPoly> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for a in &self.coeffs {
            let (q, r) = a.div_rem(c);
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        Some(BigPoly::new(out))
    }

    /// Drops the constant term and shifts down; `None` if it was nonzero.
    pub fn div_exact_x(&self) -> Option<BigPoly> {
        match self.coeffs.first() {
            None => Some(BigPoly::zero()),
            Some(c) if c.is_zero() => Some(BigPoly::new(self.coeffs[1..].to_vec())),
            Some(_) => None,
        }
    }

    pub fn is_palindromic(&self) -> bool {
        self.coeffs.iter().eq(self.coeffs.iter().rev())
    }
}

impl Add for &BigPoly {
    type Output = BigPoly;
    fn add(self, rhs: &BigPoly) -> BigPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = BigInt::zero();
        BigPoly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + rhs.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }
}

impl Neg for &BigPoly {
    type Output = BigPoly;
    fn neg(self) -> BigPoly {
        BigPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Sub for &BigPoly {
    type Output = BigPoly;
    fn sub(self, rhs: &BigPoly) -> BigPoly {
        self + &(-rhs)
    }
}

impl Mul for &BigPoly {
    type Output = BigPoly;
    fn mul(self, rhs: &BigPoly) -> BigPoly {
        if self.is_zero() || rhs.is_zero() {
            return BigPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        BigPoly::new(out)
    }
}

/// `C(a, b)`, taken as zero when `a < 0`, `b < 0` or `a < b`.
pub fn binomial(a: i64, b: i64) -> BigInt {
    if a < 0 || b < 0 || a < b {
        return BigInt::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigInt::one();
    for i in 0..b {
        acc = acc * BigInt::from(a - i) / BigInt::from(i + 1);
    }
    acc
}

/// `F_n(x, 1) = (x + 1)^n - x^n - 1`, expanded with exact binomials.
pub fn f_exact(n: u64) -> BigPoly {
    let n = n as i64;
    let mut coeffs: Vec<BigInt> = (0..=n).map(|j| binomial(n, j)).collect();
    coeffs[0] -= 1;
    coeffs[n as usize] -= 1;
    BigPoly::new(coeffs)
}

/// The coefficients `W_0 .. W_{(n-3)/2}` of `F_n` in the mixed basis
/// `x^{i-1} y^{i-1} (x+y)^{n-2i-1}`, together with `w_j = W_j / n` when `n`
/// is prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WTable {
    pub n: u64,
    pub big_w: Vec<BigInt>,
    pub small_w: Option<Vec<BigInt>>,
}

/// Builds the `W_j` table from the recurrence
/// `W_j = C(n, j+1) - Σ_{k=1..j} [(-1)^{j+k} C(n, k) + C(n-2j+2k-3, k) W_{j-k}]`.
/// Quadratic in `n`.
pub fn w_table(n: u64) -> Result<WTable, PolyError> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(PolyError::BadOddIndex(n));
    }
    let ni = n as i64;
    let len = ((n - 3) / 2 + 1) as usize;
    let binom_n: Vec<BigInt> = (0..=ni).map(|k| binomial(ni, k)).collect();
    let mut big_w: Vec<BigInt> = Vec::with_capacity(len);
    for j in 0..len as i64 {
        let mut wj = binom_n[(j + 1) as usize].clone();
        for k in 1..=j {
            let sign_term = if (j + k) % 2 == 0 {
                binom_n[k as usize].clone()
            } else {
                -&binom_n[k as usize]
            };
            wj -= sign_term + binomial(ni - 2 * j + 2 * k - 3, k) * &big_w[(j - k) as usize];
        }
        big_w.push(wj);
    }
    let small_w = if is_prime(n) {
        let divisor = BigInt::from(n);
        big_w
            .iter()
            .map(|w| {
                let (q, r) = w.div_rem(&divisor);
                r.is_zero().then_some(q)
            })
            .collect::<Option<Vec<_>>>()
    } else {
        None
    };
    Ok(WTable { n, big_w, small_w })
}

impl WTable {
    /// `W_0 = n` and `W_{(n-3)/2} = (-1)^{(n-3)/2} n`.
    pub fn endpoints_hold(&self) -> bool {
        let n = BigInt::from(self.n);
        let last = (self.n - 3) / 2;
        let expected_last = if last.is_multiple_of(2) { n.clone() } else { -&n };
        self.big_w.first() == Some(&n) && self.big_w.last() == Some(&expected_last)
    }

    /// `x(x+1) Σ_i W_{i-1} x^{i-1} (x+1)^{n-2i-1}`, the mixed-basis side of
    /// the decomposition of `F_n(x, 1)`.
    pub fn mixed_basis_sum(&self, coeffs: &[BigInt]) -> BigPoly {
        let n = self.n as usize;
        let x1 = BigPoly::x_plus_one();
        let mut sum = BigPoly::zero();
        for (idx, c) in coeffs.iter().enumerate() {
            let i = idx + 1;
            let term = &BigPoly::monomial(c.clone(), i - 1) * &x1.pow((n - 2 * i - 1) as u32);
            sum = &sum + &term;
        }
        sum
    }
}

/// Checks `(x+1)^n - x^n - 1 = x(x+1) Σ_i W_{i-1} x^{i-1} (x+1)^{n-2i-1}`
/// exactly, using the recurrence table.
pub fn verify_identity_eq2(n: u64) -> Result<bool, PolyError> {
    verify_identity_eq2_within(n, ExactLimit::default())
}

pub fn verify_identity_eq2_within(n: u64, limit: ExactLimit) -> Result<bool, PolyError> {
    limit.check(n)?;
    let table = w_table(n)?;
    let rhs = &BigPoly::from_i64(&[0, 1, 1]) * &table.mixed_basis_sum(&table.big_w);
    Ok(rhs == f_exact(n))
}

/// `G_p(x, 1)` from the binomial expansion, `F_p(x,1) / (p x (x+1))`.
pub fn g_exact(p: u64) -> Result<BigPoly, PolyError> {
    let case = PrimeCase::new(p)?;
    g_exact_of(case, ExactLimit::default())
}

fn g_exact_of(case: PrimeCase, limit: ExactLimit) -> Result<BigPoly, PolyError> {
    limit.check(case.p)?;
    f_exact(case.p)
        .div_exact_scalar(&BigInt::from(case.p))
        .and_then(|f| f.div_exact_x())
        .and_then(|f| f.div_exact_monic(&BigPoly::x_plus_one()))
        .ok_or(PolyError::InternalInexactDivision("G_p exact"))
}

/// `G_p(x, 1) = Σ_i w_{i-1} x^{i-1} (x+1)^{p-2i-1}`, built from the
/// recurrence table instead of binomials.
pub fn g_exact_from_w_table(p: u64) -> Result<BigPoly, PolyError> {
    let case = PrimeCase::new(p)?;
    ExactLimit::default().check(p)?;
    let table = w_table(case.p)?;
    let small = table
        .small_w
        .as_ref()
        .ok_or(PolyError::InternalInexactDivision("w_j = W_j / p"))?;
    Ok(table.mixed_basis_sum(small))
}

/// `H_p(x, 1) = G_p(x, 1) / (x² + x + 1)^ε`, exactly.
pub fn h_exact(p: u64) -> Result<BigPoly, PolyError> {
    let case = PrimeCase::new(p)?;
    g_exact_of(case, ExactLimit::default())?
        .div_exact_monic(&BigPoly::quadratic_form().pow(case.epsilon))
        .ok_or(PolyError::InternalInexactDivision("H_p exact"))
}

/// True iff `f^ε` divides `G_p(x, 1)` over the integers and `f^{ε+1}` does
/// not, where `f = x² + x + 1`.
pub fn epsilon_division_check(p: u64) -> Result<bool, PolyError> {
    let case = PrimeCase::new(p)?;
    let g = g_exact_of(case, ExactLimit(200))?;
    let f = BigPoly::quadratic_form();
    let Some(h) = g.div_exact_monic(&f.pow(case.epsilon)) else {
        return Ok(false);
    };
    Ok(h.div_exact_monic(&f).is_none())
}

// ---------------------------------------------------------------------------
// Modular polynomials

/// Dense polynomial with coefficients reduced modulo `p^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModPoly {
    modulus: Modulus,
    coeffs: Vec<u64>,
}

impl ModPoly {
    pub fn new(modulus: Modulus, coeffs: Vec<u64>) -> Self {
        let coeffs = coeffs.into_iter().map(|c| modulus.reduce(c)).collect();
        ModPoly { modulus, coeffs }
    }

    pub fn from_big(poly: &BigPoly, modulus: Modulus) -> Self {
        let m = BigInt::from(modulus.get());
        let coeffs = poly
            .coeffs()
            .iter()
            .map(|c| {
                let r = c.mod_floor(&m);
                u64::try_from(r).expect("residue fits in u64")
            })
            .collect();
        ModPoly { modulus, coeffs }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Index of the last coefficient (the stored length, not trimmed of
    /// leading zeros, since a reduction can zero the leading term).
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: u64) -> u64 {
        let m = self.modulus;
        let x = m.reduce(x);
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| m.add(mul_mod(acc, x, m), c))
    }

    /// Reduces every coefficient modulo a divisor of the current modulus.
    pub fn reduce_to(&self, modulus: Modulus) -> ModPoly {
        debug_assert_eq!(self.modulus.get() % modulus.get(), 0);
        ModPoly::new(modulus, self.coeffs.clone())
    }

    /// Synthetic division by a monic divisor given low-to-high without its
    /// leading 1. Returns `None` on a nonzero remainder.
    pub fn div_exact_monic(&self, divisor_low: &[u64]) -> Option<ModPoly> {
        let m = self.modulus;
        let d = divisor_low.len();
        if self.coeffs.len() <= d {
            return self
                .coeffs
                .iter()
                .all(|&c| c == 0)
                .then(|| ModPoly::new(m, vec![]));
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0u64; rem.len() - d];
        for i in (0..quot.len()).rev() {
            let q = rem[i + d];
            rem[i + d] = 0;
            for (j, &c) in divisor_low.iter().enumerate() {
                rem[i + j] = m.sub(rem[i + j], mul_mod(q, c, m));
            }
            quot[i] = q;
        }
        rem[..d].iter().all(|&c| c == 0).then_some(ModPoly {
            modulus: m,
            coeffs: quot,
        })
    }

    pub fn is_palindromic(&self) -> bool {
        self.coeffs.iter().eq(self.coeffs.iter().rev())
    }
}

fn check_precision(k: u32, max: u32) -> Result<(), PolyError> {
    if (1..=max).contains(&k) {
        Ok(())
    } else {
        Err(PolyError::BadPrecision(k))
    }
}

/// Coefficients of `F_p(x, 1) / p` modulo `p^k`: `c_0 = 0` and
/// `c_j = C(p, j) / p = (p-1)(p-2)···(p-j+1) / j!` for `j = 1 .. p-1`.
/// One modular inversion of `(p-1)!`; the other inverse factorials follow
/// from `1/(j-1)! = j · 1/j!`.
pub fn f_p_over_p_coeffs(p: u64, k: u32) -> Result<ModPoly, PolyError> {
    let case = PrimeCase::new(p)?;
    check_precision(k, 3)?;
    let m = Modulus::prime_power(case.p, k)?;
    let n = p as usize;
    // falling[j] = (p-1)(p-2)···(p-j+1)
    let mut falling = vec![1 % m.get(); n];
    let mut factorial = 1 % m.get();
    for j in 2..n {
        falling[j] = mul_mod(falling[j - 1], m.reduce(p - j as u64 + 1), m);
    }
    for j in 2..n {
        factorial = mul_mod(factorial, m.reduce(j as u64), m);
    }
    let mut inv_fact = inv_mod(factorial, m)?;
    let mut coeffs = vec![0u64; n];
    for j in (1..n).rev() {
        coeffs[j] = mul_mod(falling[j], inv_fact, m);
        inv_fact = mul_mod(inv_fact, m.reduce(j as u64), m);
    }
    Ok(ModPoly { modulus: m, coeffs })
}

/// `G_p(x, 1)` modulo `p^k`, degree `p - 3`.
pub fn g_coeffs_mod(p: u64, k: u32) -> Result<ModPoly, PolyError> {
    check_precision(k, 2)?;
    let f = f_p_over_p_coeffs(p, k)?;
    if f.coeffs[0] != 0 {
        return Err(PolyError::InternalInexactDivision("F_p / x"));
    }
    let shifted = ModPoly {
        modulus: f.modulus,
        coeffs: f.coeffs[1..].to_vec(),
    };
    shifted
        .div_exact_monic(&[1])
        .ok_or(PolyError::InternalInexactDivision("G_p / (x + 1)"))
}

/// `H_p(x, 1)` modulo `p^k`, degree `p - 3 - 2ε`.
pub fn h_coeffs_mod(p: u64, k: u32) -> Result<ModPoly, PolyError> {
    let case = PrimeCase::new(p)?;
    let mut poly = g_coeffs_mod(p, k)?;
    for _ in 0..case.epsilon {
        poly = poly
            .div_exact_monic(&[1, 1])
            .ok_or(PolyError::InternalInexactDivision("G_p / f^ε"))?;
    }
    Ok(poly)
}
