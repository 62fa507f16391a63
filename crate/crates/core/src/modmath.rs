//! Modular arithmetic kernels over moduli below 2^63, plus deterministic
//! prime generation.
//!
//! Every residue handled here is canonical (in `[0, m)`). Products are formed
//! in a 128-bit intermediate, so nothing overflows while `m < 2^63`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use thiserror::Error;

/// Largest modulus accepted (exclusive).
pub const MODULUS_LIMIT: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModError {
    #[error("modulus {0} outside [2, 2^63)")]
    InvalidModulus(u64),
    #[error("{a} is not invertible modulo {m}")]
    NotInvertible { a: u64, m: u64 },
    #[error("valuation of zero is undefined")]
    ZeroValuation,
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: u64, hi: u64 },
}

/// A modulus `m` with `2 <= m < 2^63`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(m: u64) -> Result<Self, ModError> {
        if (2..MODULUS_LIMIT).contains(&m) {
            Ok(Modulus(m))
        } else {
            Err(ModError::InvalidModulus(m))
        }
    }

    /// `p^k`, failing if it would reach 2^63.
    pub fn prime_power(p: u64, k: u32) -> Result<Self, ModError> {
        let m = p
            .checked_pow(k)
            .filter(|&m| m < MODULUS_LIMIT)
            .ok_or(ModError::InvalidModulus(u64::MAX))?;
        Modulus::new(m)
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Reduces an arbitrary unsigned value into `[0, m)`.
    #[inline]
    pub fn reduce(self, a: u64) -> u64 {
        a % self.0
    }

    /// Normalizes a signed value into `[0, m)`.
    #[inline]
    pub fn reduce_signed(self, a: i128) -> u64 {
        a.rem_euclid(self.0 as i128) as u64
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }
}

impl std::fmt::Display for Modulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// `a · b mod m` for canonical `a, b < m`.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: Modulus) -> u64 {
    debug_assert!(a < m.0 && b < m.0);
    if m.0 <= u32::MAX as u64 {
        // both factors are below 2^32
        return a * b % m.0;
    }
    ((a as u128 * b as u128) % m.0 as u128) as u64
}

/// Square-and-multiply; `0^0 = 1`.
pub fn pow_mod(base: u64, mut exp: u64, m: Modulus) -> u64 {
    let mut result = 1 % m.0;
    let mut b = base % m.0;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        exp >>= 1;
        if exp > 0 {
            b = mul_mod(b, b, m);
        }
    }
    result
}

/// Inverse by the extended Euclidean algorithm.
pub fn inv_mod(a: u64, m: Modulus) -> Result<u64, ModError> {
    // Every Bézout coefficient lies in [-m, m] and fits in i64; q·s may not,
    // so the update wraps and the result is still exact.
    let (mut old_r, mut r) = ((a % m.0) as i64, m.0 as i64);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s.wrapping_sub(q.wrapping_mul(s)));
    }
    if old_r != 1 {
        return Err(ModError::NotInvertible { a, m: m.0 });
    }
    Ok(m.reduce_signed(old_s as i128))
}

/// Largest `v` with `p^v | n`.
pub fn p_adic_valuation(n: &BigInt, p: u64) -> Result<u32, ModError> {
    if n.is_zero() {
        return Err(ModError::ZeroValuation);
    }
    if p < 2 {
        return Err(ModError::NotPrime(p));
    }
    let p = BigInt::from(p);
    let mut rest = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = rest.div_rem(&p);
        if !r.is_zero() {
            return Ok(v);
        }
        rest = q;
        v += 1;
    }
}

/// Deterministic Miller-Rabin, exact for every `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let s = d.trailing_zeros();
    d >>= s;
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    'bases: for &a in &BASES {
        let mut x = {
            let (mut r, mut b, mut e) = (1u64, a % n, d);
            while e > 0 {
                if e & 1 == 1 {
                    r = mulmod(r, b);
                }
                b = mulmod(b, b);
                e >>= 1;
            }
            r
        };
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// The primes of a closed interval, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeRange {
    pub lo: u64,
    pub hi: u64,
    pub primes: Vec<u64>,
}

const SEGMENT: u64 = 1 << 16;

fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Segmented sieve of Eratosthenes over `[lo, hi]`.
pub fn primes_in_range(lo: u64, hi: u64) -> Result<PrimeRange, ModError> {
    if lo < 2 || lo > hi || hi >= MODULUS_LIMIT {
        return Err(ModError::InvalidRange { lo, hi });
    }
    let base = small_primes(hi.isqrt());
    let mut primes = Vec::new();
    let mut seg_lo = lo;
    let mut marks = vec![false; SEGMENT as usize];
    loop {
        let seg_hi = hi.min(seg_lo.saturating_add(SEGMENT - 1));
        let len = (seg_hi - seg_lo + 1) as usize;
        marks[..len].fill(true);
        for &q in &base {
            if q * q > seg_hi {
                break;
            }
            let mut start = seg_lo.div_ceil(q) * q;
            if start < q * q {
                start = q * q;
            }
            let mut j = start;
            while j <= seg_hi {
                marks[(j - seg_lo) as usize] = false;
                j += q;
            }
        }
        primes.extend(
            marks[..len]
                .iter()
                .enumerate()
                .filter(|&(_, &is_p)| is_p)
                .map(|(i, _)| seg_lo + i as u64),
        );
        if seg_hi == hi {
            break;
        }
        seg_lo = seg_hi + 1;
    }
    Ok(PrimeRange { lo, hi, primes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn m(v: u64) -> Modulus {
        Modulus::new(v).unwrap()
    }

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn modulus_bounds() {
        assert!(Modulus::new(1).is_err());
        assert!(Modulus::new(1 << 63).is_err());
        assert!(Modulus::new((1 << 63) - 1).is_ok());
        assert_eq!(Modulus::prime_power(1093, 3).unwrap().get(), 1093u64.pow(3));
        assert!(Modulus::prime_power(3_000_000, 3).is_err());
    }

    #[test]
    fn mul_mod_examples() {
        assert_eq!(mul_mod(0, 5, m(7)), 0);
        assert_eq!(mul_mod(3, 17, m(25)), 1);
        let modulus = 1_000_000_000_000_037u64;
        let exact = BigUint::from(1_000_000_000u64) * BigUint::from(1_000_000_000u64)
            % BigUint::from(modulus);
        assert_eq!(
            BigUint::from(mul_mod(1_000_000_000, 1_000_000_000, m(modulus))),
            exact
        );
    }

    #[test]
    fn pow_mod_examples() {
        assert_eq!(pow_mod(2, 4, m(1093)), 16);
        assert_eq!(pow_mod(2, 1092, m(1093 * 1093)), 1);
        let cube = 1093u64.pow(3);
        let oracle = BigUint::from(2u32).modpow(&BigUint::from(1092u32), &BigUint::from(cube));
        let got = pow_mod(2, 1092, m(cube));
        assert_eq!(BigUint::from(got), oracle);
        assert_ne!(got, 1);
        assert_eq!(pow_mod(0, 0, m(7)), 1);
        assert_eq!(pow_mod(5, 0, m(2)), 1);
    }

    #[test]
    fn inv_mod_examples() {
        assert_eq!(inv_mod(1, m(97)).unwrap(), 1);
        assert_eq!(inv_mod(3, m(25)).unwrap(), 17);
        assert_eq!(
            inv_mod(13, m(169)),
            Err(ModError::NotInvertible { a: 13, m: 169 })
        );
        assert!(inv_mod(0, m(5)).is_err());
        let big = (1u64 << 63) - 25; // odd, near the modulus limit
        for a in [2u64, 3, 1 << 62, big - 1] {
            let inv = inv_mod(a, m(big)).unwrap();
            assert_eq!(mul_mod(a, inv, m(big)), 1);
        }
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(p_adic_valuation(&BigInt::from(8), 2).unwrap(), 3);
        assert_eq!(p_adic_valuation(&BigInt::from(10), 3).unwrap(), 0);
        assert_eq!(p_adic_valuation(&BigInt::from(-75), 5).unwrap(), 2);
        let n = (BigInt::from(1) << 1092usize) - 1;
        assert_eq!(p_adic_valuation(&n, 1093).unwrap(), 2);
        assert_eq!(
            p_adic_valuation(&BigInt::from(0), 3),
            Err(ModError::ZeroValuation)
        );
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(
            primes_in_range(2, 20).unwrap().primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19]
        );
        assert_eq!(
            primes_in_range(100_000, 100_010).unwrap().primes,
            vec![100_003]
        );
        assert!(primes_in_range(24, 28).unwrap().primes.is_empty());
        assert!(primes_in_range(1, 10).is_err());
        assert!(primes_in_range(10, 9).is_err());
    }

    #[test]
    fn sieve_matches_trial_division_to_one_million() {
        let r = primes_in_range(2, 1_000_000).unwrap();
        assert_eq!(r.primes.len(), 78_498);
        assert!(r.primes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.primes.iter().all(|&p| trial_division(p)));
        // and nothing missed across segment boundaries
        let expected: Vec<u64> = (SEGMENT - 50..SEGMENT * 3 + 50)
            .filter(|&n| trial_division(n))
            .collect();
        assert_eq!(
            primes_in_range(SEGMENT - 50, SEGMENT * 3 + 49)
                .unwrap()
                .primes,
            expected
        );
    }

    #[test]
    fn miller_rabin_known_values() {
        assert!(is_prime(1093));
        assert!(is_prime(100_003));
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to 2, 3, 5, 7
        assert!(!is_prime(1));
        for n in 0..5000 {
            assert_eq!(is_prime(n), trial_division(n), "n = {n}");
        }
    }

    proptest! {
        #[test]
        fn mul_mod_matches_bigint(a in 0u64..(1 << 62), b in 0u64..(1 << 62), modulus in 2u64..(1 << 63)) {
            let (a, b) = (a % modulus, b % modulus);
            let exact = BigUint::from(a) * BigUint::from(b) % BigUint::from(modulus);
            prop_assert_eq!(BigUint::from(mul_mod(a, b, m(modulus))), exact);
        }

        #[test]
        fn fermat_little_theorem(idx in 0usize..1000, a in 1u64..u64::MAX) {
            let p = primes_in_range(3, 10_000).unwrap().primes[idx % 1228];
            let a = a % p;
            prop_assume!(a != 0);
            prop_assert_eq!(pow_mod(a, p - 1, m(p)), 1);
        }

        #[test]
        fn inverse_exists_iff_coprime(a in 0u64..1_000_000, modulus in 2u64..1_000_000) {
            let a = a % modulus;
            match inv_mod(a, m(modulus)) {
                Ok(inv) => {
                    prop_assert_eq!(a.gcd(&modulus), 1);
                    prop_assert_eq!(mul_mod(a, inv, m(modulus)), 1 % modulus);
                }
                Err(_) => prop_assert!(a.gcd(&modulus) > 1),
            }
        }
    }
}
