//! Verification engine for the claim that `p²` never divides
//! `H_p(x, y) = ((x+y)^p - x^p - y^p) / (p x y (x+y) (x² + xy + y²)^ε)`.
//!
//! * [`modmath`]: modular kernels below 2^63 and prime generation.
//! * [`poly`]: `F_n`, the `W_j` table, `G_p` and `H_p`, exact and mod `p^k`.
//! * [`verifier`]: the two-stage residue scan and the `2^{p-1} - 1` valuation check.
//! * [`oracle`]: big-integer cross-checks and the lemma scans.

pub mod modmath;
pub mod oracle;
pub mod poly;
pub mod verifier;

pub use modmath::{
    inv_mod, mul_mod, p_adic_valuation, pow_mod, primes_in_range, Modulus, PrimeRange,
};
pub use poly::{epsilon_for, BigPoly, ModPoly, PrimeCase, WTable};
pub use verifier::{
    Conjecture, ConjectureReport, PrimeContext, Status, SuspiciousResidue, WieferichRecord,
};
