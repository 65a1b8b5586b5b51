//! Arithmetic in prime fields `F_p` for odd primes `p < 2^62`.
//!
//! A [`FieldCtx`] owns the modulus and the constants needed for reduction;
//! elements ([`Fp`]) are plain canonical residues and carry no reference to
//! their field, so every operation goes through the context.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::primality;

/// Exclusive upper bound on supported moduli.
pub const MAX_MODULUS: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is composite")]
    CompositeModulus(u64),
    #[error("modulus 2 is even; only odd characteristic is supported")]
    EvenModulus,
    #[error("modulus {0} is out of range (need 3 <= p < 2^62)")]
    OutOfRange(u64),
    #[error("inverse of zero")]
    DivisionByZero,
}

/// A canonical residue in `[0, p)`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Fp(pub(crate) u64);

impl Fp {
    pub const ZERO: Fp = Fp(0);

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An odd prime field. Immutable and `Copy`; share freely across threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldCtx {
    p: u64,
    /// `(p - 1) / 2`, the Euler-criterion exponent.
    half: u64,
    /// `p < 2^32`: products fit in a `u64` and reduce with a native division.
    narrow: bool,
}

impl FieldCtx {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p == 2 {
            return Err(FieldError::EvenModulus);
        }
        if !(3..MAX_MODULUS).contains(&p) {
            return Err(FieldError::OutOfRange(p));
        }
        if !primality::is_prime(p) {
            return Err(FieldError::CompositeModulus(p));
        }
        Ok(FieldCtx {
            p,
            half: (p - 1) / 2,
            narrow: p < (1 << 32),
        })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn elem(&self, v: u64) -> Fp {
        Fp(v % self.p)
    }

    pub fn elem_i64(&self, v: i64) -> Fp {
        Fp(v.rem_euclid(self.p as i64) as u64)
    }

    /// Iterator over all field elements in increasing order.
    pub fn elements(&self) -> impl Iterator<Item = Fp> + Clone {
        (0..self.p).map(Fp)
    }

    #[inline]
    pub fn one(&self) -> Fp {
        Fp(1)
    }

    /// `p - 1`, i.e. `-1`.
    #[inline]
    pub fn minus_one(&self) -> Fp {
        Fp(self.p - 1)
    }

    #[inline]
    pub fn add(&self, x: Fp, y: Fp) -> Fp {
        // p < 2^62, so the sum cannot overflow
        let s = x.0 + y.0;
        Fp(if s >= self.p { s - self.p } else { s })
    }

    #[inline]
    pub fn sub(&self, x: Fp, y: Fp) -> Fp {
        Fp(if x.0 >= y.0 {
            x.0 - y.0
        } else {
            x.0 + self.p - y.0
        })
    }

    #[inline]
    pub fn neg(&self, x: Fp) -> Fp {
        Fp(if x.0 == 0 { 0 } else { self.p - x.0 })
    }

    #[inline]
    pub fn mul(&self, x: Fp, y: Fp) -> Fp {
        if self.narrow {
            Fp(x.0 * y.0 % self.p)
        } else {
            Fp((x.0 as u128 * y.0 as u128 % self.p as u128) as u64)
        }
    }

    #[inline]
    pub fn sqr(&self, x: Fp) -> Fp {
        self.mul(x, x)
    }

    /// Left-to-right square and multiply.
    pub fn pow(&self, x: Fp, exp: u64) -> Fp {
        if exp == 0 {
            return Fp(1);
        }
        let mut acc = x;
        for bit in (0..63 - exp.leading_zeros()).rev() {
            acc = self.sqr(acc);
            if (exp >> bit) & 1 == 1 {
                acc = self.mul(acc, x);
            }
        }
        acc
    }

    /// Inverse by the extended Euclidean algorithm.
    pub fn inv(&self, x: Fp) -> Result<Fp, FieldError> {
        if x.0 == 0 {
            return Err(FieldError::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.p as i128, x.0 as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(Fp(t0.rem_euclid(self.p as i128) as u64))
    }

    pub fn div(&self, x: Fp, y: Fp) -> Result<Fp, FieldError> {
        Ok(self.mul(x, self.inv(y)?))
    }

    /// Quadratic character by Euler's criterion: `x^((p-1)/2)` mapped to
    /// `{-1, 0, 1}`.
    pub fn quadratic_character(&self, x: Fp) -> i8 {
        if x.0 == 0 {
            return 0;
        }
        let e = self.pow(x, self.half);
        if e.0 == 1 {
            1
        } else {
            debug_assert_eq!(e.0, self.p - 1);
            -1
        }
    }

    /// Quadratic character through the Jacobi symbol `(x / p)`. Agrees with
    /// [`FieldCtx::quadratic_character`] everywhere, and is cheaper for
    /// large moduli.
    pub fn jacobi_character(&self, x: Fp) -> i8 {
        jacobi(x.0, self.p)
    }

    /// Zero counts as a square.
    #[inline]
    pub fn is_square(&self, x: Fp) -> bool {
        self.quadratic_character(x) >= 0
    }
}

/// Jacobi symbol `(a / n)` for odd `n`.
fn jacobi(mut a: u64, mut n: u64) -> i8 {
    debug_assert!(n & 1 == 1);
    a %= n;
    let mut sign = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        // (2/n) = -1 iff n = 3, 5 mod 8
        if tz & 1 == 1 && matches!(n & 7, 3 | 5) {
            sign = -sign;
        }
        if a & n & 3 == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7() -> FieldCtx {
        FieldCtx::new(7).unwrap()
    }

    #[test]
    fn construction() {
        assert_eq!(f7().p(), 7);
        assert_eq!(FieldCtx::new(9), Err(FieldError::CompositeModulus(9)));
        assert_eq!(FieldCtx::new(2), Err(FieldError::EvenModulus));
        assert_eq!(FieldCtx::new(1), Err(FieldError::OutOfRange(1)));
        assert_eq!(FieldCtx::new(0), Err(FieldError::OutOfRange(0)));
        assert_eq!(FieldCtx::new(4), Err(FieldError::CompositeModulus(4)));
        assert_eq!(
            FieldCtx::new(MAX_MODULUS + 3),
            Err(FieldError::OutOfRange(MAX_MODULUS + 3))
        );
        assert!(FieldCtx::new(MAX_MODULUS - 57).is_ok());
    }

    #[test]
    fn small_field_arithmetic() {
        let k = f7();
        assert_eq!(k.inv(k.elem(3)).unwrap(), k.elem(5));
        assert_eq!(k.pow(k.elem(3), 3), k.elem(6));
        assert_eq!(k.sub(k.elem(2), k.elem(5)), k.elem(4));
        assert_eq!(k.inv(Fp::ZERO), Err(FieldError::DivisionByZero));
        assert_eq!(k.pow(Fp::ZERO, 0), k.one());
        assert_eq!(k.elem_i64(-3), k.elem(4));
    }

    #[test]
    fn characters_mod_7() {
        let k = f7();
        assert_eq!(k.quadratic_character(k.elem(2)), 1);
        assert_eq!(k.quadratic_character(k.elem(3)), -1);
        assert_eq!(k.quadratic_character(Fp::ZERO), 0);
        assert!(k.is_square(Fp::ZERO));
        assert!(k.is_square(k.elem(2)));
        assert!(!k.is_square(k.elem(3)));
    }

    #[test]
    fn wide_modulus_arithmetic() {
        let p = MAX_MODULUS - 57;
        let k = FieldCtx::new(p).unwrap();
        let x = k.elem(p - 2);
        // (-2)^2 = 4
        assert_eq!(k.sqr(x), k.elem(4));
        let y = k.elem(123_456_789_012_345);
        assert_eq!(k.mul(y, k.inv(y).unwrap()), k.one());
        // Fermat
        assert_eq!(k.pow(y, p - 1), k.one());
        assert_eq!(k.quadratic_character(y), k.jacobi_character(y));
    }

    fn brute_squares(p: u64) -> Vec<bool> {
        let mut sq = vec![false; p as usize];
        for x in 0..p {
            sq[(x * x % p) as usize] = true;
        }
        sq
    }

    #[test]
    fn character_matches_brute_force_and_counts() {
        for p in (3..=1009u64).filter(|&p| primality::is_prime(p)) {
            let k = FieldCtx::new(p).unwrap();
            let sq = brute_squares(p);
            let mut count = 0;
            for x in k.elements() {
                let chi = k.quadratic_character(x);
                assert_eq!(chi, k.jacobi_character(x), "p={p} x={x}");
                assert_eq!(chi >= 0, sq[x.value() as usize], "p={p} x={x}");
                count += k.is_square(x) as u64;
            }
            assert_eq!(count, p.div_ceil(2));
        }
    }

    #[test]
    fn multiplicativity_small_primes() {
        for p in (3..=101u64).filter(|&p| primality::is_prime(p)) {
            let k = FieldCtx::new(p).unwrap();
            for x in k.elements().skip(1) {
                for y in k.elements().skip(1) {
                    assert_eq!(
                        k.quadratic_character(k.mul(x, y)),
                        k.quadratic_character(x) * k.quadratic_character(y)
                    );
                }
            }
        }
    }
}
