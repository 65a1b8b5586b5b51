//! Dense univariate polynomials over `F_p`.
//!
//! This is the symbolic side of the crate: it builds iterates `f^(n)` as
//! explicit polynomials and decides irreducibility, which makes it an
//! independent oracle for the orbit-based stability test.

use thiserror::Error;

use crate::dynamics::QuadPoly;
use crate::field::{FieldCtx, Fp};
use crate::primality::prime_divisors;

/// Default cap on the iterate index accepted by [`compose_iterate`]; the
/// iterate has `2^n + 1` coefficients.
pub const DEFAULT_ITERATE_CAP: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("iterate index {requested} exceeds cap {cap}")]
    IterateCapExceeded { requested: u32, cap: u32 },
    #[error("polynomial has degree < 1")]
    ConstantPolynomial,
}

/// Coefficients lowest degree first, with no trailing zeros. The zero
/// polynomial has no coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    coeffs: Vec<Fp>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Fp) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// The monomial `X`.
    pub fn x() -> Self {
        Poly {
            coeffs: vec![Fp::ZERO, Fp(1)],
        }
    }

    pub fn from_coeffs(mut coeffs: Vec<Fp>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    /// Builds from raw integers, reducing each mod `p`.
    pub fn from_u64s(ctx: &FieldCtx, coeffs: &[u64]) -> Self {
        Poly::from_coeffs(coeffs.iter().map(|&c| ctx.elem(c)).collect())
    }

    pub fn coeffs(&self) -> &[Fp] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<Fp> {
        self.coeffs.last().copied()
    }

    pub fn eval(&self, ctx: &FieldCtx, x: Fp) -> Fp {
        self.coeffs
            .iter()
            .rev()
            .fold(Fp::ZERO, |acc, &c| ctx.add(ctx.mul(acc, x), c))
    }

    pub fn add(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let (long, short) = if self.coeffs.len() >= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = long.coeffs.clone();
        for (o, &s) in out.iter_mut().zip(&short.coeffs) {
            *o = ctx.add(*o, s);
        }
        Poly::from_coeffs(out)
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        self.add(ctx, &other.scale(ctx, ctx.minus_one()))
    }

    pub fn scale(&self, ctx: &FieldCtx, k: Fp) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|&c| ctx.mul(c, k)).collect())
    }

    /// Schoolbook product.
    pub fn mul(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Fp::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &x) in self.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, &y) in other.coeffs.iter().enumerate() {
                out[i + j] = ctx.add(out[i + j], ctx.mul(x, y));
            }
        }
        Poly::from_coeffs(out)
    }

    /// Scales to leading coefficient one. The zero polynomial is returned
    /// unchanged.
    pub fn monic(&self, ctx: &FieldCtx) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some(lc) => self.scale(ctx, ctx.inv(lc).expect("leading coefficient is nonzero")),
        }
    }

    /// Quotient and remainder. Panics if `divisor` is zero.
    pub fn div_rem(&self, ctx: &FieldCtx, divisor: &Poly) -> (Poly, Poly) {
        let d = divisor.degree().expect("division by the zero polynomial");
        let lc_inv = ctx
            .inv(divisor.coeffs[d])
            .expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        if rem.len() <= d {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![Fp::ZERO; rem.len() - d];
        for i in (d..rem.len()).rev() {
            let q = ctx.mul(rem[i], lc_inv);
            if q.is_zero() {
                continue;
            }
            quot[i - d] = q;
            for (j, &c) in divisor.coeffs.iter().enumerate() {
                let k = i - d + j;
                rem[k] = ctx.sub(rem[k], ctx.mul(q, c));
            }
        }
        rem.truncate(d);
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    pub fn rem(&self, ctx: &FieldCtx, divisor: &Poly) -> Poly {
        self.div_rem(ctx, divisor).1
    }

    pub fn mul_mod(&self, ctx: &FieldCtx, other: &Poly, modulus: &Poly) -> Poly {
        self.mul(ctx, other).rem(ctx, modulus)
    }

    /// `self^exp mod modulus` by square and multiply.
    pub fn pow_mod(&self, ctx: &FieldCtx, mut exp: u64, modulus: &Poly) -> Poly {
        let mut base = self.rem(ctx, modulus);
        let mut acc = Poly::constant(ctx.one()).rem(ctx, modulus);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul_mod(ctx, &base, modulus);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul_mod(ctx, &base, modulus);
            }
        }
        acc
    }

    /// Monic greatest common divisor (zero if both inputs are zero).
    pub fn gcd(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(ctx, &b);
            a = b;
            b = r;
        }
        a.monic(ctx)
    }
}

/// Symbolic iterate `f^(n)`, with `f^(0) = X`.
pub fn compose_iterate(f: &QuadPoly, n: u32) -> Result<Poly, PolyError> {
    compose_iterate_capped(f, n, DEFAULT_ITERATE_CAP)
}

pub fn compose_iterate_capped(f: &QuadPoly, n: u32, cap: u32) -> Result<Poly, PolyError> {
    if n > cap {
        return Err(PolyError::IterateCapExceeded { requested: n, cap });
    }
    let mut g = Poly::x();
    for _ in 0..n {
        g = apply_quadratic(f, &g);
    }
    Ok(g)
}

/// `f(g) = a g^2 + b g + c`.
pub fn apply_quadratic(f: &QuadPoly, g: &Poly) -> Poly {
    let ctx = f.ctx();
    let sq = g.mul(ctx, g);
    sq.scale(ctx, f.a())
        .add(ctx, &g.scale(ctx, f.b()))
        .add(ctx, &Poly::constant(f.c()))
}

/// Rabin's irreducibility test: a polynomial `g` of degree `n` is
/// irreducible iff `g | X^(p^n) - X` and `gcd(g, X^(p^(n/r)) - X) = 1` for
/// every prime `r | n`.
pub fn is_irreducible(g: &Poly, ctx: &FieldCtx) -> Result<bool, PolyError> {
    let n = match g.degree() {
        Some(d) if d >= 1 => d,
        _ => return Err(PolyError::ConstantPolynomial),
    };
    if n == 1 {
        return Ok(true);
    }
    let g = g.monic(ctx);
    let x = Poly::x();
    let p = ctx.p();

    let divisors = prime_divisors(n as u64);
    let mut checkpoints: Vec<usize> = divisors.iter().map(|&r| n / r as usize).collect();
    checkpoints.sort_unstable();

    // frob = X^(p^i) mod g
    let mut frob = x.clone();
    let mut next = checkpoints.into_iter().peekable();
    for i in 1..=n {
        frob = frob.pow_mod(ctx, p, &g);
        while next.next_if_eq(&i).is_some() {
            let h = frob.sub(ctx, &x);
            if g.gcd(ctx, &h).degree() != Some(0) {
                return Ok(false);
            }
        }
    }
    Ok(frob.sub(ctx, &x).rem(ctx, &g).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quad(p: u64, a: u64, b: u64, c: u64) -> QuadPoly {
        let ctx = FieldCtx::new(p).unwrap();
        QuadPoly::new(ctx, ctx.elem(a), ctx.elem(b), ctx.elem(c)).unwrap()
    }

    #[test]
    fn iterates_of_x2_plus_1_mod_3() {
        let f = quad(3, 1, 0, 1);
        let ctx = *f.ctx();
        assert_eq!(compose_iterate(&f, 0).unwrap(), Poly::x());
        assert_eq!(
            compose_iterate(&f, 1).unwrap(),
            Poly::from_u64s(&ctx, &[1, 0, 1])
        );
        assert_eq!(
            compose_iterate(&f, 2).unwrap(),
            Poly::from_u64s(&ctx, &[2, 0, 2, 0, 1])
        );
        assert_eq!(
            compose_iterate(&f, 21),
            Err(PolyError::IterateCapExceeded {
                requested: 21,
                cap: 20
            })
        );
        assert_eq!(
            compose_iterate_capped(&f, 3, 2),
            Err(PolyError::IterateCapExceeded {
                requested: 3,
                cap: 2
            })
        );
    }

    #[test]
    fn irreducibility_examples() {
        let f3 = FieldCtx::new(3).unwrap();
        let f5 = FieldCtx::new(5).unwrap();
        let f7 = FieldCtx::new(7).unwrap();
        assert!(is_irreducible(&Poly::from_u64s(&f3, &[1, 0, 1]), &f3).unwrap());
        assert!(!is_irreducible(&Poly::from_u64s(&f7, &[5, 0, 1]), &f7).unwrap());
        assert!(is_irreducible(&Poly::x(), &f5).unwrap());
        assert!(is_irreducible(&Poly::from_u64s(&f3, &[2, 0, 2, 0, 1]), &f3).unwrap());
        assert_eq!(
            is_irreducible(&Poly::constant(f5.one()), &f5),
            Err(PolyError::ConstantPolynomial)
        );
        assert_eq!(
            is_irreducible(&Poly::zero(), &f5),
            Err(PolyError::ConstantPolynomial)
        );
        // product of two irreducible quadratics mod 3 has no roots but is reducible
        let q = Poly::from_u64s(&f3, &[1, 0, 1]);
        let r = Poly::from_u64s(&f3, &[2, 1, 1]);
        assert!(!is_irreducible(&q.mul(&f3, &r), &f3).unwrap());
    }

    #[test]
    fn div_rem_reconstructs() {
        let k = FieldCtx::new(11).unwrap();
        let a = Poly::from_u64s(&k, &[3, 1, 4, 1, 5, 9, 2, 6]);
        let b = Poly::from_u64s(&k, &[5, 3, 5]);
        let (q, r) = a.div_rem(&k, &b);
        assert!(r.degree().is_none_or(|d| d < 2));
        assert_eq!(q.mul(&k, &b).add(&k, &r), a);
    }

    /// Trial division by every monic polynomial of degree 1..=deg/2.
    fn brute_irreducible(g: &Poly, ctx: &FieldCtx) -> bool {
        let n = g.degree().unwrap();
        let p = ctx.p();
        for d in 1..=n / 2 {
            let count = p.pow(d as u32);
            for idx in 0..count {
                let mut coeffs = Vec::with_capacity(d + 1);
                let mut t = idx;
                for _ in 0..d {
                    coeffs.push(ctx.elem(t % p));
                    t /= p;
                }
                coeffs.push(ctx.one());
                if g.rem(ctx, &Poly::from_coeffs(coeffs)).is_zero() {
                    return false;
                }
            }
        }
        true
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn rabin_matches_trial_division(
            pi in 0usize..5,
            raw in proptest::collection::vec(0u64..13, 2..=9),
        ) {
            let p = [3u64, 5, 7, 11, 13][pi];
            let ctx = FieldCtx::new(p).unwrap();
            let g = Poly::from_u64s(&ctx, &raw);
            prop_assume!(g.degree().is_some_and(|d| d >= 1));
            prop_assert_eq!(is_irreducible(&g, &ctx).unwrap(), brute_irreducible(&g, &ctx));
        }

        #[test]
        fn iterate_degree_is_power_of_two(a in 1u64..13, b in 0u64..13, c in 0u64..13, n in 0u32..8) {
            let f = quad(13, a, b, c);
            prop_assert_eq!(compose_iterate(&f, n).unwrap().degree(), Some(1usize << n));
        }
    }
}
