//! Quadratic maps `x -> a x^2 + b x + c` and the rho shape of their critical
//! sequence `a_n = f^(n)(gamma)`, `a_0 = gamma`.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

use crate::field::{FieldCtx, Fp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("leading coefficient a must be nonzero")]
    ZeroLeadingCoefficient,
}

/// `f(X) = a X^2 + b X + c` with `a != 0`, together with its critical point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadPoly {
    ctx: FieldCtx,
    a: Fp,
    b: Fp,
    c: Fp,
    gamma: Fp,
}

impl QuadPoly {
    pub fn new(ctx: FieldCtx, a: Fp, b: Fp, c: Fp) -> Result<Self, DynamicsError> {
        if a.is_zero() {
            return Err(DynamicsError::ZeroLeadingCoefficient);
        }
        // p is odd, so 2a is invertible
        let two_a = ctx.add(a, a);
        let gamma = ctx.neg(ctx.mul(b, ctx.inv(two_a).expect("2a != 0")));
        Ok(QuadPoly {
            ctx,
            a,
            b,
            c,
            gamma,
        })
    }

    /// Convenience constructor from raw integers reduced mod `p`.
    pub fn from_u64s(ctx: FieldCtx, a: u64, b: u64, c: u64) -> Result<Self, DynamicsError> {
        QuadPoly::new(ctx, ctx.elem(a), ctx.elem(b), ctx.elem(c))
    }

    /// Same polynomial with a precomputed `(2a)^-1`, used by the census to
    /// avoid an inversion per triple.
    pub(crate) fn with_inv_two_a(ctx: FieldCtx, a: Fp, b: Fp, c: Fp, inv_two_a: Fp) -> Self {
        debug_assert!(!a.is_zero());
        let gamma = ctx.neg(ctx.mul(b, inv_two_a));
        QuadPoly {
            ctx,
            a,
            b,
            c,
            gamma,
        }
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn a(&self) -> Fp {
        self.a
    }

    pub fn b(&self) -> Fp {
        self.b
    }

    pub fn c(&self) -> Fp {
        self.c
    }

    /// The critical point `-b / 2a`.
    pub fn critical_point(&self) -> Fp {
        self.gamma
    }

    #[inline]
    pub fn apply(&self, x: Fp) -> Fp {
        // (a x + b) x + c
        let k = &self.ctx;
        k.add(k.mul(k.add(k.mul(self.a, x), self.b), x), self.c)
    }

    /// `f^(n)(x)`; `n = 0` returns `x`.
    pub fn iterate_value(&self, x: Fp, n: u64) -> Fp {
        (0..n).fold(x, |y, _| self.apply(y))
    }

    /// Derivative `2 a x + b`.
    pub fn derivative_at(&self, x: Fp) -> Fp {
        let k = &self.ctx;
        k.add(k.mul(k.add(self.a, self.a), x), self.b)
    }

    /// Rho shape of the critical sequence by Brent's cycle detection, in
    /// constant memory.
    pub fn orbit_shape(&self) -> OrbitShape {
        let (mu, lambda) = brent(self.gamma, |x| self.apply(x));
        OrbitShape::from_rho(mu, lambda)
    }

    /// Reference computation of [`QuadPoly::orbit_shape`] with a table of
    /// first-visit indices.
    pub fn orbit_shape_table(&self) -> OrbitShape {
        let mut first_seen: HashMap<Fp, u64> = HashMap::new();
        let mut x = self.gamma;
        let mut n = 0u64;
        loop {
            if let Some(&m) = first_seen.get(&x) {
                return OrbitShape::from_rho(m, n - m);
            }
            first_seen.insert(x, n);
            x = self.apply(x);
            n += 1;
        }
    }
}

/// Returns `(mu, lambda)` for the sequence `x0, g(x0), g(g(x0)), ...`.
pub fn brent<T: Copy + PartialEq>(x0: T, g: impl Fn(T) -> T) -> (u64, u64) {
    let mut power = 1u64;
    let mut lambda = 1u64;
    let mut tortoise = x0;
    let mut hare = g(x0);
    while tortoise != hare {
        if power == lambda {
            tortoise = hare;
            power *= 2;
            lambda = 0;
        }
        hare = g(hare);
        lambda += 1;
    }

    let mut tortoise = x0;
    let mut hare = x0;
    for _ in 0..lambda {
        hare = g(hare);
    }
    let mut mu = 0u64;
    while tortoise != hare {
        tortoise = g(tortoise);
        hare = g(hare);
        mu += 1;
    }
    (mu, lambda)
}

/// Rho shape of the critical sequence together with the collision indices
/// `s < t_f` (smallest `t_f` with `a_t = a_s` for some `s >= 1`) and the
/// size of the critical orbit `{a_n : n >= 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrbitShape {
    pub mu: u64,
    pub lambda: u64,
    pub s: u64,
    pub t_f: u64,
    pub orbit_size: u64,
}

impl OrbitShape {
    /// The collision source must be a positive index, so a purely periodic
    /// sequence (`mu = 0`) collides first at `(1, lambda + 1)`.
    pub fn from_rho(mu: u64, lambda: u64) -> Self {
        assert!(lambda >= 1);
        let s = mu.max(1);
        let t_f = s + lambda;
        let orbit_size = if s == 1 { t_f - 1 } else { t_f - 2 };
        OrbitShape {
            mu,
            lambda,
            s,
            t_f,
            orbit_size,
        }
    }
}
