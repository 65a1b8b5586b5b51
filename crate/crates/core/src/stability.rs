//! Stability of quadratic polynomials via their adjusted critical orbit.
//!
//! Writing `f = a (X - gamma)^2 + f(gamma)`, the iterate `f^(n)` is
//! irreducible, given that `f^(n-1)` is, exactly when `a * f^(n)(gamma)` is a
//! non-square (for `n >= 2`), and `f` itself is irreducible exactly when
//! `-a * f(gamma)` is a non-square. For a square leading coefficient (in
//! particular monic `f`) the factor `a` does not change any character value
//! and the test reduces to the classical one: `f` is stable iff the set
//! `{-f(gamma)} U {f^(n)(gamma) : n >= 2}` contains no squares.
//!
//! [`Criterion::Literal`] applies that classical set to every `f` regardless
//! of `a`. Since this is only one-sided in general, it can answer
//! [`Status::Indeterminate`].

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::dynamics::{OrbitShape, QuadPoly};
use crate::field::Fp;
use crate::poly::{apply_quadratic, is_irreducible, Poly, PolyError, DEFAULT_ITERATE_CAP};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Orbit values scaled by the leading coefficient. Exact for every `f`.
    #[default]
    Normalized,
    /// Unscaled adjusted orbit with a level-one root check.
    Literal,
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normalized" => Ok(Criterion::Normalized),
            "literal" => Ok(Criterion::Literal),
            other => Err(format!(
                "unknown criterion `{other}` (expected normalized|literal)"
            )),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Normalized => "normalized",
            Criterion::Literal => "literal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Stable,
    NotStable,
    Indeterminate,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Outcome of [`stability_test`].
///
/// `witness_index` is `1` for the adjusted element `-f(gamma)` and `n >= 2`
/// for the orbit element `f^(n)(gamma)`; `witness_value` is that element.
/// `scanned` counts character evaluations and never exceeds `t_f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub status: Status,
    pub witness_index: Option<u64>,
    pub witness_value: Option<Fp>,
    pub scanned: u64,
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        self.status == Status::Stable
    }
}

/// Exact stability test with early exit; see the module docs.
pub fn stability_test(f: &QuadPoly) -> StabilityVerdict {
    stability_test_with(f, Criterion::Normalized)
}

pub fn stability_test_with(f: &QuadPoly, criterion: Criterion) -> StabilityVerdict {
    let ctx = f.ctx();
    let adjusted = ctx.neg(f.apply(f.critical_point()));
    let mut scanned = 1;
    // f has a root iff -f(gamma)/a is a square, iff a * (-f(gamma)) is
    let level_one_reducible = ctx.is_square(ctx.mul(f.a(), adjusted));

    let verdict = |status, witness: Option<(u64, Fp)>, scanned| StabilityVerdict {
        status,
        witness_index: witness.map(|w| w.0),
        witness_value: witness.map(|w| w.1),
        scanned,
    };

    match criterion {
        Criterion::Normalized => {
            if level_one_reducible {
                return verdict(Status::NotStable, Some((1, adjusted)), scanned);
            }
            match first_square_in_orbit(f, f.a(), &mut scanned) {
                Some(w) => verdict(Status::NotStable, Some(w), scanned),
                None => verdict(Status::Stable, None, scanned),
            }
        }
        Criterion::Literal => {
            let adjusted_square = ctx.is_square(adjusted);
            if adjusted_square && level_one_reducible {
                return verdict(Status::NotStable, Some((1, adjusted)), scanned);
            }
            match first_square_in_orbit(f, ctx.one(), &mut scanned) {
                Some(w) => verdict(Status::NotStable, Some(w), scanned),
                None if adjusted_square => {
                    verdict(Status::Indeterminate, Some((1, adjusted)), scanned)
                }
                None => verdict(Status::Stable, None, scanned),
            }
        }
    }
}

/// Orbit elements remembered before falling back to Brent's algorithm to
/// locate `t_f`.
const SEEN_BUFFER: usize = 32;

/// Walks `f^(n)(gamma)` for `n = 2, 3, ...`, evaluating the character of
/// `twist * f^(n)(gamma)` once per distinct orbit element, and returns the
/// first index where it is `>= 0`.
///
/// Orbit closure is detected exactly: the first few elements are kept in a
/// small buffer, and if the orbit outlives the buffer its shape is computed
/// once by cycle detection (no character evaluations) to bound the walk.
fn first_square_in_orbit(f: &QuadPoly, twist: Fp, scanned: &mut u64) -> Option<(u64, Fp)> {
    let ctx = f.ctx();
    let mut check = |n: u64, x: Fp| {
        *scanned += 1;
        ctx.is_square(ctx.mul(twist, x)).then_some((n, x))
    };

    let mut seen = [Fp::ZERO; SEEN_BUFFER];
    let mut x = f.apply(f.critical_point());
    seen[0] = x;
    let mut len = 1;
    let mut shape: Option<OrbitShape> = None;
    let mut n = 1u64;
    loop {
        n += 1;
        x = f.apply(x);
        // Some(s) when n == t_f and a_n = a_s
        let closes = match shape {
            Some(sh) => (n == sh.t_f).then_some(sh.s),
            None => {
                let hit = seen[..len]
                    .iter()
                    .position(|&y| y == x)
                    .map(|i| i as u64 + 1);
                if hit.is_none() {
                    if len < SEEN_BUFFER {
                        seen[len] = x;
                        len += 1;
                    } else {
                        shape = Some(f.orbit_shape());
                    }
                }
                hit
            }
        };
        if let Some(s) = closes {
            // a_1 is not part of the orbit until it recurs at t_f
            return if s == 1 { check(n, x) } else { None };
        }
        if let Some(w) = check(n, x) {
            return Some(w);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleOutcome {
    AllIrreducibleUpToDepth(u32),
    ReducibleAt(u32),
}

/// Builds `f^(1), ..., f^(depth)` symbolically and tests each for
/// irreducibility. One-sided: passing every level does not prove stability.
pub fn stability_oracle(f: &QuadPoly, depth: u32) -> Result<OracleOutcome, PolyError> {
    if depth > DEFAULT_ITERATE_CAP {
        return Err(PolyError::IterateCapExceeded {
            requested: depth,
            cap: DEFAULT_ITERATE_CAP,
        });
    }
    let ctx = f.ctx();
    let mut g = Poly::x();
    for n in 1..=depth {
        g = apply_quadratic(f, &g);
        if !is_irreducible(&g, ctx)? {
            return Ok(OracleOutcome::ReducibleAt(n));
        }
    }
    Ok(OracleOutcome::AllIrreducibleUpToDepth(depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldCtx;
    use std::collections::BTreeSet;

    fn quad(p: u64, a: u64, b: u64, c: u64) -> QuadPoly {
        QuadPoly::from_u64s(FieldCtx::new(p).unwrap(), a, b, c).unwrap()
    }

    #[test]
    fn verdict_examples() {
        let v = stability_test(&quad(3, 1, 0, 1));
        assert_eq!(v.status, Status::Stable);
        assert_eq!(v.witness_index, None);

        let v = stability_test(&quad(7, 1, 0, 5));
        assert_eq!(v.status, Status::NotStable);
        assert_eq!(v.witness_index, Some(1));
        assert_eq!(v.witness_value.unwrap().value(), 2);

        let v = stability_test(&quad(5, 1, 0, 0));
        assert_eq!(v.status, Status::NotStable);
        assert_eq!(v.witness_index, Some(1));
        assert_eq!(v.witness_value.unwrap().value(), 0);
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(
            stability_oracle(&quad(3, 1, 0, 1), 2),
            Ok(OracleOutcome::AllIrreducibleUpToDepth(2))
        );
        assert_eq!(
            stability_oracle(&quad(7, 1, 0, 5), 1),
            Ok(OracleOutcome::ReducibleAt(1))
        );
        assert_eq!(
            stability_oracle(&quad(5, 1, 0, 1), 1),
            Ok(OracleOutcome::ReducibleAt(1))
        );
        assert_eq!(
            stability_oracle(&quad(5, 1, 0, 1), 21),
            Err(PolyError::IterateCapExceeded {
                requested: 21,
                cap: 20
            })
        );
    }

    #[test]
    fn non_square_leading_coefficient() {
        // 2X^2 + 2 over F_3 is conjugate to X^2 + 1 by x -> 2x
        let f = quad(3, 2, 0, 2);
        assert_eq!(stability_test(&f).status, Status::Stable);
        assert_eq!(
            stability_oracle(&f, 6),
            Ok(OracleOutcome::AllIrreducibleUpToDepth(6))
        );
        let lit = stability_test_with(&f, Criterion::Literal);
        assert_eq!(lit.status, Status::NotStable);
        assert_eq!(lit.witness_index, Some(2));
    }

    /// Verdict from a fully materialized orbit, without early exit.
    fn reference_verdict(f: &QuadPoly, criterion: Criterion) -> (Status, Option<u64>) {
        let ctx = f.ctx();
        let shape = f.orbit_shape_table();
        let gamma = f.critical_point();
        let adjusted = ctx.neg(f.apply(gamma));
        let twist = match criterion {
            Criterion::Normalized => f.a(),
            Criterion::Literal => ctx.one(),
        };
        let level_one = ctx.is_square(ctx.mul(f.a(), adjusted));
        let adj_sq = ctx.is_square(ctx.mul(twist, adjusted));
        let orbit: Vec<(u64, Fp)> = (2..=shape.t_f)
            .map(|n| (n, f.iterate_value(gamma, n)))
            .collect();
        let distinct: BTreeSet<Fp> = orbit.iter().map(|o| o.1).collect();
        assert_eq!(distinct.len() as u64, shape.orbit_size);
        let first_sq = orbit
            .iter()
            .find(|(_, x)| ctx.is_square(ctx.mul(twist, *x)))
            .map(|o| o.0);
        if level_one && adj_sq {
            return (Status::NotStable, Some(1));
        }
        match (first_sq, adj_sq) {
            (Some(n), _) => (Status::NotStable, Some(n)),
            (None, true) => (Status::Indeterminate, Some(1)),
            (None, false) => (Status::Stable, None),
        }
    }

    #[test]
    fn lazy_scan_matches_full_orbit_scan() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            for a in 1..p {
                for b in 0..p {
                    for c in 0..p {
                        let f = quad(p, a, b, c);
                        let t_f = f.orbit_shape().t_f;
                        for crit in [Criterion::Normalized, Criterion::Literal] {
                            let v = stability_test_with(&f, crit);
                            assert_eq!(
                                (v.status, v.witness_index),
                                reference_verdict(&f, crit),
                                "p={p} f=({a},{b},{c}) {crit}"
                            );
                            assert!(v.scanned <= t_f);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn long_orbits_use_the_shape_fallback() {
        // orbits longer than the buffer, with and without a square
        let ctx = FieldCtx::new(10_007).unwrap();
        let mut long = 0;
        for c in 0..400 {
            let f = QuadPoly::from_u64s(ctx, 1, 0, c).unwrap();
            let shape = f.orbit_shape();
            if shape.t_f <= SEEN_BUFFER as u64 + 2 {
                continue;
            }
            long += 1;
            let v = stability_test(&f);
            assert_eq!(
                (v.status, v.witness_index),
                reference_verdict(&f, Criterion::Normalized)
            );
            assert!(v.scanned <= shape.t_f);
        }
        assert!(long > 50);
    }
}
