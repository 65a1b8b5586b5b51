//! Character sums over iterates of a quadratic map.
//!
//! For a quadratic `f` with leading coefficient `a` and a window `K`:
//!
//! * `T_p(K)` is the set of `x` with `chi(a f^(k)(x)) = -1` for `k = 1..K`.
//!   For stable `f` every critical-orbit point `f^(n)(gamma)`, `n >= 1`, lies
//!   in it, so `t_f - 1 <= #T_p(K)`.
//! * Its size satisfies the product identity
//!   `#T_p(K) = 2^-K sum_x prod_k (1 - chi(a f^(k)(x)))`, and expanding the
//!   product gives `p` plus one signed sum `sum_x chi(prod_j f^(k_j)(x))` per
//!   nonempty subset `{k_j}` of `1..K`.
//! * Each such sum is bounded by `(D - 1) sqrt(p)`, `D = sum_j 2^(k_j)`, as
//!   long as the product is not a square, which holds for stable `f`.
//!
//! The triple-domain analogues (`W_p(K)` and sums over `(a, b, c)`) evaluate
//! the critical orbit pointwise for every coefficient triple.
//!
//! For monic `f` the twist by `a` is invisible. For non-monic `f` it keeps
//! the orbit-membership argument valid, since stability is governed by
//! `chi(a f^(n)(gamma))`.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::QuadPoly;
use crate::field::{FieldCtx, Fp};
use crate::stability::stability_test;

/// Largest accepted window `K`, and `log2` of the largest accepted degree
/// `sum_j 2^(k_j)`.
pub const MAX_WINDOW: u32 = 30;

/// Pointwise scans over `F_p` are refused above this modulus.
pub const POINT_SCAN_LIMIT: u64 = 1 << 32;

/// Scans over coefficient triples are refused when `(p - 1) p^2` exceeds this.
pub const TRIPLE_SCAN_LIMIT: u64 = 10_000_000;

/// `F_k(a, b, c) = f^(k + ORBIT_INDEX_OFFSET)(gamma)`: the critical orbit
/// starts at `f^(2)(gamma)`, so its `k`-th element has iterate index `k + 1`.
pub const ORBIT_INDEX_OFFSET: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharsumError {
    #[error("window {0} is too large (max {MAX_WINDOW})")]
    WindowTooLarge(u64),
    #[error("window must be at least 1")]
    EmptyWindow,
    #[error("invalid subset: {0}")]
    InvalidSubset(String),
    #[error("polynomial is not certified stable")]
    NotStableInput,
    #[error("domain too large for an exhaustive scan over p = {0}")]
    DomainTooLarge(u64),
}

/// Strictly increasing, nonempty list of iterate indices `1 <= k_1 < ... < k_nu`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct SubsetSpec(Vec<u32>);

impl SubsetSpec {
    pub fn new(indices: Vec<u32>) -> Result<Self, CharsumError> {
        if indices.is_empty() {
            return Err(CharsumError::InvalidSubset(
                "subset must be nonempty".into(),
            ));
        }
        if indices[0] == 0 {
            return Err(CharsumError::InvalidSubset("indices start at 1".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CharsumError::InvalidSubset(format!(
                "indices must be strictly increasing: {indices:?}"
            )));
        }
        if *indices.last().unwrap() > MAX_WINDOW {
            return Err(CharsumError::WindowTooLarge(*indices.last().unwrap() as u64));
        }
        Ok(SubsetSpec(indices))
    }

    /// Subset of `1..=K` encoded by the bits of `mask` (bit `k-1` for `k`).
    pub fn from_mask(mask: u64) -> Result<Self, CharsumError> {
        SubsetSpec::new(
            (0..64)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| i + 1)
                .collect(),
        )
    }

    /// All nonempty subsets of `1..=k`, ordered by bit mask.
    pub fn all_nonempty(k: u32) -> Vec<SubsetSpec> {
        (1..1u64 << k)
            .map(|m| SubsetSpec::from_mask(m).unwrap())
            .collect()
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_index(&self) -> u32 {
        *self.0.last().unwrap()
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0, |m, &k| m | 1 << (k - 1))
    }

    /// Degree `sum_j 2^(k_j)` of the product of iterates.
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&k| 1u64 << k).sum()
    }
}

impl TryFrom<Vec<u32>> for SubsetSpec {
    type Error = CharsumError;

    fn try_from(v: Vec<u32>) -> Result<Self, Self::Error> {
        SubsetSpec::new(v)
    }
}

impl From<SubsetSpec> for Vec<u32> {
    fn from(s: SubsetSpec) -> Self {
        s.0
    }
}

/// Exact test of `lhs <= m * sqrt(p)`.
pub fn le_multiple_of_sqrt(lhs: u128, m: u128, p: u64) -> bool {
    if lhs <= m {
        return true;
    }
    match m.checked_mul(m).and_then(|m2| m2.checked_mul(p as u128)) {
        Some(rhs) => lhs * lhs <= rhs,
        // lhs < 2^64 here in every caller, so lhs^2 < 2^128 <= rhs
        None => true,
    }
}

/// `m * sqrt(p)` as a float, rounded up so it never understates the budget.
pub fn budget_upper(m: f64, p: u64) -> f64 {
    let s = (p as f64).sqrt();
    let s = if s * s < p as f64 { s.next_up() } else { s };
    (m * s).next_up()
}

fn check_window(k: u32) -> Result<(), CharsumError> {
    match k {
        0 => Err(CharsumError::EmptyWindow),
        k if k > MAX_WINDOW => Err(CharsumError::WindowTooLarge(k as u64)),
        _ => Ok(()),
    }
}

fn check_point_scan(p: u64) -> Result<(), CharsumError> {
    if p > POINT_SCAN_LIMIT {
        Err(CharsumError::DomainTooLarge(p))
    } else {
        Ok(())
    }
}

fn check_triple_scan(ctx: &FieldCtx) -> Result<(), CharsumError> {
    let p = ctx.p() as u128;
    if (p - 1) * p * p > TRIPLE_SCAN_LIMIT as u128 {
        Err(CharsumError::DomainTooLarge(ctx.p()))
    } else {
        Ok(())
    }
}

/// Size of `T_p(K)` by direct scan, and the same quantity through the
/// product identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsetReport {
    pub p: u64,
    #[serde(rename = "K")]
    pub k: u32,
    pub direct_count: u64,
    /// `sum_x prod_k (1 - chi(a f^(k)(x)))` before division by `2^K`.
    pub identity_numerator: u64,
    pub identity_count: Ratio<u64>,
    pub q_over_2k: Ratio<u64>,
    /// Number of pairs `(x, k)` with `f^(k)(x) = 0`; zero for stable `f`.
    pub zero_terms: u64,
    /// `2^-K sum_S (deg S - 1) sqrt(p)` over nonempty `S`, rounded up.
    pub weil_error_budget: f64,
    /// `|direct_count - p / 2^K| <= weil_error_budget`, decided exactly.
    pub within_weil_budget: bool,
}

#[derive(Default, Clone, Copy)]
struct TsetPartial {
    direct: u64,
    numerator: u64,
    zeros: u64,
}

impl TsetPartial {
    fn merge(self, o: Self) -> Self {
        TsetPartial {
            direct: self.direct + o.direct,
            numerator: self.numerator + o.numerator,
            zeros: self.zeros + o.zeros,
        }
    }
}

/// `sum_S (deg S - 1)` over the nonempty subsets `S` of `1..=K`.
fn total_degree_excess(k: u32) -> u128 {
    // each k appears in 2^(K-1) subsets: 2^(K-1) (2^(K+1) - 2) - (2^K - 1)
    let half = 1u128 << (k - 1);
    half * ((1u128 << (k + 1)) - 2) - ((1u128 << k) - 1)
}

pub fn tset_size(f: &QuadPoly, k: u32) -> Result<TsetReport, CharsumError> {
    check_window(k)?;
    let ctx = *f.ctx();
    check_point_scan(ctx.p())?;
    let a = f.a();

    let partial = (0..ctx.p())
        .into_par_iter()
        .fold(TsetPartial::default, |mut acc, xv| {
            let mut y = ctx.elem(xv);
            let mut product = 1u64;
            let mut all_minus = true;
            for _ in 0..k {
                y = f.apply(y);
                match ctx.quadratic_character(ctx.mul(a, y)) {
                    -1 => product *= 2,
                    0 => {
                        acc.zeros += 1;
                        all_minus = false;
                    }
                    _ => {
                        product = 0;
                        all_minus = false;
                    }
                }
            }
            acc.direct += all_minus as u64;
            acc.numerator += product;
            acc
        })
        .reduce(TsetPartial::default, TsetPartial::merge);

    let two_k = 1u64 << k;
    let excess = total_degree_excess(k);
    let diff = (partial.direct as i128 * two_k as i128 - ctx.p() as i128).unsigned_abs();
    Ok(TsetReport {
        p: ctx.p(),
        k,
        direct_count: partial.direct,
        identity_numerator: partial.numerator,
        identity_count: Ratio::new(partial.numerator, two_k),
        q_over_2k: Ratio::new(ctx.p(), two_k),
        zero_terms: partial.zeros,
        weil_error_budget: budget_upper(excess as f64 / two_k as f64, ctx.p()),
        within_weil_budget: le_multiple_of_sqrt(diff, excess, ctx.p()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeilSumReport {
    pub p: u64,
    pub subset: SubsetSpec,
    pub sum: i64,
    pub degree: u64,
    /// `(degree - 1) sqrt(p)`, rounded up.
    pub weil_budget: f64,
    /// `|sum| <= (degree - 1) sqrt(p)`, decided exactly.
    pub within_budget: bool,
}

impl WeilSumReport {
    fn new(p: u64, subset: SubsetSpec, sum: i64) -> Self {
        let degree = subset.degree();
        WeilSumReport {
            p,
            sum,
            degree,
            weil_budget: budget_upper((degree - 1) as f64, p),
            within_budget: le_multiple_of_sqrt(sum.unsigned_abs() as u128, (degree - 1) as u128, p),
            subset,
        }
    }
}

/// `sum_x chi(prod_j f^(k_j)(x))`, multiplying the iterate values before
/// taking a single character.
pub fn weil_sum(f: &QuadPoly, subset: &SubsetSpec) -> Result<WeilSumReport, CharsumError> {
    if subset.degree() > 1 << MAX_WINDOW {
        return Err(CharsumError::WindowTooLarge(subset.degree()));
    }
    let ctx = *f.ctx();
    check_point_scan(ctx.p())?;
    let top = subset.max_index();
    let mask = subset.mask();

    let sum: i64 = (0..ctx.p())
        .into_par_iter()
        .map(|xv| {
            let mut y = ctx.elem(xv);
            let mut product = ctx.one();
            for k in 1..=top {
                y = f.apply(y);
                if mask >> (k - 1) & 1 == 1 {
                    product = ctx.mul(product, y);
                }
            }
            ctx.quadratic_character(product) as i64
        })
        .sum();
    Ok(WeilSumReport::new(ctx.p(), subset.clone(), sum))
}

/// Every nonempty-subset sum for window `K` in one pass, using the
/// multiplicativity of the character. Ordered like
/// [`SubsetSpec::all_nonempty`].
pub fn weil_sums_all(f: &QuadPoly, k: u32) -> Result<Vec<WeilSumReport>, CharsumError> {
    check_window(k)?;
    if k > 16 {
        return Err(CharsumError::WindowTooLarge(k as u64));
    }
    let ctx = *f.ctx();
    check_point_scan(ctx.p())?;
    let n_masks = 1usize << k;

    let sums = (0..ctx.p())
        .into_par_iter()
        .fold(
            || vec![0i64; n_masks],
            |mut acc, xv| {
                let mut y = ctx.elem(xv);
                let mut chis = [0i8; 16];
                for chi in chis.iter_mut().take(k as usize) {
                    y = f.apply(y);
                    *chi = ctx.quadratic_character(y);
                }
                for (mask, slot) in acc.iter_mut().enumerate().skip(1) {
                    let mut v = 1i64;
                    for (j, chi) in chis.iter().enumerate().take(k as usize) {
                        if mask >> j & 1 == 1 {
                            v *= *chi as i64;
                        }
                    }
                    *slot += v;
                }
                acc
            },
        )
        .reduce(
            || vec![0i64; n_masks],
            |mut l, r| {
                l.iter_mut().zip(r).for_each(|(x, y)| *x += y);
                l
            },
        );

    Ok(SubsetSpec::all_nonempty(k)
        .into_iter()
        .map(|s| {
            let sum = sums[s.mask() as usize];
            WeilSumReport::new(ctx.p(), s, sum)
        })
        .collect())
}

/// `p + sum_S (-chi(a))^|S| W_S` over nonempty `S`, which equals
/// `2^K #T_p(K)` whenever no iterate vanishes on `F_p`.
pub fn expanded_tset_numerator(f: &QuadPoly, k: u32) -> Result<i128, CharsumError> {
    let chi_a = f.ctx().quadratic_character(f.a()) as i128;
    let sums = weil_sums_all(f, k)?;
    Ok(sums.iter().fold(f.ctx().p() as i128, |acc, r| {
        acc + (-chi_a).pow(r.subset.len() as u32) * r.sum as i128
    }))
}

/// Window used for the orbit bound: the largest `K` with `2^K <= p^(1/4)`,
/// but at least 1.
pub fn k_star(p: u64) -> u32 {
    ((63 - p.leading_zeros()) / 4).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfBoundReport {
    pub p: u64,
    pub t_f: u64,
    pub k_star: u32,
    /// `#T_p(K)` for `K = 1..=k_star`.
    pub tset_sizes: Vec<u64>,
    /// `t_f - 1 <= #T_p(K)` for every `K <= k_star`.
    pub bound_holds: bool,
    /// Every `f^(n)(gamma)`, `1 <= n < t_f`, lies in `T_p(k_star)`.
    pub membership_holds: bool,
    /// `p >= 16`, so that `2^K <= p^(1/4)` is satisfiable with `K >= 1`.
    pub asymptotic_window: bool,
}

pub fn verify_tf_bound(f: &QuadPoly) -> Result<TfBoundReport, CharsumError> {
    if !stability_test(f).is_stable() {
        return Err(CharsumError::NotStableInput);
    }
    let ctx = *f.ctx();
    check_point_scan(ctx.p())?;
    let t_f = f.orbit_shape().t_f;
    let ks = k_star(ctx.p());

    let tset_sizes = (1..=ks)
        .map(|k| tset_size(f, k).map(|r| r.direct_count))
        .collect::<Result<Vec<_>, _>>()?;
    let bound_holds = tset_sizes.iter().all(|&size| t_f - 1 <= size);

    let in_tset = |x: Fp| {
        let mut y = x;
        (0..ks).all(|_| {
            y = f.apply(y);
            ctx.quadratic_character(ctx.mul(f.a(), y)) == -1
        })
    };
    let mut x = f.critical_point();
    let mut membership_holds = true;
    for _ in 1..t_f {
        x = f.apply(x);
        membership_holds &= in_tset(x);
    }

    Ok(TfBoundReport {
        p: ctx.p(),
        t_f,
        k_star: ks,
        tset_sizes,
        bound_holds,
        membership_holds,
        asymptotic_window: ctx.p() >= 16,
    })
}

/// `sum` of the constant `1` over the triple domain `F_p^* x F_p x F_p`.
pub fn trivial_triple_sum(p: u64) -> u64 {
    (p - 1) * p * p
}

/// Visits every triple `(a, b, c)` with its polynomial, in parallel over `a`.
fn fold_triples<T, F, R>(ctx: FieldCtx, identity: T, per_triple: F, merge: R) -> T
where
    T: Send + Sync + Clone,
    F: Fn(T, &QuadPoly) -> T + Sync,
    R: Fn(T, T) -> T + Sync + Send,
{
    let two = ctx.elem(2);
    (1..ctx.p())
        .into_par_iter()
        .map(|av| {
            let a = ctx.elem(av);
            let inv_two_a = ctx.inv(ctx.mul(two, a)).expect("2a != 0");
            let mut acc = identity.clone();
            for bv in 0..ctx.p() {
                for cv in 0..ctx.p() {
                    let f = QuadPoly::with_inv_two_a(ctx, a, ctx.elem(bv), ctx.elem(cv), inv_two_a);
                    acc = per_triple(acc, &f);
                }
            }
            acc
        })
        .reduce(|| identity.clone(), &merge)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WsetReport {
    pub p: u64,
    #[serde(rename = "K")]
    pub k: u32,
    pub count: u64,
    pub total: u64,
}

/// `#W_p(K)`: triples whose first `K` critical-orbit elements `F_k` all
/// have `chi(a F_k) = -1`.
pub fn wset_size(ctx: &FieldCtx, k: u32) -> Result<WsetReport, CharsumError> {
    check_window(k)?;
    check_triple_scan(ctx)?;
    let kctx = *ctx;
    let count = fold_triples(
        kctx,
        0u64,
        |acc, f| {
            let mut y = f.iterate_value(f.critical_point(), ORBIT_INDEX_OFFSET);
            let inside = (0..k).all(|_| {
                y = f.apply(y);
                kctx.quadratic_character(kctx.mul(f.a(), y)) == -1
            });
            acc + inside as u64
        },
        |x, y| x + y,
    );
    Ok(WsetReport {
        p: ctx.p(),
        k,
        count,
        total: trivial_triple_sum(ctx.p()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleSumReport {
    pub p: u64,
    pub subset: SubsetSpec,
    pub sum: i64,
    /// Nominal degree `sum_j 2^(k_j)` of the product in the triple variables.
    pub degree: u64,
    /// `|sum| / p^(5/2)`.
    pub ratio_q52: f64,
}

/// `sum_{(a,b,c)} chi(a^nu prod_j F_{k_j}(a, b, c))`.
pub fn triple_charsum(
    ctx: &FieldCtx,
    subset: &SubsetSpec,
) -> Result<TripleSumReport, CharsumError> {
    check_triple_scan(ctx)?;
    let kctx = *ctx;
    let top = subset.max_index();
    let mask = subset.mask();
    let sum = fold_triples(
        kctx,
        0i64,
        |acc, f| {
            let mut y = f.iterate_value(f.critical_point(), ORBIT_INDEX_OFFSET);
            let mut product = kctx.one();
            for k in 1..=top {
                y = f.apply(y);
                if mask >> (k - 1) & 1 == 1 {
                    product = kctx.mul(product, kctx.mul(f.a(), y));
                }
            }
            acc + kctx.quadratic_character(product) as i64
        },
        |x, y| x + y,
    );
    Ok(TripleSumReport {
        p: ctx.p(),
        subset: subset.clone(),
        sum,
        degree: subset.degree(),
        ratio_q52: sum.unsigned_abs() as f64 / (ctx.p() as f64).powf(2.5),
    })
}
