use proptest::prelude::*;

use qorbit::census::{run_census, CensusMode, CensusOptions};
use qorbit::charsum::tset_size;
use qorbit::poly::compose_iterate;
use qorbit::primality::is_prime;
use qorbit::stability::stability_test;
use qorbit::{FieldCtx, QuadPoly};

fn quad(p: u64) -> impl Strategy<Value = QuadPoly> {
    let ctx = FieldCtx::new(p).unwrap();
    (1..p, 0..p, 0..p).prop_map(move |(a, b, c)| QuadPoly::from_u64s(ctx, a, b, c).unwrap())
}

fn prime_below(hi: u64) -> impl Strategy<Value = u64> {
    (3..hi).prop_map(|n| (n..).find(|&q| q % 2 == 1 && is_prime(q)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn iterate_eval_agrees_mod_5(f in quad(5), n in 0u32..=10, x in 0u64..5) {
        check_iterate(&f, n, x);
    }

    #[test]
    fn iterate_eval_agrees_mod_13(f in quad(13), n in 0u32..=10, x in 0u64..13) {
        check_iterate(&f, n, x);
    }

    #[test]
    fn iterate_eval_agrees_mod_101(f in quad(101), n in 0u32..=10, x in 0u64..101) {
        check_iterate(&f, n, x);
    }

    #[test]
    fn euler_matches_jacobi(p in prime_below(1 << 61), x in any::<u64>()) {
        let ctx = FieldCtx::new(p).unwrap();
        let x = ctx.elem(x);
        prop_assert_eq!(ctx.quadratic_character(x), ctx.jacobi_character(x));
    }

    #[test]
    fn orbit_shape_invariants(p in prime_below(2000), seed in any::<(u64, u64, u64)>()) {
        let ctx = FieldCtx::new(p).unwrap();
        let f = QuadPoly::from_u64s(ctx, 1 + seed.0 % (p - 1), seed.1 % p, seed.2 % p).unwrap();
        let sh = f.orbit_shape();
        prop_assert!(sh.lambda >= 1 && sh.t_f <= p + 1 && sh.s < sh.t_f);
        let g = f.critical_point();
        // t_f is the first index repeating an earlier positive index.
        prop_assert_eq!(f.iterate_value(g, sh.t_f), f.iterate_value(g, sh.s));
        let orbit: std::collections::HashSet<_> =
            (2..=sh.t_f).map(|n| f.iterate_value(g, n)).collect();
        prop_assert_eq!(orbit.len() as u64, sh.orbit_size);
        prop_assert_eq!(f.orbit_shape_table(), sh);
    }

    #[test]
    fn scan_never_exceeds_t_f(f in quad(10007)) {
        prop_assert!(stability_test(&f).scanned <= f.orbit_shape().t_f);
    }
}

fn check_iterate(f: &QuadPoly, n: u32, x: u64) {
    let ctx = f.ctx();
    let x = ctx.elem(x);
    let g = compose_iterate(f, n).unwrap();
    assert_eq!(g.eval(ctx, x), f.iterate_value(x, n as u64));
}

#[test]
fn tset_shrinks_with_window() {
    for p in [3u64, 5, 7, 11, 13, 17, 19, 23] {
        let ctx = FieldCtx::new(p).unwrap();
        for c in 0..p {
            let f = QuadPoly::from_u64s(ctx, 1, 0, c).unwrap();
            let sizes: Vec<u64> = (1..=5)
                .map(|k| tset_size(&f, k).unwrap().direct_count)
                .collect();
            assert!(
                sizes.windows(2).all(|w| w[1] <= w[0]),
                "p={p} c={c}: {sizes:?}"
            );
        }
    }
}

#[test]
fn census_partition_independent() {
    for p in (3..=31u64).filter(|&p| is_prime(p)) {
        let ctx = FieldCtx::new(p).unwrap();
        for mode in [
            CensusMode::Exhaustive,
            CensusMode::Sample { n: 500, seed: 7 },
        ] {
            let run = |workers| {
                let o = CensusOptions {
                    mode,
                    workers,
                    record_timing: false,
                    ..Default::default()
                };
                run_census(&ctx, &o).unwrap()
            };
            let base = run(1);
            assert_eq!(run(2), base, "p={p}");
            assert_eq!(run(7), base, "p={p}");
        }
    }
}
