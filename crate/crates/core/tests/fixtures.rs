// Values frozen from an independent computer-algebra oracle (symbolic
// iterates, factorisation over F_p, brute-force character sums).

use qorbit::census::{run_census, CensusOptions};
use qorbit::charsum::{triple_charsum, wset_size, SubsetSpec};
use qorbit::stability::{stability_oracle, stability_test_with, Criterion, OracleOutcome};
use qorbit::{FieldCtx, QuadPoly, Status};

fn opts() -> CensusOptions {
    CensusOptions {
        record_timing: false,
        ..Default::default()
    }
}

#[test]
fn stable_counts() {
    for (p, s_p) in [(3, 2), (5, 16), (7, 18), (11, 70), (13, 204)] {
        let ctx = FieldCtx::new(p).unwrap();
        let r = run_census(&ctx, &opts()).unwrap();
        assert_eq!(r.stable_count, s_p, "p={p}");
        assert_eq!(r.indeterminate_count, 0);
        assert_eq!(r.total, (p - 1) * p * p);
    }
}

#[test]
fn wset_counts() {
    let table = [(3, [6, 4, 4]), (5, [40, 20, 20]), (7, [126, 66, 48])];
    for (p, counts) in table {
        let ctx = FieldCtx::new(p).unwrap();
        for (k, want) in (1..=3).zip(counts) {
            assert_eq!(wset_size(&ctx, k).unwrap().count, want, "p={p} K={k}");
        }
    }
}

#[test]
fn triple_sums() {
    let table: [(u64, [i64; 7]); 3] = [
        // subsets in mask order: {1} {2} {1,2} {3} {1,3} {2,3} {1,2,3}
        (3, [0, 0, 6, 0, 12, 6, 2]),
        (5, [0, 0, 20, 0, 60, 20, 8]),
        (7, [0, 0, 42, 0, 84, 84, 48]),
    ];
    for (p, sums) in table {
        let ctx = FieldCtx::new(p).unwrap();
        for (mask, want) in (1..=7u64).zip(sums) {
            let s = SubsetSpec::from_mask(mask).unwrap();
            let got = triple_charsum(&ctx, &s).unwrap().sum;
            assert_eq!(got.abs(), want, "p={p} {:?}", s.indices());
        }
    }
}

// The orbit criterion agrees with the symbolic oracle in both directions for
// every triple, including non-square leading coefficients.
#[test]
fn normalized_criterion_matches_oracle_everywhere() {
    for p in [3u64, 5, 7] {
        let ctx = FieldCtx::new(p).unwrap();
        for a in 1..p {
            for b in 0..p {
                for c in 0..p {
                    let f = QuadPoly::from_u64s(ctx, a, b, c).unwrap();
                    let v = stability_test_with(&f, Criterion::Normalized);
                    let o = stability_oracle(&f, 6).unwrap();
                    match v.status {
                        Status::Stable => assert_eq!(o, OracleOutcome::AllIrreducibleUpToDepth(6)),
                        Status::NotStable => {
                            let n = v.witness_index.unwrap() as u32;
                            assert_eq!(o, OracleOutcome::ReducibleAt(n), "p={p} ({a},{b},{c})");
                        }
                        Status::Indeterminate => panic!("normalized criterion is two-sided"),
                    }
                }
            }
        }
    }
}

// 2X^2 + 2 over F_3 is conjugate to X^2 + 1; the unscaled orbit misreads it.
#[test]
fn literal_criterion_misreads_nonsquare_leading_coefficient() {
    let ctx = FieldCtx::new(3).unwrap();
    let f = QuadPoly::from_u64s(ctx, 2, 0, 2).unwrap();
    assert_eq!(
        stability_oracle(&f, 6).unwrap(),
        OracleOutcome::AllIrreducibleUpToDepth(6)
    );
    assert_eq!(
        stability_test_with(&f, Criterion::Normalized).status,
        Status::Stable
    );
    assert_eq!(
        stability_test_with(&f, Criterion::Literal).status,
        Status::NotStable
    );
}
