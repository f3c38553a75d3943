mod common;

use common::{brute_force_one_minimal, client, distinct_program, is_subsequence};
use predmin::granularity::{render, tokenize, Language};
use predmin::oracle::{MockOracle, MockOracleSpec, MockView};
use predmin::reduction::{ddmin, verify_one_minimal, ReductionConfig};
use predmin::unit::{ProgramSlice, Uid};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn letters() -> ProgramSlice {
    ProgramSlice::from_tokens(&["a", "b", "c", "d", "e", "f", "g", "h"])
}

#[test]
fn keyset_cg_is_the_unique_minimal_preserved_set() {
    // Oracle: enumerate all 2^8 subsequences and keep the inclusion-minimal
    // preserved ones.
    let p = letters();
    let mock = MockOracle::new(MockOracleSpec::keyset(["c", "g"]), MockView::Units);
    let reference = mock.evaluate(&render(p.units()).unwrap(), p.units()).label;
    let preserved: Vec<u32> = (0u32..256)
        .filter(|mask| {
            let keep: BTreeSet<Uid> = (0..8).filter(|i| mask & (1 << i) != 0).collect();
            let s = p.retain_uids(&keep);
            mock.evaluate(&render(s.units()).unwrap(), s.units()).label == reference
        })
        .collect();
    let minimal: Vec<u32> = preserved
        .iter()
        .copied()
        .filter(|m| !preserved.iter().any(|o| o != m && o & m == *o))
        .collect();
    assert_eq!(minimal, vec![(1 << 2) | (1 << 6)]);

    let result = ddmin(
        &mut client(&MockOracleSpec::keyset(["c", "g"]), 8),
        &p,
        &ReductionConfig::default(),
    )
    .unwrap();
    assert_eq!(result.minimal.texts(), ["c", "g"]);
    assert!(verify_one_minimal(
        &mut client(&MockOracleSpec::keyset(["c", "g"]), 8),
        &result.minimal,
        &ReductionConfig::default()
    )
    .unwrap());
}

#[test]
fn table_style_run_keeps_keyset_tokens() {
    let src = "public void onCreate(Bundle savedInstanceState) { super.onCreate(savedInstanceState); setContentView(R.layout.main); }";
    let units = tokenize(src, Language::JavaLike).unwrap();
    let p = ProgramSlice::new(units).unwrap();
    let spec = MockOracleSpec::keyset(["onCreate"]);
    let result = ddmin(&mut client(&spec, p.len()), &p, &ReductionConfig::default()).unwrap();
    assert_eq!(result.minimal.texts(), ["onCreate"]);
    assert_eq!(result.trace.last().unwrap().text, "onCreate");
    let sizes: Vec<usize> = result.trace.iter().map(|s| s.size).collect();
    assert!(sizes.windows(2).all(|w| w[0] > w[1]), "{sizes:?}");
}

#[test]
fn variable_misuse_label_survives_with_protected_identifiers() {
    let src = "def f(n):\n    k = n + 1\n    m = g(m)\n    return k";
    let units = tokenize(src, Language::PythonLike).unwrap();
    let p = ProgramSlice::new(units).unwrap();
    let idents = predmin::oracle::mock::identifier_occurrences(p.units());
    let protected: BTreeSet<Uid> = idents.values().flatten().copied().collect();
    let config = ReductionConfig {
        protected_uids: protected.clone(),
        ..Default::default()
    };
    let mut oracle = predmin::oracle::mock::make_use_before_assign_oracle();
    let result = ddmin(&mut oracle, &p, &config).unwrap();
    assert!(result.reference_label.starts_with("buggy@"));
    assert!(protected.iter().all(|u| result.minimal.contains_uid(*u)));
    assert!(verify_one_minimal(&mut oracle, &result.minimal, &config).unwrap());
}

#[test]
fn cache_transparency() {
    let p = distinct_program(30);
    let spec = MockOracleSpec::keyset(["u3", "u17", "u29"]);
    let cached = ddmin(&mut client(&spec, 30), &p, &ReductionConfig::default()).unwrap();
    let mut uncached_client = client(&spec, 30).without_cache();
    let uncached = ddmin(&mut uncached_client, &p, &ReductionConfig::default()).unwrap();
    assert_eq!(cached.minimal, uncached.minimal);
    assert_eq!(cached.trace, uncached.trace);
    assert_eq!(cached.stats.total, uncached.stats.total);
}

fn keyset_case() -> impl Strategy<Value = (usize, BTreeSet<usize>)> {
    (1usize..=64).prop_flat_map(|n| (Just(n), prop::collection::btree_set(0..n, 0..=6.min(n))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn keyset_reduction_returns_exactly_the_keyset((n, keys) in keyset_case()) {
        let p = distinct_program(n);
        let spec = MockOracleSpec::keyset(keys.iter().map(|i| format!("u{i}")));
        let mut oracle = client(&spec, n);
        let result = ddmin(&mut oracle, &p, &ReductionConfig::default()).unwrap();
        let expected: Vec<Uid> = keys.iter().map(|&i| i as Uid).collect();
        prop_assert_eq!(result.minimal.uids(), expected);
        prop_assert!(oracle.stats().queries as usize <= n * n + 3 * n);
        for step in &result.trace {
            prop_assert!(is_subsequence(&step.uids, &p));
        }
    }

    #[test]
    fn threshold_results_are_one_minimal_and_deterministic(
        texts in prop::collection::vec(prop::sample::select(vec!["x", "y", "z"]), 1..30),
        min_count in 0usize..4,
    ) {
        let p = ProgramSlice::from_tokens(&texts);
        let spec = MockOracleSpec::ThresholdCount { token: "x".into(), min_count };
        let first = ddmin(&mut client(&spec, p.len()), &p, &ReductionConfig::default()).unwrap();
        let second = ddmin(&mut client(&spec, p.len()), &p, &ReductionConfig::default()).unwrap();
        prop_assert_eq!(&first.minimal, &second.minimal);
        prop_assert_eq!(&first.trace, &second.trace);
        prop_assert_eq!(
            (first.stats.total, first.stats.valid, first.stats.preserved, first.stats.raw_attempts),
            (second.stats.total, second.stats.valid, second.stats.preserved, second.stats.raw_attempts)
        );
        let mock = spec.instantiate(MockView::Units, p.len());
        prop_assert!(brute_force_one_minimal(&mock, &first.minimal, &first.reference_label, &BTreeSet::new()));
        let have = texts.iter().filter(|t| **t == "x").count();
        if have >= min_count {
            prop_assert_eq!(first.minimal.len(), min_count);
        }
    }
}
