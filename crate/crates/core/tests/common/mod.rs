#![allow(dead_code)]

use predmin::granularity::render;
use predmin::oracle::{MockOracle, MockOracleSpec, MockView, OracleClient};
use predmin::unit::{AtomicUnit, ProgramSlice, Uid};
use std::collections::BTreeSet;

/// Program of distinct texts `u0 u1 ...`.
pub fn distinct_program(n: usize) -> ProgramSlice {
    let texts: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
    ProgramSlice::from_tokens(&texts)
}

pub fn client(spec: &MockOracleSpec, len: usize) -> OracleClient {
    OracleClient::new(spec.instantiate(MockView::Units, len))
}

/// Independent 1-minimality check: evaluates the mock directly on every
/// single-unit removal, bypassing the reducer's session and caches.
pub fn brute_force_one_minimal(
    mock: &MockOracle,
    slice: &ProgramSlice,
    reference_label: &str,
    protected: &BTreeSet<Uid>,
) -> bool {
    slice.units().iter().filter(|u| !protected.contains(&u.uid)).all(|u| {
        let rest: Vec<AtomicUnit> = slice.units().iter().filter(|o| o.uid != u.uid).cloned().collect();
        let text = render(&rest).unwrap();
        mock.evaluate(&text, &rest).label != reference_label
    })
}

/// True when uids strictly increase and every unit exists in `original`.
pub fn is_subsequence(uids: &[Uid], original: &ProgramSlice) -> bool {
    uids.windows(2).all(|w| w[0] < w[1]) && uids.iter().all(|u| original.contains_uid(*u))
}
