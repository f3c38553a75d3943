//! Prediction-preserving ddmin.
//!
//! The search runs over the removable (non-protected) units only; protected
//! units are merged back into every candidate. At granularity `n` the
//! removable set is split into `n` contiguous partitions and candidates are
//! tested in a fixed order: every partition in index order, then every
//! complement in index order. The first candidate that keeps the reference
//! label becomes the new base:
//!
//! - a partition restarts at granularity 2,
//! - a complement continues at `max(n - 1, 2)`,
//! - otherwise granularity grows to `min(2n, |p|)`, and at `n == |p|` the
//!   base is returned.
//!
//! A one-unit base is split into a single partition (itself, never
//! re-tested), so its only candidate is the empty complement. This is what
//! makes every returned slice 1-minimal over its removable units.

use crate::analysis::DdPassStats;
use crate::granularity::{render, RenderError};
use crate::oracle::{OracleClient, OracleError, Prediction};
use crate::unit::{AtomicUnit, ProgramSlice, SliceError, Uid};
use crate::validity::ValidityPolicy;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestOrder {
    /// Partitions in index order, then complements in index order.
    #[default]
    SubsetsThenComplements,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReductionConfig {
    pub protected_uids: BTreeSet<Uid>,
    pub require_valid: bool,
    pub validity: ValidityPolicy,
    /// Budget on oracle queries issued by the search (the reference query
    /// is not counted). Must be at least 1 when set.
    pub max_oracle_calls: Option<u64>,
    pub test_order: TestOrder,
    /// Label to preserve instead of the original program's own prediction.
    pub reference_label: Option<String>,
}

impl ReductionConfig {
    pub fn with_validity(mut self, validity: ValidityPolicy) -> Self {
        self.require_valid = true;
        self.validity = validity;
        self
    }

    pub fn protect<I: IntoIterator<Item = Uid>>(mut self, uids: I) -> Self {
        self.protected_uids.extend(uids);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Invalid,
    Diverged,
    Preserved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub verdict: Verdict,
    /// Present iff the oracle was consulted and accepted the candidate.
    pub score: Option<f64>,
}

impl TestOutcome {
    pub const INVALID: TestOutcome = TestOutcome {
        verdict: Verdict::Invalid,
        score: None,
    };

    pub fn is_preserved(&self) -> bool {
        self.verdict == Verdict::Preserved
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptedStep {
    pub step: usize,
    /// Granularity at which the candidate was found.
    pub granularity: usize,
    pub size: usize,
    pub score: f64,
    pub text: String,
    #[serde(skip)]
    pub uids: Vec<Uid>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionResult {
    pub minimal: ProgramSlice,
    pub trace: Vec<AcceptedStep>,
    pub stats: DdPassStats,
    pub wall_time: f64,
    /// The prediction on the original program.
    pub reference: Prediction,
    pub reference_label: String,
    pub protected_count: usize,
    /// The query budget ran out; `minimal` is best-so-far, not 1-minimal.
    pub budget_exhausted: bool,
}

impl ReductionResult {
    /// Score of the last accepted step, or of the original program.
    pub fn final_score(&self) -> f64 {
        self.trace.last().map_or(self.reference.score, |s| s.score)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReductionError {
    #[error("oracle failed after {} accepted steps: {source}", partial_trace.len())]
    Oracle {
        source: OracleError,
        partial_trace: Vec<AcceptedStep>,
    },
    #[error("original prediction {actual:?} does not match reference label {expected:?}")]
    ReferenceMismatch { expected: String, actual: String },
    #[error("original program is rejected by the validity policy")]
    OriginalInvalid,
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

/// Splits `items` into `n` contiguous partitions whose sizes differ by at
/// most one; the first `len % n` partitions get the extra element.
pub fn split_partitions<T>(items: &[T], n: usize) -> Result<Vec<&[T]>, ReductionError> {
    if n < 1 || n > items.len() {
        return Err(ReductionError::Contract(format!(
            "cannot split {} units into {n} partitions",
            items.len()
        )));
    }
    let (q, r) = (items.len() / n, items.len() % n);
    let mut parts = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let len = q + usize::from(i < r);
        parts.push(&items[start..start + len]);
        start += len;
    }
    Ok(parts)
}

enum Interrupt {
    Budget,
    Failed(ReductionError),
}

impl From<ReductionError> for Interrupt {
    fn from(e: ReductionError) -> Self {
        Interrupt::Failed(e)
    }
}

/// One reduction session: reference prediction, memo, and DD-pass counters.
pub struct Session<'a> {
    oracle: &'a mut OracleClient,
    config: &'a ReductionConfig,
    original: &'a ProgramSlice,
    reference: Prediction,
    reference_label: String,
    memo: HashMap<Vec<Uid>, TestOutcome>,
    stats: DdPassStats,
    oracle_queries: u64,
}

impl<'a> Session<'a> {
    /// Queries the original program once to fix the reference label.
    pub fn new(
        oracle: &'a mut OracleClient,
        original: &'a ProgramSlice,
        config: &'a ReductionConfig,
    ) -> Result<Self, ReductionError> {
        if config.max_oracle_calls == Some(0) {
            return Err(ReductionError::Contract("max_oracle_calls must be at least 1".into()));
        }
        if let Some(missing) = config.protected_uids.iter().find(|u| !original.contains_uid(**u)) {
            return Err(ReductionError::Contract(format!(
                "protected uid {missing} is not in the program"
            )));
        }
        let text = render(original.units())?;
        if config.require_valid && !config.validity.check(&text) {
            return Err(ReductionError::OriginalInvalid);
        }
        let reference = oracle
            .query(&text, original.units())
            .map_err(|source| ReductionError::Oracle {
                source,
                partial_trace: Vec::new(),
            })?;
        let reference_label = match &config.reference_label {
            Some(expected) if *expected != reference.label => {
                return Err(ReductionError::ReferenceMismatch {
                    expected: expected.clone(),
                    actual: reference.label,
                })
            }
            Some(expected) => expected.clone(),
            None => reference.label.clone(),
        };
        Ok(Self {
            oracle,
            config,
            original,
            reference,
            reference_label,
            memo: HashMap::new(),
            stats: DdPassStats::default(),
            oracle_queries: 0,
        })
    }

    pub fn reference(&self) -> &Prediction {
        &self.reference
    }

    pub fn stats(&self) -> DdPassStats {
        self.stats
    }

    /// Tests one candidate, recording it in the DD-pass counters.
    pub fn test_candidate(&mut self, candidate: &ProgramSlice) -> Result<TestOutcome, ReductionError> {
        match self.test_inner(candidate.units(), None) {
            Ok((outcome, _)) => Ok(outcome),
            Err(Interrupt::Failed(e)) => Err(e),
            Err(Interrupt::Budget) => Err(ReductionError::Contract("oracle budget exhausted".into())),
        }
    }

    fn test_inner(
        &mut self,
        units: &[AtomicUnit],
        budget: Option<u64>,
    ) -> Result<(TestOutcome, Option<String>), Interrupt> {
        let candidate =
            ProgramSlice::with_origin(units.to_vec(), self.original.origin_size()).map_err(ReductionError::from)?;
        if !candidate.is_subsequence_of(self.original) {
            return Err(ReductionError::Contract("candidate is not a subsequence of the original".into()).into());
        }
        self.stats.raw_attempts += 1;
        let key = candidate.uids();
        if let Some(hit) = self.memo.get(&key) {
            return Ok((*hit, None));
        }
        let text = render(units).map_err(ReductionError::from)?;
        if self.config.require_valid && !self.config.validity.check(&text) {
            self.stats.total += 1;
            self.memo.insert(key, TestOutcome::INVALID);
            return Ok((TestOutcome::INVALID, Some(text)));
        }
        if budget.is_some_and(|b| self.oracle_queries >= b) {
            return Err(Interrupt::Budget);
        }
        self.stats.total += 1;
        self.oracle_queries += 1;
        let started = Instant::now();
        let prediction = self.oracle.query(&text, units);
        self.stats.oracle_time += started.elapsed().as_secs_f64();
        let prediction = prediction.map_err(|source| ReductionError::Oracle {
            source,
            partial_trace: Vec::new(),
        })?;

        let outcome = if self.config.require_valid && !self.config.validity.accepts_response(prediction.valid) {
            TestOutcome::INVALID
        } else {
            self.stats.valid += 1;
            let verdict = if prediction.label == self.reference_label {
                self.stats.preserved += 1;
                Verdict::Preserved
            } else {
                Verdict::Diverged
            };
            TestOutcome {
                verdict,
                score: Some(prediction.score),
            }
        };
        self.memo.insert(key, outcome);
        Ok((outcome, Some(text)))
    }
}

fn merge_indices(protected: &[usize], chosen: &[usize]) -> Vec<usize> {
    let mut all = Vec::with_capacity(protected.len() + chosen.len());
    let (mut i, mut j) = (0, 0);
    while i < protected.len() || j < chosen.len() {
        if j == chosen.len() || (i < protected.len() && protected[i] < chosen[j]) {
            all.push(protected[i]);
            i += 1;
        } else {
            all.push(chosen[j]);
            j += 1;
        }
    }
    all
}

/// Reduces `program` to a 1-minimal slice that keeps the reference label.
pub fn ddmin(
    oracle: &mut OracleClient,
    program: &ProgramSlice,
    config: &ReductionConfig,
) -> Result<ReductionResult, ReductionError> {
    let started = Instant::now();
    oracle.clear_cache();
    let mut session = Session::new(oracle, program, config)?;

    let units = program.units();
    let protected: Vec<usize> = (0..units.len())
        .filter(|&i| config.protected_uids.contains(&units[i].uid))
        .collect();
    let mut current: Vec<usize> = (0..units.len())
        .filter(|&i| !config.protected_uids.contains(&units[i].uid))
        .collect();
    let mut n = 2usize;
    let mut trace: Vec<AcceptedStep> = Vec::new();
    let mut budget_exhausted = false;

    let materialize = |chosen: &[usize]| -> Vec<AtomicUnit> {
        merge_indices(&protected, chosen)
            .into_iter()
            .map(|i| units[i].clone())
            .collect()
    };

    'search: while !current.is_empty() {
        let n_eff = n.min(current.len());
        let parts = split_partitions(&current, n_eff)?;
        let complements: Vec<Vec<usize>> = (0..parts.len())
            .map(|skip| {
                parts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .flat_map(|(_, p)| p.iter().copied())
                    .collect()
            })
            .collect();

        let candidates = parts
            .iter()
            .map(|p| (p.to_vec(), true))
            .chain(complements.into_iter().map(|c| (c, false)));
        let mut accepted = None;
        for (chosen, is_subset) in candidates {
            if chosen.len() == current.len() {
                continue;
            }
            let candidate_units = materialize(&chosen);
            match session.test_inner(&candidate_units, config.max_oracle_calls) {
                Ok((outcome, text)) if outcome.is_preserved() => {
                    let text = match text {
                        Some(t) => t,
                        None => render(&candidate_units)?,
                    };
                    trace.push(AcceptedStep {
                        step: trace.len() + 1,
                        granularity: n_eff,
                        size: candidate_units.len(),
                        score: outcome.score.unwrap_or(0.0),
                        text,
                        uids: candidate_units.iter().map(|u| u.uid).collect(),
                    });
                    let next_n = if is_subset { 2 } else { (n_eff - 1).max(2) };
                    accepted = Some((chosen, next_n));
                    break;
                }
                Ok(_) => {}
                Err(Interrupt::Budget) => {
                    budget_exhausted = true;
                    break 'search;
                }
                Err(Interrupt::Failed(ReductionError::Oracle { source, .. })) => {
                    return Err(ReductionError::Oracle {
                        source,
                        partial_trace: trace,
                    })
                }
                Err(Interrupt::Failed(e)) => return Err(e),
            }
        }

        match accepted {
            Some((next, next_n)) => {
                current = next;
                n = next_n;
            }
            None if n_eff < current.len() => n = (2 * n_eff).min(current.len()),
            None => break,
        }
    }

    let minimal = ProgramSlice::with_origin(materialize(&current), program.origin_size())?;
    let mut stats = session.stats();
    let wall_time = started.elapsed().as_secs_f64();
    stats.wall_time = wall_time;
    Ok(ReductionResult {
        minimal,
        trace,
        stats,
        wall_time,
        reference: session.reference.clone(),
        reference_label: session.reference_label.clone(),
        protected_count: protected.len(),
        budget_exhausted,
    })
}

/// Tests one candidate against the original program's reference label.
pub fn test_candidate(
    oracle: &mut OracleClient,
    original: &ProgramSlice,
    candidate: &ProgramSlice,
    config: &ReductionConfig,
) -> Result<TestOutcome, ReductionError> {
    Session::new(oracle, original, config)?.test_candidate(candidate)
}

/// True iff removing any single non-protected unit of `slice` loses the
/// reference label (Invalid or Diverged). Runs in its own session, so its
/// oracle calls never touch a reduction's counters.
pub fn verify_one_minimal(
    oracle: &mut OracleClient,
    slice: &ProgramSlice,
    config: &ReductionConfig,
) -> Result<bool, ReductionError> {
    let check_config = ReductionConfig {
        // The slice itself need not satisfy the structural gate.
        require_valid: false,
        ..config.clone()
    };
    let mut session = match Session::new(oracle, slice, &check_config) {
        Ok(s) => s,
        Err(ReductionError::ReferenceMismatch { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    session.config = config;
    for unit in slice.units() {
        if config.protected_uids.contains(&unit.uid) {
            continue;
        }
        if session.test_candidate(&slice.without_uid(unit.uid))?.is_preserved() {
            return Ok(false);
        }
    }
    Ok(true)
}
