//! Prediction oracles behind one query contract.
//!
//! An [`OracleClient`] wraps any [`Predictor`] (an in-process mock, a
//! subprocess worker, or an HTTP endpoint) and adds a candidate cache and
//! query counters. Transport failures are [`OracleError`]s and never turn
//! into a diverged prediction.

pub mod http;
pub mod mock;
pub mod subprocess;
pub mod wire;

use crate::unit::{AtomicUnit, Uid};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::time::{Duration, Instant};

pub use mock::{MockOracle, MockOracleSpec, MockView};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// An oracle's answer for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<bool>,
}

impl Prediction {
    pub fn new(label: impl Into<String>, score: f64) -> Self {
        Self {
            label: label.into(),
            score,
            attention: None,
            valid: None,
        }
    }

    /// Checks score range and attention shape against the submitted unit count.
    pub fn validate(&self, unit_count: usize) -> Result<(), OracleError> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(OracleError::Malformed(format!("score {} outside [0,1]", self.score)));
        }
        if let Some(attn) = &self.attention {
            if attn.len() != unit_count {
                return Err(OracleError::Malformed(format!(
                    "attention has {} entries for {unit_count} units",
                    attn.len()
                )));
            }
            if let Some(bad) = attn.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
                return Err(OracleError::Malformed(format!(
                    "attention value {bad} is not a non-negative real"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle transport failed: {0}")]
    Transport(String),
    #[error("malformed oracle response: {0}")]
    Malformed(String),
    #[error("oracle did not answer within {0:?}")]
    Timeout(Duration),
    #[error("response id {got} does not match request id {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("oracle i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// One candidate as submitted to an oracle.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub text: &'a str,
    pub units: &'a [AtomicUnit],
}

/// Anything that maps a candidate program to a prediction.
pub trait Predictor: Send {
    fn predict(&mut self, query: Query<'_>) -> Result<Prediction, OracleError>;

    /// Whether predictions depend on unit uids, not only on texts.
    /// Uid-sensitive predictors are cached by uid as well.
    fn uid_sensitive(&self) -> bool {
        false
    }

    fn transport(&self) -> Transport;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    InProcess,
    Subprocess,
    Http,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OracleStats {
    /// Queries forwarded to the predictor.
    pub queries: u64,
    pub cache_hits: u64,
    pub failures: u64,
    /// Seconds spent inside the predictor.
    pub oracle_time: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    text: String,
    units: Vec<String>,
    uids: Option<Vec<Uid>>,
}

pub struct OracleClient {
    predictor: Box<dyn Predictor>,
    cache: Option<HashMap<CacheKey, Prediction>>,
    stats: OracleStats,
}

impl std::fmt::Debug for OracleClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OracleClient")
            .field("transport", &self.predictor.transport())
            .field("cached", &self.cache.as_ref().map(HashMap::len))
            .field("stats", &self.stats)
            .finish()
    }
}

impl OracleClient {
    pub fn new(predictor: impl Predictor + 'static) -> Self {
        Self::from_boxed(Box::new(predictor))
    }

    pub fn from_boxed(predictor: Box<dyn Predictor>) -> Self {
        Self {
            predictor,
            cache: Some(HashMap::new()),
            stats: OracleStats::default(),
        }
    }

    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn transport(&self) -> Transport {
        self.predictor.transport()
    }

    pub fn stats(&self) -> OracleStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = OracleStats::default();
    }

    /// Drops cached predictions; call between reduction sessions.
    pub fn clear_cache(&mut self) {
        if let Some(cache) = &mut self.cache {
            cache.clear();
        }
    }

    pub fn query(&mut self, text: &str, units: &[AtomicUnit]) -> Result<Prediction, OracleError> {
        let key = self.cache.as_ref().map(|_| CacheKey {
            text: text.to_string(),
            units: units.iter().map(|u| u.text.clone()).collect(),
            uids: self
                .predictor
                .uid_sensitive()
                .then(|| units.iter().map(|u| u.uid).collect()),
        });
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            if let Some(hit) = cache.get(key) {
                self.stats.cache_hits += 1;
                return Ok(hit.clone());
            }
        }

        let started = Instant::now();
        let outcome = self
            .predictor
            .predict(Query { text, units })
            .and_then(|p| p.validate(units.len()).map(|_| p));
        self.stats.oracle_time += started.elapsed().as_secs_f64();
        self.stats.queries += 1;

        let prediction = outcome.inspect_err(|_| self.stats.failures += 1)?;
        if let (Some(cache), Some(key)) = (&mut self.cache, key) {
            cache.insert(key, prediction.clone());
        }
        Ok(prediction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unit::ProgramSlice;

    struct Counting {
        calls: usize,
    }

    impl Predictor for Counting {
        fn predict(&mut self, query: Query<'_>) -> Result<Prediction, OracleError> {
            self.calls += 1;
            Ok(Prediction::new(format!("n{}", query.units.len()), 0.5))
        }

        fn transport(&self) -> Transport {
            Transport::InProcess
        }
    }

    struct Broken;

    impl Predictor for Broken {
        fn predict(&mut self, _: Query<'_>) -> Result<Prediction, OracleError> {
            Ok(Prediction {
                label: "x".into(),
                score: 0.2,
                attention: Some(vec![1.0]),
                valid: None,
            })
        }

        fn transport(&self) -> Transport {
            Transport::InProcess
        }
    }

    #[test]
    fn cache_hits_skip_predictor() {
        let mut client = OracleClient::new(Counting { calls: 0 });
        let p = ProgramSlice::from_tokens(&["a", "b"]);
        let first = client.query("a b", p.units()).unwrap();
        let second = client.query("a b", p.units()).unwrap();
        assert_eq!(first, second);
        assert_eq!(client.stats().queries, 1);
        assert_eq!(client.stats().cache_hits, 1);

        let mut uncached = OracleClient::new(Counting { calls: 0 }).without_cache();
        uncached.query("a b", p.units()).unwrap();
        uncached.query("a b", p.units()).unwrap();
        assert_eq!(uncached.stats().queries, 2);
    }

    #[test]
    fn attention_length_is_checked() {
        let mut client = OracleClient::new(Broken);
        let p = ProgramSlice::from_tokens(&["a", "b"]);
        let err = client.query("a b", p.units()).unwrap_err();
        assert!(matches!(err, OracleError::Malformed(_)));
        assert_eq!(client.stats().failures, 1);
    }

    #[test]
    fn score_range_is_checked() {
        let bad = Prediction::new("x", 1.5);
        assert!(bad.validate(0).is_err());
        assert!(Prediction::new("x", 1.0).validate(3).is_ok());
    }
}
