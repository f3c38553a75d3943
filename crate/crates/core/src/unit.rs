//! Atomic units and ordered slices of them.
//!
//! A program is a sequence of [`AtomicUnit`]s with strictly increasing uids.
//! Every candidate produced during reduction is an order-preserving
//! subsequence of the original sequence, so uid monotonicity is the
//! subsequence witness.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Stable occurrence identifier, ordinal within one original program.
pub type Uid = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Token,
    Character,
    Custom,
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitKind::Token => "token",
            UnitKind::Character => "character",
            UnitKind::Custom => "custom",
        })
    }
}

/// One indivisible reduction element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomicUnit {
    pub uid: Uid,
    pub kind: UnitKind,
    pub text: String,
    /// Byte offset of the unit in the source text it was split from.
    pub offset: usize,
}

impl AtomicUnit {
    pub fn new(uid: Uid, kind: UnitKind, text: impl Into<String>, offset: usize) -> Self {
        Self {
            uid,
            kind,
            text: text.into(),
            offset,
        }
    }

    /// Token unit with a synthetic offset; handy for building test programs.
    pub fn token(uid: Uid, text: impl Into<String>) -> Self {
        Self::new(uid, UnitKind::Token, text, uid as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SliceError {
    #[error("uids must be strictly increasing: uid {next} follows {prev}")]
    NotIncreasing { prev: Uid, next: Uid },
    #[error("{kind} unit {uid} has invalid text {text:?}")]
    BadText { uid: Uid, kind: UnitKind, text: String },
    #[error("slice of {len} units exceeds origin size {origin}")]
    TooLarge { len: usize, origin: usize },
}

/// Ordered subsequence of a program's atomic units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramSlice {
    units: Vec<AtomicUnit>,
    origin_size: usize,
}

impl ProgramSlice {
    /// Wraps a whole original program.
    pub fn new(units: Vec<AtomicUnit>) -> Result<Self, SliceError> {
        let origin_size = units.len();
        Self::with_origin(units, origin_size)
    }

    pub fn with_origin(units: Vec<AtomicUnit>, origin_size: usize) -> Result<Self, SliceError> {
        if units.len() > origin_size {
            return Err(SliceError::TooLarge {
                len: units.len(),
                origin: origin_size,
            });
        }
        for unit in &units {
            let ok = match unit.kind {
                UnitKind::Character => unit.text.chars().count() == 1,
                UnitKind::Token | UnitKind::Custom => !unit.text.is_empty(),
            };
            if !ok {
                return Err(SliceError::BadText {
                    uid: unit.uid,
                    kind: unit.kind,
                    text: unit.text.clone(),
                });
            }
        }
        for pair in units.windows(2) {
            if pair[0].uid >= pair[1].uid {
                return Err(SliceError::NotIncreasing {
                    prev: pair[0].uid,
                    next: pair[1].uid,
                });
            }
        }
        Ok(Self { units, origin_size })
    }

    /// Builds a token program from texts, assigning uids `0..n`.
    pub fn from_tokens<S: AsRef<str>>(texts: &[S]) -> Self {
        let units = texts
            .iter()
            .enumerate()
            .map(|(i, t)| AtomicUnit::token(i as Uid, t.as_ref()))
            .collect();
        Self::new(units).expect("token texts must be non-empty")
    }

    pub fn units(&self) -> &[AtomicUnit] {
        &self.units
    }

    pub fn into_units(self) -> Vec<AtomicUnit> {
        self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn origin_size(&self) -> usize {
        self.origin_size
    }

    pub fn uids(&self) -> Vec<Uid> {
        self.units.iter().map(|u| u.uid).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.units.iter().map(|u| u.text.as_str()).collect()
    }

    pub fn contains_uid(&self, uid: Uid) -> bool {
        self.units.binary_search_by_key(&uid, |u| u.uid).is_ok()
    }

    /// Keeps only the units whose uid is in `keep`.
    pub fn retain_uids(&self, keep: &BTreeSet<Uid>) -> Self {
        Self {
            units: self.units.iter().filter(|u| keep.contains(&u.uid)).cloned().collect(),
            origin_size: self.origin_size,
        }
    }

    /// Removes a single unit by uid.
    pub fn without_uid(&self, uid: Uid) -> Self {
        Self {
            units: self.units.iter().filter(|u| u.uid != uid).cloned().collect(),
            origin_size: self.origin_size,
        }
    }

    /// True when every unit of `self` occurs in `original` (uid and text).
    pub fn is_subsequence_of(&self, original: &ProgramSlice) -> bool {
        self.units.iter().all(|u| {
            original
                .units
                .binary_search_by_key(&u.uid, |o| o.uid)
                .map(|i| original.units[i].text == u.text)
                .unwrap_or(false)
        })
    }
}
