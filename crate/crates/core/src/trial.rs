//! Domain model of the within-subjects explanation trial.
//!
//! A participant registers demographics, picks ten liked items, compares
//! two explanation groups shown as anonymous sides A and B, then answers
//! six Likert questions. Answers are stored with the sides resolved to
//! scorer names.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::explain::ScorerKind;

pub const PROFILE_SIZE: usize = 10;
pub const COMPARISON_SIZE: usize = 5;
pub const QUESTION_COUNT: usize = 6;
pub const ELICITATION_SIZE: usize = 100;
/// The two scorers compared in the trial.
pub const COMPARED: [ScorerKind; 2] = [ScorerKind::ExpLodV2, ScorerKind::Pem];

fn trial_err(msg: impl Into<String>) -> Error {
    Error::Trial(msg.into())
}

/// Participant details. Every field is required; missing ones are
/// reported together.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Demographics {
    pub nationality: Option<String>,
    pub education: Option<String>,
    pub age_band: Option<String>,
    pub gender: Option<String>,
    pub rs_familiarity: Option<bool>,
}

impl Demographics {
    pub fn missing_fields(&self) -> Vec<&'static str> {
        let blank = |s: &Option<String>| s.as_deref().is_none_or(|v| v.trim().is_empty());
        let mut out = Vec::new();
        if blank(&self.nationality) {
            out.push("nationality");
        }
        if blank(&self.education) {
            out.push("education");
        }
        if blank(&self.age_band) {
            out.push("age_band");
        }
        if blank(&self.gender) {
            out.push("gender");
        }
        if self.rs_familiarity.is_none() {
            out.push("rs_familiarity");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let missing = self.missing_fields();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(trial_err(format!("missing fields: {}", missing.join(", "))))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SessionState {
    Created,
    Profiled,
    Completed,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Created => "created",
            SessionState::Profiled => "profiled",
            SessionState::Completed => "completed",
        }
    }

    /// Only single forward steps are allowed.
    pub fn advance(self, to: SessionState) -> Result<SessionState> {
        match (self, to) {
            (SessionState::Created, SessionState::Profiled) | (SessionState::Profiled, SessionState::Completed) => {
                Ok(to)
            }
            _ => Err(trial_err(format!("cannot move session from {} to {}", self.as_str(), to.as_str()))),
        }
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Which scorer is shown on which side. Always a bijection over
/// [`COMPARED`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideAssignment {
    a: ScorerKind,
    b: ScorerKind,
}

impl SideAssignment {
    /// `first_on_a` puts `COMPARED[0]` on side A.
    pub fn from_coin(first_on_a: bool) -> Self {
        if first_on_a {
            SideAssignment { a: COMPARED[0], b: COMPARED[1] }
        } else {
            SideAssignment { a: COMPARED[1], b: COMPARED[0] }
        }
    }

    pub fn new(a: ScorerKind, b: ScorerKind) -> Result<Self> {
        let mut pair = [a, b];
        pair.sort();
        let mut expected = COMPARED;
        expected.sort();
        if pair != expected {
            return Err(trial_err(format!("side assignment must map {} and {} to A and B", COMPARED[0], COMPARED[1])));
        }
        Ok(SideAssignment { a, b })
    }

    pub fn scorer(&self, side: Side) -> ScorerKind {
        match side {
            Side::A => self.a,
            Side::B => self.b,
        }
    }

    pub fn side_of(&self, kind: ScorerKind) -> Option<Side> {
        if kind == self.a {
            Some(Side::A)
        } else if kind == self.b {
            Some(Side::B)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LikertAnswer {
    MuchMoreA,
    MoreA,
    Equal,
    MoreB,
    MuchMoreB,
}

impl LikertAnswer {
    pub const ALL: [LikertAnswer; 5] =
        [LikertAnswer::MuchMoreA, LikertAnswer::MoreA, LikertAnswer::Equal, LikertAnswer::MoreB, LikertAnswer::MuchMoreB];

    pub fn as_str(self) -> &'static str {
        match self {
            LikertAnswer::MuchMoreA => "MuchMoreA",
            LikertAnswer::MoreA => "MoreA",
            LikertAnswer::Equal => "Equal",
            LikertAnswer::MoreB => "MoreB",
            LikertAnswer::MuchMoreB => "MuchMoreB",
        }
    }

    /// Side favoured and whether strongly.
    fn lean(self) -> Option<(Side, Strength)> {
        match self {
            LikertAnswer::MuchMoreA => Some((Side::A, Strength::MuchMore)),
            LikertAnswer::MoreA => Some((Side::A, Strength::More)),
            LikertAnswer::Equal => None,
            LikertAnswer::MoreB => Some((Side::B, Strength::More)),
            LikertAnswer::MuchMoreB => Some((Side::B, Strength::MuchMore)),
        }
    }

    /// Replaces the side with the scorer shown on it.
    pub fn resolve(self, sides: &SideAssignment) -> ResolvedAnswer {
        match self.lean() {
            None => ResolvedAnswer::Equal,
            Some((side, strength)) => ResolvedAnswer::Favours { scorer: sides.scorer(side), strength },
        }
    }
}

impl FromStr for LikertAnswer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LikertAnswer::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| trial_err(format!("unknown answer `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strength {
    More,
    MuchMore,
}

/// An answer with the anonymous side replaced by a scorer name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ResolvedAnswer {
    Equal,
    Favours { scorer: ScorerKind, strength: Strength },
}

impl ResolvedAnswer {
    /// Scale positions in a fixed scorer order, used for counts and
    /// divergent bars: strongly first, equal, strongly second.
    pub fn scale() -> [ResolvedAnswer; 5] {
        let [x, y] = COMPARED;
        [
            ResolvedAnswer::Favours { scorer: x, strength: Strength::MuchMore },
            ResolvedAnswer::Favours { scorer: x, strength: Strength::More },
            ResolvedAnswer::Equal,
            ResolvedAnswer::Favours { scorer: y, strength: Strength::More },
            ResolvedAnswer::Favours { scorer: y, strength: Strength::MuchMore },
        ]
    }

    pub fn label(&self) -> String {
        match self {
            ResolvedAnswer::Equal => "equal".to_string(),
            ResolvedAnswer::Favours { scorer, strength: Strength::More } => format!("more_{scorer}"),
            ResolvedAnswer::Favours { scorer, strength: Strength::MuchMore } => format!("much_more_{scorer}"),
        }
    }

    pub fn favoured(&self) -> Option<ScorerKind> {
        match self {
            ResolvedAnswer::Equal => None,
            ResolvedAnswer::Favours { scorer, .. } => Some(*scorer),
        }
    }
}

impl FromStr for ResolvedAnswer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ResolvedAnswer::scale()
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| trial_err(format!("unknown resolved answer `{s}`")))
    }
}

/// Checks a profile submission: exactly [`PROFILE_SIZE`] distinct items,
/// all from `catalog`.
pub fn validate_profile(items: &[String], catalog: &BTreeSet<String>) -> Result<()> {
    if items.len() != PROFILE_SIZE {
        return Err(trial_err(format!("profile needs exactly {PROFILE_SIZE} items, got {}", items.len())));
    }
    let distinct: BTreeSet<&str> = items.iter().map(String::as_str).collect();
    if distinct.len() != items.len() {
        return Err(trial_err("profile items must be distinct"));
    }
    let unknown: Vec<&str> = items.iter().filter(|i| !catalog.contains(*i)).map(String::as_str).collect();
    if !unknown.is_empty() {
        return Err(trial_err(format!("items not in the elicitation catalog: {}", unknown.join(", "))));
    }
    Ok(())
}

/// Checks that question ids 1..=6 each appear exactly once and returns
/// the answers ordered by question id.
pub fn validate_responses(responses: &[(u8, LikertAnswer)]) -> Result<[LikertAnswer; QUESTION_COUNT]> {
    let mut out: [Option<LikertAnswer>; QUESTION_COUNT] = [None; QUESTION_COUNT];
    for &(q, a) in responses {
        let slot = usize::from(q)
            .checked_sub(1)
            .and_then(|i| out.get_mut(i))
            .ok_or_else(|| trial_err(format!("unknown question id {q}")))?;
        if slot.replace(a).is_some() {
            return Err(trial_err(format!("question {q} answered twice")));
        }
    }
    let missing: Vec<String> =
        out.iter().enumerate().filter(|(_, a)| a.is_none()).map(|(i, _)| (i + 1).to_string()).collect();
    if !missing.is_empty() {
        return Err(trial_err(format!("missing answers for questions {}", missing.join(", "))));
    }
    Ok(out.map(|a| a.expect("checked above")))
}

/// Per-question counts over the resolved five-point scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseCounts {
    /// `counts[q][s]`: question `q + 1`, scale position `s` of
    /// [`ResolvedAnswer::scale`].
    pub counts: [[usize; 5]; QUESTION_COUNT],
}

impl Default for ResponseCounts {
    fn default() -> Self {
        ResponseCounts { counts: [[0; 5]; QUESTION_COUNT] }
    }
}

impl ResponseCounts {
    pub fn add(&mut self, question: u8, answer: ResolvedAnswer) -> Result<()> {
        let q = usize::from(question)
            .checked_sub(1)
            .filter(|&q| q < QUESTION_COUNT)
            .ok_or_else(|| trial_err(format!("unknown question id {question}")))?;
        let s = ResolvedAnswer::scale()
            .iter()
            .position(|x| *x == answer)
            .ok_or_else(|| trial_err("answer favours a scorer outside the trial"))?;
        self.counts[q][s] += 1;
        Ok(())
    }

    pub fn total(&self, question: u8) -> usize {
        self.counts.get(usize::from(question).wrapping_sub(1)).map_or(0, |r| r.iter().sum())
    }
}
