//! From chord and key labels to Roman numerals.
//!
//! Three translations of increasing refinement:
//!
//! 1. [`method1`] reads type 0 as a major triad, type 1 as a minor triad
//!    and type 2 from the notes 0, 3, 6 or 8 semitones above the anchor
//!    (diminished chords on the anchor, dominants a major third below).
//!    The bass is the lowest sounding chord tone.
//! 2. [`method2`] follows the bass voice, admits sixths and sevenths by
//!    persistence and rewrites standard suspension formulas.
//! 3. [`method3`] additionally reconsiders pairs of harmonies inside one
//!    beat, keeping the reading whose progressions are most frequent in a
//!    [`ProgressionTable`].
//!
//! Keys come from a [`KeyTrack`]; methods 2 and 3 expect it smoothed with
//! [`smooth_keys`].

mod harmony;
mod keys;
mod progression;
mod pruning;
mod spans;
mod suspension;

use crate::error::{Error, Result};
use crate::key_layer::{KeyLabel, KeyTrack};
use crate::score_io::{RomanAnnotation, RomanSpan, StepSequence};
use crate::theory::{Numeral, RomanChord};

use harmony::{bass_by_step, lowest_chord_tone, realize, Harmony, Rules};

pub use keys::{smooth_keys, span_key, DEFAULT_REGION_MAX};
pub use progression::{build_progression_table, ProgressionTable};
pub use pruning::{method3, prune_candidates, Candidate, PruningGroup};
pub use spans::{build_spans, ChordSpan};
pub use suspension::{apply_suspension_rules, matching_rule, SuspensionRule, SUSPENSION_RULES};

/// Chord type read as a major triad.
pub const MAJOR_TYPE: usize = 0;
/// Chord type read as a minor triad.
pub const MINOR_TYPE: usize = 1;
/// Chord type read as a diminished chord or a dominant.
pub const DIMINISHED_TYPE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlagKind {
    /// No harmonic note supported the chord; a default reading was used.
    Fallback,
    /// A suspension rule rewrote the chord.
    Suspension,
    /// Harmonies inside a beat were merged by method 3.
    Pruned,
}

impl FlagKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlagKind::Fallback => "fallback",
            FlagKind::Suspension => "suspension",
            FlagKind::Pruned => "pruned",
        }
    }
}

/// Steps (inclusive) whose reading deserves a second look.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SpanFlag {
    pub start: usize,
    pub end: usize,
    pub kind: FlagKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub annotation: RomanAnnotation,
    pub flags: Vec<SpanFlag>,
}

/// A chord span with its key and chord.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Reading {
    pub span: ChordSpan,
    pub key: KeyLabel,
    pub harmony: Harmony,
    pub pruned: bool,
}

impl Reading {
    /// Inversion-free symbol, as counted in a [`ProgressionTable`].
    pub fn symbol(&self) -> String {
        let chord = self.harmony.chord;
        Numeral::for_chord(chord, self.key).symbol(chord.seventh.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BassRule {
    LowestChordTone,
    BassVoice,
}

fn check_inputs(spans: &[ChordSpan], keys: &KeyTrack, seq: &StepSequence) -> Result<()> {
    if keys.len() != seq.len() {
        return Err(Error::LengthMismatch {
            context: format!("key track vs steps of {}", seq.work_id),
            left: keys.len(),
            right: seq.len(),
        });
    }
    let mut next = 0;
    for s in spans {
        if s.start != next || s.end < s.start {
            return Err(Error::validation(&seq.work_id, "chord spans must be contiguous"));
        }
        next = s.end + 1;
    }
    if next != seq.len() {
        return Err(Error::validation(&seq.work_id, "chord spans must cover every step"));
    }
    Ok(())
}

fn readings(spans: &[ChordSpan], keys: &KeyTrack, rules: Rules) -> Vec<Reading> {
    spans
        .iter()
        .map(|span| Reading {
            key: span_key(&keys.labels, span.start, span.end),
            harmony: realize(span, rules),
            span: span.clone(),
            pruned: false,
        })
        .collect()
}

fn render(readings: &[Reading], seq: &StepSequence, rule: BassRule) -> Translation {
    let mut spans: Vec<RomanSpan> = Vec::new();
    let mut flags = Vec::new();
    for r in readings {
        let chord = r.harmony.chord;
        let bass = match rule {
            BassRule::LowestChordTone => vec![lowest_chord_tone(seq, &r.span, chord); r.span.len()],
            BassRule::BassVoice => bass_by_step(seq, &r.span, chord),
        };
        for (step, b) in r.span.steps().zip(bass) {
            let roman = RomanSpan {
                start: step,
                end: step,
                key: r.key,
                chord: RomanChord::from_chord(chord, r.key, b),
            };
            match spans.last_mut() {
                Some(last) if last.key == roman.key && last.chord == roman.chord => last.end = step,
                _ => spans.push(roman),
            }
        }
        let flag = |kind| SpanFlag {
            start: r.span.start,
            end: r.span.end,
            kind,
        };
        if r.harmony.fallback {
            flags.push(flag(FlagKind::Fallback));
        }
        if r.span.relabeled {
            flags.push(flag(FlagKind::Suspension));
        }
        if r.pruned {
            flags.push(flag(FlagKind::Pruned));
        }
    }
    Translation {
        annotation: RomanAnnotation { spans },
        flags,
    }
}

/// Plain triads for types 0 and 1, the 0-3-6-8 reading for type 2, lowest
/// chord tone as bass.
pub fn method1(spans: &[ChordSpan], keys: &KeyTrack, seq: &StepSequence) -> Result<Translation> {
    check_inputs(spans, keys, seq)?;
    Ok(render(
        &readings(spans, keys, Rules::Plain),
        seq,
        BassRule::LowestChordTone,
    ))
}

pub(crate) fn method2_readings(spans: &[ChordSpan], keys: &KeyTrack, seq: &StepSequence) -> Result<Vec<Reading>> {
    check_inputs(spans, keys, seq)?;
    let rewritten = apply_suspension_rules(spans);
    Ok(readings(&rewritten, keys, Rules::Refined))
}

/// Suspension rewriting, persistence-based sixths and sevenths, and the
/// bass-voice rule.
pub fn method2(spans: &[ChordSpan], keys: &KeyTrack, seq: &StepSequence) -> Result<Translation> {
    let r = method2_readings(spans, keys, seq)?;
    Ok(render(&r, seq, BassRule::BassVoice))
}

#[cfg(test)]
mod tests;
