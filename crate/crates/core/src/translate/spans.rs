use crate::chord_layer::{ChordLabel, ChordTrack};
use crate::error::{Error, Result};
use crate::pitch::{PitchClass, PitchClassSet};
use crate::score_io::StepSequence;

/// A maximal run of steps with one chord label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordSpan {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub label: ChordLabel,
    /// Sounding pitch classes of each step.
    pub sounding: Vec<PitchClassSet>,
    /// Pitch classes sounding at every step.
    pub persistent: PitchClassSet,
    /// Bass-voice pitch classes in order, repeated notes collapsed.
    pub bass_notes: Vec<PitchClass>,
    /// Set when a suspension rule rewrote the label.
    pub relabeled: bool,
}

impl ChordSpan {
    pub fn new(start: usize, end: usize, label: ChordLabel, seq: &StepSequence) -> Self {
        let sounding: Vec<PitchClassSet> = seq.steps[start..=end].iter().map(|s| s.pitch_classes()).collect();
        let bass = seq.bass_voice();
        let mut bass_notes: Vec<PitchClass> = Vec::new();
        for step in &seq.steps[start..=end] {
            if let Some(n) = step.note_in_voice(bass) {
                if bass_notes.last() != Some(&n.pc) {
                    bass_notes.push(n.pc);
                }
            }
        }
        ChordSpan {
            start,
            end,
            label,
            persistent: intersect(&sounding),
            sounding,
            bass_notes,
            relabeled: false,
        }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    /// Every pitch class sounding anywhere in the span.
    pub fn union(&self) -> PitchClassSet {
        self.sounding.iter().fold(PitchClassSet::EMPTY, |a, &s| a.union(s))
    }

    /// Joins `self` with the span that follows it under `label`;
    /// persistence is recomputed over the joined extent.
    pub fn merge_with(&self, next: &ChordSpan, label: ChordLabel) -> ChordSpan {
        debug_assert_eq!(self.end + 1, next.start);
        let mut sounding = self.sounding.clone();
        sounding.extend_from_slice(&next.sounding);
        let mut bass_notes = self.bass_notes.clone();
        for &pc in &next.bass_notes {
            if bass_notes.last() != Some(&pc) {
                bass_notes.push(pc);
            }
        }
        ChordSpan {
            start: self.start,
            end: next.end,
            label,
            persistent: intersect(&sounding),
            sounding,
            bass_notes,
            relabeled: self.relabeled || next.relabeled,
        }
    }
}

fn intersect(sets: &[PitchClassSet]) -> PitchClassSet {
    sets.iter()
        .copied()
        .reduce(PitchClassSet::intersection)
        .unwrap_or(PitchClassSet::EMPTY)
}

/// Cuts a chord track into maximal runs of identical labels.
pub fn build_spans(chords: &ChordTrack, seq: &StepSequence) -> Result<Vec<ChordSpan>> {
    if chords.len() != seq.len() {
        return Err(Error::LengthMismatch {
            context: format!("chord track vs steps of {}", seq.work_id),
            left: chords.len(),
            right: seq.len(),
        });
    }
    let mut spans = Vec::new();
    let mut start = 0;
    for i in 1..=chords.len() {
        if i == chords.len() || chords.labels[i] != chords.labels[start] {
            spans.push(ChordSpan::new(start, i - 1, chords.labels[start], seq));
            start = i;
        }
    }
    Ok(spans)
}
