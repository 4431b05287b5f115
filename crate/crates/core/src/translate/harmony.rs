use super::spans::ChordSpan;
use super::{DIMINISHED_TYPE, MAJOR_TYPE, MINOR_TYPE};
use crate::pitch::{PitchClass, PitchClassSet};
use crate::score_io::StepSequence;
use crate::theory::{Chord, SeventhKind, TriadQuality};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rules {
    /// Triads for the major and minor types; the 0-3-6-8 reading of the
    /// diminished type.
    Plain,
    /// Adds the persistence-dependent sixth and seventh rules.
    Refined,
}

/// The chord a span is read as, and whether no harmonic note supported it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Harmony {
    pub chord: Chord,
    pub fallback: bool,
}

fn has(set: PitchClassSet, anchor: PitchClass, semitones: u8) -> bool {
    set.contains(anchor.transpose(semitones as i32))
}

pub(crate) fn realize(span: &ChordSpan, rules: Rules) -> Harmony {
    let a = span.label.anchor;
    let sounding = span.union();
    let persistent = span.persistent;
    let plain = |chord| Harmony { chord, fallback: false };
    match span.label.ctype {
        MAJOR_TYPE => {
            let triad = Chord::triad(a, TriadQuality::Major);
            if rules == Rules::Plain {
                return plain(triad);
            }
            plain(if has(sounding, a, 10) {
                triad.with_seventh(SeventhKind::Minor)
            } else if has(persistent, a, 9) {
                Chord::triad(a.transpose(9), TriadQuality::Minor).with_seventh(SeventhKind::Minor)
            } else if has(persistent, a, 11) {
                triad.with_seventh(SeventhKind::Major)
            } else {
                triad
            })
        }
        MINOR_TYPE => {
            let triad = Chord::triad(a, TriadQuality::Minor);
            if rules == Rules::Plain {
                return plain(triad);
            }
            plain(if has(sounding, a, 10) {
                triad.with_seventh(SeventhKind::Minor)
            } else if has(persistent, a, 9) {
                Chord::triad(a.transpose(9), TriadQuality::Diminished).with_seventh(SeventhKind::Minor)
            } else {
                triad
            })
        }
        DIMINISHED_TYPE => diminished_type(a, sounding, rules),
        _ => Harmony {
            chord: Chord::triad(a, TriadQuality::Major),
            fallback: true,
        },
    }
}

/// Harmonic notes are those sounding 0, 3, 6 or 8 semitones above the
/// anchor. A note 8 above means a dominant a major third below the anchor;
/// otherwise the anchor is the root of a diminished chord.
fn diminished_type(a: PitchClass, sounding: PitchClassSet, rules: Rules) -> Harmony {
    let core = PitchClassSet::from_semitones([0, 3, 6, 8]).transpose(a.value() as i32);
    let harmonic = sounding.intersection(core);
    if harmonic.is_empty() {
        return Harmony {
            chord: Chord::triad(a, TriadQuality::Diminished),
            fallback: true,
        };
    }
    if has(harmonic, a, 8) {
        let dominant = Chord::triad(a.transpose(8), TriadQuality::Major);
        let chord = if has(harmonic, a, 6) {
            dominant.with_seventh(SeventhKind::Minor)
        } else {
            dominant
        };
        return Harmony { chord, fallback: false };
    }
    let triad = Chord::triad(a, TriadQuality::Diminished);
    let full_triad = [0, 3, 6].iter().all(|&x| has(sounding, a, x));
    let may_add_seventh = rules == Rules::Refined || full_triad;
    let chord = if may_add_seventh && has(sounding, a, 9) {
        triad.with_seventh(SeventhKind::Diminished)
    } else if may_add_seventh && has(sounding, a, 10) {
        triad.with_seventh(SeventhKind::Minor)
    } else {
        triad
    };
    Harmony { chord, fallback: false }
}

/// The lowest sounding chord tone, looking from the span's first step
/// onwards. Without octave data the lowest voice carrying a chord tone
/// is used.
pub(crate) fn lowest_chord_tone(seq: &StepSequence, span: &ChordSpan, chord: Chord) -> Option<PitchClass> {
    let tones = chord.tones();
    for step in &seq.steps[span.start..=span.end] {
        let candidates: Vec<_> = step.sounding.iter().filter(|n| tones.contains(n.pc)).collect();
        if candidates.is_empty() {
            continue;
        }
        if candidates.iter().all(|n| n.octave.is_some()) {
            return candidates
                .iter()
                .min_by_key(|n| (n.pitch(), std::cmp::Reverse(n.voice)))
                .map(|n| n.pc);
        }
        return candidates.iter().max_by_key(|n| n.voice).map(|n| n.pc);
    }
    None
}

/// Bass per step under the bass-voice rule: the first chord tone in the
/// bass voice holds until a later bass-voice chord tone displaces it.
/// Falls back to the lowest chord tone when the bass voice carries none.
pub(crate) fn bass_by_step(seq: &StepSequence, span: &ChordSpan, chord: Chord) -> Vec<Option<PitchClass>> {
    let tones = chord.tones();
    let bass = seq.bass_voice();
    let in_bass: Vec<Option<PitchClass>> = seq.steps[span.start..=span.end]
        .iter()
        .map(|s| s.note_in_voice(bass).map(|n| n.pc).filter(|&pc| tones.contains(pc)))
        .collect();
    let Some(first) = in_bass.iter().flatten().next().copied() else {
        return vec![lowest_chord_tone(seq, span, chord); span.len()];
    };
    let mut current = first;
    in_bass
        .iter()
        .map(|b| {
            if let Some(pc) = b {
                current = *pc;
            }
            Some(current)
        })
        .collect()
}
