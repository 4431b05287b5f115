//! Melodic relations within a voice: stepwise motion and the passing and
//! neighbor figures of the contrapuntal grammar.

use crate::score_io::{NoteEvent, StepSequence};

/// A note of one voice, by position in that voice's event list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoteRef {
    pub voice: usize,
    pub event: usize,
}

impl NoteRef {
    pub fn new(voice: usize, event: usize) -> Self {
        NoteRef { voice, event }
    }

    pub fn get(self, seq: &StepSequence) -> &NoteEvent {
        &seq.voices[self.voice][self.event]
    }
}

/// The note immediately before `n` in its voice; `None` after a rest.
pub fn prev_note(seq: &StepSequence, n: NoteRef) -> Option<NoteRef> {
    let e = n.event.checked_sub(1)?;
    seq.voices[n.voice][e].pc().map(|_| NoteRef::new(n.voice, e))
}

/// The note immediately after `n` in its voice; `None` before a rest.
pub fn next_note(seq: &StepSequence, n: NoteRef) -> Option<NoteRef> {
    let e = n.event + 1;
    seq.voices[n.voice].get(e)?.pc().map(|_| NoteRef::new(n.voice, e))
}

/// Signed interval from `a` to `b` in semitones. Uses octaves when both
/// notes have them, otherwise the smallest pitch-class distance.
pub fn melodic_interval(a: &NoteEvent, b: &NoteEvent) -> Option<i32> {
    if let (Some(x), Some(y)) = (a.pitch(), b.pitch()) {
        return Some(y - x);
    }
    let (x, y) = (a.pc()?, b.pc()?);
    let up = x.interval_to(y) as i32;
    Some(if up > 6 { up - 12 } else { up })
}

/// Motion by one or two semitones.
pub fn is_step(a: &NoteEvent, b: &NoteEvent) -> bool {
    matches!(melodic_interval(a, b), Some(i) if (1..=2).contains(&i.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Embellishment {
    Passing { ascending: bool },
    Neighbor { ascending: bool },
}

/// Classifies `n` as a passing or neighbor tone: approached and left by
/// step from notes that `chord_tone` accepts. `chord_tone` receives the
/// adjacent note.
pub fn embellishment(
    seq: &StepSequence,
    n: NoteRef,
    mut chord_tone: impl FnMut(NoteRef) -> bool,
) -> Option<Embellishment> {
    let p = prev_note(seq, n)?;
    let q = next_note(seq, n)?;
    let (pe, ne, qe) = (p.get(seq), n.get(seq), q.get(seq));
    if !is_step(pe, ne) || !is_step(ne, qe) {
        return None;
    }
    if !chord_tone(p) || !chord_tone(q) {
        return None;
    }
    let into = melodic_interval(pe, ne)?;
    let out = melodic_interval(ne, qe)?;
    let ascending = into > 0;
    Some(if (into > 0) == (out > 0) {
        Embellishment::Passing { ascending }
    } else {
        Embellishment::Neighbor { ascending }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pitch::PitchClass;
    use crate::score_io::{segment_steps, Rational64, Work};

    fn line(pitches: &[Option<i32>]) -> StepSequence {
        let voice = pitches
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let on = Rational64::from_integer(i as i64);
                let d = Rational64::from_integer(1);
                match p {
                    Some(p) => NoteEvent::note(on, d, PitchClass::wrap(*p as i64), Some(p.div_euclid(12))),
                    None => NoteEvent::rest(on, d),
                }
            })
            .collect();
        segment_steps(&Work {
            id: "l".into(),
            voices: vec![voice],
            time_signature: [4, 4].into(),
            key_signature: 0,
            pickup: Rational64::from_integer(0),
        })
    }

    #[test]
    fn passing_and_neighbor() {
        let seq = line(&[Some(60), Some(62), Some(64), Some(62), Some(60), None, Some(61)]);
        let any = |_| true;
        assert_eq!(
            embellishment(&seq, NoteRef::new(0, 1), any),
            Some(Embellishment::Passing { ascending: true })
        );
        assert_eq!(
            embellishment(&seq, NoteRef::new(0, 2), any),
            Some(Embellishment::Neighbor { ascending: true })
        );
        assert_eq!(
            embellishment(&seq, NoteRef::new(0, 3), any),
            Some(Embellishment::Passing { ascending: false })
        );
        // Followed by a rest.
        assert_eq!(embellishment(&seq, NoteRef::new(0, 4), any), None);
        assert_eq!(prev_note(&seq, NoteRef::new(0, 6)), None);
    }

    #[test]
    fn leaps_and_non_chord_neighbours_are_rejected() {
        let seq = line(&[Some(60), Some(64), Some(65)]);
        assert_eq!(embellishment(&seq, NoteRef::new(0, 1), |_| true), None);
        let seq = line(&[Some(60), Some(62), Some(64)]);
        assert_eq!(embellishment(&seq, NoteRef::new(0, 1), |r| r.event == 0), None);
    }

    #[test]
    fn octave_free_intervals_use_nearest_distance() {
        let d = Rational64::from_integer(1);
        let a = NoteEvent::note(d, d, PitchClass::new(11).unwrap(), None);
        let b = NoteEvent::note(d, d, PitchClass::new(1).unwrap(), None);
        assert_eq!(melodic_interval(&a, &b), Some(2));
        assert!(is_step(&b, &a));
    }
}
