use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pitch::{PitchClass, PitchClassSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Note { pc: PitchClass, octave: Option<i32> },
    Rest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoteEvent {
    pub onset: Rational64,
    pub duration: Rational64,
    pub content: Event,
}

impl NoteEvent {
    pub fn note(onset: Rational64, duration: Rational64, pc: PitchClass, octave: Option<i32>) -> Self {
        NoteEvent {
            onset,
            duration,
            content: Event::Note { pc, octave },
        }
    }

    pub fn rest(onset: Rational64, duration: Rational64) -> Self {
        NoteEvent {
            onset,
            duration,
            content: Event::Rest,
        }
    }

    pub fn end(&self) -> Rational64 {
        self.onset + self.duration
    }

    pub fn pc(&self) -> Option<PitchClass> {
        match self.content {
            Event::Note { pc, .. } => Some(pc),
            Event::Rest => None,
        }
    }

    pub fn octave(&self) -> Option<i32> {
        match self.content {
            Event::Note { octave, .. } => octave,
            Event::Rest => None,
        }
    }

    /// Absolute pitch in semitones (C4 = 48) when the octave is known.
    pub fn pitch(&self) -> Option<i32> {
        match self.content {
            Event::Note { pc, octave: Some(o) } => Some(o * 12 + pc.value() as i32),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct TimeSignature {
    pub numerator: u32,
    pub denominator: u32,
}

impl TimeSignature {
    /// Quarter notes per measure.
    pub fn measure_length(self) -> Rational64 {
        Rational64::new(self.numerator as i64 * 4, self.denominator as i64)
    }

    /// Quarter notes per notated beat (the denominator's note value).
    pub fn beat_unit(self) -> Rational64 {
        Rational64::new(4, self.denominator as i64)
    }
}

impl From<[u32; 2]> for TimeSignature {
    fn from([numerator, denominator]: [u32; 2]) -> Self {
        TimeSignature { numerator, denominator }
    }
}

impl From<TimeSignature> for [u32; 2] {
    fn from(ts: TimeSignature) -> Self {
        [ts.numerator, ts.denominator]
    }
}

/// One piece: parallel voices, soprano first and bass last.
#[derive(Debug, Clone, PartialEq)]
pub struct Work {
    pub id: String,
    pub voices: Vec<Vec<NoteEvent>>,
    pub time_signature: TimeSignature,
    pub key_signature: i32,
    pub pickup: Rational64,
}

impl Work {
    pub fn duration(&self) -> Rational64 {
        self.voices
            .iter()
            .filter_map(|v| v.last().map(NoteEvent::end))
            .max()
            .unwrap_or_default()
    }

    /// Every note moved up by `semitones`; octaves follow pitch-class wraps.
    pub fn transpose(&self, semitones: i32) -> Work {
        let mut out = self.clone();
        for voice in &mut out.voices {
            for ev in voice {
                if let Event::Note { pc, octave } = &mut ev.content {
                    let raw = pc.value() as i32 + semitones;
                    *octave = octave.map(|o| o + raw.div_euclid(12));
                    *pc = pc.transpose(semitones);
                }
            }
        }
        out
    }

    /// Checks the structural invariants of a work.
    pub fn validate(&self) -> Result<()> {
        let ctx = || format!("work {}", self.id);
        if self.voices.is_empty() {
            return Err(Error::validation(ctx(), "a work needs at least one voice"));
        }
        if self.time_signature.numerator == 0 || self.time_signature.denominator == 0 {
            return Err(Error::validation(ctx(), "time signature terms must be positive"));
        }
        if self.pickup < Rational64::default() {
            return Err(Error::validation(ctx(), "pickup must not be negative"));
        }
        let end = self.duration();
        for (v, voice) in self.voices.iter().enumerate() {
            let mut prev_end = Rational64::default();
            for (i, ev) in voice.iter().enumerate() {
                if ev.duration <= Rational64::default() {
                    return Err(Error::validation(
                        ctx(),
                        format!("voice {v} event {i}: duration must be positive"),
                    ));
                }
                if ev.onset < prev_end {
                    return Err(Error::validation(
                        ctx(),
                        format!("voice {v} event {i}: overlaps the previous event"),
                    ));
                }
                prev_end = ev.end();
            }
            if prev_end != end {
                return Err(Error::validation(
                    ctx(),
                    format!("voice {v} ends at {prev_end}, the work ends at {end}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct WorkFile {
    #[serde(default = "default_version")]
    version: u32,
    id: String,
    timesig: TimeSignature,
    #[serde(default)]
    keysig: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pickup: Option<String>,
    voices: Vec<Vec<EventFile>>,
}

fn default_version() -> u32 {
    1
}

#[derive(Serialize, Deserialize)]
struct EventFile {
    on: String,
    dur: String,
    pc: Option<u8>,
    #[serde(default)]
    oct: Option<i32>,
}

fn parse_rational(s: &str) -> Option<Rational64> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse().ok()?, d.trim().parse().ok()?),
        None => (s.trim().parse().ok()?, 1),
    };
    (d != 0).then(|| Rational64::new(n, d))
}

fn format_rational(r: Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses one work from JSON text. `file` names the source in errors.
pub fn parse_work(text: &str, file: &str) -> Result<Work> {
    let raw: WorkFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        file: file.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if raw.version != 1 {
        return Err(Error::Parse {
            file: file.to_string(),
            line: 0,
            message: format!("unsupported version {}", raw.version),
        });
    }
    let context = format!("{file} (work {})", raw.id);
    let bad = |what: String| Error::Validation {
        context: context.clone(),
        message: what,
    };
    let pickup = match &raw.pickup {
        Some(s) => parse_rational(s).ok_or_else(|| bad(format!("bad pickup {s:?}")))?,
        None => Rational64::default(),
    };
    let mut voices = Vec::with_capacity(raw.voices.len());
    for (v, voice) in raw.voices.iter().enumerate() {
        let mut events = Vec::with_capacity(voice.len());
        for (i, ev) in voice.iter().enumerate() {
            let onset =
                parse_rational(&ev.on).ok_or_else(|| bad(format!("voice {v} event {i}: bad onset {:?}", ev.on)))?;
            let duration = parse_rational(&ev.dur)
                .ok_or_else(|| bad(format!("voice {v} event {i}: bad duration {:?}", ev.dur)))?;
            let content = match ev.pc {
                Some(p) => Event::Note {
                    pc: PitchClass::new(p).ok_or_else(|| bad(format!("voice {v} event {i}: pitch class {p} > 11")))?,
                    octave: ev.oct,
                },
                None => Event::Rest,
            };
            events.push(NoteEvent {
                onset,
                duration,
                content,
            });
        }
        voices.push(events);
    }
    let work = Work {
        id: raw.id,
        voices,
        time_signature: raw.timesig,
        key_signature: raw.keysig,
        pickup,
    };
    work.validate().map_err(|e| match e {
        Error::Validation { message, .. } => bad(message),
        other => other,
    })?;
    Ok(work)
}

pub fn read_work(path: &Path) -> Result<Work> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_work(&text, &path.display().to_string())
}

/// Serializes a work in the corpus JSON format.
pub fn write_work(work: &Work, path: &Path) -> Result<()> {
    let raw = WorkFile {
        version: 1,
        id: work.id.clone(),
        timesig: work.time_signature,
        keysig: work.key_signature,
        pickup: (work.pickup != Rational64::default()).then(|| format_rational(work.pickup)),
        voices: work
            .voices
            .iter()
            .map(|voice| {
                voice
                    .iter()
                    .map(|ev| EventFile {
                        on: format_rational(ev.onset),
                        dur: format_rational(ev.duration),
                        pc: ev.pc().map(PitchClass::value),
                        oct: ev.octave(),
                    })
                    .collect()
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&raw)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Parses a single work file, or every `*.json` file of a directory.
/// Works are returned sorted by id; duplicate ids are rejected.
pub fn parse_corpus(path: &Path) -> Result<Vec<Work>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        return Ok(vec![read_work(path)?]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if p.extension().is_some_and(|e| e == "json") && p.is_file() {
            files.push(p);
        }
    }
    files.sort();
    let mut works = files.iter().map(|p| read_work(p)).collect::<Result<Vec<_>>>()?;
    works.sort_by(|a, b| a.id.cmp(&b.id));
    for pair in works.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(Error::validation(
                path.display().to_string(),
                format!("duplicate work id {}", pair[0].id),
            ));
        }
    }
    Ok(works)
}

/// A note sounding at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoiceNote {
    pub voice: usize,
    pub pc: PitchClass,
    pub octave: Option<i32>,
    /// The note begins at this step rather than being held from before.
    pub attacked: bool,
    /// Index of the note in its voice's event list.
    pub event: usize,
}

impl VoiceNote {
    pub fn pitch(&self) -> Option<i32> {
        self.octave.map(|o| o * 12 + self.pc.value() as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub index: usize,
    pub onset: Rational64,
    /// Position within the measure, in quarter notes from the downbeat.
    pub beat_position: Rational64,
    /// Every voice sounding a note, in voice order. Held notes included.
    pub sounding: Vec<VoiceNote>,
    /// Pitch class of the bass (last) voice, if it is sounding.
    pub bass_pc: Option<PitchClass>,
}

impl Step {
    pub fn pitch_classes(&self) -> PitchClassSet {
        self.sounding.iter().map(|n| n.pc).collect()
    }

    pub fn note_in_voice(&self, voice: usize) -> Option<&VoiceNote> {
        self.sounding.iter().find(|n| n.voice == voice)
    }
}

/// A work cut into steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSequence {
    pub work_id: String,
    pub time_signature: TimeSignature,
    pub pickup: Rational64,
    /// The voices the steps were cut from.
    pub voices: Vec<Vec<NoteEvent>>,
    pub steps: Vec<Step>,
}

impl StepSequence {
    /// Number of steps (M).
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn n_voices(&self) -> usize {
        self.voices.len()
    }

    pub fn bass_voice(&self) -> usize {
        self.voices.len().saturating_sub(1)
    }

    /// Whether `onset` falls on a notated beat.
    pub fn is_on_beat(&self, onset: Rational64) -> bool {
        let pos = self.measure_position(onset);
        (pos / self.time_signature.beat_unit()).is_integer()
    }

    /// Index of the notated beat containing `onset`, counted from the first
    /// downbeat (negative inside a pickup).
    pub fn beat_index(&self, onset: Rational64) -> i64 {
        ((onset - self.pickup) / self.time_signature.beat_unit())
            .floor()
            .to_integer()
    }

    fn measure_position(&self, onset: Rational64) -> Rational64 {
        let len = self.time_signature.measure_length();
        let rel = onset - self.pickup;
        rel - len * (rel / len).floor()
    }

    /// The step at which note `event` of `voice` begins.
    pub fn attack_step(&self, voice: usize, event: usize) -> Option<usize> {
        let onset = self.voices.get(voice)?.get(event)?.onset;
        self.step_at(onset)
    }

    /// The step whose onset equals `onset`.
    pub fn step_at(&self, onset: Rational64) -> Option<usize> {
        self.steps.binary_search_by(|s| s.onset.cmp(&onset)).ok()
    }

    /// The step sounding at time `t` (the last step starting at or before it).
    pub fn step_containing(&self, t: Rational64) -> Option<usize> {
        match self.steps.binary_search_by(|s| s.onset.cmp(&t)) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        }
    }
}

/// Cuts a work into steps: one at every onset where any voice begins a
/// note or a rest.
pub fn segment_steps(work: &Work) -> StepSequence {
    let onsets: BTreeSet<Rational64> = work.voices.iter().flat_map(|v| v.iter().map(|e| e.onset)).collect();
    let mut cursor = vec![0usize; work.voices.len()];
    let bass = work.voices.len().saturating_sub(1);
    let mut seq = StepSequence {
        work_id: work.id.clone(),
        time_signature: work.time_signature,
        pickup: work.pickup,
        voices: work.voices.clone(),
        steps: Vec::with_capacity(onsets.len()),
    };
    for (index, &onset) in onsets.iter().enumerate() {
        let mut sounding = Vec::new();
        for (v, voice) in work.voices.iter().enumerate() {
            let c = &mut cursor[v];
            while *c < voice.len() && voice[*c].end() <= onset {
                *c += 1;
            }
            let Some(ev) = voice.get(*c) else { continue };
            if ev.onset > onset {
                continue;
            }
            if let Event::Note { pc, octave } = ev.content {
                sounding.push(VoiceNote {
                    voice: v,
                    pc,
                    octave,
                    attacked: ev.onset == onset,
                    event: *c,
                });
            }
        }
        let bass_pc = sounding.iter().find(|n| n.voice == bass).map(|n| n.pc);
        let beat_position = seq.measure_position(onset);
        seq.steps.push(Step {
            index,
            onset,
            beat_position,
            sounding,
            bass_pc,
        });
    }
    seq
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn pc(v: u8) -> PitchClass {
        PitchClass::new(v).unwrap()
    }

    fn four_four(voices: Vec<Vec<NoteEvent>>) -> Work {
        Work {
            id: "w".into(),
            voices,
            time_signature: [4, 4].into(),
            key_signature: 0,
            pickup: r(0, 1),
        }
    }

    #[test]
    fn minimal_file() {
        let text = r#"{"id":"x","timesig":[4,4],"keysig":0,
            "voices":[[{"on":"0","dur":"4","pc":0,"oct":4}]]}"#;
        let w = parse_work(text, "x.json").unwrap();
        assert_eq!(w.voices.len(), 1);
        assert_eq!(w.voices[0].len(), 1);
        assert_eq!(w.voices[0][0].duration, r(4, 1));
        assert_eq!(w.voices[0][0].pc(), Some(PitchClass::C));
    }

    #[test]
    fn overlapping_notes_are_rejected() {
        let text = r#"{"id":"x","timesig":[4,4],"keysig":0,
            "voices":[[{"on":"0","dur":"1","pc":0,"oct":4},{"on":"0","dur":"1","pc":4,"oct":4}]]}"#;
        assert!(matches!(parse_work(text, "x.json"), Err(Error::Validation { .. })));
    }

    #[test]
    fn json_errors_name_the_line() {
        let text = "{\"id\":\"x\",\n\"timesig\":[4,4],\n\"voices\": [[{\"on\": 0}]]}";
        match parse_work(text, "bad.json") {
            Err(Error::Parse { file, line, .. }) => {
                assert_eq!(file, "bad.json");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unequal_voice_lengths_are_rejected() {
        let w = four_four(vec![
            vec![NoteEvent::note(r(0, 1), r(2, 1), pc(0), Some(4))],
            vec![NoteEvent::note(r(0, 1), r(1, 1), pc(0), Some(3))],
        ]);
        assert!(w.validate().is_err());
    }

    #[test]
    fn held_notes_appear_in_every_step() {
        let w = four_four(vec![
            vec![
                NoteEvent::note(r(0, 1), r(1, 2), pc(0), Some(5)),
                NoteEvent::note(r(1, 2), r(1, 2), pc(2), Some(5)),
            ],
            vec![NoteEvent::note(r(0, 1), r(1, 1), pc(7), Some(4))],
            vec![NoteEvent::note(r(0, 1), r(1, 1), pc(4), Some(4))],
            vec![NoteEvent::note(r(0, 1), r(1, 1), pc(0), Some(3))],
        ]);
        let seq = segment_steps(&w);
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.steps[1].sounding.len(), 4);
        assert!(seq.steps[1].sounding[0].attacked);
        assert!(!seq.steps[1].sounding[3].attacked);
        assert_eq!(seq.steps[1].bass_pc, Some(pc(0)));
        assert_eq!(seq.steps[1].beat_position, r(1, 2));
    }

    #[test]
    fn rest_onsets_create_steps() {
        let w = four_four(vec![
            vec![
                NoteEvent::note(r(0, 1), r(1, 1), pc(0), Some(5)),
                NoteEvent::rest(r(1, 1), r(1, 1)),
            ],
            vec![NoteEvent::note(r(0, 1), r(2, 1), pc(4), Some(4))],
        ]);
        let seq = segment_steps(&w);
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.steps[1].pitch_classes(), PitchClassSet::from_semitones([4]));
        assert_eq!(seq.steps[1].bass_pc, Some(pc(4)));
    }

    #[test]
    fn pickup_shifts_the_beat_grid() {
        let mut w = four_four(vec![vec![
            NoteEvent::note(r(0, 1), r(1, 1), pc(7), Some(4)),
            NoteEvent::note(r(1, 1), r(4, 1), pc(0), Some(5)),
        ]]);
        w.pickup = r(1, 1);
        let seq = segment_steps(&w);
        assert_eq!(seq.steps[0].beat_position, r(3, 1));
        assert_eq!(seq.steps[1].beat_position, r(0, 1));
        assert_eq!(seq.beat_index(r(0, 1)), -1);
        assert!(seq.is_on_beat(r(0, 1)));
        assert!(!seq.is_on_beat(r(3, 2)));
    }

    #[test]
    fn transpose_carries_octaves() {
        let w = four_four(vec![vec![NoteEvent::note(r(0, 1), r(1, 1), pc(11), Some(4))]]);
        let t = w.transpose(1);
        assert_eq!(t.voices[0][0].pc(), Some(pc(0)));
        assert_eq!(t.voices[0][0].octave(), Some(5));
        assert_eq!(w.transpose(-1).transpose(1), w);
    }

    #[test]
    fn rationals_parse_both_forms() {
        assert_eq!(parse_rational("3/2"), Some(r(3, 2)));
        assert_eq!(parse_rational("4"), Some(r(4, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }
}
