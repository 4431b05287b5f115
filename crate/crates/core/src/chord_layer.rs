//! Chord inference: sounding pitch classes are emissions of a hidden chord.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pitch::PitchClass;
use crate::score_io::StepSequence;
use crate::tied_hmm::{
    self, canonical_by_occupancy, FitOptions, FitReport, ModelShape, ObservationSeq, Symbol, TiedHmmParams, TiedState,
};
use crate::tracks::{self, LabelRows};

pub const DEFAULT_CHORD_TYPES: usize = 3;

/// A chord as the model sees it: an anchor and a learned type. After
/// fitting, type 0 is the most frequent (usually major), then minor, then
/// diminished/dominant seventh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChordLabel {
    pub anchor: PitchClass,
    pub ctype: usize,
}

impl ChordLabel {
    pub fn new(anchor: PitchClass, ctype: usize) -> Self {
        ChordLabel { anchor, ctype }
    }

    pub fn state(self) -> TiedState {
        TiedState {
            anchor: self.anchor,
            type_id: self.ctype,
        }
    }

    pub fn transpose(self, semitones: i32) -> Self {
        ChordLabel {
            anchor: self.anchor.transpose(semitones),
            ..self
        }
    }
}

impl From<TiedState> for ChordLabel {
    fn from(s: TiedState) -> Self {
        ChordLabel {
            anchor: s.anchor,
            ctype: s.type_id,
        }
    }
}

impl fmt::Display for ChordLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.anchor.value(), self.ctype)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordTrack {
    pub work_id: String,
    pub labels: Vec<ChordLabel>,
}

impl ChordTrack {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// How a step's notes become emitted symbols.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EmissionMode {
    /// One symbol per sounding voice, so doubled pitch classes count twice.
    #[default]
    PerVoice,
    /// One symbol per distinct sounding pitch class.
    DistinctPitchClasses,
}

/// Emitted symbols of every step.
pub fn observations(seq: &StepSequence, mode: EmissionMode) -> ObservationSeq {
    let steps = seq
        .steps
        .iter()
        .map(|step| match mode {
            EmissionMode::PerVoice => step.sounding.iter().map(|n| Symbol::note(n.pc)).collect(),
            EmissionMode::DistinctPitchClasses => step.pitch_classes().iter().map(Symbol::note).collect(),
        })
        .collect();
    ObservationSeq::new(steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChordFitConfig {
    pub n_types: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub mode: EmissionMode,
    pub fit: FitOptions,
}

impl Default for ChordFitConfig {
    fn default() -> Self {
        ChordFitConfig {
            n_types: DEFAULT_CHORD_TYPES,
            n_runs: 50,
            seed: 0,
            mode: EmissionMode::default(),
            fit: FitOptions::default(),
        }
    }
}

/// Fits the chord model with restarts. The returned parameters are
/// canonical, with types ordered by decoded frequency.
pub fn fit_chord_model(corpus: &[StepSequence], config: &ChordFitConfig) -> Result<FitReport> {
    let obs: Vec<ObservationSeq> = corpus.iter().map(|s| observations(s, config.mode)).collect();
    let shape = ModelShape::new(config.n_types, 1);
    let mut report = tied_hmm::fit_multi_restart(&obs, shape, config.n_runs, config.seed, &config.fit)?;
    report.params = canonical_by_occupancy(&report.params, &obs)?;
    Ok(report)
}

/// Most probable chord at every step.
pub fn decode_chords(params: &TiedHmmParams, seq: &StepSequence, mode: EmissionMode) -> Result<ChordTrack> {
    let track = tied_hmm::viterbi(params, &observations(seq, mode))?;
    Ok(ChordTrack {
        work_id: seq.work_id.clone(),
        labels: track.states.into_iter().map(ChordLabel::from).collect(),
    })
}

pub fn decode_corpus(params: &TiedHmmParams, corpus: &[StepSequence], mode: EmissionMode) -> Result<Vec<ChordTrack>> {
    corpus.par_iter().map(|s| decode_chords(params, s, mode)).collect()
}

/// Emission probabilities of each type by anchor-relative pitch class,
/// as CSV with header `ctype,0,1,...,11`.
pub fn chord_emission_report(params: &TiedHmmParams) -> String {
    let mut out = String::from("ctype");
    for r in 0..12 {
        out.push_str(&format!(",{r}"));
    }
    out.push('\n');
    for t in 0..params.n_types() {
        out.push_str(&t.to_string());
        for p in &params.emission_row(t)[..12] {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_chord_tracks(path: &Path, tracks: &[ChordTrack]) -> Result<()> {
    let rows: Vec<LabelRows> = tracks
        .iter()
        .map(|t| LabelRows {
            work_id: t.work_id.clone(),
            labels: t.labels.iter().map(|l| (l.anchor, l.ctype)).collect(),
        })
        .collect();
    tracks::write_rows(path, "ctype", &rows)
}

pub fn read_chord_tracks(path: &Path) -> Result<Vec<ChordTrack>> {
    Ok(tracks::read_rows(path, "ctype")?
        .into_iter()
        .map(|r| ChordTrack {
            work_id: r.work_id,
            labels: r.labels.into_iter().map(|(a, t)| ChordLabel::new(a, t)).collect(),
        })
        .collect())
}
