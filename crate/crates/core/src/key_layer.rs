//! Key inference: decoded chords are emissions of a hidden key.

use std::path::Path;

use rayon::prelude::*;

use crate::chord_layer::ChordTrack;
use crate::error::{Error, Result};
use crate::tied_hmm::{
    self, canonical_by_occupancy, FitOptions, FitReport, ModelShape, ObservationSeq, Symbol, TiedHmmParams,
};
use crate::tracks::{self, LabelRows};

pub use crate::theory::KeyLabel;

pub const DEFAULT_KEY_TYPES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyTrack {
    pub work_id: String,
    pub labels: Vec<KeyLabel>,
}

impl KeyTrack {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One symbol per step: the chord type is the symbol class and the chord
/// anchor its pitch class.
pub fn observations(track: &ChordTrack) -> ObservationSeq {
    ObservationSeq::new(
        track
            .labels
            .iter()
            .map(|l| vec![Symbol::new(l.ctype as u8, l.anchor)])
            .collect(),
    )
}

fn n_chord_types(tracks: &[ChordTrack]) -> usize {
    tracks
        .iter()
        .flat_map(|t| &t.labels)
        .map(|l| l.ctype + 1)
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyFitConfig {
    pub n_types: usize,
    /// Number of chord types in the input; at least the largest seen.
    pub n_chord_types: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for KeyFitConfig {
    fn default() -> Self {
        KeyFitConfig {
            n_types: DEFAULT_KEY_TYPES,
            n_chord_types: crate::chord_layer::DEFAULT_CHORD_TYPES,
            n_runs: 50,
            seed: 0,
            fit: FitOptions::default(),
        }
    }
}

/// Fits the key model on hard chord assignments. The returned parameters
/// are canonical, with types ordered by decoded frequency.
pub fn fit_key_model(tracks: &[ChordTrack], config: &KeyFitConfig) -> Result<FitReport> {
    if tracks.iter().all(|t| t.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let seen = n_chord_types(tracks);
    if seen > config.n_chord_types {
        return Err(Error::InvalidParams(format!(
            "chord tracks use {seen} chord types, configured for {}",
            config.n_chord_types
        )));
    }
    let obs: Vec<ObservationSeq> = tracks.iter().map(observations).collect();
    let shape = ModelShape::new(config.n_types, config.n_chord_types);
    let mut report = tied_hmm::fit_multi_restart(&obs, shape, config.n_runs, config.seed, &config.fit)?;
    report.params = canonical_by_occupancy(&report.params, &obs)?;
    Ok(report)
}

/// Most probable key at every step.
pub fn decode_keys(params: &TiedHmmParams, track: &ChordTrack) -> Result<KeyTrack> {
    let decoded = tied_hmm::viterbi(params, &observations(track))?;
    Ok(KeyTrack {
        work_id: track.work_id.clone(),
        labels: decoded
            .states
            .into_iter()
            .map(|s| KeyLabel {
                anchor: s.anchor,
                ktype: s.type_id as u8,
            })
            .collect(),
    })
}

pub fn decode_corpus(params: &TiedHmmParams, tracks: &[ChordTrack]) -> Result<Vec<KeyTrack>> {
    tracks.par_iter().map(|t| decode_keys(params, t)).collect()
}

/// Emission probabilities of each key type over (chord type, anchor
/// relative to the key), as CSV with header `ktype,0:0,0:1,...`.
pub fn key_emission_report(params: &TiedHmmParams) -> String {
    let k = params.shape().n_symbols();
    let mut out = String::from("ktype");
    for j in 0..k {
        out.push_str(&format!(",{}:{}", j / 12, j % 12));
    }
    out.push('\n');
    for t in 0..params.n_types() {
        out.push_str(&t.to_string());
        for p in params.emission_row(t) {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_key_tracks(path: &Path, tracks: &[KeyTrack]) -> Result<()> {
    let rows: Vec<LabelRows> = tracks
        .iter()
        .map(|t| LabelRows {
            work_id: t.work_id.clone(),
            labels: t.labels.iter().map(|l| (l.anchor, l.ktype as usize)).collect(),
        })
        .collect();
    tracks::write_rows(path, "ktype", &rows)
}

pub fn read_key_tracks(path: &Path) -> Result<Vec<KeyTrack>> {
    let rows = tracks::read_rows(path, "ktype")?;
    rows.into_iter()
        .map(|r| {
            let labels = r
                .labels
                .into_iter()
                .map(|(anchor, t)| {
                    u8::try_from(t)
                        .map(|ktype| KeyLabel { anchor, ktype })
                        .map_err(|_| Error::validation(path.display().to_string(), "key type out of range"))
                })
                .collect::<Result<_>>()?;
            Ok(KeyTrack {
                work_id: r.work_id,
                labels,
            })
        })
        .collect()
}
