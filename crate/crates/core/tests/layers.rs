use tonal_hmm::chord_layer::{
    chord_emission_report, decode_chords, decode_corpus, fit_chord_model, ChordFitConfig, ChordLabel, ChordTrack,
    EmissionMode,
};
use tonal_hmm::key_layer::{decode_keys, fit_key_model, key_emission_report, KeyFitConfig};
use tonal_hmm::score_io::{segment_steps, NoteEvent, Rational64, StepSequence, TimeSignature, Work};
use tonal_hmm::tied_hmm::FitOptions;
use tonal_hmm::{Error, PitchClass};

fn pc(v: i64) -> PitchClass {
    PitchClass::wrap(v)
}

/// Four voices of quarter-note chords, each given as (soprano, alto,
/// tenor, bass) pitches in semitones above C0.
fn chorale(id: &str, chords: &[[i32; 4]]) -> Work {
    let voices = (0..4)
        .map(|v| {
            chords
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    NoteEvent::note(
                        Rational64::from_integer(i as i64),
                        Rational64::from_integer(1),
                        pc(c[v] as i64),
                        Some(c[v].div_euclid(12)),
                    )
                })
                .collect()
        })
        .collect();
    Work {
        id: id.into(),
        voices,
        time_signature: TimeSignature::from([4, 4]),
        key_signature: 0,
        pickup: Rational64::from_integer(0),
    }
}

fn quick() -> FitOptions {
    FitOptions {
        max_iters: 200,
        tol: 1e-6,
        ..FitOptions::default()
    }
}

const C_MAJOR: [i32; 4] = [67, 64, 48 + 12, 36];

#[test]
fn block_major_triads_concentrate_on_the_triad() {
    let corpus: Vec<StepSequence> = (0..6)
        .map(|i| segment_steps(&chorale(&format!("w{i}"), &[C_MAJOR; 12])))
        .collect();
    let config = ChordFitConfig {
        n_runs: 4,
        seed: 3,
        fit: quick(),
        ..ChordFitConfig::default()
    };
    let report = fit_chord_model(&corpus, &config).unwrap();
    let row = report.params.emission_row(0);
    let mass = row[0] + row[4] + row[7];
    assert!(mass >= 0.9, "mass on triad {mass}");
    let mut order: Vec<usize> = (0..12).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    let mut top: Vec<usize> = order[..3].to_vec();
    top.sort();
    assert_eq!(top, vec![0, 4, 7]);

    let track = decode_chords(&report.params, &corpus[0], EmissionMode::PerVoice).unwrap();
    assert_eq!(track.len(), 12);
    assert!(track.labels.iter().all(|&l| l == ChordLabel::new(pc(0), 0)));

    let csv = chord_emission_report(&report.params);
    for line in csv.lines().skip(1) {
        let sum: f64 = line.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}

#[test]
fn chord_decoding_is_transposition_equivariant() {
    let progression = [
        C_MAJOR,
        [65, 60, 57, 41],
        [67, 62, 59, 43],
        [64, 60, 55, 48],
        [69, 64, 60, 45],
    ];
    let corpus: Vec<StepSequence> = (0..4)
        .map(|k| {
            let moved: Vec<[i32; 4]> = progression.iter().map(|c| c.map(|p| p + k)).collect();
            segment_steps(&chorale(&format!("w{k}"), &moved.repeat(3)))
        })
        .collect();
    let config = ChordFitConfig {
        n_runs: 2,
        seed: 1,
        fit: quick(),
        ..ChordFitConfig::default()
    };
    let params = fit_chord_model(&corpus, &config).unwrap().params;
    let tracks = decode_corpus(&params, &corpus, EmissionMode::PerVoice).unwrap();
    for (k, t) in tracks.iter().enumerate() {
        let shifted: Vec<ChordLabel> = tracks[0].labels.iter().map(|l| l.transpose(k as i32)).collect();
        assert_eq!(t.labels, shifted);
    }
}

#[test]
fn four_chord_types_still_run() {
    let corpus = vec![segment_steps(&chorale("w", &[C_MAJOR, [65, 60, 57, 41]].repeat(8)))];
    let config = ChordFitConfig {
        n_types: 4,
        n_runs: 2,
        fit: quick(),
        ..ChordFitConfig::default()
    };
    let report = fit_chord_model(&corpus, &config).unwrap();
    assert_eq!(report.params.n_types(), 4);
    assert_eq!(chord_emission_report(&report.params).lines().count(), 5);
}

#[test]
fn empty_corpus_is_rejected() {
    assert!(matches!(
        fit_chord_model(&[], &ChordFitConfig::default()),
        Err(Error::EmptyCorpus)
    ));
    assert!(matches!(
        fit_key_model(&[], &KeyFitConfig::default()),
        Err(Error::EmptyCorpus)
    ));
}

fn chord_track(id: &str, labels: Vec<(i64, usize)>) -> ChordTrack {
    ChordTrack {
        work_id: id.into(),
        labels: labels.into_iter().map(|(a, t)| ChordLabel::new(pc(a), t)).collect(),
    }
}

#[test]
fn cadence_loops_give_a_major_key_type() {
    let tracks: Vec<ChordTrack> = (0..12)
        .map(|k| {
            let loop_ = [(k, 0), (k + 5, 0), (k + 7, 0), (k, 0)];
            chord_track(&format!("w{k}"), loop_.repeat(6))
        })
        .collect();
    let config = KeyFitConfig {
        n_runs: 4,
        seed: 2,
        fit: quick(),
        ..KeyFitConfig::default()
    };
    let report = fit_key_model(&tracks, &config).unwrap();
    let row = report.params.emission_row(0);
    let mass = row[0] + row[5] + row[7];
    assert!(mass >= 0.9, "mass on I, IV, V: {mass}");

    for t in &tracks {
        let keys = decode_keys(&report.params, t).unwrap();
        assert_eq!(keys.len(), t.len());
    }
    let csv = key_emission_report(&report.params);
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn key_decoding_is_transposition_equivariant() {
    let base = [(0, 0), (5, 0), (7, 2), (0, 0), (9, 1), (2, 1), (4, 2), (9, 1)];
    let tracks: Vec<ChordTrack> = (0..12)
        .map(|k| chord_track("w", base.iter().map(|&(a, t)| (a + k, t)).collect()))
        .collect();
    let config = KeyFitConfig {
        n_runs: 2,
        fit: quick(),
        ..KeyFitConfig::default()
    };
    let params = fit_key_model(&tracks, &config).unwrap().params;
    let first = decode_keys(&params, &tracks[0]).unwrap();
    for (k, t) in tracks.iter().enumerate() {
        let keys = decode_keys(&params, t).unwrap();
        let shifted: Vec<_> = first.labels.iter().map(|l| l.transpose(k as i32)).collect();
        assert_eq!(keys.labels, shifted);
    }
}

#[test]
fn single_chord_corpus_fits_or_reports_degeneracy() {
    let tracks = vec![chord_track("w", vec![(0, 0); 10])];
    let config = KeyFitConfig {
        n_runs: 3,
        fit: quick(),
        ..KeyFitConfig::default()
    };
    match fit_key_model(&tracks, &config) {
        Ok(report) => assert!(report.loglik.is_finite()),
        Err(e) => assert!(matches!(e, Error::AllRunsDegenerate { .. })),
    }
}
