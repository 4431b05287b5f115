use super::*;
use crate::chord_layer::{ChordLabel, ChordTrack};
use crate::pitch::{PitchClass, PitchClassSet};
use crate::score_io::{segment_steps, NoteEvent, Rational64, Work};
use crate::theory::Mode;

/// Voices given as (duration in eighths, pitch) pairs; pitch `None` is a rest.
fn passage(voices: &[&[(i64, Option<i32>)]]) -> StepSequence {
    let voices = voices
        .iter()
        .map(|v| {
            let mut t = Rational64::from_integer(0);
            v.iter()
                .map(|&(d, p)| {
                    let dur = Rational64::new(d, 2);
                    let e = match p {
                        Some(p) => NoteEvent::note(t, dur, PitchClass::wrap(p as i64), Some(p.div_euclid(12))),
                        None => NoteEvent::rest(t, dur),
                    };
                    t += dur;
                    e
                })
                .collect()
        })
        .collect();
    segment_steps(&Work {
        id: "p".into(),
        voices,
        time_signature: [4, 4].into(),
        key_signature: 0,
        pickup: Rational64::from_integer(0),
    })
}

/// One quarter-note chord per entry, soprano first.
fn chorale(chords: &[[i32; 4]]) -> StepSequence {
    let voices: Vec<Vec<(i64, Option<i32>)>> = (0..4)
        .map(|v| chords.iter().map(|c| (2, Some(c[v]))).collect())
        .collect();
    let refs: Vec<&[(i64, Option<i32>)]> = voices.iter().map(|v| v.as_slice()).collect();
    passage(&refs)
}

fn labels(seq: &StepSequence, l: &[(i64, usize)]) -> ChordTrack {
    assert_eq!(seq.len(), l.len());
    ChordTrack {
        work_id: seq.work_id.clone(),
        labels: l
            .iter()
            .map(|&(a, t)| ChordLabel::new(PitchClass::wrap(a), t))
            .collect(),
    }
}

fn keys_of(seq: &StepSequence, key: KeyLabel) -> KeyTrack {
    KeyTrack {
        work_id: seq.work_id.clone(),
        labels: vec![key; seq.len()],
    }
}

fn c_major() -> KeyLabel {
    KeyLabel::new(PitchClass::C, Mode::Major)
}

fn symbols(t: &Translation) -> Vec<String> {
    t.annotation.spans.iter().map(|s| s.chord.to_string()).collect()
}

fn set(v: &[u8]) -> PitchClassSet {
    v.iter().map(|&x| PitchClass::new(x).unwrap()).collect()
}

#[test]
fn spans_are_maximal_runs_with_persistent_intersection() {
    let seq = chorale(&[[67, 64, 60, 48], [69, 67, 64, 48], [71, 67, 62, 43], [71, 67, 62, 43]]);
    let spans = build_spans(&labels(&seq, &[(0, 0), (0, 0), (7, 0), (7, 0)]), &seq).unwrap();
    assert_eq!(spans.len(), 2);
    assert_eq!((spans[0].start, spans[0].end), (0, 1));
    assert_eq!(spans[0].sounding[1], set(&[0, 4, 7, 9]));
    assert_eq!(spans[0].persistent, set(&[0, 4, 7]));
    assert_eq!(spans[1].bass_notes, vec![PitchClass::new(7).unwrap()]);
}

#[test]
fn method1_major_triad_in_root_position() {
    let seq = chorale(&[[67, 64, 60, 48]]);
    let spans = build_spans(&labels(&seq, &[(0, 0)]), &seq).unwrap();
    let t = method1(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    assert_eq!(symbols(&t), vec!["I"]);
    assert!(t.flags.is_empty());
}

#[test]
fn method1_type_two_with_lower_third_is_a_dominant_seventh() {
    // G3 B3 D4 F4, anchor B.
    let seq = chorale(&[[65, 62, 59, 43]]);
    let spans = build_spans(&labels(&seq, &[(11, 2)]), &seq).unwrap();
    let t = method1(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    assert_eq!(symbols(&t), vec!["V7"]);
    assert_eq!(t.annotation.spans[0].pitch_chord().root, PitchClass::new(7).unwrap());
}

#[test]
fn method1_type_two_without_lower_third_is_diminished() {
    // D3 B3 D4 F4: bass D is the lowest chord tone.
    let seq = chorale(&[[65, 62, 59, 50]]);
    let spans = build_spans(&labels(&seq, &[(11, 2)]), &seq).unwrap();
    let t = method1(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    assert_eq!(symbols(&t), vec!["viio6"]);
}

#[test]
fn method1_ignores_sevenths_of_major_and_minor_types() {
    // D3 F3 A3 C4 as type 1 on D.
    let seq = chorale(&[[60, 57, 53, 50]]);
    let spans = build_spans(&labels(&seq, &[(2, 1)]), &seq).unwrap();
    let t = method1(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    assert_eq!(symbols(&t), vec!["ii"]);
    let t = method2(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    assert_eq!(symbols(&t), vec!["ii7"]);
}

#[test]
fn empty_harmonic_set_falls_back_with_a_flag() {
    // Only C and E sound over a type-2 label on B.
    let seq = chorale(&[[64, 60, 52, 48]]);
    let spans = build_spans(&labels(&seq, &[(11, 2)]), &seq).unwrap();
    let t = method1(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    assert_eq!(t.flags.len(), 1);
    assert_eq!(t.flags[0].kind, FlagKind::Fallback);
}

#[test]
fn method2_excludes_a_passing_sixth() {
    // F major with a passing D in the soprano for one eighth.
    let seq = passage(&[
        &[(1, Some(72)), (1, Some(74)), (2, Some(76))],
        &[(4, Some(69))],
        &[(4, Some(60))],
        &[(4, Some(53))],
    ]);
    let spans = build_spans(&labels(&seq, &[(5, 0), (5, 0), (5, 0)]), &seq).unwrap();
    let t = method2(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    assert_eq!(symbols(&t), vec!["IV"]);
}

#[test]
fn method2_admits_a_persistent_sixth() {
    // F A C D throughout: ii65.
    let seq = chorale(&[[74, 69, 60, 53]]);
    let spans = build_spans(&labels(&seq, &[(5, 0)]), &seq).unwrap();
    let t = method2(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    assert_eq!(symbols(&t), vec!["ii65"]);
}

#[test]
fn bass_voice_rule_follows_harmonic_bass_notes() {
    // C major over bass C3 then E3, with a nonharmonic D3 between.
    let seq = passage(&[
        &[(6, Some(72))],
        &[(6, Some(67))],
        &[(6, Some(64))],
        &[(2, Some(48)), (2, Some(50)), (2, Some(52))],
    ]);
    let spans = build_spans(&labels(&seq, &[(0, 0), (0, 0), (0, 0)]), &seq).unwrap();
    let t = method2(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    let got: Vec<(usize, usize, String)> = t
        .annotation
        .spans
        .iter()
        .map(|s| (s.start, s.end, s.chord.to_string()))
        .collect();
    assert_eq!(got, vec![(0, 1, "I".into()), (2, 2, "I6".into())]);
}

#[test]
fn cadential_suspension_is_absorbed_into_the_dominant() {
    // (G3, C4, D4) then (G3, B3, D4): C major missing its third, then G.
    let seq = chorale(&[[74, 72, 67, 55], [74, 71, 67, 55]]);
    let chords = labels(&seq, &[(0, 0), (7, 0)]);
    let spans = build_spans(&chords, &seq).unwrap();
    assert_eq!(spans[0].persistent.relative_to(PitchClass::C), set(&[0, 2, 7]));
    let rewritten = apply_suspension_rules(&spans);
    assert_eq!(rewritten.len(), 1);
    assert_eq!(rewritten[0].label, ChordLabel::new(PitchClass::new(7).unwrap(), 0));
    assert!(rewritten[0].relabeled);
    let t = method2(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    assert_eq!(symbols(&t), vec!["V"]);
    assert_eq!(t.flags[0].kind, FlagKind::Suspension);
}

#[test]
fn every_suspension_rule_fires_on_its_pattern() {
    for rule in &SUSPENSION_RULES {
        let p: Vec<i32> = rule.pattern.iter().map(|&x| x as i32).collect();
        let first = match p.len() {
            4 => [72 + p[3], 60 + p[2], 60 + p[1], 48],
            _ => [72 + p[2], 60 + p[1], 48, 36],
        };
        let next_anchor = 60 + rule.progression as i32;
        let seq = chorale(&[
            first,
            [next_anchor + 12, next_anchor + 7, next_anchor + 4, next_anchor - 12],
        ]);
        let next_type = rule.new_type;
        let chords = labels(&seq, &[(0, 0), (rule.progression as i64, next_type)]);
        let spans = build_spans(&chords, &seq).unwrap();
        assert_eq!(matching_rule(&spans[0], &spans[1]), Some(rule));
        let out = apply_suspension_rules(&spans);
        let expected = ChordLabel::new(PitchClass::wrap(rule.delta as i64), rule.new_type);
        assert_eq!(out[0].label, expected);
        assert_eq!(apply_suspension_rules(&out), out);
    }
}

#[test]
fn no_rule_means_no_change() {
    let seq = chorale(&[[67, 64, 60, 48], [74, 71, 67, 43]]);
    let spans = build_spans(&labels(&seq, &[(0, 0), (7, 0)]), &seq).unwrap();
    assert_eq!(apply_suspension_rules(&spans), spans);
}

/// V on beat 1, then I and iii in eighths on beat 2 (the soprano B passes
/// from C to A), then IV on beat 3.
fn passing_passage() -> (StepSequence, ChordTrack) {
    let seq = passage(&[
        &[(2, Some(74)), (1, Some(72)), (1, Some(71)), (2, Some(69))],
        &[(2, Some(67)), (2, Some(67)), (2, Some(65))],
        &[(2, Some(59)), (2, Some(64)), (2, Some(60))],
        &[(2, Some(43)), (2, Some(48)), (2, Some(53))],
    ]);
    let chords = labels(&seq, &[(7, 0), (0, 0), (4, 1), (5, 0)]);
    (seq, chords)
}

fn table(rows: &[(&str, &str, u64)]) -> ProgressionTable {
    let mut t = ProgressionTable::default();
    for &(a, b, n) in rows {
        t.counts.insert((Mode::Major, a.into(), b.into()), n);
    }
    t
}

#[test]
fn method3_prefers_the_more_frequent_passing_reading() {
    let (seq, chords) = passing_passage();
    let spans = build_spans(&chords, &seq).unwrap();
    let keys = keys_of(&seq, c_major());
    let frequent = table(&[("V", "I", 50), ("I", "iii", 2), ("iii", "IV", 2), ("I", "IV", 10)]);
    let groups = prune_candidates(&spans, &keys, &seq, &frequent).unwrap();
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0].flagged.len(), 1);
    assert_eq!(groups[0].candidates[0].score, Some(2.0));
    assert_eq!(groups[0].candidates[1].score, Some(10.0));
    assert_eq!(groups[0].chosen, 1);
    let t = method3(&spans, &keys, &seq, &frequent).unwrap();
    assert_eq!(symbols(&t), vec!["V", "I", "IV"]);
    assert!(t.flags.iter().any(|f| f.kind == FlagKind::Pruned));
    assert_eq!(
        symbols(&method2(&spans, &keys, &seq).unwrap()),
        vec!["V", "I", "iii", "IV"]
    );

    let rare = table(&[("I", "iii", 20), ("iii", "IV", 20), ("I", "IV", 10)]);
    let t = method3(&spans, &keys, &seq, &rare).unwrap();
    assert_eq!(symbols(&t), vec!["V", "I", "iii", "IV"]);
}

#[test]
fn method3_without_intra_beat_pairs_is_method2() {
    let seq = chorale(&[[67, 64, 60, 48], [74, 71, 67, 43], [72, 67, 64, 48]]);
    let spans = build_spans(&labels(&seq, &[(0, 0), (11, 2), (0, 0)]), &seq).unwrap();
    let keys = keys_of(&seq, c_major());
    let t3 = method3(&spans, &keys, &seq, &ProgressionTable::default()).unwrap();
    assert_eq!(t3, method2(&spans, &keys, &seq).unwrap());
}

#[test]
fn progression_table_counts_within_keys() {
    let seq = chorale(&[[67, 64, 60, 48], [74, 71, 67, 43], [72, 67, 64, 48]]);
    let spans = build_spans(&labels(&seq, &[(0, 0), (7, 0), (0, 0)]), &seq).unwrap();
    let t = method1(&spans, &keys_of(&seq, c_major()), &seq).unwrap();
    let table = build_progression_table(&[t.annotation]);
    assert_eq!(table.count(Mode::Major, "I", "V"), 1);
    assert_eq!(table.count(Mode::Major, "V", "I"), 1);
    assert_eq!(table.total(), 2);
    assert!(build_progression_table(&[]).is_empty());
    let back = ProgressionTable::parse(&table.to_csv(), "t").unwrap();
    assert_eq!(back, table);
}
