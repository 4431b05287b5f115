use std::collections::BTreeMap;
use std::fmt;

use crate::chord_layer::ChordTrack;
use crate::counterpoint::{embellishment, melodic_interval, next_note, Embellishment, NoteRef};
use crate::error::{Error, Result};
use crate::key_layer::{KeyLabel, KeyTrack};
use crate::pitch::{PitchClass, PitchClassSet};
use crate::score_io::{RomanAnnotation, StepSequence};
use crate::theory::Mode;
use crate::translate::build_progression_table;

/// Anchor-relative transition counts of one layer, keyed by
/// (type before, type after, anchor interval).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionCounts {
    pub counts: BTreeMap<(usize, usize, u8), u64>,
}

impl TransitionCounts {
    fn add(&mut self, labels: impl Iterator<Item = (PitchClass, usize)>) {
        let labels: Vec<_> = labels.collect();
        for w in labels.windows(2) {
            let ((a1, t1), (a2, t2)) = (w[0], w[1]);
            *self.counts.entry((t1, t2, a1.interval_to(a2))).or_insert(0) += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn frequency(&self, t1: usize, t2: usize, delta: u8) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.counts.get(&(t1, t2, delta)).copied().unwrap_or(0) as f64 / total as f64
    }

    /// Most frequent first, ties in key order.
    pub fn ranked(&self) -> Vec<((usize, usize, u8), u64)> {
        let mut v: Vec<_> = self.counts.iter().map(|(k, n)| (*k, *n)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// CSV `from_type,to_type,delta,count,frequency`, most frequent first.
    pub fn to_csv(&self) -> String {
        let total = self.total().max(1) as f64;
        let mut out = String::from("from_type,to_type,delta,count,frequency\n");
        for ((t1, t2, d), n) in self.ranked() {
            out.push_str(&format!("{t1},{t2},{d},{n},{:.6}\n", n as f64 / total));
        }
        out
    }
}

/// Step-to-step transitions of both layers, self-transitions included.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionStats {
    pub chord: TransitionCounts,
    pub key: TransitionCounts,
}

pub fn transition_report(chord_tracks: &[ChordTrack], key_tracks: &[KeyTrack]) -> TransitionStats {
    let mut stats = TransitionStats::default();
    for t in chord_tracks {
        stats.chord.add(t.labels.iter().map(|l| (l.anchor, l.ctype)));
    }
    for t in key_tracks {
        stats.key.add(t.labels.iter().map(|l| (l.anchor, l.ktype as usize)));
    }
    stats
}

/// Frequent major-mode chords and progressions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProgressionMap {
    /// (symbol, count, percent of all chords), largest first.
    pub chords: Vec<(String, u64, f64)>,
    /// (from, to, count, percent of all progressions), largest first.
    pub progressions: Vec<(String, String, u64, f64)>,
}

impl ProgressionMap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,from,to,count,pct\n");
        for (s, n, p) in &self.chords {
            out.push_str(&format!("chord,{s},,{n},{p:.3}\n"));
        }
        for (a, b, n, p) in &self.progressions {
            out.push_str(&format!("progression,{a},{b},{n},{p:.3}\n"));
        }
        out
    }
}

/// Chords of major-key passages counted once per run of the same symbol;
/// progressions as in the progression table. A progression is kept when
/// both of its chords are kept.
pub fn progression_map(annotations: &[RomanAnnotation], min_chord_pct: f64, min_trans_pct: f64) -> ProgressionMap {
    let mut chords: BTreeMap<String, u64> = BTreeMap::new();
    for ann in annotations {
        let mut prev: Option<(KeyLabel, String)> = None;
        for s in &ann.spans {
            let cur = (s.key, s.chord.symbol());
            if s.key.mode() == Mode::Major && prev.as_ref() != Some(&cur) {
                *chords.entry(cur.1.clone()).or_insert(0) += 1;
            }
            prev = Some(cur);
        }
    }
    let chord_total = chords.values().sum::<u64>().max(1) as f64;
    let mut map = ProgressionMap::default();
    for (s, n) in chords {
        let pct = 100.0 * n as f64 / chord_total;
        if pct >= min_chord_pct {
            map.chords.push((s, n, pct));
        }
    }
    map.chords.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let table = build_progression_table(annotations);
    let major: Vec<_> = table.counts.iter().filter(|((m, _, _), _)| *m == Mode::Major).collect();
    let trans_total = major.iter().map(|(_, n)| **n).sum::<u64>().max(1) as f64;
    let kept = |s: &str| map.chords.iter().any(|(c, _, _)| c == s);
    for ((_, a, b), n) in major {
        let pct = 100.0 * *n as f64 / trans_total;
        if pct >= min_trans_pct && kept(a) && kept(b) {
            map.progressions.push((a.clone(), b.clone(), *n, pct));
        }
    }
    map.progressions
        .sort_by(|a, b| b.2.cmp(&a.2).then_with(|| (&a.0, &a.1).cmp(&(&b.0, &b.1))));
    map
}

/// Key changes of works that end in the key they begin in, transposed so
/// that key is C major or A minor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModulationMap {
    pub works_total: usize,
    pub works_retained: usize,
    /// Retained works that never change key.
    pub works_static: usize,
    pub bigrams: BTreeMap<(KeyLabel, KeyLabel), u64>,
}

impl ModulationMap {
    pub fn total(&self) -> u64 {
        self.bigrams.values().sum()
    }

    pub fn to_csv(&self) -> String {
        let total = self.total().max(1) as f64;
        let mut rows: Vec<_> = self.bigrams.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let mut out = String::from("from,to,count,frequency\n");
        for ((a, b), n) in rows {
            out.push_str(&format!("{a},{b},{n},{:.6}\n", *n as f64 / total));
        }
        out
    }
}

pub fn modulation_map(key_tracks: &[KeyTrack]) -> ModulationMap {
    let mut map = ModulationMap {
        works_total: key_tracks.len(),
        ..ModulationMap::default()
    };
    for t in key_tracks {
        let (Some(&first), Some(&last)) = (t.labels.first(), t.labels.last()) else {
            continue;
        };
        if first != last {
            continue;
        }
        map.works_retained += 1;
        let target = match first.mode() {
            Mode::Major => 0,
            Mode::Minor => 9,
        };
        let shift = first.anchor.interval_to(PitchClass::wrap(target)) as i32;
        let mut keys: Vec<KeyLabel> = t.labels.iter().map(|k| k.transpose(shift)).collect();
        keys.dedup();
        if keys.len() == 1 {
            map.works_static += 1;
        }
        for w in keys.windows(2) {
            *map.bigrams.entry((w[0], w[1])).or_insert(0) += 1;
        }
    }
    map
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Doubling {
    Bass,
    ThirdFourth,
    FifthSixth,
}

impl Doubling {
    pub const ALL: [Doubling; 3] = [Doubling::Bass, Doubling::ThirdFourth, Doubling::FifthSixth];

    /// By interval above the bass. Seconds and sevenths have no class.
    fn of_interval(interval: u8) -> Option<Doubling> {
        match interval {
            0 => Some(Doubling::Bass),
            3..=5 => Some(Doubling::ThirdFourth),
            6..=9 => Some(Doubling::FifthSixth),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoublingRow {
    pub symbol: String,
    pub count: u64,
    /// Percentages in the order of [`Doubling::ALL`].
    pub pct: [f64; 3],
}

fn check_lengths(annotations: &[RomanAnnotation], seqs: &[StepSequence]) -> Result<()> {
    if annotations.len() != seqs.len() {
        return Err(Error::LengthMismatch {
            context: "annotations and works".into(),
            left: annotations.len(),
            right: seqs.len(),
        });
    }
    for (a, s) in annotations.iter().zip(seqs) {
        if a.n_steps() != s.len() {
            return Err(Error::LengthMismatch {
                context: format!("annotation of {}", s.work_id),
                left: a.n_steps(),
                right: s.len(),
            });
        }
    }
    Ok(())
}

/// Which chord tone is doubled at the first step of each major-mode span.
/// Voices are compared by pitch class; the bass is the lowest sounding
/// note. Spans without exactly one doubled class are skipped.
pub fn doubling_report(
    annotations: &[RomanAnnotation],
    seqs: &[StepSequence],
    min_count: u64,
) -> Result<Vec<DoublingRow>> {
    check_lengths(annotations, seqs)?;
    let mut tally: BTreeMap<String, [u64; 3]> = BTreeMap::new();
    for (ann, seq) in annotations.iter().zip(seqs) {
        for span in ann.spans.iter().filter(|s| s.key.mode() == Mode::Major) {
            let step = &seq.steps[span.start];
            let Some(bass) = step
                .sounding
                .iter()
                .max_by_key(|n| (n.pitch().map(|p| -p), n.voice))
                .map(|n| n.pc)
            else {
                continue;
            };
            let mut per_pc = [0u8; 12];
            for n in &step.sounding {
                per_pc[n.pc.index()] += 1;
            }
            let tones = span.pitch_chord().tones();
            let doubled: Vec<PitchClass> = PitchClass::all()
                .filter(|pc| per_pc[pc.index()] >= 2 && tones.contains(*pc))
                .collect();
            let [pc] = doubled[..] else { continue };
            if let Some(d) = Doubling::of_interval(bass.interval_to(pc)) {
                tally.entry(span.chord.to_string()).or_default()[d as usize] += 1;
            }
        }
    }
    let mut rows: Vec<DoublingRow> = tally
        .into_iter()
        .filter_map(|(symbol, c)| {
            let count: u64 = c.iter().sum();
            (count >= min_count).then(|| DoublingRow {
                symbol,
                count,
                pct: c.map(|x| 100.0 * x as f64 / count as f64),
            })
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.symbol.cmp(&b.symbol)));
    Ok(rows)
}

pub fn doubling_csv(rows: &[DoublingRow]) -> String {
    let mut out = String::from("symbol,count,bass_pct,third_fourth_pct,fifth_sixth_pct\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.1},{:.1},{:.1}\n",
            r.symbol, r.count, r.pct[0], r.pct[1], r.pct[2]
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nonharmonic {
    PassingAscending,
    PassingDescending,
    AccentedPassingAscending,
    AccentedPassingDescending,
    NeighborAscending,
    NeighborDescending,
    Suspension,
    Pedal,
    Anticipation,
    Unidentified,
}

impl Nonharmonic {
    pub const ALL: [Nonharmonic; 10] = [
        Nonharmonic::PassingAscending,
        Nonharmonic::PassingDescending,
        Nonharmonic::AccentedPassingAscending,
        Nonharmonic::AccentedPassingDescending,
        Nonharmonic::NeighborAscending,
        Nonharmonic::NeighborDescending,
        Nonharmonic::Suspension,
        Nonharmonic::Pedal,
        Nonharmonic::Anticipation,
        Nonharmonic::Unidentified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Nonharmonic::PassingAscending => "passing (ascending)",
            Nonharmonic::PassingDescending => "passing (descending)",
            Nonharmonic::AccentedPassingAscending => "accented passing (ascending)",
            Nonharmonic::AccentedPassingDescending => "accented passing (descending)",
            Nonharmonic::NeighborAscending => "neighbor (ascending)",
            Nonharmonic::NeighborDescending => "neighbor (descending)",
            Nonharmonic::Suspension => "suspension",
            Nonharmonic::Pedal => "pedal",
            Nonharmonic::Anticipation => "anticipation",
            Nonharmonic::Unidentified => "unidentified",
        }
    }
}

impl fmt::Display for Nonharmonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn chord_tones_by_step(ann: &RomanAnnotation) -> Vec<PitchClassSet> {
    ann.spans
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.pitch_chord().tones(), s.len()))
        .collect()
}

/// Classifies a note that is not a chord tone of the span starting at
/// `span_start` and ending at `span_end`.
pub fn classify_nonharmonic(
    seq: &StepSequence,
    tones: &[PitchClassSet],
    n: NoteRef,
    span_start: usize,
    span_end: usize,
) -> Nonharmonic {
    let note = n.get(seq);
    let attack = seq.attack_step(n.voice, n.event).expect("note onsets are steps");
    let is_tone_at_attack = |r: NoteRef| {
        let e = r.get(seq);
        let step = seq.step_at(e.onset).expect("note onsets are steps");
        e.pc().is_some_and(|pc| tones[step].contains(pc))
    };
    let is_tone_before_attack = |r: NoteRef| {
        let e = r.get(seq);
        attack
            .checked_sub(1)
            .is_some_and(|s| e.pc().is_some_and(|pc| tones[s].contains(pc)))
    };
    let next = next_note(seq, n);
    if attack < span_start {
        if let Some(q) = next {
            let down = melodic_interval(note, q.get(seq)).is_some_and(|i| (-2..=-1).contains(&i));
            if down && is_tone_at_attack(q) {
                return Nonharmonic::Suspension;
            }
        }
        if seq.steps.get(span_end + 1).is_some_and(|s| s.onset < note.end()) {
            return Nonharmonic::Pedal;
        }
        return Nonharmonic::Unidentified;
    }
    let accented = seq.is_on_beat(note.onset);
    let figure = embellishment(seq, n, |r| {
        if r.event < n.event {
            is_tone_before_attack(r)
        } else {
            is_tone_at_attack(r)
        }
    });
    match figure {
        Some(Embellishment::Passing { ascending }) => {
            return match (accented, ascending) {
                (true, true) => Nonharmonic::AccentedPassingAscending,
                (true, false) => Nonharmonic::AccentedPassingDescending,
                (false, true) => Nonharmonic::PassingAscending,
                (false, false) => Nonharmonic::PassingDescending,
            };
        }
        Some(Embellishment::Neighbor { ascending: true }) => return Nonharmonic::NeighborAscending,
        Some(Embellishment::Neighbor { ascending: false }) => return Nonharmonic::NeighborDescending,
        None => {}
    }
    if let Some(q) = next {
        let qe = q.get(seq);
        let q_step = seq.step_at(qe.onset).expect("note onsets are steps");
        if qe.pc() == note.pc() && q_step > span_end && is_tone_at_attack(q) {
            return Nonharmonic::Anticipation;
        }
    }
    Nonharmonic::Unidentified
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NonharmonicCatalog {
    pub counts: BTreeMap<Nonharmonic, u64>,
}

impl NonharmonicCatalog {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, kind: Nonharmonic) -> u64 {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn pct(&self, kind: Nonharmonic) -> f64 {
        100.0 * self.count(kind) as f64 / self.total().max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,count,pct\n");
        for k in Nonharmonic::ALL {
            out.push_str(&format!("{k},{},{:.1}\n", self.count(k), self.pct(k)));
        }
        out
    }
}

/// Every note that sounds in a span without belonging to its chord,
/// counted once per span.
pub fn nonharmonic_catalog(annotations: &[RomanAnnotation], seqs: &[StepSequence]) -> Result<NonharmonicCatalog> {
    check_lengths(annotations, seqs)?;
    let mut catalog = NonharmonicCatalog::default();
    for (ann, seq) in annotations.iter().zip(seqs) {
        let tones = chord_tones_by_step(ann);
        for span in &ann.spans {
            let chord = span.pitch_chord().tones();
            let mut seen: Vec<NoteRef> = Vec::new();
            for step in span.steps() {
                for vn in &seq.steps[step].sounding {
                    let n = NoteRef::new(vn.voice, vn.event);
                    if chord.contains(vn.pc) || seen.contains(&n) {
                        continue;
                    }
                    seen.push(n);
                    let kind = classify_nonharmonic(seq, &tones, n, span.start, span.end);
                    *catalog.counts.entry(kind).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(catalog)
}
