use super::{check_inputs, method2_readings, render, BassRule, ChordSpan, ProgressionTable, Reading, Translation};
use crate::counterpoint::{embellishment, NoteRef};
use crate::error::Result;
use crate::key_layer::KeyTrack;
use crate::pitch::PitchClassSet;
use crate::score_io::StepSequence;

/// Flagged notes per beat are capped so a group has at most 2^6 readings.
pub const MAX_FLAGGED: usize = 6;

/// One reading of a group: a choice of flagged notes taken as passing or
/// neighbor tones.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Bit `i` set: flagged note `i` is nonharmonic.
    pub mask: u32,
    /// Group-relative indices of the harmonies that remain.
    pub survivors: Vec<usize>,
    /// Symbols of the remaining harmonies, then of the harmony after the
    /// group when it is in the same key.
    pub symbols: Vec<String>,
    /// Mean table count of the progressions in `symbols`; `None` when the
    /// reading breaks the contrapuntal grammar.
    pub score: Option<f64>,
}

/// Consecutive harmonies starting within one beat, with their readings.
#[derive(Debug, Clone, PartialEq)]
pub struct PruningGroup {
    /// Index of the group's first harmony among the work's harmonies.
    pub first: usize,
    /// Index of the group's last harmony, inclusive.
    pub last: usize,
    /// Chord tones of later harmonies that move by step on both sides.
    pub flagged: Vec<NoteRef>,
    pub candidates: Vec<Candidate>,
    /// Index into `candidates` of the selected reading.
    pub chosen: usize,
}

fn groups(readings: &[Reading], seq: &StepSequence) -> Vec<(usize, usize)> {
    let beat = |r: &Reading| seq.beat_index(seq.steps[r.span.start].onset);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=readings.len() {
        let same = i < readings.len()
            && beat(&readings[i]) == beat(&readings[start])
            && readings[i].key == readings[start].key;
        if !same {
            if i - start >= 2 {
                out.push((start, i - 1));
            }
            start = i;
        }
    }
    out
}

fn flagged_notes(readings: &[Reading], first: usize, last: usize, seq: &StepSequence) -> Vec<(NoteRef, usize)> {
    let mut out = Vec::new();
    for (j, r) in readings.iter().enumerate().take(last + 1).skip(first + 1) {
        let tones = r.harmony.chord.tones();
        for step in r.span.steps() {
            for n in &seq.steps[step].sounding {
                if !n.attacked || !tones.contains(n.pc) {
                    continue;
                }
                let note = NoteRef::new(n.voice, n.event);
                if embellishment(seq, note, |_| true).is_some() {
                    out.push((note, j));
                }
            }
        }
    }
    out.truncate(MAX_FLAGGED);
    out
}

fn reading_at(readings: &[Reading], step: usize) -> usize {
    readings.partition_point(|r| r.span.end < step)
}

fn evaluate(
    readings: &[Reading],
    (first, last): (usize, usize),
    flagged: &[(NoteRef, usize)],
    mask: u32,
    seq: &StepSequence,
    table: &ProgressionTable,
) -> Candidate {
    // owner[j - first]: the harmony whose chord governs harmony j.
    let mut owner: Vec<usize> = (first..=last).collect();
    let mut valid = true;
    let mut prev = first;
    for j in first + 1..=last {
        let chosen: Vec<NoteRef> = flagged
            .iter()
            .enumerate()
            .filter(|&(i, &(_, span))| span == j && mask & (1 << i) != 0)
            .map(|(_, &(n, _))| n)
            .collect();
        if chosen.is_empty() {
            prev = j;
            continue;
        }
        let own = readings[j].harmony.chord.tones();
        let harmonic = readings[j].span.union().intersection(own);
        let removed: PitchClassSet = chosen.iter().filter_map(|n| n.get(seq).pc()).collect();
        let governing = readings[prev].harmony.chord.tones();
        if harmonic.difference(removed).is_subset(governing) && removed.intersection(governing).is_empty() {
            owner[j - first] = prev;
        } else {
            valid = false;
        }
    }
    let chord_at = |step: usize| {
        let i = reading_at(readings, step);
        let i = if (first..=last).contains(&i) {
            owner[i - first]
        } else {
            i
        };
        readings[i].harmony.chord.tones()
    };
    if valid {
        'notes: for (i, &(note, _)) in flagged.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let onset = note.get(seq).onset;
            let attack = seq.step_at(onset).expect("flagged notes start at a step");
            let legal = embellishment(seq, note, |adj| {
                let adj_note = adj.get(seq);
                let step = if adj.event < note.event {
                    attack.checked_sub(1)
                } else {
                    seq.step_at(adj_note.onset)
                };
                match (step, adj_note.pc()) {
                    (Some(s), Some(pc)) => chord_at(s).contains(pc),
                    _ => false,
                }
            });
            if legal.is_none() {
                valid = false;
                break 'notes;
            }
        }
    }
    let survivors: Vec<usize> = (first..=last).filter(|&j| owner[j - first] == j).collect();
    let mut symbols: Vec<String> = survivors.iter().map(|&j| readings[j].symbol()).collect();
    if let Some(next) = readings.get(last + 1) {
        if next.key == readings[last].key {
            symbols.push(next.symbol());
        }
    }
    let mode = readings[first].key.mode();
    let counts: Vec<u64> = symbols
        .windows(2)
        .filter(|w| w[0] != w[1])
        .map(|w| table.count(mode, &w[0], &w[1]))
        .collect();
    let mean = if counts.is_empty() {
        0.0
    } else {
        counts.iter().sum::<u64>() as f64 / counts.len() as f64
    };
    Candidate {
        mask,
        survivors: survivors.iter().map(|j| j - first).collect(),
        symbols,
        score: valid.then_some(mean),
    }
}

fn best(candidates: &[Candidate]) -> usize {
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        let (Some(s), Some(b)) = (c.score, candidates[best].score) else {
            continue;
        };
        let fewer = c.survivors.len() < candidates[best].survivors.len();
        if s > b || (s == b && fewer) {
            best = i;
        }
    }
    best
}

fn analyse(readings: &[Reading], seq: &StepSequence, table: &ProgressionTable) -> Vec<PruningGroup> {
    groups(readings, seq)
        .into_iter()
        .map(|(first, last)| {
            let flagged = flagged_notes(readings, first, last, seq);
            let candidates: Vec<Candidate> = (0..1u32 << flagged.len())
                .map(|mask| evaluate(readings, (first, last), &flagged, mask, seq, table))
                .collect();
            PruningGroup {
                first,
                last,
                chosen: best(&candidates),
                flagged: flagged.into_iter().map(|(n, _)| n).collect(),
                candidates,
            }
        })
        .collect()
}

/// Every beat group method 3 considers, with all candidate readings.
pub fn prune_candidates(
    spans: &[ChordSpan],
    keys: &KeyTrack,
    seq: &StepSequence,
    table: &ProgressionTable,
) -> Result<Vec<PruningGroup>> {
    check_inputs(spans, keys, seq)?;
    let readings = method2_readings(spans, keys, seq)?;
    Ok(analyse(&readings, seq, table))
}

/// Method 2, then within each beat the reading whose progressions are
/// most frequent in `table`. Ties go to fewer harmonies, then to the
/// reading with fewer and earlier nonharmonic notes.
pub fn method3(
    spans: &[ChordSpan],
    keys: &KeyTrack,
    seq: &StepSequence,
    table: &ProgressionTable,
) -> Result<Translation> {
    let readings = method2_readings(spans, keys, seq)?;
    let groups = analyse(&readings, seq, table);
    let mut out: Vec<Reading> = Vec::with_capacity(readings.len());
    let mut g = groups.iter().peekable();
    let mut i = 0;
    while i < readings.len() {
        match g.peek() {
            Some(group) if group.first == i => {
                let chosen = &group.candidates[group.chosen];
                for (k, r) in readings[group.first..=group.last].iter().enumerate() {
                    if chosen.survivors.contains(&k) {
                        out.push(r.clone());
                    } else {
                        let prev = out.last_mut().expect("the first harmony of a group survives");
                        prev.span = prev.span.merge_with(&r.span, prev.span.label);
                        prev.pruned = true;
                    }
                }
                i = group.last + 1;
                g.next();
            }
            _ => {
                out.push(readings[i].clone());
                i += 1;
            }
        }
    }
    Ok(render(&out, seq, BassRule::BassVoice))
}
