use crate::chord_layer::ChordTrack;
use crate::error::{Error, Result};
use crate::key_layer::{KeyLabel, KeyTrack};

pub const DEFAULT_REGION_MAX: usize = 2;

/// Absorbs short key regions into identical neighbours. A region spanning
/// at most `region_max` chord spans, with the same key on both sides, takes
/// that key; this repeats until nothing changes.
pub fn smooth_keys(keys: &KeyTrack, chords: &ChordTrack, region_max: usize) -> Result<KeyTrack> {
    if keys.len() != chords.len() {
        return Err(Error::LengthMismatch {
            context: format!("key vs chord track of {}", keys.work_id),
            left: keys.len(),
            right: chords.len(),
        });
    }
    let mut labels = keys.labels.clone();
    'outer: loop {
        let regions = runs(&labels);
        for w in regions.windows(3) {
            let (before, mid, after) = (w[0], w[1], w[2]);
            if labels[before.0] == labels[after.0] && chord_spans_in(chords, mid) <= region_max {
                let key = labels[before.0];
                labels[mid.0..=mid.1].fill(key);
                continue 'outer;
            }
        }
        break;
    }
    Ok(KeyTrack {
        work_id: keys.work_id.clone(),
        labels,
    })
}

/// Maximal runs of equal values as inclusive ranges.
fn runs<T: PartialEq>(v: &[T]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=v.len() {
        if i == v.len() || v[i] != v[start] {
            out.push((start, i - 1));
            start = i;
        }
    }
    out
}

fn chord_spans_in(chords: &ChordTrack, (start, end): (usize, usize)) -> usize {
    1 + (start + 1..=end)
        .filter(|&i| chords.labels[i] != chords.labels[i - 1])
        .count()
}

/// The key covering most steps of `start..=end`; ties go to the key seen
/// first.
pub fn span_key(keys: &[KeyLabel], start: usize, end: usize) -> KeyLabel {
    let mut counts: Vec<(KeyLabel, usize)> = Vec::new();
    for &k in &keys[start..=end] {
        match counts.iter_mut().find(|(c, _)| *c == k) {
            Some((_, n)) => *n += 1,
            None => counts.push((k, 1)),
        }
    }
    let best = counts.iter().map(|c| c.1).max().unwrap_or(0);
    counts
        .into_iter()
        .find(|c| c.1 == best)
        .map(|c| c.0)
        .expect("non-empty range")
}
