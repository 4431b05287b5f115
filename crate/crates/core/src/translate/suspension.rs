use super::spans::ChordSpan;
use super::{DIMINISHED_TYPE, MAJOR_TYPE};
use crate::chord_layer::ChordLabel;
use crate::pitch::PitchClassSet;

/// A standard cadential suspension: a major-type span whose persistent
/// notes form `pattern` above the anchor and whose successor's anchor lies
/// `progression` semitones higher is really the chord `delta` semitones
/// above its anchor, of type `new_type`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuspensionRule {
    pub pattern: &'static [u8],
    pub progression: u8,
    pub delta: u8,
    pub new_type: usize,
}

pub const SUSPENSION_RULES: [SuspensionRule; 6] = [
    SuspensionRule {
        pattern: &[0, 2, 7, 9],
        progression: 2,
        delta: 2,
        new_type: MAJOR_TYPE,
    },
    SuspensionRule {
        pattern: &[0, 2, 7, 9],
        progression: 6,
        delta: 6,
        new_type: DIMINISHED_TYPE,
    },
    SuspensionRule {
        pattern: &[0, 2, 7],
        progression: 6,
        delta: 2,
        new_type: MAJOR_TYPE,
    },
    SuspensionRule {
        pattern: &[0, 2, 7],
        progression: 7,
        delta: 7,
        new_type: MAJOR_TYPE,
    },
    SuspensionRule {
        pattern: &[0, 5, 7],
        progression: 7,
        delta: 7,
        new_type: MAJOR_TYPE,
    },
    SuspensionRule {
        pattern: &[0, 5, 7],
        progression: 11,
        delta: 11,
        new_type: DIMINISHED_TYPE,
    },
];

impl SuspensionRule {
    pub fn pattern_set(&self) -> PitchClassSet {
        PitchClassSet::from_semitones(self.pattern.iter().map(|&x| x as i64))
    }

    pub fn relabel(&self, label: ChordLabel) -> ChordLabel {
        ChordLabel::new(label.anchor.transpose(self.delta as i32), self.new_type)
    }
}

/// The rule matching a span and its successor, if any. The persistent
/// notes must equal the pattern exactly.
pub fn matching_rule(span: &ChordSpan, next: &ChordSpan) -> Option<&'static SuspensionRule> {
    if span.label.ctype != MAJOR_TYPE {
        return None;
    }
    let pattern = span.persistent.relative_to(span.label.anchor);
    let progression = span.label.anchor.interval_to(next.label.anchor);
    SUSPENSION_RULES
        .iter()
        .find(|r| r.progression == progression && r.pattern_set() == pattern)
}

/// Rewrites every span matching a rule. When the rewritten label equals
/// the successor's, the two merge and the merged span is examined again.
pub fn apply_suspension_rules(spans: &[ChordSpan]) -> Vec<ChordSpan> {
    let mut out: Vec<ChordSpan> = spans.to_vec();
    let mut i = 0;
    while i + 1 < out.len() {
        let Some(rule) = matching_rule(&out[i], &out[i + 1]) else {
            i += 1;
            continue;
        };
        let label = rule.relabel(out[i].label);
        if label == out[i + 1].label {
            let merged = out[i].merge_with(&out[i + 1], label);
            out[i] = ChordSpan {
                relabeled: true,
                ..merged
            };
            out.remove(i + 1);
        } else {
            out[i].label = label;
            out[i].relabeled = true;
            i += 1;
        }
    }
    out
}
