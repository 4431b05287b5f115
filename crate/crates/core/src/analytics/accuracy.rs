use std::collections::BTreeMap;
use std::fmt;

use crate::chord_layer::{ChordLabel, ChordTrack};
use crate::error::{Error, Result};
use crate::key_layer::{KeyLabel, KeyTrack};
use crate::score_io::RomanAnnotation;
use crate::theory::{Chord, SeventhKind, TriadQuality};
use crate::translate::{DIMINISHED_TYPE, MAJOR_TYPE, MINOR_TYPE};

/// Agreeing steps out of compared steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Agreement {
    pub agree: usize,
    pub total: usize,
}

impl Agreement {
    /// Percentage, or `None` when nothing was compared.
    pub fn pct(self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.agree as f64 / self.total as f64)
    }

    pub fn add(&mut self, other: Agreement) {
        self.agree += other.agree;
        self.total += other.total;
    }

    pub fn disagree(self) -> usize {
        self.total - self.agree
    }
}

/// Formats a percentage with one decimal, `N/A` when undefined.
pub fn fmt_pct(p: Option<f64>) -> String {
    p.map_or_else(|| "N/A".to_string(), |p| format!("{p:.1}"))
}

fn same_length(context: &str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch {
            context: context.to_string(),
            left,
            right,
        });
    }
    Ok(())
}

/// The model category a conventional chord belongs to: major triads and
/// major sevenths anchor on the root as type 0, minor chords on the root as
/// type 1, diminished chords on the root and dominant sevenths on their
/// third as type 2. Augmented triads have no category.
pub fn chord_category(chord: Chord) -> Option<ChordLabel> {
    let root = chord.root;
    match (chord.quality, chord.seventh) {
        (TriadQuality::Major, Some(SeventhKind::Minor)) => Some(ChordLabel::new(root.transpose(4), DIMINISHED_TYPE)),
        (TriadQuality::Major, _) => Some(ChordLabel::new(root, MAJOR_TYPE)),
        (TriadQuality::Minor, _) => Some(ChordLabel::new(root, MINOR_TYPE)),
        (TriadQuality::Diminished, _) => Some(ChordLabel::new(root, DIMINISHED_TYPE)),
        (TriadQuality::Augmented, _) => None,
    }
}

/// Per-step agreement of model chords with the categories of human chords.
/// Steps under an uncategorizable human chord count as disagreements;
/// `unmappable` counts them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CategoryAgreement {
    pub agreement: Agreement,
    pub unmappable: usize,
}

pub fn compare_chord_categories(machine: &ChordTrack, human: &RomanAnnotation) -> Result<CategoryAgreement> {
    same_length(
        &format!("chord categories of {}", machine.work_id),
        machine.len(),
        human.n_steps(),
    )?;
    let mut out = CategoryAgreement::default();
    for span in &human.spans {
        let category = chord_category(span.pitch_chord());
        for step in span.steps() {
            out.agreement.total += 1;
            match category {
                Some(c) if c == machine.labels[step] => out.agreement.agree += 1,
                Some(_) => {}
                None => out.unmappable += 1,
            }
        }
    }
    Ok(out)
}

/// Per-step key agreement. A run of at most `slack` disagreeing steps is
/// forgiven when the model's keys in it match the human key on one side
/// of the run, i.e. the two analyses only place a key change differently.
pub fn compare_keys(machine: &KeyTrack, human: &RomanAnnotation, slack: usize) -> Result<Agreement> {
    let truth = human.keys();
    same_length(&format!("keys of {}", machine.work_id), machine.len(), truth.len())?;
    Ok(compare_key_labels(&machine.labels, &truth, slack))
}

pub(crate) fn compare_key_labels(machine: &[KeyLabel], truth: &[KeyLabel], slack: usize) -> Agreement {
    let n = truth.len();
    let mut agree = 0;
    let mut i = 0;
    while i < n {
        if machine[i] == truth[i] {
            agree += 1;
            i += 1;
            continue;
        }
        let start = i;
        while i < n && machine[i] != truth[i] {
            i += 1;
        }
        let run = &machine[start..i];
        let before = start.checked_sub(1).map(|j| truth[j]);
        let after = truth.get(i).copied();
        let shifted = |k: Option<KeyLabel>| k.is_some_and(|k| run.iter().all(|&m| m == k));
        if run.len() <= slack && (shifted(before) || shifted(after)) {
            agree += run.len();
        }
    }
    Agreement { agree, total: n }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IssueTag {
    Suspension,
    SixthSeventh,
    MissingSeventh,
    SeventhError,
    Other,
}

impl IssueTag {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueTag::Suspension => "suspension",
            IssueTag::SixthSeventh => "sixth/seventh",
            IssueTag::MissingSeventh => "missing seventh",
            IssueTag::SeventhError => "seventh error",
            IssueTag::Other => "other",
        }
    }
}

impl fmt::Display for IssueTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Guesses why a model chord differs from the human one.
pub fn issue_tag(human: Chord, machine: Chord) -> IssueTag {
    if human.root == machine.root {
        return match (human.seventh, machine.seventh) {
            (Some(_), None) => IssueTag::MissingSeventh,
            (h, m) if h != m => IssueTag::SeventhError,
            _ => IssueTag::Other,
        };
    }
    if human.seventh.is_some() && machine.seventh.is_none() && machine.tones().is_subset(human.tones()) {
        return IssueTag::SixthSeventh;
    }
    if matches!(human.root.interval_to(machine.root), 5 | 7) {
        return IssueTag::Suspension;
    }
    IssueTag::Other
}

/// One kind of disagreement, counted in steps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConfusionRow {
    pub human: String,
    pub machine: String,
    /// The machine chord's category as (anchor above the tonic, type).
    pub machine_category: String,
    pub tag: IssueTag,
    pub count: usize,
}

/// Comparison of two Roman-numeral annotations of one work.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationComparison {
    /// Exact per-step key agreement.
    pub key: Agreement,
    /// Chord agreement over the steps where keys agree.
    pub chord: Agreement,
    pub confusion: Vec<ConfusionRow>,
}

/// Chord-symbol agreement conditional on key agreement, with a confusion
/// listing of the disagreements.
pub fn compare_annotations(machine: &RomanAnnotation, human: &RomanAnnotation) -> Result<AnnotationComparison> {
    same_length("annotations", machine.n_steps(), human.n_steps())?;
    let mut out = AnnotationComparison::default();
    let mut confusion: BTreeMap<(String, String, String, IssueTag), usize> = BTreeMap::new();
    for step in 0..human.n_steps() {
        let (h, m) = (
            human.span_at(step).expect("covering"),
            machine.span_at(step).expect("covering"),
        );
        out.key.total += 1;
        if h.key != m.key {
            continue;
        }
        out.key.agree += 1;
        out.chord.total += 1;
        if h.chord == m.chord {
            out.chord.agree += 1;
            continue;
        }
        let category = chord_category(m.pitch_chord()).map_or_else(
            || "-".to_string(),
            |c| format!("({}, {})", m.key.anchor.interval_to(c.anchor), c.ctype),
        );
        let tag = issue_tag(h.pitch_chord(), m.pitch_chord());
        *confusion
            .entry((h.chord.to_string(), m.chord.to_string(), category, tag))
            .or_insert(0) += 1;
    }
    out.confusion = confusion
        .into_iter()
        .map(|((human, machine, machine_category, tag), count)| ConfusionRow {
            human,
            machine,
            machine_category,
            tag,
            count,
        })
        .collect();
    sort_confusion(&mut out.confusion);
    Ok(out)
}

fn sort_confusion(rows: &mut [ConfusionRow]) {
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.cmp(b)));
}

/// Evaluation of one work.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorkAccuracy {
    pub work_id: String,
    pub chord_category: CategoryAgreement,
    pub key: Agreement,
    pub key_smoothed: Agreement,
    /// Chord-symbol agreement given the key, per translation method.
    pub method_chord: BTreeMap<String, Agreement>,
}

/// Corpus-wide evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AccuracyReport {
    pub per_work: Vec<WorkAccuracy>,
    /// Confusion listing per translation method.
    pub confusion: BTreeMap<String, Vec<ConfusionRow>>,
}

impl AccuracyReport {
    pub fn add_work(&mut self, work: WorkAccuracy, confusion: BTreeMap<String, Vec<ConfusionRow>>) {
        for (method, rows) in confusion {
            let all = self.confusion.entry(method).or_default();
            for row in rows {
                match all.iter_mut().find(|r| {
                    (&r.human, &r.machine, &r.machine_category, r.tag)
                        == (&row.human, &row.machine, &row.machine_category, row.tag)
                }) {
                    Some(r) => r.count += row.count,
                    None => all.push(row),
                }
            }
            sort_confusion(all);
        }
        self.per_work.push(work);
    }

    pub fn chord_category(&self) -> Agreement {
        self.sum(|w| w.chord_category.agreement)
    }

    pub fn key(&self) -> Agreement {
        self.sum(|w| w.key)
    }

    pub fn key_smoothed(&self) -> Agreement {
        self.sum(|w| w.key_smoothed)
    }

    pub fn method_chord(&self, method: &str) -> Agreement {
        self.sum(|w| w.method_chord.get(method).copied().unwrap_or_default())
    }

    pub fn methods(&self) -> Vec<String> {
        let mut m: Vec<String> = self
            .per_work
            .iter()
            .flat_map(|w| w.method_chord.keys().cloned())
            .collect();
        m.sort();
        m.dedup();
        m
    }

    fn sum(&self, f: impl Fn(&WorkAccuracy) -> Agreement) -> Agreement {
        let mut a = Agreement::default();
        for w in &self.per_work {
            a.add(f(w));
        }
        a
    }

    /// Per-work CSV.
    pub fn per_work_csv(&self) -> String {
        let methods = self.methods();
        let mut out = String::from("work_id,steps,chord_category_pct,key_pct,key_smoothed_pct");
        for m in &methods {
            out.push_str(&format!(",chord_pct_{m}"));
        }
        out.push('\n');
        for w in &self.per_work {
            out.push_str(&format!(
                "{},{},{},{},{}",
                w.work_id,
                w.key.total,
                fmt_pct(w.chord_category.agreement.pct()),
                fmt_pct(w.key.pct()),
                fmt_pct(w.key_smoothed.pct())
            ));
            for m in &methods {
                out.push_str(&format!(",{}", fmt_pct(w.method_chord.get(m).and_then(|a| a.pct()))));
            }
            out.push('\n');
        }
        out
    }

    /// Confusion listing of one method as CSV.
    pub fn confusion_csv(&self, method: &str) -> String {
        let mut out = String::from("human,machine,machine_category,issue,count\n");
        for r in self.confusion.get(method).map(|v| v.as_slice()).unwrap_or(&[]) {
            out.push_str(&format!(
                "{},{},\"{}\",{},{}\n",
                r.human, r.machine, r.machine_category, r.tag, r.count
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let line = |name: &str, a: Agreement| format!("{name}: {}% ({}/{})\n", fmt_pct(a.pct()), a.agree, a.total);
        let mut out = format!("works: {}\n", self.per_work.len());
        out.push_str(&line("chord categories", self.chord_category()));
        let unmappable: usize = self.per_work.iter().map(|w| w.chord_category.unmappable).sum();
        if unmappable > 0 {
            out.push_str(&format!("  steps with uncategorizable human chords: {unmappable}\n"));
        }
        out.push_str(&line("keys", self.key()));
        out.push_str(&line("keys (smoothed)", self.key_smoothed()));
        for m in self.methods() {
            out.push_str(&line(&format!("chords given key, method {m}"), self.method_chord(&m)));
        }
        out
    }
}
