//! Line-oriented Roman-numeral annotations.
//!
//! One span per line, `<start_step> <end_step> <key>: <numeral><figure>`,
//! with inclusive step bounds, e.g. `4 6 g: V65`. Lines whose first
//! non-blank character is `#` are comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::theory::{Chord, Figure, KeyLabel, Numeral, RomanChord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RomanSpan {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub key: KeyLabel,
    pub chord: RomanChord,
}

impl RomanSpan {
    pub fn numeral(&self) -> Numeral {
        self.chord.numeral
    }

    pub fn figure(&self) -> Figure {
        self.chord.figure
    }

    pub fn seventh(&self) -> bool {
        self.chord.seventh()
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    /// The pitch-class chord in this span's key.
    pub fn pitch_chord(&self) -> Chord {
        self.chord.chord(self.key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RomanAnnotation {
    pub spans: Vec<RomanSpan>,
}

impl RomanAnnotation {
    /// Number of steps covered.
    pub fn n_steps(&self) -> usize {
        self.spans.last().map_or(0, |s| s.end + 1)
    }

    /// The span covering `step`.
    pub fn span_at(&self, step: usize) -> Option<&RomanSpan> {
        let i = self.spans.partition_point(|s| s.end < step);
        self.spans.get(i).filter(|s| s.start <= step)
    }

    /// Per-step key.
    pub fn keys(&self) -> Vec<KeyLabel> {
        self.spans
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.key, s.len()))
            .collect()
    }

    /// Checks that spans are nonempty, ordered, gap-free and start at 0.
    pub fn check_contiguous(&self) -> std::result::Result<(), String> {
        if self.spans.is_empty() {
            return Err("annotation has no spans".into());
        }
        let mut next = 0usize;
        for s in &self.spans {
            if s.end < s.start {
                return Err(format!("span {}..{} ends before it starts", s.start, s.end));
            }
            if s.start < next {
                return Err(format!("span {}..{} overlaps the previous span", s.start, s.end));
            }
            if s.start > next {
                return Err(format!("gap before span {}..{}", s.start, s.end));
            }
            next = s.end + 1;
        }
        Ok(())
    }
}

/// Checks an annotation against the step count of its work.
pub fn validate_annotation(ann: &RomanAnnotation, n_steps: usize, work_id: &str) -> Result<()> {
    ann.check_contiguous()
        .map_err(|m| Error::validation(format!("annotation {work_id}"), m))?;
    if ann.n_steps() != n_steps {
        return Err(Error::validation(
            format!("annotation {work_id}"),
            format!("covers {} steps, the work has {n_steps}", ann.n_steps()),
        ));
    }
    Ok(())
}

/// Parses annotation text. `file` names the source in errors.
pub fn parse_annotation(text: &str, file: &str) -> Result<RomanAnnotation> {
    let mut spans = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            file: file.to_string(),
            line: lineno,
            message,
        };
        let (head, symbol) = trimmed
            .split_once(':')
            .ok_or_else(|| err("expected `<start> <end> <key>: <numeral>`".into()))?;
        let mut fields = head.split_whitespace();
        let mut number = |what: &str| -> Result<usize> {
            let tok = fields.next().ok_or_else(|| err(format!("missing {what}")))?;
            tok.parse().map_err(|_| err(format!("bad {what} {tok:?}")))
        };
        let start = number("start step")?;
        let end = number("end step")?;
        let key_tok = fields.next().ok_or_else(|| err("missing key".into()))?;
        if let Some(extra) = fields.next() {
            return Err(err(format!("unexpected {extra:?} before ':'")));
        }
        let key: KeyLabel = key_tok.parse().map_err(err)?;
        let chord: RomanChord = symbol.trim().parse().map_err(err)?;
        if end < start {
            return Err(err(format!("span {start}..{end} ends before it starts")));
        }
        if let Some(prev) = spans.last().map(|s: &RomanSpan| s.end) {
            if start <= prev {
                return Err(err(format!("span {start}..{end} overlaps the previous span")));
            }
            if start > prev + 1 {
                return Err(err(format!("gap between steps {prev} and {start}")));
            }
        } else if start != 0 {
            return Err(err("the first span must start at step 0".into()));
        }
        spans.push(RomanSpan { start, end, key, chord });
    }
    if spans.is_empty() {
        return Err(Error::Parse {
            file: file.to_string(),
            line: 0,
            message: "annotation has no spans".into(),
        });
    }
    Ok(RomanAnnotation { spans })
}

pub fn read_annotation(path: &Path) -> Result<RomanAnnotation> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotation(&text, &path.display().to_string())
}

/// Reads every `<work_id>.txt` of a directory (or a single file, keyed by
/// its stem).
pub fn parse_ground_truth(path: &Path) -> Result<BTreeMap<String, RomanAnnotation>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let files = if meta.is_file() {
        vec![path.to_path_buf()]
    } else {
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let p = entry.map_err(|e| Error::io(path, e))?.path();
            if p.extension().is_some_and(|e| e == "txt") && p.is_file() {
                files.push(p);
            }
        }
        files
    };
    let mut out = BTreeMap::new();
    for p in files {
        let id = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.insert(id, read_annotation(&p)?);
    }
    Ok(out)
}

pub fn format_annotation(ann: &RomanAnnotation) -> Result<String> {
    ann.check_contiguous().map_err(|m| Error::validation("annotation", m))?;
    let mut out = String::new();
    for s in &ann.spans {
        writeln!(out, "{} {} {}: {}", s.start, s.end, s.key, s.chord).expect("string write");
    }
    Ok(out)
}

pub fn write_annotation(ann: &RomanAnnotation, path: &Path) -> Result<()> {
    let text = format_annotation(ann)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `<dir>/<work_id>.txt` for every annotation, creating `dir`.
pub fn write_annotation_dir(dir: &Path, anns: &BTreeMap<String, RomanAnnotation>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (id, ann) in anns {
        write_annotation(ann, &dir.join(format!("{id}.txt")))?;
    }
    Ok(())
}
