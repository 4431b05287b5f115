use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::score_io::RomanAnnotation;
use crate::theory::Mode;

/// Counts of two-chord progressions by mode, using inversion-free symbols
/// such as `V7` or `ii`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProgressionTable {
    pub counts: BTreeMap<(Mode, String, String), u64>,
}

impl ProgressionTable {
    /// Adds the progressions of one annotation. Only neighbours in the same
    /// key count, and a chord followed by itself (an inversion change) is
    /// not a progression.
    pub fn add(&mut self, ann: &RomanAnnotation) {
        for w in ann.spans.windows(2) {
            if w[0].key != w[1].key {
                continue;
            }
            let (a, b) = (w[0].chord.symbol(), w[1].chord.symbol());
            if a != b {
                *self.counts.entry((w[0].key.mode(), a, b)).or_insert(0) += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &ProgressionTable) {
        for (k, v) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += v;
        }
    }

    pub fn count(&self, mode: Mode, from: &str, to: &str) -> u64 {
        self.counts
            .get(&(mode, from.to_string(), to.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// CSV with header `mode,from,to,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,from,to,count\n");
        for ((mode, a, b), n) in &self.counts {
            out.push_str(&format!("{},{a},{b},{n}\n", mode_name(*mode)));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut table = ProgressionTable::default();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                file: file.to_string(),
                line: i + 1,
                message: m.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad("expected mode,from,to,count"));
            }
            let mode = match f[0] {
                "major" => Mode::Major,
                "minor" => Mode::Minor,
                _ => return Err(bad("mode must be major or minor")),
            };
            let n: u64 = f[3].trim().parse().map_err(|_| bad("count must be an integer"))?;
            *table
                .counts
                .entry((mode, f[1].to_string(), f[2].to_string()))
                .or_insert(0) += n;
        }
        Ok(table)
    }
}

pub(crate) fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Major => "major",
        Mode::Minor => "minor",
    }
}

pub fn build_progression_table(annotations: &[RomanAnnotation]) -> ProgressionTable {
    let mut table = ProgressionTable::default();
    for ann in annotations {
        table.add(ann);
    }
    table
}
