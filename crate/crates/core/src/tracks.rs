//! CSV files of per-step labels, `work_id,step,anchor,<type column>`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pitch::PitchClass;

pub(crate) struct LabelRows {
    pub work_id: String,
    pub labels: Vec<(PitchClass, usize)>,
}

pub(crate) fn write_rows(path: &Path, type_column: &str, tracks: &[LabelRows]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["work_id", "step", "anchor", type_column])?;
    for track in tracks {
        for (step, (anchor, t)) in track.labels.iter().enumerate() {
            w.write_record([
                track.work_id.as_str(),
                &step.to_string(),
                &anchor.value().to_string(),
                &t.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads rows back, grouped by work in first-appearance order. Steps must
/// run 0, 1, 2, ... within each work.
pub(crate) fn read_rows(path: &Path, type_column: &str) -> Result<Vec<LabelRows>> {
    let file = path.display().to_string();
    let mut r = csv::Reader::from_reader(std::fs::File::open(path).map_err(|e| Error::io(path, e))?);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["work_id", "step", "anchor", type_column] {
        return Err(Error::Parse {
            file,
            line: 1,
            message: format!("expected header work_id,step,anchor,{type_column}"),
        });
    }
    let mut out: Vec<LabelRows> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |m: &str| Error::Parse {
            file: file.clone(),
            line,
            message: m.to_string(),
        };
        let num = |j: usize| -> Result<usize> {
            rec.get(j)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| bad("expected a non-negative integer"))
        };
        let work_id = rec.get(0).ok_or_else(|| bad("missing work_id"))?.to_string();
        let (step, anchor, t) = (num(1)?, num(2)?, num(3)?);
        let anchor = u8::try_from(anchor)
            .ok()
            .and_then(PitchClass::new)
            .ok_or_else(|| bad("anchor must be 0-11"))?;
        let slot = *index.entry(work_id.clone()).or_insert_with(|| {
            out.push(LabelRows {
                work_id,
                labels: Vec::new(),
            });
            out.len() - 1
        });
        if out[slot].labels.len() != step {
            return Err(bad("steps must be consecutive from 0"));
        }
        out[slot].labels.push((anchor, t));
    }
    Ok(out)
}
