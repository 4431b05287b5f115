//! JSON parameter files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FitReport, IterRecord, ModelShape, TiedHmmParams};
use crate::error::{Error, Result};

/// On-disk form of a fitted model. Floats round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamFile {
    pub n_types: usize,
    pub n_classes: usize,
    /// `trans[t1][t2][Δ]`.
    pub trans: Vec<Vec<Vec<f64>>>,
    /// `emit[type][12 * class + rel]`.
    pub emit: Vec<Vec<f64>>,
    pub seed: u64,
    /// Absent for parameters that did not come from a fit.
    pub loglik: Option<f64>,
    pub n_iters: usize,
    pub best_run: usize,
    /// Final log-likelihood per restart; `null` for degenerate runs.
    pub run_logliks: Vec<Option<f64>>,
}

impl ParamFile {
    pub fn from_params(params: &TiedHmmParams) -> Self {
        let shape = params.shape();
        let n = shape.n_types;
        ParamFile {
            n_types: n,
            n_classes: shape.n_classes,
            trans: (0..n)
                .map(|t1| {
                    (0..n)
                        .map(|t2| (0..12).map(|d| params.f(d, t1, t2)).collect())
                        .collect()
                })
                .collect(),
            emit: (0..n).map(|t| params.emission_row(t).to_vec()).collect(),
            seed: 0,
            loglik: None,
            n_iters: 0,
            best_run: 0,
            run_logliks: Vec::new(),
        }
    }

    /// Stores `params` (usually the report's parameters after
    /// canonicalization) with the report's fit statistics.
    pub fn from_report(params: &TiedHmmParams, report: &FitReport) -> Self {
        ParamFile {
            seed: report.seed,
            loglik: Some(report.loglik),
            n_iters: report.n_iters,
            best_run: report.best_run,
            run_logliks: report.run_logliks.iter().map(|l| l.is_finite().then_some(*l)).collect(),
            ..ParamFile::from_params(params)
        }
    }

    pub fn params(&self) -> Result<TiedHmmParams> {
        let shape = ModelShape::new(self.n_types, self.n_classes);
        let bad = |m: String| Error::InvalidParams(m);
        if self.trans.len() != self.n_types || self.emit.len() != self.n_types {
            return Err(bad(format!("expected {} type rows", self.n_types)));
        }
        let mut trans = Vec::with_capacity(shape.trans_len());
        for row in &self.trans {
            if row.len() != self.n_types || row.iter().any(|d| d.len() != 12) {
                return Err(bad("transition table must be n_types × n_types × 12".into()));
            }
            trans.extend(row.iter().flatten());
        }
        let mut emit = Vec::with_capacity(shape.emit_len());
        for row in &self.emit {
            if row.len() != shape.n_symbols() {
                return Err(bad(format!("emission rows need {} entries", shape.n_symbols())));
            }
            emit.extend(row);
        }
        TiedHmmParams::new(shape, trans, emit)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Writes one `iter loglik max_rel_delta` line per iteration.
pub fn write_fit_log<W: Write>(out: &mut W, history: &[IterRecord]) -> std::io::Result<()> {
    for r in history {
        writeln!(out, "{} {} {}", r.iter, r.loglik, r.max_rel_delta)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tied_hmm::{random_params, DEFAULT_FLOOR};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reload_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_params(ModelShape::new(3, 2), &mut rng, DEFAULT_FLOOR);
        let mut file = ParamFile::from_params(&p);
        file.loglik = Some(-1_234.567_890_123_456_7);
        file.run_logliks = vec![Some(-1234.5678901234567), None];
        let back: ParamFile = serde_json::from_str(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
        let q = back.params().unwrap();
        assert_eq!(q.trans(), p.trans());
        assert_eq!(q.emit(), p.emit());
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let p = TiedHmmParams::uniform(ModelShape::new(2, 1));
        let mut file = ParamFile::from_params(&p);
        file.emit[1].pop();
        assert!(file.params().is_err());
        let mut file = ParamFile::from_params(&p);
        file.trans[0][0][3] += 0.1;
        assert!(file.params().is_err());
    }
}
