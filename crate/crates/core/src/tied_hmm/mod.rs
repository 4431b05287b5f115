//! Hidden Markov models whose parameters are tied across transposition.
//!
//! A state is a (type, anchor) pair with index `12 * type + anchor`. The
//! transition probability between two states depends only on their types
//! and the upward anchor interval, `f(Δ, t1, t2)`, and a state emits a
//! symbol with a probability that depends only on its type and the symbol's
//! pitch class relative to the anchor. Symbols carry an extra class so the
//! same engine serves both layers: the chord layer emits bare pitch classes
//! (one class) and the key layer emits chords (one class per chord type).
//!
//! A step may emit a bag of symbols; its likelihood is the product of the
//! per-symbol probabilities, and an empty bag has likelihood 1. The initial
//! state distribution is uniform and never estimated.

mod canon;
mod engine;
mod fit;
mod params_file;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pitch::PitchClass;

pub use canon::{
    canonical_by_occupancy, canonicalize, occupancy_permutation, permute_state, permute_types, type_occupancy,
    Canonicalization,
};
pub use engine::Emissions;
pub use fit::{
    corpus_log_likelihood, e_step, fit, fit_from, fit_multi_restart, m_step, random_params, restart_init,
    ExpectedCounts, FitOptions, FitReport, IterRecord, RunResult, DEFAULT_FLOOR,
};
pub use params_file::{write_fit_log, ParamFile};

/// Tolerance on row sums of probability tables.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TiedState {
    pub anchor: PitchClass,
    pub type_id: usize,
}

impl TiedState {
    pub fn from_index(index: usize) -> Self {
        TiedState {
            anchor: PitchClass::wrap((index % 12) as i64),
            type_id: index / 12,
        }
    }

    pub fn index(self) -> usize {
        12 * self.type_id + self.anchor.index()
    }

    pub fn transpose(self, semitones: i32) -> Self {
        TiedState {
            anchor: self.anchor.transpose(semitones),
            type_id: self.type_id,
        }
    }
}

/// One emitted symbol: a class and an absolute pitch class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub class: u8,
    pub pc: PitchClass,
}

impl Symbol {
    pub fn new(class: u8, pc: PitchClass) -> Self {
        Symbol { class, pc }
    }

    pub fn note(pc: PitchClass) -> Self {
        Symbol { class: 0, pc }
    }

    /// Index in the absolute symbol alphabet, `12 * class + pc`.
    pub fn index(self) -> usize {
        12 * self.class as usize + self.pc.index()
    }
}

/// Per-step bags of symbols for one work.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObservationSeq {
    pub steps: Vec<Vec<Symbol>>,
}

impl ObservationSeq {
    pub fn new(steps: Vec<Vec<Symbol>>) -> Self {
        ObservationSeq { steps }
    }

    /// One single-symbol bag per step.
    pub fn singletons(symbols: impl IntoIterator<Item = Symbol>) -> Self {
        ObservationSeq {
            steps: symbols.into_iter().map(|s| vec![s]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn transpose(&self, semitones: i32) -> Self {
        ObservationSeq {
            steps: self
                .steps
                .iter()
                .map(|bag| {
                    bag.iter()
                        .map(|s| Symbol::new(s.class, s.pc.transpose(semitones)))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn max_class(&self) -> Option<u8> {
        self.steps.iter().flatten().map(|s| s.class).max()
    }
}

/// Table sizes of a tied model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelShape {
    pub n_types: usize,
    pub n_classes: usize,
}

impl ModelShape {
    pub fn new(n_types: usize, n_classes: usize) -> Self {
        ModelShape { n_types, n_classes }
    }

    pub fn n_states(self) -> usize {
        12 * self.n_types
    }

    /// Relative symbols per type.
    pub fn n_symbols(self) -> usize {
        12 * self.n_classes
    }

    pub fn trans_len(self) -> usize {
        self.n_types * self.n_types * 12
    }

    pub fn emit_len(self) -> usize {
        self.n_types * self.n_symbols()
    }

    /// Length of one transition row (all (t2, Δ) for a fixed t1).
    pub fn trans_row_len(self) -> usize {
        self.n_types * 12
    }

    pub fn trans_index(self, delta: usize, t1: usize, t2: usize) -> usize {
        (t1 * self.n_types + t2) * 12 + delta
    }

    pub fn emit_index(self, type_id: usize, class: usize, rel: usize) -> usize {
        type_id * self.n_symbols() + class * 12 + rel
    }
}

/// Tied transition function `f(Δ, t1, t2)` and emission table
/// `μ(type, class, relative pitch class)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiedHmmParams {
    shape: ModelShape,
    trans: Vec<f64>,
    emit: Vec<f64>,
}

impl TiedHmmParams {
    /// Validates table sizes, entries and row sums.
    pub fn new(shape: ModelShape, trans: Vec<f64>, emit: Vec<f64>) -> Result<Self> {
        if shape.n_types == 0 || shape.n_classes == 0 {
            return Err(Error::InvalidParams("need at least one type and class".into()));
        }
        if trans.len() != shape.trans_len() || emit.len() != shape.emit_len() {
            return Err(Error::InvalidParams(format!(
                "table sizes {}/{} do not match shape {:?}",
                trans.len(),
                emit.len(),
                shape
            )));
        }
        let params = TiedHmmParams { shape, trans, emit };
        params.check()?;
        Ok(params)
    }

    pub(crate) fn from_parts_unchecked(shape: ModelShape, trans: Vec<f64>, emit: Vec<f64>) -> Self {
        TiedHmmParams { shape, trans, emit }
    }

    fn check(&self) -> Result<()> {
        let rows = |table: &[f64], len: usize, what: &str| -> Result<()> {
            for (i, row) in table.chunks(len).enumerate() {
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::InvalidParams(format!("{what} row {i} has a bad entry")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > SUM_TOLERANCE {
                    return Err(Error::InvalidParams(format!("{what} row {i} sums to {sum}")));
                }
            }
            Ok(())
        };
        rows(&self.trans, self.shape.trans_row_len(), "transition")?;
        rows(&self.emit, self.shape.n_symbols(), "emission")
    }

    /// Uniform transitions and emissions.
    pub fn uniform(shape: ModelShape) -> Self {
        TiedHmmParams {
            shape,
            trans: vec![1.0 / shape.trans_row_len() as f64; shape.trans_len()],
            emit: vec![1.0 / shape.n_symbols() as f64; shape.emit_len()],
        }
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn n_types(&self) -> usize {
        self.shape.n_types
    }

    pub fn n_states(&self) -> usize {
        self.shape.n_states()
    }

    /// Flat transition table, index `(t1 * n_types + t2) * 12 + Δ`.
    pub fn trans(&self) -> &[f64] {
        &self.trans
    }

    /// Flat emission table, index `type * 12 * n_classes + class * 12 + rel`.
    pub fn emit(&self) -> &[f64] {
        &self.emit
    }

    pub fn f(&self, delta: usize, t1: usize, t2: usize) -> f64 {
        self.trans[self.shape.trans_index(delta, t1, t2)]
    }

    pub fn mu(&self, type_id: usize, class: usize, rel: usize) -> f64 {
        self.emit[self.shape.emit_index(type_id, class, rel)]
    }

    /// Emission row of one type over all relative symbols.
    pub fn emission_row(&self, type_id: usize) -> &[f64] {
        let k = self.shape.n_symbols();
        &self.emit[type_id * k..(type_id + 1) * k]
    }

    /// Transition probability between two states.
    pub fn transition(&self, from: TiedState, to: TiedState) -> f64 {
        let delta = from.anchor.interval_to(to.anchor) as usize;
        self.f(delta, from.type_id, to.type_id)
    }

    /// Probability that `state` emits `symbol`.
    pub fn emission(&self, state: TiedState, symbol: Symbol) -> f64 {
        let rel = state.anchor.interval_to(symbol.pc) as usize;
        self.mu(state.type_id, symbol.class as usize, rel)
    }

    /// The expanded `S×S` transition matrix.
    pub fn dense_transitions(&self) -> Vec<f64> {
        let s = self.n_states();
        let mut out = vec![0.0; s * s];
        for k in 0..s {
            let from = TiedState::from_index(k);
            for kp in 0..s {
                out[k * s + kp] = self.transition(from, TiedState::from_index(kp));
            }
        }
        out
    }

    pub fn prior(&self) -> Vec<f64> {
        let s = self.n_states();
        vec![1.0 / s as f64; s]
    }

    /// Per-step, per-state likelihoods of a sequence.
    pub fn emissions(&self, obs: &ObservationSeq) -> Result<Emissions> {
        let s = self.n_states();
        let k = self.shape.n_symbols();
        if let Some(c) = obs.max_class() {
            if c as usize >= self.shape.n_classes {
                return Err(Error::InvalidParams(format!(
                    "symbol class {c} outside the model's {} classes",
                    self.shape.n_classes
                )));
            }
        }
        let mut em = Emissions::new(s, obs.len());
        for (t, bag) in obs.steps.iter().enumerate() {
            let row = em.row_mut(t);
            row.fill(1.0);
            for sym in bag {
                let base = 12 * sym.class as usize;
                let pc = sym.pc.index();
                for type_id in 0..self.shape.n_types {
                    let table = &self.emit[type_id * k + base..type_id * k + base + 12];
                    let states = &mut row[12 * type_id..12 * type_id + 12];
                    for (anchor, x) in states.iter_mut().enumerate() {
                        *x *= table[(pc + 12 - anchor) % 12];
                    }
                }
            }
            em.guard_row(t);
        }
        Ok(em)
    }

    /// Largest relative change of any entry against `other`.
    pub fn max_rel_delta(&self, other: &TiedHmmParams) -> f64 {
        self.trans
            .iter()
            .zip(&other.trans)
            .chain(self.emit.iter().zip(&other.emit))
            .map(|(a, b)| (a - b).abs() / a.max(1e-12))
            .fold(0.0, f64::max)
    }

    /// The equivalent untied model over absolute symbols `12 * class + pc`.
    pub fn to_dense(&self) -> DenseHmm {
        let s = self.n_states();
        let k = self.shape.n_symbols();
        let mut emit = vec![0.0; s * k];
        for state in 0..s {
            let st = TiedState::from_index(state);
            for sym in 0..k {
                let symbol = Symbol::new((sym / 12) as u8, PitchClass::wrap((sym % 12) as i64));
                emit[state * k + sym] = self.emission(st, symbol);
            }
        }
        DenseHmm {
            n_states: s,
            n_symbols: k,
            prior: self.prior(),
            trans: self.dense_transitions(),
            emit,
        }
    }

    /// Draws a state path and observations. Each step emits `bag_size(rng)`
    /// independent symbols from its state.
    pub fn sample<R: Rng>(
        &self,
        rng: &mut R,
        len: usize,
        mut bag_size: impl FnMut(&mut R) -> usize,
    ) -> (Vec<TiedState>, ObservationSeq) {
        let s = self.n_states();
        let mut states = Vec::with_capacity(len);
        let mut steps = Vec::with_capacity(len);
        let mut cur = TiedState::from_index(rng.random_range(0..s));
        for t in 0..len {
            if t > 0 {
                let row_start = cur.type_id * self.shape.trans_row_len();
                let row = &self.trans[row_start..row_start + self.shape.trans_row_len()];
                let j = sample_index(rng, row);
                cur = TiedState {
                    anchor: cur.anchor.transpose((j % 12) as i32),
                    type_id: j / 12,
                };
            }
            let n = bag_size(rng);
            let row = self.emission_row(cur.type_id);
            let bag = (0..n)
                .map(|_| {
                    let j = sample_index(rng, row);
                    Symbol::new((j / 12) as u8, cur.anchor.transpose((j % 12) as i32))
                })
                .collect();
            states.push(cur);
            steps.push(bag);
        }
        (states, ObservationSeq { steps })
    }
}

fn sample_index<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Forward-backward output for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FBTables {
    pub n_states: usize,
    /// Normalized forward values ã_t(k), `M×S`.
    pub a: Vec<f64>,
    /// Normalized backward values, `M×S`.
    pub b: Vec<f64>,
    /// ln A_t per step.
    pub log_scale: Vec<f64>,
    /// State posteriors q_t(k), `M×S`.
    pub q1: Vec<f64>,
    /// Pair posteriors q_{t,t+1}(k,k'), `(M-1)×S×S`.
    pub q2: Vec<f64>,
}

impl FBTables {
    pub fn len(&self) -> usize {
        self.log_scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_scale.is_empty()
    }

    /// The forward normalizer A_t.
    pub fn scale(&self, t: usize) -> f64 {
        self.log_scale[t].exp()
    }

    pub fn q1_row(&self, t: usize) -> &[f64] {
        &self.q1[t * self.n_states..(t + 1) * self.n_states]
    }

    pub fn q2_block(&self, t: usize) -> &[f64] {
        let s2 = self.n_states * self.n_states;
        &self.q2[t * s2..(t + 1) * s2]
    }

    fn from_passes(p: engine::Passes, trans: &[f64], em: &Emissions) -> Self {
        let q1 = engine::state_posteriors(&p);
        let q2 = engine::pair_posteriors(&p, trans, em);
        FBTables {
            n_states: p.n_states,
            a: p.a,
            b: p.b,
            log_scale: p.log_scale,
            q1,
            q2,
        }
    }
}

/// Sum of ln A_t: the log-probability of the sequence.
pub fn log_likelihood(fb: &FBTables) -> f64 {
    fb.log_scale.iter().sum()
}

pub fn forward_backward(params: &TiedHmmParams, obs: &ObservationSeq) -> Result<FBTables> {
    let em = params.emissions(obs)?;
    let trans = params.dense_transitions();
    let passes = engine::forward_backward_passes(&params.prior(), &trans, &em)?;
    Ok(FBTables::from_passes(passes, &trans, &em))
}

/// Decoded states with the joint log-probability of path and observations.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTrack {
    pub states: Vec<TiedState>,
    pub log_prob: f64,
}

pub fn viterbi(params: &TiedHmmParams, obs: &ObservationSeq) -> Result<LabelTrack> {
    let em = params.emissions(obs)?;
    let trans = params.dense_transitions();
    let (path, log_prob) = engine::viterbi(&params.prior(), &trans, &em)?;
    Ok(LabelTrack {
        states: path.into_iter().map(TiedState::from_index).collect(),
        log_prob,
    })
}

/// An untied HMM with explicit tables, over bags of integer symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHmm {
    pub n_states: usize,
    pub n_symbols: usize,
    pub prior: Vec<f64>,
    /// `trans[k * S + k']` = P(k' | k).
    pub trans: Vec<f64>,
    /// `emit[k * K + symbol]`.
    pub emit: Vec<f64>,
}

impl DenseHmm {
    pub fn emissions(&self, obs: &[Vec<usize>]) -> Emissions {
        let s = self.n_states;
        let mut em = Emissions::new(s, obs.len());
        for (t, bag) in obs.iter().enumerate() {
            let row = em.row_mut(t);
            for (k, x) in row.iter_mut().enumerate() {
                *x = bag.iter().map(|&c| self.emit[k * self.n_symbols + c]).product();
            }
            em.guard_row(t);
        }
        em
    }

    pub fn forward_backward(&self, obs: &[Vec<usize>]) -> Result<FBTables> {
        let em = self.emissions(obs);
        let passes = engine::forward_backward_passes(&self.prior, &self.trans, &em)?;
        Ok(FBTables::from_passes(passes, &self.trans, &em))
    }

    pub fn viterbi(&self, obs: &[Vec<usize>]) -> Result<(Vec<usize>, f64)> {
        engine::viterbi(&self.prior, &self.trans, &self.emissions(obs))
    }

    /// ln P(path, observations).
    pub fn path_log_prob(&self, obs: &[Vec<usize>], path: &[usize]) -> f64 {
        engine::path_log_prob(&self.prior, &self.trans, &self.emissions(obs), path)
    }
}

impl fmt::Display for TiedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.anchor.value(), self.type_id)
    }
}
