//! Baum-Welch for tied models, single runs and seeded restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::engine::{self, Passes};
use super::{FBTables, ModelShape, ObservationSeq, TiedHmmParams, TiedState};
use crate::error::{Error, Result};

/// Lower bound on every probability after an M-step.
pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Stop once the largest relative parameter change is below this.
    pub tol: f64,
    pub max_iters: usize,
    pub floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-7,
            max_iters: 1000,
            floor: DEFAULT_FLOOR,
        }
    }
}

/// Expected transition and emission counts pooled over transpositions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    pub shape: ModelShape,
    /// Same layout as [`TiedHmmParams::trans`].
    pub trans: Vec<f64>,
    /// Same layout as [`TiedHmmParams::emit`].
    pub emit: Vec<f64>,
}

impl ExpectedCounts {
    pub fn zeros(shape: ModelShape) -> Self {
        ExpectedCounts {
            shape,
            trans: vec![0.0; shape.trans_len()],
            emit: vec![0.0; shape.emit_len()],
        }
    }

    /// Normalizes every row, holding entries at or above `floor`.
    pub fn to_params(&self, floor: f64) -> Result<TiedHmmParams> {
        let shape = self.shape;
        let mut trans = vec![0.0; shape.trans_len()];
        for (t1, (c, out)) in self
            .trans
            .chunks(shape.trans_row_len())
            .zip(trans.chunks_mut(shape.trans_row_len()))
            .enumerate()
        {
            if !project_row(c, floor, out) {
                return Err(Error::DegenerateType {
                    type_id: t1,
                    what: "transition",
                });
            }
        }
        let mut emit = vec![0.0; shape.emit_len()];
        for (t, (c, out)) in self
            .emit
            .chunks(shape.n_symbols())
            .zip(emit.chunks_mut(shape.n_symbols()))
            .enumerate()
        {
            if !project_row(c, floor, out) {
                return Err(Error::DegenerateType {
                    type_id: t,
                    what: "emission",
                });
            }
        }
        Ok(TiedHmmParams::from_parts_unchecked(shape, trans, emit))
    }
}

/// Maximizes Σ c_i ln p_i subject to Σ p_i = 1 and p_i ≥ floor, writing
/// p into `out`. The solution is p_i = max(floor, c_i / λ); λ is found by
/// growing the floored set until it is stable. Returns false when the
/// counts are all zero.
fn project_row(counts: &[f64], floor: f64, out: &mut [f64]) -> bool {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return false;
    }
    let n = counts.len();
    let mut floored = vec![false; n];
    let mut lambda = total;
    loop {
        let mut changed = false;
        for (i, &c) in counts.iter().enumerate() {
            if !floored[i] && c / lambda < floor {
                floored[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let n_floored = floored.iter().filter(|&&f| f).count();
        let free: f64 = counts.iter().zip(&floored).filter(|(_, &f)| !f).map(|(c, _)| c).sum();
        lambda = free / (1.0 - n_floored as f64 * floor);
    }
    for ((o, &c), &f) in out.iter_mut().zip(counts).zip(&floored) {
        *o = if f { floor } else { c / lambda };
    }
    let sum: f64 = out.iter().sum();
    for o in out.iter_mut() {
        *o /= sum;
    }
    true
}

/// Draws every row from a flat Dirichlet, then applies the floor.
pub fn random_params<R: Rng>(shape: ModelShape, rng: &mut R, floor: f64) -> TiedHmmParams {
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect() };
    let counts = ExpectedCounts {
        shape,
        trans: draw(shape.trans_len()),
        emit: draw(shape.emit_len()),
    };
    counts.to_params(floor).expect("exponential draws are positive")
}

struct WorkCounts {
    pair: Vec<f64>,
    emit: Vec<f64>,
    loglik: f64,
}

fn add_emission_counts(shape: ModelShape, obs: &ObservationSeq, q1: impl Fn(usize) -> Vec<f64>, emit: &mut [f64]) {
    let s = shape.n_states();
    let k = shape.n_symbols();
    for (t, bag) in obs.steps.iter().enumerate() {
        if bag.is_empty() {
            continue;
        }
        let q = q1(t);
        for sym in bag {
            let base = 12 * sym.class as usize;
            let pc = sym.pc.index();
            for (state, &w) in q.iter().enumerate().take(s) {
                let st = TiedState::from_index(state);
                let rel = (pc + 12 - st.anchor.index()) % 12;
                emit[st.type_id * k + base + rel] += w;
            }
        }
    }
}

fn posterior_row(p: &Passes, t: usize) -> Vec<f64> {
    let mut q: Vec<f64> = p.a_row(t).iter().zip(p.b_row(t)).map(|(a, b)| a * b).collect();
    let total: f64 = q.iter().sum();
    for x in &mut q {
        *x /= total;
    }
    q
}

fn work_counts(params: &TiedHmmParams, trans: &[f64], obs: &ObservationSeq) -> Result<WorkCounts> {
    let shape = params.shape();
    let s = shape.n_states();
    let em = params.emissions(obs)?;
    let passes = engine::forward_backward_passes(&params.prior(), trans, &em)?;
    let mut pair = vec![0.0; s * s];
    engine::accumulate_pair_weights(&passes, &em, &mut pair);
    let mut emit = vec![0.0; shape.emit_len()];
    add_emission_counts(shape, obs, |t| posterior_row(&passes, t), &mut emit);
    Ok(WorkCounts {
        pair,
        emit,
        loglik: passes.log_likelihood(),
    })
}

fn pool_pairs(shape: ModelShape, pair: &[f64], trans: &[f64], out: &mut [f64]) {
    let s = shape.n_states();
    for k in 0..s {
        let from = TiedState::from_index(k);
        for kp in 0..s {
            let to = TiedState::from_index(kp);
            let delta = from.anchor.interval_to(to.anchor) as usize;
            out[shape.trans_index(delta, from.type_id, to.type_id)] += pair[k * s + kp] * trans[k * s + kp];
        }
    }
}

/// Expected counts and corpus log-likelihood under `params`. Works are
/// processed in parallel and reduced in corpus order.
pub fn e_step(params: &TiedHmmParams, corpus: &[ObservationSeq]) -> Result<(ExpectedCounts, f64)> {
    let shape = params.shape();
    let s = shape.n_states();
    let trans = params.dense_transitions();
    let per_work = corpus
        .par_iter()
        .filter(|obs| !obs.is_empty())
        .map(|obs| work_counts(params, &trans, obs))
        .collect::<Result<Vec<_>>>()?;
    let mut pair = vec![0.0; s * s];
    let mut counts = ExpectedCounts::zeros(shape);
    let mut loglik = 0.0;
    for w in &per_work {
        for (x, y) in pair.iter_mut().zip(&w.pair) {
            *x += y;
        }
        for (x, y) in counts.emit.iter_mut().zip(&w.emit) {
            *x += y;
        }
        loglik += w.loglik;
    }
    pool_pairs(shape, &pair, &trans, &mut counts.trans);
    Ok((counts, loglik))
}

/// Re-estimates parameters from materialized forward-backward tables.
pub fn m_step(corpus_fb: &[FBTables], corpus_obs: &[ObservationSeq], shape: ModelShape) -> Result<TiedHmmParams> {
    if corpus_fb.len() != corpus_obs.len() {
        return Err(Error::LengthMismatch {
            context: "forward-backward tables vs observations".into(),
            left: corpus_fb.len(),
            right: corpus_obs.len(),
        });
    }
    let s = shape.n_states();
    let mut counts = ExpectedCounts::zeros(shape);
    for (fb, obs) in corpus_fb.iter().zip(corpus_obs) {
        if fb.n_states != s || fb.len() != obs.len() {
            return Err(Error::LengthMismatch {
                context: format!("tables for a {s}-state model"),
                left: fb.len(),
                right: obs.len(),
            });
        }
        for t in 0..fb.len().saturating_sub(1) {
            let block = fb.q2_block(t);
            for k in 0..s {
                let from = TiedState::from_index(k);
                for kp in 0..s {
                    let to = TiedState::from_index(kp);
                    let delta = from.anchor.interval_to(to.anchor) as usize;
                    counts.trans[shape.trans_index(delta, from.type_id, to.type_id)] += block[k * s + kp];
                }
            }
        }
        add_emission_counts(shape, obs, |t| fb.q1_row(t).to_vec(), &mut counts.emit);
    }
    counts.to_params(DEFAULT_FLOOR)
}

/// Log-likelihood of a whole corpus.
pub fn corpus_log_likelihood(params: &TiedHmmParams, corpus: &[ObservationSeq]) -> Result<f64> {
    let trans = params.dense_transitions();
    let prior = params.prior();
    let parts = corpus
        .par_iter()
        .map(|obs| {
            let em = params.emissions(obs)?;
            Ok(engine::forward_backward_passes(&prior, &trans, &em)?.log_likelihood())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// Log-likelihood of the parameters entering this iteration.
    pub loglik: f64,
    pub max_rel_delta: f64,
}

/// Outcome of one Baum-Welch run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub params: TiedHmmParams,
    /// Log-likelihood of the final parameters.
    pub loglik: f64,
    pub n_iters: usize,
    pub converged: bool,
    pub history: Vec<IterRecord>,
}

fn check_corpus(corpus: &[ObservationSeq]) -> Result<()> {
    if corpus.iter().all(|o| o.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    Ok(())
}

/// Runs Baum-Welch from `init` until the relative parameter change drops
/// below `opts.tol` or `opts.max_iters` iterations have run.
pub fn fit_from(init: TiedHmmParams, corpus: &[ObservationSeq], opts: &FitOptions) -> Result<RunResult> {
    check_corpus(corpus)?;
    let mut params = init;
    let mut history = Vec::new();
    let mut converged = false;
    for iter in 1..=opts.max_iters {
        let (counts, loglik) = e_step(&params, corpus)?;
        let next = counts.to_params(opts.floor)?;
        let max_rel_delta = params.max_rel_delta(&next);
        history.push(IterRecord {
            iter,
            loglik,
            max_rel_delta,
        });
        params = next;
        if max_rel_delta < opts.tol {
            converged = true;
            break;
        }
    }
    let loglik = corpus_log_likelihood(&params, corpus)?;
    Ok(RunResult {
        params,
        loglik,
        n_iters: history.len(),
        converged,
        history,
    })
}

/// Result of a (multi-restart) fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: TiedHmmParams,
    /// Final log-likelihood of the best run, in nats.
    pub loglik: f64,
    pub n_iters: usize,
    pub converged: bool,
    /// Final log-likelihood of every run; `-inf` for degenerate runs.
    pub run_logliks: Vec<f64>,
    pub seed: u64,
    pub best_run: usize,
    /// Iteration history of the best run.
    pub history: Vec<IterRecord>,
}

impl FitReport {
    /// Log-likelihood gap between the best run and the best run whose
    /// likelihood differs from it by more than `same_within`.
    pub fn runner_up_gap(&self, same_within: f64) -> Option<f64> {
        self.run_logliks
            .iter()
            .copied()
            .filter(|l| l.is_finite() && self.loglik - l > same_within)
            .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.max(l))))
            .map(|l| self.loglik - l)
    }
}

/// The initial parameters of restart `run` under `seed`.
pub fn restart_init(shape: ModelShape, seed: u64, run: usize, floor: f64) -> TiedHmmParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    random_params(shape, &mut rng, floor)
}

/// A single run from the seed's first random start.
pub fn fit(corpus: &[ObservationSeq], shape: ModelShape, seed: u64, opts: &FitOptions) -> Result<FitReport> {
    fit_multi_restart(corpus, shape, 1, seed, opts)
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::DegenerateType { .. } | Error::ZeroProbabilityStep { .. })
}

/// `n_runs` independent fits from seeded random starts; keeps the run with
/// the highest final log-likelihood (ties go to the lower run index).
pub fn fit_multi_restart(
    corpus: &[ObservationSeq],
    shape: ModelShape,
    n_runs: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<FitReport> {
    check_corpus(corpus)?;
    if n_runs == 0 {
        return Err(Error::InvalidParams("at least one run is required".into()));
    }
    let runs: Vec<Result<RunResult>> = (0..n_runs)
        .into_par_iter()
        .map(|r| fit_from(restart_init(shape, seed, r, opts.floor), corpus, opts))
        .collect();
    let mut run_logliks = Vec::with_capacity(n_runs);
    let mut best: Option<(usize, RunResult)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok(res) => {
                run_logliks.push(res.loglik);
                if best.as_ref().is_none_or(|(_, b)| res.loglik > b.loglik) {
                    best = Some((r, res));
                }
            }
            Err(e) if is_degenerate(&e) => run_logliks.push(f64::NEG_INFINITY),
            Err(e) => return Err(e),
        }
    }
    let (best_run, res) = best.ok_or(Error::AllRunsDegenerate { runs: n_runs })?;
    Ok(FitReport {
        params: res.params,
        loglik: res.loglik,
        n_iters: res.n_iters,
        converged: res.converged,
        run_logliks,
        seed,
        best_run,
        history: res.history,
    })
}
