//! Scaled forward-backward and Viterbi over a dense transition matrix.
//!
//! Every routine here works on `S` states with a row-major `S×S` matrix
//! `trans[k * S + k']` = P(k' | k) and precomputed per-step emission
//! likelihoods. Forward values are normalized to sum 1 at every step and
//! the normalizers kept, so the data log-likelihood is the sum of their
//! logs. Backward values are normalized the same way.

use crate::error::{Error, Result};

/// Per-step emission likelihoods, `probs[t * S + k]`, each row possibly
/// rescaled by `exp(log_offset[t])` to stay clear of underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct Emissions {
    pub n_states: usize,
    pub probs: Vec<f64>,
    pub log_offset: Vec<f64>,
}

/// Rows whose largest entry falls below this are rescaled.
const RESCALE_BELOW: f64 = 1e-200;

impl Emissions {
    pub fn new(n_states: usize, n_steps: usize) -> Self {
        Emissions {
            n_states,
            probs: vec![0.0; n_states * n_steps],
            log_offset: vec![0.0; n_steps],
        }
    }

    pub fn len(&self) -> usize {
        self.log_offset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_offset.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.probs[t * self.n_states..(t + 1) * self.n_states]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        let s = self.n_states;
        &mut self.probs[t * s..(t + 1) * s]
    }

    /// Rescales row `t` by its maximum if it is tiny.
    pub fn guard_row(&mut self, t: usize) {
        let row = self.row_mut(t);
        let m = row.iter().copied().fold(0.0, f64::max);
        if m > 0.0 && m < RESCALE_BELOW {
            for x in row.iter_mut() {
                *x /= m;
            }
            self.log_offset[t] = m.ln();
        }
    }
}

/// Forward and backward passes of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Passes {
    pub n_states: usize,
    /// Normalized forward values ã.
    pub a: Vec<f64>,
    /// Normalized backward values.
    pub b: Vec<f64>,
    /// ln A_t, including any emission rescaling.
    pub log_scale: Vec<f64>,
    /// Normalizer applied to each backward row.
    pub b_norm: Vec<f64>,
}

impl Passes {
    pub fn len(&self) -> usize {
        self.log_scale.len()
    }

    pub fn a_row(&self, t: usize) -> &[f64] {
        &self.a[t * self.n_states..(t + 1) * self.n_states]
    }

    pub fn b_row(&self, t: usize) -> &[f64] {
        &self.b[t * self.n_states..(t + 1) * self.n_states]
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_scale.iter().sum()
    }
}

pub fn forward_backward_passes(prior: &[f64], trans: &[f64], em: &Emissions) -> Result<Passes> {
    let s = em.n_states;
    let m = em.len();
    debug_assert_eq!(prior.len(), s);
    debug_assert_eq!(trans.len(), s * s);
    let mut a = vec![0.0; m * s];
    let mut log_scale = vec![0.0; m];
    let mut pred = vec![0.0; s];

    for t in 0..m {
        if t == 0 {
            pred.copy_from_slice(prior);
        } else {
            pred.fill(0.0);
            let prev = &a[(t - 1) * s..t * s];
            for (kp, &ap) in prev.iter().enumerate() {
                if ap == 0.0 {
                    continue;
                }
                let row = &trans[kp * s..(kp + 1) * s];
                for (p, &beta) in pred.iter_mut().zip(row) {
                    *p += ap * beta;
                }
            }
        }
        let e = em.row(t);
        let cur = &mut a[t * s..(t + 1) * s];
        let mut total = 0.0;
        for ((c, &p), &x) in cur.iter_mut().zip(&pred).zip(e) {
            *c = p * x;
            total += *c;
        }
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::ZeroProbabilityStep { step: t });
        }
        for c in cur.iter_mut() {
            *c /= total;
        }
        log_scale[t] = total.ln() + em.log_offset[t];
    }

    let mut b = vec![0.0; m * s];
    let mut b_norm = vec![1.0; m];
    if m > 0 {
        let last = &mut b[(m - 1) * s..];
        last.fill(1.0 / s as f64);
        b_norm[m - 1] = s as f64;
    }
    let mut w = vec![0.0; s];
    for t in (0..m.saturating_sub(1)).rev() {
        let next = &b[(t + 1) * s..(t + 2) * s];
        for ((wk, &bk), &ek) in w.iter_mut().zip(next).zip(em.row(t + 1)) {
            *wk = bk * ek;
        }
        let cur = &mut b[t * s..(t + 1) * s];
        let mut total = 0.0;
        for (k, c) in cur.iter_mut().enumerate() {
            let row = &trans[k * s..(k + 1) * s];
            *c = row.iter().zip(&w).map(|(x, y)| x * y).sum();
            total += *c;
        }
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::ZeroProbabilityStep { step: t + 1 });
        }
        for c in cur.iter_mut() {
            *c /= total;
        }
        b_norm[t] = total;
    }

    Ok(Passes {
        n_states: s,
        a,
        b,
        log_scale,
        b_norm,
    })
}

/// Per-step state posteriors q_t(k).
pub fn state_posteriors(p: &Passes) -> Vec<f64> {
    let s = p.n_states;
    let mut q = vec![0.0; p.a.len()];
    for t in 0..p.len() {
        let row = &mut q[t * s..(t + 1) * s];
        let mut total = 0.0;
        for ((qk, &ak), &bk) in row.iter_mut().zip(p.a_row(t)).zip(p.b_row(t)) {
            *qk = ak * bk;
            total += *qk;
        }
        for qk in row.iter_mut() {
            *qk /= total;
        }
    }
    q
}

/// Pair posteriors q_{t,t+1}(k,k'), `(M-1)×S×S`.
pub fn pair_posteriors(p: &Passes, trans: &[f64], em: &Emissions) -> Vec<f64> {
    let s = p.n_states;
    let m = p.len();
    let mut q2 = vec![0.0; m.saturating_sub(1) * s * s];
    for t in 0..m.saturating_sub(1) {
        let block = &mut q2[t * s * s..(t + 1) * s * s];
        let at = p.a_row(t);
        let bt1 = p.b_row(t + 1);
        let et1 = em.row(t + 1);
        let mut total = 0.0;
        for k in 0..s {
            for kp in 0..s {
                let v = at[k] * trans[k * s + kp] * et1[kp] * bt1[kp];
                block[k * s + kp] = v;
                total += v;
            }
        }
        for v in block.iter_mut() {
            *v /= total;
        }
    }
    q2
}

/// Adds Σ_t ã_t(k) e_{t+1}(k') b_{t+1}(k') / Z_t into `acc` (S×S).
///
/// Multiplying the result elementwise by the transition matrix gives the
/// summed pair posteriors without materializing them per step.
pub fn accumulate_pair_weights(p: &Passes, em: &Emissions, acc: &mut [f64]) {
    let s = p.n_states;
    let mut w = vec![0.0; s];
    for t in 0..p.len().saturating_sub(1) {
        let at = p.a_row(t);
        // Z_t = Σ_k ã_t(k) (β w)(k) and (β w) = b_norm[t] · b_t.
        let z: f64 = p.b_norm[t] * at.iter().zip(p.b_row(t)).map(|(x, y)| x * y).sum::<f64>();
        for ((wk, &bk), &ek) in w.iter_mut().zip(p.b_row(t + 1)).zip(em.row(t + 1)) {
            *wk = bk * ek / z;
        }
        for (k, &ak) in at.iter().enumerate() {
            if ak == 0.0 {
                continue;
            }
            let row = &mut acc[k * s..(k + 1) * s];
            for (r, &wk) in row.iter_mut().zip(&w) {
                *r += ak * wk;
            }
        }
    }
}

fn argmax_lowest(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Most probable state path and its joint log-probability with the
/// observations. Ties go to the lowest state index.
pub fn viterbi(prior: &[f64], trans: &[f64], em: &Emissions) -> Result<(Vec<usize>, f64)> {
    let s = em.n_states;
    let m = em.len();
    if m == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut x = vec![0.0; m * s];
    for t in 0..m {
        let e = em.row(t);
        let (before, rest) = x.split_at_mut(t * s);
        let cur = &mut rest[..s];
        if t == 0 {
            for ((c, &p), &ek) in cur.iter_mut().zip(prior).zip(e) {
                *c = p * ek;
            }
        } else {
            let prev = &before[(t - 1) * s..];
            for (k, c) in cur.iter_mut().enumerate() {
                let mut best = 0.0f64;
                for (kp, &xp) in prev.iter().enumerate() {
                    best = best.max(trans[kp * s + k] * xp);
                }
                *c = best * e[k];
            }
        }
        let top = cur.iter().copied().fold(0.0, f64::max);
        if top <= 0.0 || !top.is_finite() {
            return Err(Error::ZeroProbabilityStep { step: t });
        }
        for c in cur.iter_mut() {
            *c /= top;
        }
    }

    let mut path = vec![0usize; m];
    path[m - 1] = argmax_lowest(x[(m - 1) * s..].iter().copied());
    for t in (0..m - 1).rev() {
        let next = path[t + 1];
        let row = &x[t * s..(t + 1) * s];
        path[t] = argmax_lowest(row.iter().enumerate().map(|(k, &xk)| trans[k * s + next] * xk));
    }
    Ok((path.clone(), path_log_prob(prior, trans, em, &path)))
}

/// ln P(path, observations).
pub fn path_log_prob(prior: &[f64], trans: &[f64], em: &Emissions, path: &[usize]) -> f64 {
    let s = em.n_states;
    let mut lp = 0.0;
    for (t, &k) in path.iter().enumerate() {
        lp += if t == 0 {
            prior[k].ln()
        } else {
            trans[path[t - 1] * s + k].ln()
        };
        lp += em.row(t)[k].ln() + em.log_offset[t];
    }
    lp
}
